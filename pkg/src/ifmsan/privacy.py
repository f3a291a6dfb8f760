"""Degree of sanitization, observed privacy loss and the window controller.

The degree of sanitization ``gamma`` asks that the tracked class probability
after sanitization be at most ``p_original / 2**gamma``; any sanitization
meeting that bound has privacy loss at least ``gamma * ln 2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .errors import BudgetUnreachable, ParameterError, UndefinedRatioError
from .nn import Model, infer, top_class
from .sanitizer import SanitizationPlan
from .tensor import Tensor


@dataclass(frozen=True)
class PrivacyBudget:
    gamma: float

    def __post_init__(self):
        if not self.gamma >= 0:
            raise ParameterError(f"gamma must be >= 0, got {self.gamma}")

    @property
    def epsilon_lower(self) -> float:
        return epsilon_lower_bound(self.gamma)


@dataclass(frozen=True)
class ControlResult:
    window_size: int
    tracked_class: int
    p_original: float
    p_sanitized: float
    observed_epsilon: float
    trace: tuple[tuple[int, float], ...]


def epsilon_lower_bound(gamma: float) -> float:
    if not gamma >= 0:
        raise ParameterError(f"gamma must be >= 0, got {gamma}")
    return gamma * math.log(2.0)


def meets_degree(p_original: float, p_sanitized: float, gamma: float) -> bool:
    if p_original == 0:
        raise UndefinedRatioError("original probability is zero")
    if not gamma >= 0:
        raise ParameterError(f"gamma must be >= 0, got {gamma}")
    return p_sanitized <= p_original / 2.0**gamma


def observed_privacy_loss(p_original: float, p_sanitized: float) -> float:
    """``ln(p_original / p_sanitized)``; a negative value means the sanitization is invalid."""
    if p_original == 0 or p_sanitized == 0:
        raise UndefinedRatioError(
            f"privacy loss undefined for probabilities ({p_original}, {p_sanitized})"
        )
    return math.log(p_original / p_sanitized)


def _loss_or_inf(p_original: float, p_sanitized: float) -> float:
    # float32 softmax can underflow to exactly 0; the bound then holds trivially
    return math.inf if p_sanitized == 0 else observed_privacy_loss(p_original, p_sanitized)


def control_sanitize(
    model: Model,
    x: Tensor,
    layer: str,
    budget: PrivacyBudget,
    n_max: Optional[int] = None,
) -> ControlResult:
    """Grow the window on ``layer`` from 2 until the budget is met.

    The tracked class is the argmax of the unsanitized inference. Returns the
    first window size meeting the bound; raises :class:`BudgetUnreachable`
    with the full trace if none up to ``n_max`` does. ``n_max`` defaults to
    the layer's IFM sample count (beyond that the output no longer changes).
    """
    model.index(layer)
    if n_max is None:
        n_max = max(2, math.prod(model.ifm_dims(layer)))
    if n_max < 2:
        raise ParameterError(f"n_max must be >= 2, got {n_max}")

    tracked, p_original = top_class(infer(model, x))
    if budget.gamma == 0:
        return ControlResult(1, tracked, p_original, p_original, 0.0, ())

    trace = []
    # one iteration per window size, strictly in sequence: the counter is read,
    # the original IFM is read inside infer, and a fresh sanitized IFM is
    # written before the downstream layers consume it
    for n in range(2, n_max + 1):
        p = float(infer(model, x, SanitizationPlan({layer: n}))[tracked])
        trace.append((n, p))
        if meets_degree(p_original, p, budget.gamma):
            return ControlResult(n, tracked, p_original, p, _loss_or_inf(p_original, p), tuple(trace))
    raise BudgetUnreachable(
        f"no window size in 2..{n_max} on {layer!r} brings p={p_original:.6f} "
        f"below p/2^{budget.gamma:g}",
        trace,
    )
