"""Sample-and-hold approximation of feature-map streams.

A stream is cut into consecutive, disjoint windows of ``n`` samples (the
last window keeps the remainder). In each window the non-zero samples are
averaged and every sample is replaced by the non-zero sample closest to
that average. All-zero windows pass through untouched.

Numerics, shared with the brute-force reference in the tests:

* the non-zero mean is accumulated left to right in float64;
* distances ``|x - mean|`` are float64 and ties go to the lowest index.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Mapping

import numpy as np

from .errors import ConfigError, ParameterError
from .tensor import Tensor, fold, unfold


def sanitize_window(window) -> np.ndarray:
    w = np.asarray(window, dtype=np.float32).reshape(-1)
    if w.size == 0:
        raise ParameterError("window must be nonempty")
    return sanitize_stream(w, w.size)


def sanitize_stream(stream, n: int) -> np.ndarray:
    s = np.asarray(stream, dtype=np.float32).reshape(-1)
    n = int(n)
    if n < 1:
        raise ParameterError(f"window size must be >= 1, got {n}")
    if n == 1 or s.size == 0:
        return s.copy()

    n_windows = -(-s.size // n)
    padded = np.zeros(n_windows * n, dtype=np.float32)
    padded[: s.size] = s
    windows = padded.reshape(n_windows, n)
    # padding zeros are excluded from the non-zero set like any other zero
    nonzero = windows != 0.0
    counts = nonzero.sum(axis=1)

    vals = windows.astype(np.float64)
    total = np.zeros(n_windows, dtype=np.float64)
    for j in range(n):
        total += np.where(nonzero[:, j], vals[:, j], 0.0)
    active = counts > 0
    mean = np.zeros(n_windows, dtype=np.float64)
    mean[active] = total[active] / counts[active]

    dist = np.where(nonzero, np.abs(vals - mean[:, None]), np.inf)
    pick = np.argmin(dist, axis=1)
    held = windows[np.arange(n_windows), pick]

    out = np.where(active[:, None], held[:, None], windows)
    return out.reshape(-1)[: s.size].astype(np.float32, copy=False)


def sanitize_ifm(t: Tensor, n: int) -> Tensor:
    return fold(sanitize_stream(unfold(t), n), t.dims)


@dataclass(frozen=True)
class SanitizationPlan:
    """Per-layer window sizes. Layers not listed (or listed with n=1) pass through."""

    entries: Mapping[str, int] = field(default_factory=dict)
    # every layer named, including n=1 entries, so unknown names can be rejected
    declared: frozenset = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        cleaned = {}
        for name, n in dict(self.entries).items():
            if isinstance(n, bool) or int(n) != n:
                raise ConfigError(f"window size for {name!r} must be an integer, got {n!r}")
            if n < 1:
                raise ConfigError(f"window size for {name!r} must be >= 1, got {n}")
            if n > 1:
                cleaned[str(name)] = int(n)
        object.__setattr__(self, "declared", frozenset(str(k) for k in dict(self.entries)))
        object.__setattr__(self, "entries", cleaned)

    @classmethod
    def parse(cls, items) -> "SanitizationPlan":
        """Build a plan from ``name=n`` strings."""
        entries = {}
        for item in items or ():
            name, sep, value = item.partition("=")
            if not sep or not name:
                raise ConfigError(f"expected name=n, got {item!r}")
            try:
                n = int(value)
            except ValueError:
                raise ConfigError(f"window size in {item!r} is not an integer") from None
            if name in entries:
                raise ConfigError(f"layer {name!r} given twice")
            entries[name] = n
        return cls(entries)

    def window(self, layer: str) -> int:
        return self.entries.get(layer, 1)

    def merged(self, layer: str, n: int) -> "SanitizationPlan":
        if layer in self.declared:
            raise ConfigError(f"layer {layer!r} is already in the plan")
        return SanitizationPlan({**{k: self.window(k) for k in self.declared}, layer: n})

    def __contains__(self, layer) -> bool:
        return layer in self.entries

    def __iter__(self) -> Iterator[str]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)


EMPTY_PLAN = SanitizationPlan()
