"""Window sweeps and sanitization-efficiency statistics."""
from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from typing import Iterable, Optional, Sequence

from .errors import ConfigError, FormatError, ParameterError
from .nn import Model, infer, top_class
from .sanitizer import EMPTY_PLAN, SanitizationPlan
from .tensor import Tensor

DEFAULT_PRECISION = 6
LOW_EDGE = 0.2
HIGH_EDGE = 0.8


@dataclass(frozen=True)
class SweepRecord:
    window_size: int
    probability: float


@dataclass(frozen=True)
class AccuracyHistogram:
    low: int  # [0, 0.2]
    mid: int  # (0.2, 0.8]
    high: int  # (0.8, 1.0]

    @property
    def total(self) -> int:
        return self.low + self.mid + self.high


def tracked_class(model: Model, x: Tensor) -> int:
    return top_class(infer(model, x))[0]


def _point(model, x, plan, layer, label, n):
    return SweepRecord(n, float(infer(model, x, plan.merged(layer, n))[label]))


def multi_layer_sweep(
    model: Model,
    x: Tensor,
    fixed_plan: SanitizationPlan,
    swept_layer: str,
    n_from: int = 2,
    n_to: int = 150,
    jobs: int = 1,
) -> list[SweepRecord]:
    """Sweep ``swept_layer`` over ``n_from..n_to`` on top of ``fixed_plan``."""
    model.index(swept_layer)
    model.check_plan(fixed_plan)
    if swept_layer in fixed_plan.declared:
        raise ConfigError(f"{swept_layer!r} is both swept and fixed")
    if not 2 <= n_from <= n_to:
        raise ParameterError(f"need 2 <= n_from <= n_to, got {n_from}..{n_to}")

    point = partial(_point, model, x, fixed_plan, swept_layer, tracked_class(model, x))
    sizes = range(n_from, n_to + 1)
    if jobs > 1:
        # map() yields in submission order, so results stay ascending
        with ProcessPoolExecutor(jobs) as pool:
            return list(pool.map(point, sizes, chunksize=max(1, len(sizes) // (4 * jobs))))
    return [point(n) for n in sizes]


def sweep(model: Model, x: Tensor, layer: str, n_from: int = 2, n_to: int = 150,
          jobs: int = 1) -> list[SweepRecord]:
    return multi_layer_sweep(model, x, EMPTY_PLAN, layer, n_from, n_to, jobs)


def _distinct(records: Sequence[SweepRecord], precision: int) -> set[float]:
    return {round(r.probability, precision) for r in records}


def window_range(records: Sequence[SweepRecord]) -> int:
    """Number of window sizes covered: last - first + 1."""
    if not records:
        raise ParameterError("no sweep records")
    sizes = [r.window_size for r in records]
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ParameterError("sweep records must be strictly ascending by window size")
    return sizes[-1] - sizes[0] + 1


def eff_san(records: Sequence[SweepRecord], precision: int = DEFAULT_PRECISION) -> float:
    """Distinct (rounded) probabilities divided by the swept window range."""
    span = window_range(records)
    return len(_distinct(records, precision)) / span


def accuracy_histogram(records: Iterable[SweepRecord],
                       precision: int = DEFAULT_PRECISION) -> AccuracyHistogram:
    low = mid = high = 0
    for p in _distinct(list(records), precision):
        if p <= LOW_EDGE:
            low += 1
        elif p <= HIGH_EDGE:
            mid += 1
        else:
            high += 1
    return AccuracyHistogram(low, mid, high)


def attenuation_threshold(records: Sequence[SweepRecord], threshold: float = 0.2) -> Optional[int]:
    """Smallest window from which every swept probability stays below ``threshold``.

    None if the last record is not below the threshold.
    """
    if not 0 < threshold < 1:
        raise ParameterError(f"threshold must be in (0, 1), got {threshold}")
    found = None
    for r in reversed(records):
        if r.probability >= threshold:
            break
        found = r.window_size
    return found


def write_sweep_csv(records: Sequence[SweepRecord], path_or_file) -> None:
    if isinstance(path_or_file, (str, os.PathLike)):
        with open(path_or_file, "w", newline="") as fh:
            write_sweep_csv(records, fh)
        return
    w = csv.writer(path_or_file, lineterminator="\n")
    w.writerow(["window_size", "probability"])
    for r in records:
        w.writerow([r.window_size, f"{r.probability:.6f}"])


def read_sweep_csv(path_or_file) -> list[SweepRecord]:
    if isinstance(path_or_file, (str, os.PathLike)):
        try:
            with open(path_or_file, newline="") as fh:
                return read_sweep_csv(io.StringIO(fh.read()))
        except OSError as exc:
            raise FormatError(f"{path_or_file}: {exc.strerror or exc}") from exc
    reader = csv.reader(path_or_file)
    header = next(reader, None)
    if header != ["window_size", "probability"]:
        raise FormatError(f"unexpected sweep CSV header {header!r}")
    try:
        return [SweepRecord(int(n), float(p)) for n, p in reader]
    except ValueError as exc:
        raise FormatError(f"malformed sweep CSV row: {exc}") from exc


def summary_lines(records: Sequence[SweepRecord], precision: int = DEFAULT_PRECISION,
                  zero_ratio: Optional[float] = None) -> list[str]:
    hist = accuracy_histogram(records, precision)
    lines = [
        f"eff_san={eff_san(records, precision):.6f}",
        f"distinct={hist.total}",
        f"range={window_range(records)}",
        f"distinct_low={hist.low}",
        f"distinct_mid={hist.mid}",
        f"distinct_high={hist.high}",
    ]
    if zero_ratio is not None:
        lines.append(f"zero_ratio={zero_ratio:.6f}")
    return lines
