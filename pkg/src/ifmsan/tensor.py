"""Float32 tensors in width-fastest layout, stream unfolding, sparsity stats.

A 3-D feature map has dims ``(channel, height, width)``; the flat data is
row-major, so width varies fastest, then height, then channel. Unfolding a
tensor into a stream is therefore just a view of its data.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionError

MAX_RANK = 3


@dataclass(frozen=True, eq=False)
class Tensor:
    dims: tuple[int, ...]
    data: np.ndarray

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims or len(dims) > MAX_RANK:
            raise DimensionError(f"rank must be 1..{MAX_RANK}, got dims {dims}")
        if any(d < 1 for d in dims):
            raise DimensionError(f"every dim must be >= 1, got {dims}")
        data = np.array(self.data, dtype=np.float32, copy=True).reshape(-1)
        if data.size != _product(dims):
            raise DimensionError(
                f"data length {data.size} does not match dims {dims} "
                f"(product {_product(dims)})"
            )
        data.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "data", data)

    @classmethod
    def from_array(cls, array) -> "Tensor":
        array = np.asarray(array, dtype=np.float32)
        return cls(array.shape, array)

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def rank(self) -> int:
        return len(self.dims)

    def array(self) -> np.ndarray:
        """Read-only view shaped by ``dims``."""
        return self.data.reshape(self.dims)

    def __eq__(self, other):
        # bit-identical comparison, so -0.0 != 0.0 and NaN == NaN
        if not isinstance(other, Tensor):
            return NotImplemented
        return self.dims == other.dims and self.data.tobytes() == other.data.tobytes()

    def __hash__(self):
        return hash((self.dims, self.data.tobytes()))

    def __repr__(self):
        return f"Tensor(dims={self.dims}, head={self.data[:6].tolist()})"


def _product(dims: Sequence[int]) -> int:
    out = 1
    for d in dims:
        out *= int(d)
    return out


def unfold(t: Tensor) -> np.ndarray:
    """The stream of ``t`` in width -> height -> channel order (read-only view)."""
    return t.data


def fold(stream, dims: Sequence[int]) -> Tensor:
    stream = np.asarray(stream, dtype=np.float32).reshape(-1)
    if stream.size != _product(dims):
        raise DimensionError(
            f"stream of length {stream.size} cannot fold into dims {tuple(dims)}"
        )
    return Tensor(tuple(dims), stream)


def zero_ratio(t: Tensor) -> float:
    """Fraction of samples exactly equal to zero."""
    return int(np.count_nonzero(t.data == 0.0)) / t.size
