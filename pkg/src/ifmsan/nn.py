"""Forward-only CNN inference with IFM sanitization hooks.

Supports the layer kinds an AlexNet-shaped network needs: convolution
(optionally grouped), ReLU, max pooling, cross-channel LRN, fully connected
and softmax. Activations are float32 between layers; dot products and
normalizer sums accumulate in float64.

The sanitization hook is part of :func:`infer` itself. A model only
describes layers and weights and has no way to skip or replace the
sanitized IFM.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ConfigError, DimensionError
from .sanitizer import EMPTY_PLAN, SanitizationPlan, sanitize_ifm
from .tensor import Tensor

KINDS = ("convolution", "relu", "maxpool", "lrn", "fullyconnected", "softmax")


def _pair(v) -> tuple[int, int]:
    if isinstance(v, (tuple, list)):
        if len(v) != 2:
            raise ConfigError(f"expected an int or a pair, got {v!r}")
        return int(v[0]), int(v[1])
    return int(v), int(v)


def _check_3d(dims, layer) -> tuple[int, int, int]:
    if len(dims) != 3:
        raise DimensionError(f"{layer.name}: expected a (C, H, W) IFM, got dims {tuple(dims)}")
    return tuple(dims)


@dataclass(frozen=True, eq=False)
class Layer:
    name: str

    kind = ""

    def output_dims(self, dims: Sequence[int]) -> tuple[int, ...]:
        return tuple(dims)

    def forward(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, ifm: Tensor) -> Tensor:
        out_dims = self.output_dims(ifm.dims)
        out = self.forward(ifm.array())
        return Tensor(out_dims, out.astype(np.float32, copy=False))


@dataclass(frozen=True, eq=False)
class Convolution(Layer):
    """Cross-correlation (no kernel flip) plus bias.

    ``weight`` has shape (out_channels, in_channels / group, kh, kw).
    """

    weight: np.ndarray = None
    bias: Optional[np.ndarray] = None
    stride: int | tuple[int, int] = 1
    pad: int | tuple[int, int] = 0
    group: int = 1

    kind = "convolution"

    def __post_init__(self):
        w = np.asarray(self.weight, dtype=np.float32)
        if w.ndim != 4:
            raise DimensionError(f"{self.name}: conv weight must be 4-D, got shape {w.shape}")
        object.__setattr__(self, "weight", w)
        b = np.zeros(w.shape[0], np.float32) if self.bias is None else np.asarray(self.bias, np.float32).reshape(-1)
        if b.size != w.shape[0]:
            raise DimensionError(f"{self.name}: bias length {b.size} != out channels {w.shape[0]}")
        object.__setattr__(self, "bias", b)
        object.__setattr__(self, "stride", _pair(self.stride))
        object.__setattr__(self, "pad", _pair(self.pad))
        if min(self.stride) < 1 or min(self.pad) < 0:
            raise ConfigError(f"{self.name}: stride must be >= 1 and pad >= 0")
        if self.group < 1 or w.shape[0] % self.group:
            raise ConfigError(f"{self.name}: {w.shape[0]} out channels not divisible by group {self.group}")

    @property
    def out_channels(self) -> int:
        return self.weight.shape[0]

    @property
    def kernel(self) -> tuple[int, int]:
        return self.weight.shape[2], self.weight.shape[3]

    def output_dims(self, dims):
        c, h, w = _check_3d(dims, self)
        if c != self.weight.shape[1] * self.group:
            raise DimensionError(
                f"{self.name}: IFM has {c} channels, weights expect {self.weight.shape[1] * self.group}"
            )
        (kh, kw), (sh, sw), (ph, pw) = self.kernel, self.stride, self.pad
        if h + 2 * ph < kh or w + 2 * pw < kw:
            raise DimensionError(f"{self.name}: kernel {kh}x{kw} does not fit padded {h}x{w} input")
        return self.out_channels, (h + 2 * ph - kh) // sh + 1, (w + 2 * pw - kw) // sw + 1

    def forward(self, x):
        self.output_dims(x.shape)
        (ph, pw), (sh, sw) = self.pad, self.stride
        xp = np.pad(x.astype(np.float64), ((0, 0), (ph, ph), (pw, pw)))
        # patches: (C, OH, OW, kh, kw)
        patches = sliding_window_view(xp, self.kernel, axis=(1, 2))[:, ::sh, ::sw]
        g = self.group
        cin_g = self.weight.shape[1]
        cout_g = self.out_channels // g
        w64 = self.weight.astype(np.float64)
        outs = []
        for gi in range(g):
            p = patches[gi * cin_g:(gi + 1) * cin_g]
            wg = w64[gi * cout_g:(gi + 1) * cout_g]
            outs.append(np.einsum("chwij,ocij->ohw", p, wg, optimize=True))
        out = np.concatenate(outs, axis=0) + self.bias.astype(np.float64)[:, None, None]
        return out.astype(np.float32)


@dataclass(frozen=True, eq=False)
class ReLU(Layer):
    kind = "relu"

    def forward(self, x):
        return np.maximum(x, np.float32(0.0))


@dataclass(frozen=True, eq=False)
class MaxPool(Layer):
    kernel: int | tuple[int, int] = 2
    stride: int | tuple[int, int] = 2

    kind = "maxpool"

    def __post_init__(self):
        object.__setattr__(self, "kernel", _pair(self.kernel))
        object.__setattr__(self, "stride", _pair(self.stride))
        if min(self.kernel) < 1 or min(self.stride) < 1:
            raise ConfigError(f"{self.name}: kernel and stride must be >= 1")

    def output_dims(self, dims):
        c, h, w = _check_3d(dims, self)
        (kh, kw), (sh, sw) = self.kernel, self.stride
        if h < kh or w < kw:
            raise DimensionError(f"{self.name}: pool kernel {kh}x{kw} larger than {h}x{w} input")
        return c, (h - kh) // sh + 1, (w - kw) // sw + 1

    def forward(self, x):
        self.output_dims(x.shape)
        sh, sw = self.stride
        view = sliding_window_view(x, self.kernel, axis=(1, 2))[:, ::sh, ::sw]
        return view.max(axis=(3, 4))


@dataclass(frozen=True, eq=False)
class LRN(Layer):
    """Cross-channel local response normalization.

    ``y[c] = x[c] / (k + alpha / local_size * sum(x[c']**2))**beta`` with c'
    ranging over the ``local_size`` channels centred on c (clipped at the edges).
    """

    local_size: int = 5
    alpha: float = 1e-4
    beta: float = 0.75
    k: float = 1.0

    kind = "lrn"

    def __post_init__(self):
        if self.local_size < 1 or self.local_size % 2 == 0:
            raise ConfigError(f"{self.name}: local_size must be a positive odd integer")

    def output_dims(self, dims):
        return _check_3d(dims, self)

    def forward(self, x):
        self.output_dims(x.shape)
        x64 = x.astype(np.float64)
        sq = x64 * x64
        half = self.local_size // 2
        csum = np.concatenate([np.zeros((1,) + sq.shape[1:]), np.cumsum(sq, axis=0)])
        c = x.shape[0]
        lo = np.clip(np.arange(c) - half, 0, c)
        hi = np.clip(np.arange(c) + half + 1, 0, c)
        window_sum = csum[hi] - csum[lo]
        scale = (self.k + self.alpha / self.local_size * window_sum) ** self.beta
        return (x64 / scale).astype(np.float32)


@dataclass(frozen=True, eq=False)
class FullyConnected(Layer):
    """``weight @ flatten(x) + bias`` with ``weight`` of shape (out, in)."""

    weight: np.ndarray = None
    bias: Optional[np.ndarray] = None

    kind = "fullyconnected"

    def __post_init__(self):
        w = np.asarray(self.weight, dtype=np.float32)
        if w.ndim != 2:
            raise DimensionError(f"{self.name}: fc weight must be 2-D, got shape {w.shape}")
        object.__setattr__(self, "weight", w)
        b = np.zeros(w.shape[0], np.float32) if self.bias is None else np.asarray(self.bias, np.float32).reshape(-1)
        if b.size != w.shape[0]:
            raise DimensionError(f"{self.name}: bias length {b.size} != outputs {w.shape[0]}")
        object.__setattr__(self, "bias", b)

    @property
    def outputs(self) -> int:
        return self.weight.shape[0]

    def output_dims(self, dims):
        n = int(np.prod(dims))
        if n != self.weight.shape[1]:
            raise DimensionError(f"{self.name}: IFM has {n} samples, weights expect {self.weight.shape[1]}")
        return (self.outputs,)

    def forward(self, x):
        self.output_dims(x.shape)
        out = self.weight.astype(np.float64) @ x.reshape(-1).astype(np.float64)
        return (out + self.bias).astype(np.float32)


@dataclass(frozen=True, eq=False)
class Softmax(Layer):
    kind = "softmax"

    def output_dims(self, dims):
        return (int(np.prod(dims)),)

    def forward(self, x):
        z = x.reshape(-1).astype(np.float64)
        e = np.exp(z - z.max())
        return (e / e.sum()).astype(np.float32)


@dataclass(frozen=True, eq=False)
class Model:
    input_dims: tuple[int, ...]
    layers: tuple[Layer, ...]
    names: tuple[str, ...] = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "input_dims", tuple(int(d) for d in self.input_dims))
        object.__setattr__(self, "layers", tuple(self.layers))
        names = tuple(layer.name for layer in self.layers)
        if len(set(names)) != len(names):
            raise ConfigError(f"layer names must be unique: {names}")
        if not self.layers or not isinstance(self.layers[-1], Softmax):
            raise ConfigError("the final layer must be softmax")
        object.__setattr__(self, "names", names)
        self.ifm_dims()  # shape check the whole chain

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise ConfigError(f"unknown layer {name!r}; model has {', '.join(self.names)}") from None

    def ifm_dims(self, name: Optional[str] = None):
        """IFM dims of one layer, or a {name: dims} map for all of them."""
        dims = self.input_dims
        table = {}
        for layer in self.layers:
            table[layer.name] = dims
            dims = layer.output_dims(dims)
        return table if name is None else table[self.layers[self.index(name)].name]

    def check_plan(self, plan: SanitizationPlan) -> None:
        unknown = sorted(set(plan.declared) - set(self.names))
        if unknown:
            raise ConfigError(f"plan names unknown layer(s): {', '.join(unknown)}")


def layer_forward(layer: Layer, ifm: Tensor) -> Tensor:
    return layer(ifm)


def forward(model: Model, x: Tensor, plan: SanitizationPlan = EMPTY_PLAN, capture: bool = False):
    """Run every layer in order, sanitizing planned IFMs first.

    Returns the output tensor, plus the list of IFMs actually fed to each
    layer when ``capture`` is set.
    """
    if x.dims != model.input_dims:
        raise DimensionError(f"input dims {x.dims} != model input dims {model.input_dims}")
    model.check_plan(plan)
    fed = []
    for layer in model.layers:
        n = plan.window(layer.name)
        if n > 1:
            x = sanitize_ifm(x, n)
        if capture:
            fed.append(x)
        x = layer(x)
    return (x, fed) if capture else x


def infer(model: Model, x: Tensor, plan: SanitizationPlan = EMPTY_PLAN) -> np.ndarray:
    """Class probabilities of ``x`` under ``plan``."""
    return forward(model, x, plan).data


def original_ifms(model: Model, x: Tensor) -> dict[str, Tensor]:
    _, fed = forward(model, x, capture=True)
    return dict(zip(model.names, fed))


def top_class(p) -> tuple[int, float]:
    p = np.asarray(p).reshape(-1)
    if p.size == 0:
        raise DimensionError("empty probability vector")
    i = int(np.argmax(p))
    return i, float(p[i])


def top_k(p, k: int = 5) -> list[tuple[int, float]]:
    p = np.asarray(p).reshape(-1)
    order = np.argsort(-p, kind="stable")[:k]
    return [(int(i), float(p[i])) for i in order]
