"""JSON model manifests and the seeded toy CNN.

A manifest looks like::

    {
      "version": 1,
      "input_dims": [3, 16, 16],
      "layers": [
        {"name": "conv1", "kind": "convolution", "out_channels": 8,
         "kernel": [3, 3], "stride": 1, "pad": 1, "group": 1,
         "weight": "conv1.weight.ifmt", "bias": "conv1.bias.ifmt"},
        {"name": "relu1", "kind": "relu"},
        {"name": "pool1", "kind": "maxpool", "kernel": 2, "stride": 2},
        {"name": "norm1", "kind": "lrn", "local_size": 5, "alpha": 1e-4,
         "beta": 0.75, "k": 1.0},
        {"name": "fc", "kind": "fullyconnected", "outputs": 10,
         "weight": "fc.weight.ifmt", "bias": "fc.bias.ifmt"},
        {"name": "prob", "kind": "softmax"}
      ]
    }

Weight paths are relative to the manifest. IFMT files hold at most three
dims, so weights are stored flat (or in any shape with the right element
count) and reshaped from ``out_channels``/``kernel``/``outputs``. ``bias``
is optional. Unknown keys are rejected.
"""
from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from . import ifmt
from .errors import ConfigError, DimensionError, FormatError
from .nn import LRN, Convolution, FullyConnected, Layer, MaxPool, Model, ReLU, Softmax
from .tensor import Tensor

MANIFEST_VERSION = 1

_TOP_KEYS = {"version", "input_dims", "layers"}
_LAYER_KEYS = {
    "convolution": {"out_channels", "kernel", "stride", "pad", "group", "weight", "bias"},
    "relu": set(),
    "maxpool": {"kernel", "stride"},
    "lrn": {"local_size", "alpha", "beta", "k"},
    "fullyconnected": {"outputs", "weight", "bias"},
    "softmax": set(),
}
_REQUIRED = {
    "convolution": {"out_channels", "kernel", "weight"},
    "fullyconnected": {"outputs", "weight"},
}


def _reject_unknown(obj: dict, allowed: set, where: str) -> None:
    extra = sorted(set(obj) - allowed)
    if extra:
        raise FormatError(f"{where}: unknown field(s) {', '.join(extra)}")


def _load_weight(base: Path, rel: str, where: str) -> np.ndarray:
    if not isinstance(rel, str):
        raise FormatError(f"{where}: weight path must be a string")
    return ifmt.read(base / rel).data


def _build_layer(entry: dict, base: Path, in_dims) -> Layer:
    if not isinstance(entry, dict) or "name" not in entry or "kind" not in entry:
        raise FormatError(f"layer entry {entry!r}: every layer needs 'name' and 'kind'")
    where = f"layer {entry['name']!r}"
    kind = entry["kind"]
    if kind not in _LAYER_KEYS:
        raise FormatError(f"{where}: unknown kind {kind!r}")
    _reject_unknown(entry, _LAYER_KEYS[kind] | {"name", "kind"}, where)
    missing = sorted(_REQUIRED.get(kind, set()) - set(entry))
    if missing:
        raise FormatError(f"{where}: missing field(s) {', '.join(missing)}")
    name = str(entry["name"])

    try:
        if kind == "convolution":
            group = int(entry.get("group", 1))
            kh, kw = (entry["kernel"], entry["kernel"]) if isinstance(entry["kernel"], int) else entry["kernel"]
            cin = in_dims[0] if len(in_dims) == 3 else -1
            if cin < 1 or cin % group:
                raise DimensionError(f"{where}: IFM dims {tuple(in_dims)} incompatible with group {group}")
            shape = (int(entry["out_channels"]), cin // group, int(kh), int(kw))
            weight = _load_weight(base, entry["weight"], where)
            if weight.size != int(np.prod(shape)):
                raise DimensionError(f"{where}: weight has {weight.size} values, expected shape {shape}")
            bias = _load_weight(base, entry["bias"], where) if "bias" in entry else None
            return Convolution(name, weight.reshape(shape), bias, entry.get("stride", 1),
                               entry.get("pad", 0), group)
        if kind == "fullyconnected":
            shape = (int(entry["outputs"]), int(np.prod(in_dims)))
            weight = _load_weight(base, entry["weight"], where)
            if weight.size != int(np.prod(shape)):
                raise DimensionError(f"{where}: weight has {weight.size} values, expected shape {shape}")
            bias = _load_weight(base, entry["bias"], where) if "bias" in entry else None
            return FullyConnected(name, weight.reshape(shape), bias)
        if kind == "maxpool":
            return MaxPool(name, entry.get("kernel", 2), entry.get("stride", 2))
        if kind == "lrn":
            return LRN(name, int(entry.get("local_size", 5)), float(entry.get("alpha", 1e-4)),
                       float(entry.get("beta", 0.75)), float(entry.get("k", 1.0)))
        if kind == "relu":
            return ReLU(name)
        return Softmax(name)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, (ConfigError, DimensionError)):
            raise
        raise FormatError(f"{where}: {exc}") from exc


def load_model(path: str | os.PathLike) -> Model:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise FormatError(f"{path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise FormatError(f"{path}: manifest must be a JSON object")
    _reject_unknown(doc, _TOP_KEYS, str(path))
    if doc.get("version", MANIFEST_VERSION) != MANIFEST_VERSION:
        raise FormatError(f"{path}: unsupported manifest version {doc['version']!r}")
    if "input_dims" not in doc or "layers" not in doc:
        raise FormatError(f"{path}: manifest needs 'input_dims' and 'layers'")
    dims = tuple(int(d) for d in doc["input_dims"])
    layers = []
    for entry in doc["layers"]:
        layer = _build_layer(entry, path.parent, dims)
        dims = layer.output_dims(dims)
        layers.append(layer)
    return Model(tuple(int(d) for d in doc["input_dims"]), tuple(layers))


def _layer_entry(layer: Layer, out_dir: Path) -> dict:
    entry = {"name": layer.name, "kind": layer.kind}
    if isinstance(layer, (Convolution, FullyConnected)):
        wfile, bfile = f"{layer.name}.weight.ifmt", f"{layer.name}.bias.ifmt"
        ifmt.write(out_dir / wfile, Tensor((layer.weight.size,), layer.weight))
        ifmt.write(out_dir / bfile, Tensor((layer.bias.size,), layer.bias))
        if isinstance(layer, Convolution):
            entry.update(out_channels=layer.out_channels, kernel=list(layer.kernel),
                         stride=list(layer.stride), pad=list(layer.pad), group=layer.group)
        else:
            entry.update(outputs=layer.outputs)
        entry.update(weight=wfile, bias=bfile)
    elif isinstance(layer, MaxPool):
        entry.update(kernel=list(layer.kernel), stride=list(layer.stride))
    elif isinstance(layer, LRN):
        entry.update(local_size=layer.local_size, alpha=layer.alpha, beta=layer.beta, k=layer.k)
    return entry


def save_model(model: Model, out_dir: str | os.PathLike, name: str = "model.json") -> Path:
    """Write ``model`` as a manifest plus IFMT weight files into ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    doc = {
        "version": MANIFEST_VERSION,
        "input_dims": list(model.input_dims),
        "layers": [_layer_entry(layer, out_dir) for layer in model.layers],
    }
    path = out_dir / name
    path.write_text(json.dumps(doc, indent=2) + "\n")
    return path


def toy_model(seed: int = 0, classes: int = 10) -> Model:
    """Small AlexNet-shaped CNN with seeded He-style random weights.

    3x16x16 input, two conv/relu/pool stages (the second followed by LRN),
    a hidden fc layer and a ``classes``-way classifier.
    """
    rng = np.random.default_rng(seed)

    def he(shape, fan_in, gain=1.0):
        return (rng.standard_normal(shape) * gain * np.sqrt(2.0 / fan_in)).astype(np.float32)

    layers = [
        Convolution("conv1", he((8, 3, 3, 3), 27), he((8,), 27, 0.1), stride=1, pad=1),
        ReLU("relu1"),
        MaxPool("pool1", 2, 2),
        Convolution("conv2", he((16, 4, 3, 3), 36), he((16,), 36, 0.1), stride=1, pad=1, group=2),
        ReLU("relu2"),
        LRN("norm2"),
        MaxPool("pool2", 2, 2),
        FullyConnected("fc3", he((32, 256), 256), he((32,), 256, 0.1)),
        ReLU("relu3"),
        FullyConnected("fc4", he((classes, 32), 32, 2.0), he((classes,), 32, 0.1)),
        Softmax("prob"),
    ]
    return Model((3, 16, 16), tuple(layers))


def toy_input(seed: int = 0, dims=(3, 16, 16)) -> Tensor:
    rng = np.random.default_rng(seed + 10_000)
    return Tensor(dims, rng.standard_normal(dims).astype(np.float32))
