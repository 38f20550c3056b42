"""Model artifact container: one file per trained model.

Layout: a single JSON header line (format_version, model kind, full config,
training split id, seed, array directory, and any structural payload such
as serialized trees) followed by the concatenated binary weight blocks in
directory order. Loading a mismatched format_version is a data error.
"""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path

import numpy as np

from .classifiers import (BoostConfig, BoostModel, CNNConfig, CNNModel, CNNNetwork,
                          ForestConfig, ForestModel, KernelKind, MNBModel, NBConfig,
                          SVMConfig, SVMModel)
from .classifiers.trees import _Node
from .errors import DataError

MODEL_FORMAT_VERSION = "1"


def _config_dict(config) -> dict:
    out = {}
    for f in dataclasses.fields(config):
        value = getattr(config, f.name)
        if isinstance(value, KernelKind):
            value = value.value
        elif isinstance(value, tuple):
            value = list(value)
        out[f.name] = value
    return out


def _node_to_obj(node: _Node) -> dict:
    obj = {"value": node.value}
    if not node.is_leaf:
        obj.update(feature=node.feature, threshold=node.threshold,
                   left=_node_to_obj(node.left), right=_node_to_obj(node.right))
    return obj


def _node_from_obj(obj: dict, depth: int = 0) -> _Node:
    node = _Node(value=obj["value"], depth=depth)
    if "feature" in obj:
        node.feature = obj["feature"]
        node.threshold = obj["threshold"]
        node.left = _node_from_obj(obj["left"], depth + 1)
        node.right = _node_from_obj(obj["right"], depth + 1)
    return node


def save_model(model, path: Path | str, split_id: str = "", seed: int = 0) -> Path:
    arrays: dict[str, np.ndarray] = {}
    extra: dict = {}
    if isinstance(model, SVMModel):
        kind = "svm"
        config = _config_dict(model.config)
        arrays = {"support_vectors": model.support_vectors,
                  "sv_labels": model.sv_labels, "alphas": model.alphas}
        extra = {"bias": model.bias}
    elif isinstance(model, MNBModel):
        kind = "mnb"
        config = _config_dict(model.config)
        arrays = {"log_prior": model.log_prior, "log_likelihood": model.log_likelihood}
    elif isinstance(model, ForestModel):
        kind = "forest"
        config = _config_dict(model.config)
        extra = {"trees": [_node_to_obj(t) for t in model.trees]}
    elif isinstance(model, BoostModel):
        kind = "boost"
        config = _config_dict(model.config)
        extra = {"trees": [_node_to_obj(t) for t in model.trees],
                 "base_margin": model.base_margin,
                 "train_losses": list(model.train_losses)}
    elif isinstance(model, CNNModel):
        kind = "cnn"
        config = _config_dict(model.config)
        for i, (param, _) in enumerate(model.network.parameters()):
            arrays[f"param_{i:03d}"] = param
        extra = {"epoch_losses": list(model.epoch_losses)}
    else:
        raise DataError(f"cannot serialize model of type {type(model).__name__}")

    directory = []
    blobs = []
    for name in sorted(arrays):
        arr = np.ascontiguousarray(arrays[name])
        directory.append({"name": name, "dtype": str(arr.dtype),
                          "shape": list(arr.shape)})
        blobs.append(arr.tobytes())
    header = {"format_version": MODEL_FORMAT_VERSION, "kind": kind, "config": config,
              "split_id": split_id, "seed": seed, "arrays": directory, "extra": extra}
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n")
        for blob in blobs:
            fh.write(blob)
    return path


def load_model(path: Path | str):
    path = Path(path)
    if not path.is_file():
        raise DataError(f"model artifact not found: {path}")
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        if header.get("format_version") != MODEL_FORMAT_VERSION:
            raise DataError(f"model artifact {path} has format_version "
                            f"{header.get('format_version')!r}, expected "
                            f"{MODEL_FORMAT_VERSION!r}")
        arrays = {}
        for entry in header["arrays"]:
            n_bytes = np.dtype(entry["dtype"]).itemsize * int(np.prod(entry["shape"] or [1]))
            blob = fh.read(n_bytes)
            arrays[entry["name"]] = np.frombuffer(blob, dtype=entry["dtype"]).reshape(
                entry["shape"]).copy()

    kind, extra = header["kind"], header["extra"]
    config = dict(header["config"])
    if kind == "svm":
        config["kernel"] = KernelKind(config["kernel"])
        model = SVMModel(support_vectors=arrays["support_vectors"],
                         sv_labels=arrays["sv_labels"], alphas=arrays["alphas"],
                         bias=extra["bias"], config=SVMConfig(**config))
    elif kind == "mnb":
        model = MNBModel(log_prior=arrays["log_prior"],
                         log_likelihood=arrays["log_likelihood"],
                         config=NBConfig(**config))
    elif kind == "forest":
        model = ForestModel(trees=[_node_from_obj(t) for t in extra["trees"]],
                            config=ForestConfig(**config))
    elif kind == "boost":
        model = BoostModel(base_margin=extra["base_margin"],
                           trees=[_node_from_obj(t) for t in extra["trees"]],
                           config=BoostConfig(**config),
                           train_losses=list(extra["train_losses"]))
    elif kind == "cnn":
        config["conv_channels"] = tuple(config["conv_channels"])
        cnn_config = CNNConfig(**config)
        network = CNNNetwork(cnn_config)
        params = network.parameters()
        for i, (param, _) in enumerate(params):
            stored = arrays[f"param_{i:03d}"]
            if stored.shape != param.shape:
                raise DataError(f"model artifact {path}: parameter {i} shape mismatch")
            param[...] = stored
        model = CNNModel(network=network, config=cnn_config,
                         epoch_losses=tuple(extra["epoch_losses"]))
    else:
        raise DataError(f"unknown model kind {kind!r} in {path}")
    return model, header
