"""Versioned JSON persistence for network weights."""
from __future__ import annotations

import json

import numpy as np

from ..errors import CorruptFile, SchemaVersionMismatch, ShapeMismatch
from .network import Architecture, NetworkParams

FORMAT = "hybridnav.neuralq"
SCHEMA_VERSION = 1


def save_params(params, path, meta=None):
    """Write ``params`` as JSON. Floats are stored with round-trip precision."""
    doc = {
        "format": FORMAT,
        "version": SCHEMA_VERSION,
        "arch": params.arch.to_dict(),
        "tensors": {k: {"shape": list(v.shape), "data": v.ravel().tolist()}
                    for k, v in params.tensors.items()},
        "meta": meta or {},
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_params(path, window_length=None):
    """Read weights written by :func:`save_params`.

    Raises ``SchemaVersionMismatch`` for a foreign version or a window length
    other than ``window_length`` and ``CorruptFile`` for unreadable content.
    """
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CorruptFile(f"{path}: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise CorruptFile(f"{path}: not a weight file")
    if doc.get("version") != SCHEMA_VERSION:
        raise SchemaVersionMismatch(f"{path}: version {doc.get('version')} != {SCHEMA_VERSION}")
    try:
        arch = Architecture.from_dict(doc["arch"])
        tensors = {}
        for name, entry in doc["tensors"].items():
            data = np.asarray(entry["data"], dtype=float)
            shape = tuple(entry["shape"])
            if data.size != int(np.prod(shape)):
                raise CorruptFile(f"{path}: {name} holds {data.size} values for shape {shape}")
            tensors[name] = data.reshape(shape)
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptFile(f"{path}: {exc}") from exc
    if window_length is not None and arch.window_length != window_length:
        raise SchemaVersionMismatch(
            f"{path}: model expects N={arch.window_length}, run uses N={window_length}")
    try:
        return NetworkParams(arch, tensors)
    except ShapeMismatch as exc:
        raise SchemaVersionMismatch(f"{path}: {exc}") from exc


def load_meta(path):
    with open(path) as fh:
        return json.load(fh).get("meta", {})
