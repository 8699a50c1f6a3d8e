"""``CKPT`` container: magic, u32 JSON index length, JSON index, float32 blobs.

The index is ``{"format": 1, "spec": {...}, "tensors": [{"name", "shape",
"offset", "count"}, ...]}`` with byte offsets relative to the payload start.
Tensors are written in :func:`param_shapes` order.
"""
from __future__ import annotations

import json
import struct

import numpy as np

from .model import ModelSpec, param_shapes

MAGIC = b"CKPT"


class CheckpointError(ValueError):
    pass


def encode_checkpoint(params: dict, spec: ModelSpec) -> bytes:
    shapes = param_shapes(spec)
    missing = [k for k in shapes if k not in params]
    if missing:
        raise CheckpointError(f"parameters missing from model: {', '.join(missing)}")
    tensors, blobs, offset = [], [], 0
    for name, shape in shapes.items():
        arr = np.ascontiguousarray(params[name], dtype="<f4")
        if arr.shape != tuple(shape):
            raise CheckpointError(f"{name}: shape {arr.shape} does not match spec {tuple(shape)}")
        tensors.append({"name": name, "shape": list(shape), "offset": offset, "count": int(arr.size)})
        blobs.append(arr.tobytes())
        offset += arr.nbytes
    index = json.dumps({"format": 1, "spec": spec.to_dict(), "tensors": tensors},
                       separators=(",", ":"), sort_keys=True).encode("utf-8")
    return MAGIC + struct.pack("<I", len(index)) + index + b"".join(blobs)


def save_checkpoint(path, params: dict, spec: ModelSpec) -> None:
    blob = encode_checkpoint(params, spec)
    with open(path, "wb") as fh:
        fh.write(blob)


def load_checkpoint(path, spec: ModelSpec | None = None) -> tuple[dict, ModelSpec]:
    """Read a checkpoint; validates it against ``spec`` (default: the stored spec)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != MAGIC:
        raise CheckpointError(f"{path}: bad magic")
    if len(blob) < 8:
        raise CheckpointError(f"{path}: truncated")
    (n,) = struct.unpack("<I", blob[4:8])
    try:
        index = json.loads(blob[8 : 8 + n].decode("utf-8"))
        stored = ModelSpec(**index["spec"])
    except (ValueError, KeyError, TypeError) as exc:
        raise CheckpointError(f"{path}: invalid index: {exc}") from exc
    spec = spec or stored
    payload = memoryview(blob)[8 + n :]
    entries = {t["name"]: t for t in index["tensors"]}
    expected = param_shapes(spec)
    missing = [k for k in expected if k not in entries]
    if missing:
        raise CheckpointError(f"{path}: missing parameters: {', '.join(missing)}")
    params = {}
    for name, shape in expected.items():
        t = entries[name]
        if tuple(t["shape"]) != tuple(shape):
            raise CheckpointError(f"{path}: {name} has shape {tuple(t['shape'])}, model expects {tuple(shape)}")
        end = t["offset"] + 4 * t["count"]
        if end > len(payload):
            raise CheckpointError(f"{path}: truncated tensor {name}")
        arr = np.frombuffer(payload[t["offset"] : end], dtype="<f4").reshape(shape)
        params[name] = arr.astype(np.float32)
    return params, spec
