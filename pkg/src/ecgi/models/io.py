"""Binary model files: magic, version, kind, JSON manifest, little-endian float64 blob."""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..errors import SchemaError
from .base import Classifier, normalize_kind
from .networks import NetworkClassifier
from .shallow import GaussianNB, RandomForest

MAGIC = b"ECGI"
VERSION = 1

_CLASSES = {"NB": GaussianNB, "RFC": RandomForest, "MLP": NetworkClassifier,
            "CNN": NetworkClassifier, "LSTM": NetworkClassifier}


def save_model(model: Classifier, path: str | Path) -> None:
    meta, tensors = model.export()
    names = sorted(tensors)
    manifest = {
        "meta": meta,
        "tensors": [{"name": n, "shape": list(np.shape(tensors[n]))} for n in names],
    }
    body = json.dumps(manifest, sort_keys=True).encode()
    kind = model.kind.encode("ascii")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(MAGIC + struct.pack("<I", VERSION))
        fh.write(struct.pack("<I", len(kind)) + kind)
        fh.write(struct.pack("<I", len(body)) + body)
        for n in names:
            fh.write(np.ascontiguousarray(tensors[n], dtype="<f8").tobytes())


def load_model(path: str | Path) -> Classifier:
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise SchemaError(f"{path}: not a model file")
    (version,) = struct.unpack_from("<I", data, 4)
    if version != VERSION:
        raise SchemaError(f"{path}: unsupported model file version {version}")
    pos = 8
    (klen,) = struct.unpack_from("<I", data, pos)
    kind = normalize_kind(data[pos + 4 : pos + 4 + klen].decode("ascii"))
    pos += 4 + klen
    (mlen,) = struct.unpack_from("<I", data, pos)
    manifest = json.loads(data[pos + 4 : pos + 4 + mlen])
    pos += 4 + mlen
    tensors = {}
    for entry in manifest["tensors"]:
        count = int(np.prod(entry["shape"], dtype=np.int64))
        end = pos + 8 * count
        if end > len(data):
            raise SchemaError(f"{path}: truncated tensor {entry['name']}")
        tensors[entry["name"]] = np.frombuffer(data[pos:end], dtype="<f8").reshape(entry["shape"]).copy()
        pos = end
    return _CLASSES[kind].restore(kind, manifest["meta"], tensors)
