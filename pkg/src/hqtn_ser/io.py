"""Binary feature cache and model checkpoint formats (little-endian throughout).

Feature cache::

    b"HQTN" | version u16 | count u32 | dim u16 | n_classes u16
    count x ( label u16 | speaker i32 (-1 = none) | dim x float32 )

Checkpoint::

    b"HQCK" | version u16 | header_len u32 | header (UTF-8 JSON)
    n_arrays u32
    n_arrays x ( name_len u16 | name | ndim u8 | ndim x u32 | float64 data )
"""
from __future__ import annotations

import contextlib
import json
import struct
from pathlib import Path

import numpy as np

from .model import HybridParams
from .nn import DenseLayer, Projection
from .pca import PcaModel
from .quantum import build_mps_circuit

CACHE_MAGIC = b"HQTN"
CACHE_VERSION = 1
CKPT_MAGIC = b"HQCK"
CKPT_VERSION = 1

_CACHE_HEAD = struct.Struct("<4sHIHH")


class FormatError(ValueError):
    """Bad magic, truncated data or otherwise unreadable file."""


class VersionError(FormatError):
    """File written by an incompatible format version."""


@contextlib.contextmanager
def _locked(fh):
    try:
        import fcntl
    except ImportError:  # non-POSIX: no advisory locking
        yield fh
        return
    fcntl.flock(fh.fileno(), fcntl.LOCK_EX)
    try:
        yield fh
    finally:
        fcntl.flock(fh.fileno(), fcntl.LOCK_UN)


def write_feature_cache(path, features, labels, speakers=None, n_classes: int | None = None) -> Path:
    features = np.asarray(features, dtype="<f4")
    labels = np.asarray(labels, dtype=np.int64)
    count, dim = features.shape
    if speakers is None:
        speakers = np.full(count, -1)
    speakers = np.asarray(speakers, dtype=np.int64)
    if n_classes is None:
        n_classes = int(labels.max()) + 1 if count else 0
    if dim > 0xFFFF or n_classes > 0xFFFF:
        raise FormatError("feature dimension and class count must fit in u16")
    if len(labels) != count or len(speakers) != count:
        raise ValueError("features, labels and speakers must have equal length")

    rec = np.zeros(count, dtype=np.dtype([("label", "<u2"), ("speaker", "<i4"), ("x", "<f4", (dim,))]))
    rec["label"] = labels
    rec["speaker"] = speakers
    rec["x"] = features
    path = Path(path)
    with open(path, "wb") as fh, _locked(fh):
        fh.write(_CACHE_HEAD.pack(CACHE_MAGIC, CACHE_VERSION, count, dim, n_classes))
        fh.write(rec.tobytes())
    return path


def read_feature_cache(path):
    """Return (features float32 (N, dim), labels, speakers, n_classes)."""
    data = Path(path).read_bytes()
    if len(data) < _CACHE_HEAD.size:
        raise FormatError(f"{path}: too short for a feature cache")
    magic, version, count, dim, n_classes = _CACHE_HEAD.unpack_from(data)
    if magic != CACHE_MAGIC:
        raise FormatError(f"{path}: not a feature cache (magic {magic!r})")
    if version != CACHE_VERSION:
        raise VersionError(f"{path}: cache version {version}, expected {CACHE_VERSION}")
    dtype = np.dtype([("label", "<u2"), ("speaker", "<i4"), ("x", "<f4", (dim,))])
    body = data[_CACHE_HEAD.size:]
    if len(body) != count * dtype.itemsize:
        raise FormatError(f"{path}: expected {count} records of {dtype.itemsize} bytes")
    rec = np.frombuffer(body, dtype=dtype)
    return rec["x"].copy(), rec["label"].astype(np.int64), rec["speaker"].astype(np.int64), n_classes


def _write_array(fh, name: str, arr: np.ndarray) -> None:
    arr = np.asarray(arr, dtype="<f8")
    raw = name.encode()
    fh.write(struct.pack("<H", len(raw)) + raw)
    fh.write(struct.pack("<B", arr.ndim) + struct.pack(f"<{arr.ndim}I", *arr.shape))
    fh.write(arr.tobytes())


def _read_arrays(buf: memoryview, offset: int) -> dict[str, np.ndarray]:
    (n,) = struct.unpack_from("<I", buf, offset)
    offset += 4
    out = {}
    for _ in range(n):
        (ln,) = struct.unpack_from("<H", buf, offset)
        offset += 2
        name = bytes(buf[offset:offset + ln]).decode()
        offset += ln
        (ndim,) = struct.unpack_from("<B", buf, offset)
        offset += 1
        shape = struct.unpack_from(f"<{ndim}I", buf, offset)
        offset += 4 * ndim
        size = int(np.prod(shape)) if ndim else 1
        out[name] = np.frombuffer(buf, dtype="<f8", count=size, offset=offset).reshape(shape).copy()
        offset += 8 * size
    if offset != len(buf):
        raise FormatError("trailing bytes after checkpoint arrays")
    return out


def save_checkpoint(path, params: HybridParams, pca: PcaModel | None = None, config: dict | None = None) -> Path:
    header = {
        "mode": params.mode,
        "n_qubits": params.circuit.n_qubits if params.circuit else 0,
        "n_layers": params.circuit.n_layers if params.circuit else 0,
        "encoder_activations": [layer.activation for layer in params.encoder],
        "config": config or {},
    }
    arrays = dict(params.arrays())
    if pca is not None:
        arrays["pca.mean"] = pca.mean
        arrays["pca.components"] = pca.components
        arrays["pca.explained_variance"] = pca.explained_variance
    raw = json.dumps(header, sort_keys=True).encode()
    path = Path(path)
    with open(path, "wb") as fh, _locked(fh):
        fh.write(CKPT_MAGIC + struct.pack("<HI", CKPT_VERSION, len(raw)) + raw)
        fh.write(struct.pack("<I", len(arrays)))
        for name, arr in arrays.items():
            _write_array(fh, name, arr)
    return path


def load_checkpoint(path):
    """Return (HybridParams, PcaModel or None, config dict)."""
    data = Path(path).read_bytes()
    if data[:4] != CKPT_MAGIC:
        raise FormatError(f"{path}: not a checkpoint")
    version, hlen = struct.unpack_from("<HI", data, 4)
    if version != CKPT_VERSION:
        raise VersionError(f"{path}: checkpoint version {version}, expected {CKPT_VERSION}")
    start = 10
    try:
        header = json.loads(data[start:start + hlen].decode())
        arrays = _read_arrays(memoryview(data), start + hlen)
    except (struct.error, ValueError, UnicodeDecodeError) as exc:
        raise FormatError(f"{path}: corrupt checkpoint ({exc})") from exc

    mode = header["mode"]
    encoder = [
        DenseLayer(arrays[f"enc{i}.W"], arrays[f"enc{i}.b"], act)
        for i, act in enumerate(header["encoder_activations"])
    ]
    head = DenseLayer(arrays["head.W"], arrays["head.b"], "none")
    if mode == "classical_only":
        params = HybridParams(mode, head, encoder)
    else:
        circuit = build_mps_circuit(header["n_qubits"], header["n_layers"])
        projection = Projection(arrays["proj.P"], arrays["proj.b"])
        params = HybridParams(mode, head, encoder, projection, arrays["theta"], circuit)
    pca = None
    if "pca.mean" in arrays:
        pca = PcaModel(arrays["pca.mean"], arrays["pca.components"], arrays["pca.explained_variance"])
    return params, pca, header.get("config", {})
