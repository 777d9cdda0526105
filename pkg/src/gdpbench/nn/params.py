"""Flat binary serialization for named parameter tensors.

Layout (all integers little-endian):

    magic      8 bytes  b"NNPARAM1"
    version    uint32   (currently 1)
    count      uint32   number of entries
    entry * count:
        name_len   uint32
        name       name_len bytes, UTF-8
        ndim       uint32
        dims       ndim * uint32
        data       prod(dims) * float64, little-endian, row-major

Round trips are bit-exact.
"""

import struct

import numpy as np

from ..errors import ParseError

MAGIC = b"NNPARAM1"
VERSION = 1


def save_params(path, params: dict) -> None:
    """Write name -> float64 array entries in sorted name order."""
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(params)))
        for name in sorted(params):
            arr = np.asarray(params[name], dtype=np.float64, order="C")
            raw = name.encode("utf-8")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<I", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(arr.astype("<f8", copy=False).tobytes())


def _read_exact(fh, n, what):
    buf = fh.read(n)
    if len(buf) != n:
        raise ParseError(f"truncated parameter store: expected {n} bytes of {what}")
    return buf


def load_params(path) -> dict:
    with open(path, "rb") as fh:
        if _read_exact(fh, len(MAGIC), "magic") != MAGIC:
            raise ParseError(f"{path}: bad magic, not a parameter store")
        version, count = struct.unpack("<II", _read_exact(fh, 8, "header"))
        if version != VERSION:
            raise ParseError(f"{path}: unsupported version {version}")
        out = {}
        for _ in range(count):
            (name_len,) = struct.unpack("<I", _read_exact(fh, 4, "name length"))
            name = _read_exact(fh, name_len, "name").decode("utf-8")
            (ndim,) = struct.unpack("<I", _read_exact(fh, 4, "ndim"))
            shape = struct.unpack(f"<{ndim}I", _read_exact(fh, 4 * ndim, "shape"))
            size = int(np.prod(shape, dtype=np.int64)) if ndim else 1
            raw = _read_exact(fh, 8 * size, f"data of {name!r}")
            out[name] = np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(shape)
        return out
