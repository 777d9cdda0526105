"""Embedding-file IO, implementing the benchmark's documented format.

Binary layout (integers little-endian):

    magic      8 bytes  b"NNEMBED1"
    version    uint32   (currently 1)
    count      uint32
    meta_len   uint32, then meta_len bytes of UTF-8 JSON ({"dim": E, ...})
    record * count:
        id_len  uint32, id bytes
        key_len uint32, key bytes ("static" or "COUNTRY/PERIOD")
        dim     uint32 (equal to the metadata dim)
        data    dim * float64 little-endian

This module is a self-contained implementation: the benchmark package is
consumed only through this file format, never imported.
"""

import csv
import json
import struct
from dataclasses import dataclass

import numpy as np

MAGIC = b"NNEMBED1"
VERSION = 1
STATIC_KEY = "static"


class EmbeddingFileError(ValueError):
    pass


@dataclass(frozen=True)
class EmbeddingRecord:
    indicator_id: str
    key: str
    vector: np.ndarray


def _framed(text):
    raw = text.encode("utf-8")
    return struct.pack("<I", len(raw)) + raw


def write_embeddings(path, meta: dict, records) -> None:
    """Write the file in one atomic replace."""
    import os

    records = list(records)
    meta = dict(meta)
    meta.setdefault("dim", int(records[0].vector.shape[0]) if records else 0)
    dim = int(meta["dim"])
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(records)))
        fh.write(_framed(json.dumps(meta, sort_keys=True)))
        for rec in records:
            vec = np.asarray(rec.vector, dtype=np.float64, order="C")
            if vec.shape != (dim,):
                raise EmbeddingFileError(
                    f"record {rec.indicator_id!r} has shape {vec.shape}, want ({dim},)")
            fh.write(_framed(rec.indicator_id))
            fh.write(_framed(rec.key))
            fh.write(struct.pack("<I", dim))
            fh.write(vec.astype("<f8", copy=False).tobytes())
    os.replace(tmp, path)


def _read_exact(fh, n, what):
    buf = fh.read(n)
    if len(buf) != n:
        raise EmbeddingFileError(f"truncated file: wanted {n} bytes of {what}")
    return buf


def _read_framed(fh, what):
    (length,) = struct.unpack("<I", _read_exact(fh, 4, f"{what} length"))
    return _read_exact(fh, length, what).decode("utf-8")


def load_embeddings(path):
    """Returns (meta, records)."""
    with open(path, "rb") as fh:
        if _read_exact(fh, len(MAGIC), "magic") != MAGIC:
            raise EmbeddingFileError(f"{path}: bad magic")
        version, count = struct.unpack("<II", _read_exact(fh, 8, "header"))
        if version != VERSION:
            raise EmbeddingFileError(f"{path}: unsupported version {version}")
        meta = json.loads(_read_framed(fh, "metadata"))
        dim = int(meta["dim"])
        records = []
        for _ in range(count):
            indicator_id = _read_framed(fh, "indicator id")
            key = _read_framed(fh, "record key")
            (rdim,) = struct.unpack("<I", _read_exact(fh, 4, "record dim"))
            if rdim != dim:
                raise EmbeddingFileError(
                    f"{path}: record {indicator_id!r} dim {rdim} != {dim}")
            raw = _read_exact(fh, 8 * dim, f"vector of {indicator_id!r}")
            records.append(EmbeddingRecord(
                indicator_id=indicator_id, key=key,
                vector=np.frombuffer(raw, dtype="<f8").astype(np.float64)))
    return meta, records


def write_embeddings_csv(path, meta, records) -> None:
    dim = int(meta["dim"])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["indicator_id", "key", *(f"v{i}" for i in range(dim))])
        for rec in records:
            writer.writerow([rec.indicator_id, rec.key,
                             *(repr(float(v)) for v in rec.vector)])
