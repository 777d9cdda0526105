"""Reader/writer for indicator-embedding files consumed by the RT model.

Binary layout (integers little-endian), following the parameter-store
conventions with per-record framing:

    magic      8 bytes  b"NNEMBED1"
    version    uint32   (currently 1)
    count      uint32   number of records
    meta_len   uint32
    meta       meta_len bytes, UTF-8 JSON: {"dim": E, "mode": ..., ...}
    record * count:
        id_len   uint32, id bytes (indicator identifier, UTF-8)
        key_len  uint32, key bytes ("static" or "COUNTRY/PERIOD")
        dim      uint32 (must equal meta dim)
        data     dim * float64 little-endian

A CSV debug form (``indicator_id,key,v0,...``) exists for small dims.
Embedding files are produced by the separate embed-client package; this
module only needs to consume (and, for fixtures, reproduce) the format.
"""

import csv
import json
import struct
from dataclasses import dataclass

import numpy as np

from .errors import ParseError, ValidationError

MAGIC = b"NNEMBED1"
VERSION = 1
STATIC_KEY = "static"


@dataclass(frozen=True)
class EmbeddingRecord:
    indicator_id: str
    key: str  # "static" or an observation key like "USA/2015"
    vector: np.ndarray


class EmbeddingSet:
    """Loaded embedding records with (indicator, key) lookup."""

    def __init__(self, meta: dict, records):
        self.meta = dict(meta)
        self.records = list(records)
        self.dim = int(meta["dim"])
        self._index = {}
        for rec in self.records:
            if rec.vector.shape != (self.dim,):
                raise ValidationError(
                    f"record {rec.indicator_id!r}/{rec.key!r} has dim "
                    f"{rec.vector.shape}, file says {self.dim}")
            if not np.all(np.isfinite(rec.vector)):
                raise ValidationError(
                    f"record {rec.indicator_id!r}/{rec.key!r} is not finite")
            self._index[(rec.indicator_id, rec.key)] = rec.vector

    def vector_for(self, indicator_id: str, key: str = STATIC_KEY) -> np.ndarray:
        hit = self._index.get((indicator_id, key))
        if hit is None and key != STATIC_KEY:
            hit = self._index.get((indicator_id, STATIC_KEY))
        if hit is None:
            raise ValidationError(f"no embedding for {indicator_id!r} (key {key!r})")
        return hit


def _write_framed(fh, text):
    raw = text.encode("utf-8")
    fh.write(struct.pack("<I", len(raw)))
    fh.write(raw)


def write_embeddings(path, meta: dict, records) -> None:
    records = list(records)
    meta = dict(meta)
    meta.setdefault("dim", int(records[0].vector.shape[0]) if records else 0)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(records)))
        _write_framed(fh, json.dumps(meta, sort_keys=True))
        for rec in records:
            vec = np.asarray(rec.vector, dtype=np.float64, order="C")
            _write_framed(fh, rec.indicator_id)
            _write_framed(fh, rec.key)
            fh.write(struct.pack("<I", vec.shape[0]))
            fh.write(vec.astype("<f8", copy=False).tobytes())


def _read_exact(fh, n, what):
    buf = fh.read(n)
    if len(buf) != n:
        raise ParseError(f"truncated embedding file: expected {n} bytes of {what}")
    return buf


def _read_framed(fh, what):
    (length,) = struct.unpack("<I", _read_exact(fh, 4, f"{what} length"))
    return _read_exact(fh, length, what).decode("utf-8")


def load_embeddings(path) -> EmbeddingSet:
    with open(path, "rb") as fh:
        if _read_exact(fh, len(MAGIC), "magic") != MAGIC:
            raise ParseError(f"{path}: bad magic, not an embedding file")
        version, count = struct.unpack("<II", _read_exact(fh, 8, "header"))
        if version != VERSION:
            raise ParseError(f"{path}: unsupported version {version}")
        meta = json.loads(_read_framed(fh, "metadata"))
        records = []
        for _ in range(count):
            indicator_id = _read_framed(fh, "indicator id")
            key = _read_framed(fh, "record key")
            (dim,) = struct.unpack("<I", _read_exact(fh, 4, "record dim"))
            raw = _read_exact(fh, 8 * dim, f"vector of {indicator_id!r}")
            records.append(EmbeddingRecord(
                indicator_id=indicator_id, key=key,
                vector=np.frombuffer(raw, dtype="<f8").astype(np.float64)))
    return EmbeddingSet(meta, records)


def write_embeddings_csv(path, embeddings: EmbeddingSet) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["indicator_id", "key",
                         *(f"v{i}" for i in range(embeddings.dim))])
        for rec in embeddings.records:
            writer.writerow([rec.indicator_id, rec.key,
                             *(repr(float(v)) for v in rec.vector)])
