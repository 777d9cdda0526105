"""Deterministic offline embeddings.

Each vector is derived from the text alone: sha256 of ``f"{seed}\\x1f{text}"``
seeds numpy's generator (first 8 digest bytes, little-endian), a
standard-normal vector is drawn and scaled to unit Euclidean norm. Same
text and seed always give the same vector, on any machine.
"""

import hashlib

import numpy as np

from .records import STATIC_KEY, EmbeddingRecord, write_embeddings


def stub_vector(text: str, dim: int, seed: int) -> np.ndarray:
    digest = hashlib.sha256(f"{seed}\x1f{text}".encode("utf-8")).digest()
    rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def stub_embeddings(texts, dim: int, seed: int, path=None, meta=None):
    """Build stub records for ``texts`` and optionally write them to a file.

    ``texts`` maps an indicator id (or an (id, observation-key) pair) to the
    text that stands in for its description.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    records = []
    for key, text in texts.items():
        if isinstance(key, tuple):
            indicator_id, obs_key = key
        else:
            indicator_id, obs_key = key, STATIC_KEY
        records.append(EmbeddingRecord(
            indicator_id=indicator_id, key=obs_key,
            vector=stub_vector(text, dim, seed)))
    if path is not None:
        file_meta = {"dim": dim, "mode": "static", "source": "stub",
                     "seed": seed,
                     "stub": "sha256-text-seeded unit-norm gaussian"}
        if meta:
            file_meta.update(meta)
        write_embeddings(path, file_meta, records)
    return records
