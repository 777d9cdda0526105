"""Regenerate data/embeddings_fixture.nne with stub embeddings.

Stub derivation (shared contract with the embed-client package):

    digest = sha256(f"{seed}\\x1f{text}".encode()).digest()
    rng    = numpy default_rng(uint64 from digest[:8], little-endian)
    vector = rng.standard_normal(dim), scaled to unit Euclidean norm

Here the embedded text is the indicator identifier itself, one static
record per id, so the benchmark's RT paths run without any LLM service.
"""

import hashlib
import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from gdpbench.embeddings import EmbeddingRecord, write_embeddings  # noqa: E402
from make_synthetic_data import YEARLY_INDICATORS  # noqa: E402

DIM = 6144
SEED = 0

LIGHT_IDS = (
    ["light_sum", "light_mean", "light_std"]
    + [f"light_m{m:02d}" for m in range(1, 13)]
    + [f"light_m{m}" for m in range(1, 4)]
)


def stub_vector(text: str, dim: int, seed: int) -> np.ndarray:
    digest = hashlib.sha256(f"{seed}\x1f{text}".encode("utf-8")).digest()
    rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def main():
    ids = list(YEARLY_INDICATORS) + LIGHT_IDS
    records = [EmbeddingRecord(indicator_id=i, key="static",
                               vector=stub_vector(i, DIM, SEED))
               for i in ids]
    path = os.path.join(os.path.dirname(__file__), "..", "data",
                        "embeddings_fixture.nne")
    write_embeddings(path, {
        "dim": DIM,
        "mode": "static",
        "source": "stub",
        "seed": SEED,
        "stub": "sha256-text-seeded unit-norm gaussian",
    }, records)
    print(f"wrote {path} ({len(records)} records, dim {DIM})")


if __name__ == "__main__":
    main()
