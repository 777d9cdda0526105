import os

import numpy as np
import pytest

from gdpbench.embeddings import (
    EmbeddingRecord,
    load_embeddings,
    write_embeddings,
    write_embeddings_csv,
)
from gdpbench.errors import ParseError, ValidationError

DATA_DIR = os.path.join(os.path.dirname(__file__), "..", "data")
FIXTURE = os.path.join(DATA_DIR, "embeddings_fixture.nne")


def small_records(rng, n=4, dim=8):
    return [EmbeddingRecord(indicator_id=f"ind{i}", key="static",
                            vector=rng.normal(size=dim))
            for i in range(n)]


def test_round_trip_bitwise(tmp_path):
    rng = np.random.default_rng(0)
    records = small_records(rng)
    path = tmp_path / "emb.nne"
    write_embeddings(path, {"dim": 8, "mode": "static", "source": "test"}, records)
    loaded = load_embeddings(path)
    assert loaded.dim == 8
    assert loaded.meta["mode"] == "static"
    for orig, back in zip(records, loaded.records):
        assert orig.indicator_id == back.indicator_id
        assert orig.vector.tobytes() == back.vector.tobytes()
    # rewriting the loaded records reproduces the same bytes
    path2 = tmp_path / "emb2.nne"
    write_embeddings(path2, loaded.meta, loaded.records)
    assert path.read_bytes() == path2.read_bytes()


def test_lookup_falls_back_to_static(tmp_path):
    rng = np.random.default_rng(1)
    records = [
        EmbeddingRecord("exports", "static", rng.normal(size=4)),
        EmbeddingRecord("exports", "USA/2015", rng.normal(size=4)),
    ]
    path = tmp_path / "emb.nne"
    write_embeddings(path, {"dim": 4, "mode": "per_observation"}, records)
    loaded = load_embeddings(path)
    np.testing.assert_array_equal(loaded.vector_for("exports", "USA/2015"),
                                  records[1].vector)
    np.testing.assert_array_equal(loaded.vector_for("exports", "CHN/2016"),
                                  records[0].vector)
    with pytest.raises(ValidationError):
        loaded.vector_for("imports")


def test_truncated_file_rejected(tmp_path):
    rng = np.random.default_rng(2)
    path = tmp_path / "emb.nne"
    write_embeddings(path, {"dim": 8}, small_records(rng))
    path.write_bytes(path.read_bytes()[:-5])
    with pytest.raises(ParseError):
        load_embeddings(path)


def test_dim_mismatch_rejected(tmp_path):
    rng = np.random.default_rng(3)
    records = small_records(rng, n=2, dim=8)
    records.append(EmbeddingRecord("odd", "static", rng.normal(size=6)))
    path = tmp_path / "emb.nne"
    write_embeddings(path, {"dim": 8}, records)
    with pytest.raises(ValidationError):
        load_embeddings(path)


def test_csv_debug_form(tmp_path):
    rng = np.random.default_rng(4)
    path = tmp_path / "emb.nne"
    write_embeddings(path, {"dim": 8}, small_records(rng))
    loaded = load_embeddings(path)
    csv_path = tmp_path / "emb.csv"
    write_embeddings_csv(csv_path, loaded)
    lines = csv_path.read_text().splitlines()
    assert lines[0].startswith("indicator_id,key,v0,")
    assert len(lines) == 5
    first_value = float(lines[1].split(",")[2])
    assert first_value == loaded.records[0].vector[0]


def test_checked_in_fixture_is_valid():
    fixture = load_embeddings(FIXTURE)
    assert fixture.dim == 6144
    assert fixture.meta["source"] == "stub"
    assert len(fixture.records) == 31
    for rec in fixture.records:
        assert abs(np.linalg.norm(rec.vector) - 1.0) < 1e-9  # unit norm stubs
        assert rec.key == "static"
