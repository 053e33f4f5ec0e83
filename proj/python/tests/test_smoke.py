import math
import pathlib

import pytest

import enrichkit

FIXTURES = pathlib.Path(__file__).resolve().parents[2] / "data" / "synthetic"


def test_version_and_commands():
    assert enrichkit.__version__ == "0.1.0"
    assert "adhoc" in enrichkit.COMMANDS


def test_text_helpers():
    assert enrichkit.porter_stem("running") == "run"
    assert enrichkit.tokenize("Cats, running!") == ["cat", "run"]
    assert enrichkit.segment_sentences("Dr. Smith left. He came back!") == ["Dr. Smith left.", "He came back!"]


def test_metrics():
    qrels = {"a": 2, "b": 0, "c": 3}
    assert enrichkit.ndcg_at_k(["c", "a", "b"], qrels, 10) == pytest.approx(1.0)
    assert enrichkit.map_at_k(["b", "a"], {"a": 2}, 10) == pytest.approx(0.5)
    r = enrichkit.permutation_test([1.0, 2.0, 3.0], [1.0, 2.0, 3.0], 200, seed=1)
    assert r["p_value"] == 1.0 and not r["significant"]


def test_bm25_index():
    idx = enrichkit.Bm25Index([("d1", "tides moon"), ("d2", "sun"), ("d3", "moon moon")])
    hits = idx.search("moon", 5)
    assert [h[0] for h in hits] == ["d3", "d1"]
    assert all(math.isfinite(s) for _, s in hits)
    with pytest.raises(enrichkit.EnrichkitError):
        idx.search("?!", 5)


def test_qa_prompt_limit():
    assert "who" in enrichkit.build_qa_prompt("who")
    with pytest.raises(enrichkit.EnrichkitError):
        enrichkit.build_qa_prompt("q", ["p"] * 6)


def test_run_command(tmp_path):
    fx = FIXTURES / "adhoc-50"
    cfg = {
        "corpus": str(fx / "corpus.jsonl"),
        "queries": str(fx / "queries.tsv"),
        "qrels": str(fx / "qrels.txt"),
        "out_dir": str(tmp_path),
    }
    code, error, artifacts = enrichkit.run_command("index", cfg)
    assert code == 0 and error is None
    assert "runs/bm25.run" in artifacts

    cfg["qrels"] = str(tmp_path / "missing.txt")
    code, error, _ = enrichkit.run_command("adhoc", cfg)
    assert code == 1 and "error" in error
    assert enrichkit.config_hash({"seed": 1, "out_dir": "a"}) == enrichkit.config_hash({"seed": 1, "out_dir": "b"})
