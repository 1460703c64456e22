import json

import pytest

from hiaa.cli import main


def run(args):
    return main([str(a) for a in args])


@pytest.fixture
def pipeline_dir(tmp_path):
    """A small end-to-end run: records through trained fusion checkpoint."""
    d = tmp_path
    assert run(["synth", "--n", 150, "--seed", 3, "--out", d / "records.jsonl"]) == 0
    assert run(["ingest", "--records", d / "records.jsonl", "--out", d / "samples.jsonl"]) == 0
    assert run(["genqa", "--samples", d / "samples.jsonl", "--seed", 3, "--out", d / "qa.jsonl"]) == 0
    assert run(["split", "--samples", d / "samples.jsonl", "--seed", 3, "--out", d / "split.json"]) == 0
    assert (
        run(
            ["train", "--samples", d / "samples.jsonl", "--split", d / "split.json",
             "--seed", 3, "--out", d / "ckpt1.json"]
        )
        == 0
    )
    assert (
        run(
            ["train-voter", "--samples", d / "samples.jsonl", "--split", d / "split.json",
             "--ckpt", d / "ckpt1.json", "--seed", 3, "--out", d / "ckpt2.json"]
        )
        == 0
    )
    return d


def test_full_pipeline_outputs(pipeline_dir):
    d = pipeline_dir
    assert run(["score", "--samples", d / "samples.jsonl", "--ckpt", d / "ckpt2.json",
                "--fused", "--out", d / "scores.jsonl"]) == 0
    assert run(["eval", "--samples", d / "samples.jsonl", "--split", d / "split.json",
                "--ckpt", d / "ckpt2.json", "--seed", 3, "--out", d / "report.json"]) == 0
    assert run(["report", "--report", d / "report.json", "--out", d / "report.txt"]) == 0

    scores = [json.loads(line) for line in (d / "scores.jsonl").read_text().splitlines()]
    assert len(scores) == 150
    assert all("fused" in s for s in scores)
    report = json.loads((d / "report.json").read_text())
    assert set(report["heads"]) == {"lm", "reg", "expert", "metavoter"}
    assert "OVERALL" in (d / "report.txt").read_text()


def test_eval_rerun_is_byte_identical(pipeline_dir):
    d = pipeline_dir
    args = ["eval", "--samples", d / "samples.jsonl", "--split", d / "split.json",
            "--ckpt", d / "ckpt2.json", "--seed", 3, "--out", d / "r1.json"]
    assert run(args) == 0
    first = (d / "r1.json").read_bytes()
    args[-1] = d / "r2.json"
    assert run(args) == 0
    assert (d / "r2.json").read_bytes() == first


def test_inputs_not_mutated(pipeline_dir):
    d = pipeline_dir
    before = (d / "samples.jsonl").read_bytes()
    assert run(["score", "--samples", d / "samples.jsonl", "--ckpt", d / "ckpt2.json",
                "--out", d / "s2.jsonl"]) == 0
    assert (d / "samples.jsonl").read_bytes() == before


def test_synth_deterministic(tmp_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    assert run(["synth", "--n", 40, "--seed", 11, "--out", a]) == 0
    assert run(["synth", "--n", 40, "--seed", 11, "--out", b]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_fused_score_without_voter_fails(pipeline_dir, capsys):
    d = pipeline_dir
    code = run(["score", "--samples", d / "samples.jsonl", "--ckpt", d / "ckpt1.json",
                "--fused", "--out", d / "should-not-exist.jsonl"])
    assert code == 3
    assert not (d / "should-not-exist.jsonl").exists()
    err = capsys.readouterr().err
    assert err.startswith("error: missing-input:")
    assert err.count("\n") == 1


def test_missing_input_file(tmp_path):
    code = run(["ingest", "--records", tmp_path / "nope.jsonl", "--out", tmp_path / "o.jsonl"])
    assert code == 3


def test_corrupt_checkpoint(pipeline_dir):
    d = pipeline_dir
    bad = d / "bad.json"
    bad.write_text((d / "ckpt2.json").read_text()[:120])
    assert run(["score", "--samples", d / "samples.jsonl", "--ckpt", bad,
                "--out", d / "x.jsonl"]) == 4


def test_version_mismatch(pipeline_dir):
    d = pipeline_dir
    doc = json.loads((d / "ckpt2.json").read_text())
    doc["format_version"] = 99
    future = d / "future.json"
    future.write_text(json.dumps(doc))
    assert run(["score", "--samples", d / "samples.jsonl", "--ckpt", future,
                "--out", d / "x.jsonl"]) == 4


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "config.json"
    cfg.write_text(json.dumps({"not_a_key": 1}))
    assert run(["synth", "--config", cfg, "--n", 5, "--out", tmp_path / "r.jsonl"]) == 2


def test_bad_split_fraction(pipeline_dir):
    d = pipeline_dir
    assert run(["split", "--samples", d / "samples.jsonl", "--test-fraction", "1.5",
                "--out", d / "bad-split.json"]) == 2


def test_unknown_eval_head(pipeline_dir):
    d = pipeline_dir
    assert run(["eval", "--samples", d / "samples.jsonl", "--split", d / "split.json",
                "--ckpt", d / "ckpt2.json", "--heads", "lm,tarot", "--out", d / "r.json"]) == 2


def test_eval_without_voter_head_subset(pipeline_dir):
    d = pipeline_dir
    assert run(["eval", "--samples", d / "samples.jsonl", "--split", d / "split.json",
                "--ckpt", d / "ckpt1.json", "--heads", "lm,reg,expert",
                "--out", d / "r3.json"]) == 0
    assert run(["eval", "--samples", d / "samples.jsonl", "--split", d / "split.json",
                "--ckpt", d / "ckpt1.json", "--out", d / "r4.json"]) == 3


def test_config_file_drives_synth(tmp_path):
    cfg = tmp_path / "config.json"
    cfg.write_text(json.dumps({"seed": 5, "synth_n": 17, "f0_fraction": 0.0}))
    out = tmp_path / "records.jsonl"
    assert run(["synth", "--config", cfg, "--out", out]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 17
    assert all("rater_scores" in json.loads(line) for line in lines)


def test_genqa_deterministic(pipeline_dir):
    d = pipeline_dir
    assert run(["genqa", "--samples", d / "samples.jsonl", "--seed", 3, "--out", d / "qa2.jsonl"]) == 0
    assert (d / "qa2.jsonl").read_bytes() == (d / "qa.jsonl").read_bytes()


def test_config_defaults_match_contract():
    from hiaa.config import RunConfig

    cfg = RunConfig()
    assert cfg.test_fraction == 0.1334
    assert cfg.f0_fraction == 0.54
    assert cfg.epochs == 1
    assert cfg.voter_epochs == 10
    assert cfg.learning_rate == 1e-3
    assert cfg.batch_size == 32
    assert cfg.optimizer == "adam"
    assert (cfg.n_features, cfg.emb_dim, cfg.hidden_dim, cfg.ffn_width) == (32, 16, 64, 16)
