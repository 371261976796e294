"""CLI surface: subcommands, reproducibility, file schemas, error paths."""

import csv
import json
import os

import numpy as np
import pytest

from lctx.cli import main
from lctx.fixtures import write_fixture_files
from lctx.metrics import FoldPlan


def run(argv):
    return main([str(a) for a in argv])


@pytest.fixture()
def fixture_dir(tmp_path):
    write_fixture_files(tmp_path / "fx", seed=3)
    return tmp_path


def test_preprocess_outputs(fixture_dir, tmp_path):
    out = tmp_path / "pp"
    assert run(["preprocess", "--input", fixture_dir / "fx" / "raw_cases.jsonl",
                "--out", out, "--seq-len", 64]) == 0
    for name in ("vocab.txt", "blocks.npy", "judgment_criminal.jsonl",
                 "judgment_civil.jsonl", "labels_charges.txt", "labels_laws.txt",
                 "labels_causes.txt", "stats_pretrain.csv", "stats_judgment.csv",
                 "rejections.csv", "rules.json", "run.json"):
        assert (out / name).exists(), name
    blocks = np.load(out / "blocks.npy")
    assert blocks.ndim == 2 and blocks.shape[1] == 64
    with open(out / "stats_pretrain.csv", encoding="utf-8") as fh:
        assert next(csv.reader(fh)) == ["kind", "docs", "avg_len", "size_bytes"]
    with open(out / "stats_judgment.csv", encoding="utf-8") as fh:
        assert next(csv.reader(fh)) == ["kind", "cases", "avg_len",
                                        "n_labels", "n_laws", "prison"]
    resolved = json.loads((out / "run.json").read_text())
    assert resolved["seq_len"] == 64 and "vocab_size" in resolved


def test_preprocess_corrupted_line_reports_lineno(tmp_path, capsys):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"id": "a", "kind": "criminal", "text": "x"}\n{oops\n',
                   encoding="utf-8")
    code = run(["preprocess", "--input", bad, "--out", tmp_path / "out"])
    assert code == 1
    assert ":2:" in capsys.readouterr().err


def test_pretrain_and_resume_cli(fixture_dir, tmp_path):
    pp = tmp_path / "pp"
    run(["preprocess", "--input", fixture_dir / "fx" / "raw_cases.jsonl",
         "--out", pp, "--seq-len", 48])
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "pretrain": {"seq_len": 48, "batch_size": 4, "peak_lr": 1e-3,
                     "total_steps": 40, "warmup_steps": 5},
        "encoder": {"n_layers": 1, "n_heads": 2, "hidden_dim": 32, "ffn_dim": 64,
                    "window": 4},
    }), encoding="utf-8")
    out = tmp_path / "pt"
    assert run(["pretrain", "--data", pp, "--config", cfg, "--out", out,
                "--steps", 10, "--seed", 1]) == 0
    assert (out / "step000010" / "model.ckpt").exists()
    assert (out / "loss.csv").exists()
    out2 = tmp_path / "pt2"
    assert run(["pretrain", "--data", pp, "--config", cfg, "--out", out2,
                "--steps", 5, "--seed", 1, "--resume", out / "step000010"]) == 0
    assert (out2 / "step000015" / "model.ckpt").exists()


def test_finetune_and_evaluate_roundtrip(fixture_dir, tmp_path):
    pp = tmp_path / "pp"
    run(["preprocess", "--input", fixture_dir / "fx" / "raw_cases.jsonl",
         "--out", pp, "--seq-len", 48])
    ft = tmp_path / "ft"
    assert run(["finetune", "--task", "judgment-civil",
                "--data", pp / "judgment_civil.jsonl", "--vocab", pp / "vocab.txt",
                "--out", ft, "--steps", 5, "--lr", 1e-3]) == 0
    assert (ft / "model" / "model.ckpt").exists()
    assert (ft / "predictions.jsonl").exists()
    ev = tmp_path / "eval.csv"
    assert run(["evaluate", "--task", "judgment-civil",
                "--pred", ft / "predictions.jsonl",
                "--gold", pp / "judgment_civil.jsonl", "--out", ev]) == 0
    with open(ev, encoding="utf-8") as fh:
        header = next(csv.reader(fh))
    assert header[0] == "task" and "Mic@c" in header and "all" in header


def test_finetune_config_file_overrides(fixture_dir, tmp_path):
    pp = tmp_path / "pp"
    run(["preprocess", "--input", fixture_dir / "fx" / "raw_cases.jsonl",
         "--out", pp, "--seq-len", 48])
    cfg = tmp_path / "task.json"
    cfg.write_text(json.dumps({
        "steps": 3, "lr": 1e-3,
        "encoder": {"n_layers": 1, "n_heads": 2, "hidden_dim": 16, "ffn_dim": 32,
                    "max_positions": 160, "window": 4},
    }), encoding="utf-8")
    ft = tmp_path / "ft"
    assert run(["finetune", "--task", "judgment-civil",
                "--data", pp / "judgment_civil.jsonl", "--vocab", pp / "vocab.txt",
                "--config", cfg, "--out", ft, "--steps", 500]) == 0
    resolved = json.loads((ft / "run.json").read_text())
    assert resolved["steps"] == 3  # the config file wins
    with open(ft / "model" / "model.cfg", encoding="utf-8") as fh:
        assert "hidden_dim=16" in fh.read()


def test_retrieval_cv_cli(fixture_dir, tmp_path):
    rows_path = fixture_dir / "fx" / "retrieval.jsonl"
    qids = {json.loads(line)["query_id"]
            for line in open(rows_path, encoding="utf-8")}
    plan = FoldPlan.from_query_ids(qids, 2)
    assert all(plan.partitions), "fixture queries must cover both folds"
    out = tmp_path / "cv"
    assert run(["finetune", "--task", "retrieval", "--data", rows_path,
                "--out", out, "--steps", 2, "--lr", 1e-3, "--folds", 2]) == 0
    with open(out / "metrics.csv", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["task"] for r in rows] == ["retrieval-fold0", "retrieval-fold1",
                                         "retrieval-mean"]


def test_evaluate_known_values(tmp_path):
    pred = tmp_path / "pred.jsonl"
    gold = tmp_path / "gold.jsonl"
    pred.write_text('{"answer": "ab"}\n{"answer": "xy"}\n', encoding="utf-8")
    gold.write_text('{"answer": "ab"}\n{"answer": "xz"}\n', encoding="utf-8")
    out = tmp_path / "rc.csv"
    assert run(["evaluate", "--task", "rc", "--pred", pred, "--gold", gold,
                "--out", out]) == 0
    row = next(csv.DictReader(open(out, encoding="utf-8")))
    assert float(row["EM"]) == 0.5
    assert abs(float(row["F1"]) - 0.75) < 1e-9


def test_benchmark_attention_csv(tmp_path):
    out = tmp_path / "bench.csv"
    assert run(["benchmark-attention", "--lengths", "64,128,192",
                "--window", "4", "--n-global", "1", "--heads", "2",
                "--dim", "16", "--out", out]) == 0
    rows = list(csv.DictReader(open(out, encoding="utf-8")))
    assert [r["L"] for r in rows] == ["64", "128", "192"]
    f = [int(r["sparse_flops"]) for r in rows]
    assert f[2] - 2 * f[1] + f[0] == 0  # equally spaced grid: affine
    d = [int(r["dense_flops"]) for r in rows]
    assert d[1] == 4 * d[0] and d[2] == 9 * d[0]
    assert all(float(r["sparse_ms"]) > 0 and float(r["dense_ms"]) > 0 for r in rows)


def test_benchmark_single_length(tmp_path):
    out = tmp_path / "one.csv"
    assert run(["benchmark-attention", "--lengths", "64", "--dim", "16",
                "--out", out]) == 0
    rows = list(csv.DictReader(open(out, encoding="utf-8")))
    assert len(rows) == 1


def test_benchmark_descending_lengths_rejected(tmp_path, capsys):
    assert run(["benchmark-attention", "--lengths", "128,64",
                "--out", tmp_path / "x.csv"]) == 1


def test_benchmark_length_over_max_positions_rejected(tmp_path):
    assert run(["benchmark-attention", "--lengths", "64,8192",
                "--out", tmp_path / "x.csv"]) == 1
    assert run(["benchmark-attention", "--lengths", "64", "--max-positions", "64",
                "--dim", "16", "--out", tmp_path / "y.csv"]) == 0


def test_smoke_metric_columns_and_determinism(tmp_path):
    a, b = tmp_path / "s1", tmp_path / "s2"
    assert run(["smoke", "--out", a, "--seed", 11, "--steps", 12]) == 0
    assert run(["smoke", "--out", b, "--seed", 11, "--steps", 12]) == 0
    assert (a / "metrics.csv").read_bytes() == (b / "metrics.csv").read_bytes()
    with open(a / "metrics.csv", encoding="utf-8") as fh:
        header = next(csv.reader(fh))
    for col in ("Mic@c", "Mac@c", "Mic@l", "Mac@l", "Dis@t", "P@5", "P@10", "P@20",
                "P@30", "NDCG@5", "NDCG@10", "NDCG@20", "NDCG@30", "MAP", "EM", "F1",
                "single", "all"):
        assert col in header
    assert (a / "run.json").exists()


def test_threads_env_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("LCTX_THREADS", "2")
    out = tmp_path / "bench.csv"
    assert run(["benchmark-attention", "--lengths", "64", "--dim", "16",
                "--out", out]) == 0
    assert os.environ["OMP_NUM_THREADS"] == "2"
