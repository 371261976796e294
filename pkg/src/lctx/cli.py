"""Command-line entry point: preprocess, pretrain, finetune, evaluate,
benchmark-attention, smoke. Every command writes its resolved configuration
and seed next to its outputs so runs are reproducible."""

from __future__ import annotations

import argparse
import csv
import json
import os
import statistics
import sys
import time
from pathlib import Path

import numpy as np

try:
    from threadpoolctl import threadpool_limits
except ImportError:  # pragma: no cover - present in the supported environment
    import contextlib

    def threadpool_limits(limits=None):
        return contextlib.nullcontext()

from . import tensor as T
from .attention import (
    AttentionParams,
    AttentionPattern,
    attention_flop_count,
    dense_attention_flop_count,
    dense_attention_oracle,
    sparse_attention_forward,
)
from .corpus import (
    Ruleset,
    corpus_stats,
    judgment_stats,
    pack_documents,
    process_corpus,
    read_jsonl,
    write_jsonl,
)
from .encoder import EncoderConfig
from .fixtures import write_fixture_files
from .metrics import (
    FoldPlan,
    RankedList,
    em_f1,
    log_distance,
    mcq_accuracy,
    mean_average_precision,
    micro_macro_f1,
    ndcg_at_k,
    precision_at_k,
    run_cross_validation,
)
from .pretrain import PretrainConfig, pretrain
from .tasks import (
    JudgmentModel,
    MultipleChoiceModel,
    ReadingComprehensionModel,
    RetrievalRanker,
)
from .vocab import CharVocab, build_vocab, char_tokens

METRIC_COLUMNS = ["Mic@c", "Mac@c", "Mic@l", "Mac@l", "Dis@t",
                  "P@5", "P@10", "P@20", "P@30",
                  "NDCG@5", "NDCG@10", "NDCG@20", "NDCG@30",
                  "MAP", "EM", "F1", "single", "all"]

TASKS = ("judgment-criminal", "judgment-civil", "retrieval", "rc", "mcq")


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage


def _resolve_threads(args) -> int:
    threads = args.threads if args.threads else int(os.environ.get("LCTX_THREADS", "0"))
    if threads > 0:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(threads)
    return threads


def _write_run_config(out_dir: Path, args, extra: dict | None = None) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    record = {k: (str(v) if isinstance(v, Path) else v)
              for k, v in vars(args).items() if k != "func"}
    record.update(extra or {})
    (out_dir / "run.json").write_text(
        json.dumps(record, ensure_ascii=False, indent=2, sort_keys=True, default=str),
        encoding="utf-8")


def _write_metrics_csv(path, rows: list[dict]) -> None:
    """One row per task; the full paper-table column set, blanks where a
    metric does not apply."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["task"] + METRIC_COLUMNS)
        for row in rows:
            rendered = [row.get("task", "")]
            for col in METRIC_COLUMNS:
                value = row.get(col, "")
                rendered.append(f"{value:.6f}" if isinstance(value, float) else value)
            writer.writerow(rendered)


# ---------------------------------------------------------------------------
# preprocess
# ---------------------------------------------------------------------------


def cmd_preprocess(args) -> int:
    out = Path(args.out)
    rules = Ruleset.load(args.rules) if args.rules else Ruleset()
    raw = read_jsonl(args.input)
    result = process_corpus(raw, rules, min_fact_tokens=args.min_fact_tokens)

    vocab = build_vocab([doc.full_text() for doc in result.documents] or [""])
    out.mkdir(parents=True, exist_ok=True)
    vocab.save(out / "vocab.txt")
    rules.save(out / "rules.json")

    streams = [vocab.transform(doc.full_text()) for doc in result.documents]
    blocks = pack_documents(streams, args.seq_len)
    np.save(out / "blocks.npy", blocks)

    write_jsonl(out / "judgment_criminal.jsonl", result.criminal_examples)
    write_jsonl(out / "judgment_civil.jsonl", result.civil_examples)
    result.charge_table.save(out / "labels_charges.txt")
    result.law_table.save(out / "labels_laws.txt")
    result.cause_table.save(out / "labels_causes.txt")

    with open(out / "stats_pretrain.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=["kind", "docs", "avg_len", "size_bytes"])
        writer.writeheader()
        writer.writerows(corpus_stats(result.documents))
    with open(out / "stats_judgment.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=["kind", "cases", "avg_len",
                                                "n_labels", "n_laws", "prison"])
        writer.writeheader()
        writer.writerows(judgment_stats(result.criminal_examples, result.civil_examples,
                                        result.charge_table, result.law_table,
                                        result.cause_table))
    with open(out / "rejections.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["reason", "count"])
        for reason in sorted(result.rejections):
            writer.writerow([reason, result.rejections[reason]])

    _write_run_config(out, args, {"n_blocks": int(blocks.shape[0]),
                                  "vocab_size": len(vocab)})
    print(f"preprocess: {len(result.documents)} documents, "
          f"{len(result.criminal_examples)} criminal / {len(result.civil_examples)} civil "
          f"examples, {blocks.shape[0]} blocks")
    return 0


# ---------------------------------------------------------------------------
# pretrain
# ---------------------------------------------------------------------------


def _load_pretrain_config(path, seed) -> tuple[PretrainConfig, dict]:
    raw = json.loads(Path(path).read_text(encoding="utf-8")) if path else {}
    pre_kwargs = raw.get("pretrain", {})
    if seed is not None:
        pre_kwargs["seed"] = seed
    return PretrainConfig(**pre_kwargs), raw.get("encoder", {})


def cmd_pretrain(args) -> int:
    out = Path(args.out)
    data = Path(args.data)
    blocks = np.load(data / "blocks.npy")
    vocab = CharVocab.load(data / "vocab.txt")
    config, enc_kwargs = _load_pretrain_config(args.config, args.seed)
    enc_kwargs.setdefault("vocab_size", len(vocab))
    enc_kwargs.setdefault("max_positions", max(int(blocks.shape[1]), 16))
    enc_config = EncoderConfig(**enc_kwargs)
    _write_run_config(out, args, {"pretrain": vars(config).copy()})
    _, history = pretrain(blocks, config, enc_config, steps=args.steps, out_dir=out,
                          checkpoint_interval=args.checkpoint_interval,
                          resume_from=args.resume)
    print(f"pretrain: {args.steps} steps, final loss {history[-1].loss:.4f}, "
          f"masked acc {history[-1].masked_acc:.3f}")
    return 0


# ---------------------------------------------------------------------------
# finetune
# ---------------------------------------------------------------------------


def _fit_task(task: str, rows: list[dict], args, vocab) -> tuple[object, dict]:
    common = dict(vocab=vocab, steps=args.steps, lr=args.lr, seed=args.seed or 0,
                  encoder=getattr(args, "encoder_config", None))
    if task == "judgment-criminal":
        model = JudgmentModel(mode="criminal", **common).fit(rows)
    elif task == "judgment-civil":
        model = JudgmentModel(mode="civil", **common).fit(rows)
    elif task == "retrieval":
        model = RetrievalRanker(model_type=args.model_type, **common).fit(rows)
    elif task == "rc":
        model = ReadingComprehensionModel(**common).fit(rows)
    elif task == "mcq":
        model = MultipleChoiceModel(**common).fit(rows)
    else:
        raise ValueError(f"unknown task {task!r}")
    return model, model.evaluate(rows)


def _task_predictions(task, model, rows) -> list[dict]:
    if task.startswith("judgment"):
        preds = model.predict(rows)
        out = []
        for p in preds:
            row = {k: (sorted(v) if isinstance(v, set) else v) for k, v in p.items()}
            out.append(row)
        return out
    if task == "retrieval":
        probs = model.predict_proba(rows)
        return [{"query_id": ex["query_id"], "candidate_id": ex["candidate_id"],
                 "score": float(p)} for ex, p in zip(rows, probs)]
    return model.predict(rows)


def cmd_finetune(args) -> int:
    out = Path(args.out)
    rows = read_jsonl(args.data)
    vocab = CharVocab.load(args.vocab) if args.vocab else None
    if args.config:
        # config file wins over flag defaults: {steps, lr, seed, model_type,
        # encoder: {...EncoderConfig fields...}}
        file_cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
        for key in ("steps", "lr", "seed", "model_type", "folds"):
            if key in file_cfg:
                setattr(args, key, file_cfg[key])
        if "encoder" in file_cfg:
            if vocab is None:
                raise ValueError("an encoder section in --config requires --vocab")
            enc_kwargs = dict(file_cfg["encoder"])
            enc_kwargs.setdefault("vocab_size", len(vocab))
            args.encoder_config = EncoderConfig(**enc_kwargs)
    _write_run_config(out, args)

    if args.task == "retrieval" and args.folds:
        plan = FoldPlan.from_query_ids({ex["query_id"] for ex in rows}, args.folds)

        def train_fn(train_rows):
            model, _ = _fit_task("retrieval", train_rows, args, vocab)
            return model

        def eval_fn(model, test_rows):
            return model.evaluate(test_rows)

        result = run_cross_validation(rows, plan, train_fn, eval_fn)
        metrics_rows = [{"task": f"retrieval-fold{i}", **m}
                        for i, m in enumerate(result["folds"])]
        metrics_rows.append({"task": "retrieval-mean", **result["mean"]})
        _write_metrics_csv(out / "metrics.csv", metrics_rows)
        print(f"finetune retrieval {args.folds}-fold: "
              f"mean MAP {result['mean']['MAP']:.4f}")
        return 0

    model, metrics = _fit_task(args.task, rows, args, vocab)
    model.model_.save(out / "model", {"task": args.task})
    if getattr(model, "vocab_", None) is not None:
        model.vocab_.save(out / "model" / "vocab.txt")
    write_jsonl(out / "predictions.jsonl", _task_predictions(args.task, model, rows))
    _write_metrics_csv(out / "metrics.csv", [{"task": args.task, **metrics}])
    shown = {k: round(v, 4) for k, v in metrics.items() if isinstance(v, float)}
    print(f"finetune {args.task}: {shown}")
    return 0


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------


def _evaluate_rows(task: str, pred_rows, gold_rows) -> dict:
    if len(pred_rows) != len(gold_rows) and task != "retrieval":
        raise ValueError("pred and gold files must align")
    if task == "judgment-criminal":
        n_c = 1 + max([max(r["charges"], default=0) for r in pred_rows + gold_rows],
                      default=0)
        n_l = 1 + max([max(r["laws"], default=0) for r in pred_rows + gold_rows],
                      default=0)
        mic_c, mac_c = micro_macro_f1([set(r["charges"]) for r in pred_rows],
                                      [set(r["charges"]) for r in gold_rows], n_c)
        mic_l, mac_l = micro_macro_f1([set(r["laws"]) for r in pred_rows],
                                      [set(r["laws"]) for r in gold_rows], n_l)
        dis = log_distance([r["penalty_months"] for r in pred_rows],
                           [r["penalty_months"] for r in gold_rows])
        return {"Mic@c": mic_c, "Mac@c": mac_c, "Mic@l": mic_l, "Mac@l": mac_l,
                "Dis@t": dis}
    if task == "judgment-civil":
        n_c = 1 + max(r["cause"] for r in pred_rows + gold_rows)
        n_l = 1 + max([max(r["laws"], default=0) for r in pred_rows + gold_rows],
                      default=0)
        mic_c, mac_c = micro_macro_f1([{r["cause"]} for r in pred_rows],
                                      [{r["cause"]} for r in gold_rows], n_c)
        mic_l, mac_l = micro_macro_f1([set(r["laws"]) for r in pred_rows],
                                      [set(r["laws"]) for r in gold_rows], n_l)
        return {"Mic@c": mic_c, "Mac@c": mac_c, "Mic@l": mic_l, "Mac@l": mac_l}
    if task == "retrieval":
        scores = {(r["query_id"], r["candidate_id"]): r["score"] for r in pred_rows}
        by_query: dict[str, list] = {}
        for r in gold_rows:
            key = (r["query_id"], r["candidate_id"])
            if key not in scores:
                raise ValueError(f"missing prediction for {key}")
            by_query.setdefault(r["query_id"], []).append(
                (r["candidate_id"], scores[key], r["relevant"]))
        ranked = []
        for qid in sorted(by_query):
            rows = sorted(by_query[qid], key=lambda t: (-t[1], t[0]))
            ranked.append(RankedList(qid, [c for c, _, _ in rows],
                                     {c: rel for c, _, rel in rows}))
        out = {}
        for k in (5, 10, 20, 30):
            out[f"P@{k}"] = float(np.mean([precision_at_k(r, k) for r in ranked]))
            out[f"NDCG@{k}"] = float(np.mean([ndcg_at_k(r, k) for r in ranked]))
        out["MAP"] = mean_average_precision(ranked)
        return out
    if task == "rc":
        pairs = [em_f1(char_tokens(p["answer"]), char_tokens(g["answer"]))
                 for p, g in zip(pred_rows, gold_rows)]
        return {"EM": float(np.mean([em for em, _ in pairs])),
                "F1": float(np.mean([f1 for _, f1 in pairs]))}
    if task == "mcq":
        single, all_acc = mcq_accuracy(
            [set(p["answer_set"]) for p in pred_rows],
            [set(g["answer_set"]) for g in gold_rows],
            argmax_preds=[p.get("argmax") for p in pred_rows]
            if all("argmax" in p for p in pred_rows) else None)
        out = {"all": all_acc}
        if single is not None:
            out["single"] = single
        return out
    raise ValueError(f"unknown task {task!r}")


def cmd_evaluate(args) -> int:
    metrics = _evaluate_rows(args.task, read_jsonl(args.pred), read_jsonl(args.gold))
    out = Path(args.out)
    _write_metrics_csv(out, [{"task": args.task, **metrics}])
    run_dir = out.parent if out.suffix else out
    _write_run_config(run_dir, args)
    print(f"evaluate {args.task}: " +
          " ".join(f"{k}={v:.4f}" for k, v in metrics.items()))
    return 0


# ---------------------------------------------------------------------------
# benchmark
# ---------------------------------------------------------------------------


def _median_ms(fn, repeats: int = 5) -> float:
    fn()  # warm-up: allocator and BLAS thread-pool effects stay out of the timings
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append((time.perf_counter() - start) * 1000.0)
    return statistics.median(times)


def cmd_benchmark_attention(args) -> int:
    lengths = [int(x) for x in args.lengths.split(",")]
    if lengths != sorted(lengths):
        raise ValueError("lengths must be ascending")
    if lengths and lengths[-1] > args.max_positions:
        raise ValueError(f"length {lengths[-1]} exceeds max positions {args.max_positions}")
    heads, dim = args.heads, args.dim
    rng = np.random.default_rng(args.seed or 0)
    params = AttentionParams(dim, rng)
    rows = []
    # pin the BLAS pool: dynamic per-size thread dispatch would distort the
    # scaling this table is meant to expose
    with threadpool_limits(limits=args.threads or 1):
        for L in lengths:
            pattern = AttentionPattern(
                window=args.window, dilation_per_head=(args.dilation,) * heads,
                global_positions=tuple(range(args.n_global)))
            hidden = T.Tensor(rng.standard_normal((1, L, dim)))

            def run_sparse():
                with T.no_grad():
                    sparse_attention_forward(hidden, params, pattern, heads)

            def run_dense():
                with T.no_grad():
                    dense_attention_oracle(hidden, params, pattern, heads)

            rows.append({
                "L": L,
                "sparse_flops": attention_flop_count(L, args.window, args.n_global,
                                                     heads, dim, dilation=args.dilation),
                "dense_flops": dense_attention_flop_count(L, heads, dim),
                "sparse_ms": round(_median_ms(run_sparse), 3),
                "dense_ms": round(_median_ms(run_dense), 3),
            })
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=["L", "sparse_flops", "dense_flops",
                                                "sparse_ms", "dense_ms"])
        writer.writeheader()
        writer.writerows(rows)
    _write_run_config(out.parent, args)
    for row in rows:
        print(row)
    return 0


# ---------------------------------------------------------------------------
# smoke
# ---------------------------------------------------------------------------


def _smoke_stage(stage: str):
    class _Ctx:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc is not None:
                raise StageError(stage, exc) from exc
            return False

    return _Ctx()


def cmd_smoke(args) -> int:
    seed = args.seed if args.seed is not None else 0
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_run_config(out, args, {"seed": seed})
    steps = args.steps

    with _smoke_stage("fixtures"):
        fixture_paths = write_fixture_files(out / "fixtures", seed=seed)
        fixture_rows = {name: read_jsonl(path) for name, path in fixture_paths.items()}

    with _smoke_stage("preprocess"):
        rules = Ruleset()
        result = process_corpus(fixture_rows["raw_cases"], rules)
        if not result.criminal_examples or not result.civil_examples:
            raise RuntimeError("fixture corpus produced no training examples")
        texts = [doc.full_text() for doc in result.documents]
        for name in ("retrieval", "rc", "mcq"):
            for row in fixture_rows[name]:
                texts.extend(str(v) for v in row.values() if isinstance(v, str))
                if name == "rc":
                    texts.extend(row["context"])
                if name == "mcq":
                    texts.extend(row["choices"])
        vocab = build_vocab(texts)
        vocab.save(out / "vocab.txt")
        blocks = pack_documents([vocab.transform(t) for t in texts[:len(result.documents)]], 48)

    with _smoke_stage("pretrain"):
        pre_cfg = PretrainConfig(seq_len=48, batch_size=4, peak_lr=5e-3,
                                 total_steps=max(steps, 2), warmup_steps=min(10, steps // 2),
                                 mask_rate=0.15, seed=seed)
        enc_cfg = EncoderConfig(n_layers=1, n_heads=2, hidden_dim=32, ffn_dim=64,
                                vocab_size=len(vocab), max_positions=64, window=4)
        pretrain(blocks, pre_cfg, enc_cfg, steps=steps, out_dir=out / "pretrain")

    metric_rows = []
    small = dict(n_layers=1, n_heads=2, hidden_dim=32, ffn_dim=64, window=4)

    with _smoke_stage("finetune-judgment-criminal"):
        enc = EncoderConfig(vocab_size=len(vocab), max_positions=160, **small)
        model = JudgmentModel(mode="criminal", vocab=vocab, encoder=enc, steps=steps,
                              lr=3e-3, seed=seed,
                              n_label_a=len(result.charge_table),
                              n_laws=len(result.law_table)).fit(result.criminal_examples)
        metric_rows.append({"task": "judgment-criminal",
                            **model.evaluate(result.criminal_examples)})

    with _smoke_stage("finetune-judgment-civil"):
        enc = EncoderConfig(vocab_size=len(vocab), max_positions=160, **small)
        model = JudgmentModel(mode="civil", vocab=vocab, encoder=enc, steps=steps,
                              lr=3e-3, seed=seed,
                              n_label_a=len(result.cause_table),
                              n_laws=len(result.law_table)).fit(result.civil_examples)
        metric_rows.append({"task": "judgment-civil",
                            **model.evaluate(result.civil_examples)})

    with _smoke_stage("finetune-retrieval"):
        enc = EncoderConfig(vocab_size=len(vocab), max_positions=256, **small)
        ranker = RetrievalRanker(vocab=vocab, encoder=enc, steps=steps, lr=3e-3,
                                 seed=seed).fit(fixture_rows["retrieval"])
        metrics = ranker.evaluate(fixture_rows["retrieval"])
        metrics.pop("accuracy", None)
        metric_rows.append({"task": "retrieval", **metrics})

    with _smoke_stage("finetune-rc"):
        enc = EncoderConfig(vocab_size=len(vocab), max_positions=160,
                            **{**small, "n_layers": 2})
        rc = ReadingComprehensionModel(vocab=vocab, encoder=enc, steps=steps,
                                       lr=3e-3, seed=seed).fit(fixture_rows["rc"])
        metric_rows.append({"task": "rc", **rc.evaluate(fixture_rows["rc"])})

    with _smoke_stage("finetune-mcq"):
        enc = EncoderConfig(vocab_size=len(vocab), max_positions=160,
                            **{**small, "n_layers": 2})
        mcq = MultipleChoiceModel(vocab=vocab, encoder=enc, steps=steps, lr=3e-3,
                                  seed=seed).fit(fixture_rows["mcq"])
        metric_rows.append({"task": "mcq", **mcq.evaluate(fixture_rows["mcq"])})

    with _smoke_stage("evaluate"):
        _write_metrics_csv(out / "metrics.csv", metric_rows)

    print(f"smoke: wrote {out / 'metrics.csv'}")
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lctx",
                                     description="long-context legal transformer toolkit")
    parser.add_argument("--threads", type=int, default=0,
                        help="BLAS thread cap (falls back to LCTX_THREADS)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="segment, filter, annotate, pack a raw corpus")
    p.add_argument("--input", required=True)
    p.add_argument("--rules", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--seq-len", dest="seq_len", type=int, default=128)
    p.add_argument("--min-fact-tokens", dest="min_fact_tokens", type=int, default=50)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("pretrain", help="run MLM pretraining over packed blocks")
    p.add_argument("--data", required=True, help="preprocess output directory")
    p.add_argument("--config", default=None, help="JSON {pretrain: {...}, encoder: {...}}")
    p.add_argument("--out", required=True)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--checkpoint-interval", dest="checkpoint_interval", type=int, default=None)
    p.add_argument("--resume", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_pretrain)

    p = sub.add_parser("finetune", help="train a task head on JSONL examples")
    p.add_argument("--task", required=True, choices=TASKS)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--vocab", default=None)
    p.add_argument("--config", default=None,
                   help="JSON hyperparameters; overrides flag defaults")
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--lr", type=float, default=2e-3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--folds", type=int, default=0,
                   help="retrieval only: k-fold cross-validation")
    p.add_argument("--model-type", dest="model_type", default="long",
                   choices=("long", "dense"))
    p.set_defaults(func=cmd_finetune)

    p = sub.add_parser("evaluate", help="score prediction files against gold")
    p.add_argument("--task", required=True, choices=TASKS)
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("benchmark-attention", help="flop counts and wall times vs L")
    p.add_argument("--lengths", default="256,512,1024")
    p.add_argument("--window", type=int, default=4)
    p.add_argument("--dilation", type=int, default=0)
    p.add_argument("--n-global", dest="n_global", type=int, default=1)
    p.add_argument("--heads", type=int, default=2)
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--max-positions", dest="max_positions", type=int, default=4096)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_benchmark_attention)

    p = sub.add_parser("smoke", help="fixture corpus end-to-end run")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps", type=int, default=100)
    p.set_defaults(func=cmd_smoke)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _resolve_threads(args)
    try:
        return args.func(args)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
