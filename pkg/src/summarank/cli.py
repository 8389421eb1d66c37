"""Command-line pipeline: candidate generation, training, reranking,
baseline fitting, and evaluation over JSONL files.

Exit codes: 0 success, 1 data error, 2 usage error.  All commands are
deterministic given identical inputs, flags, and seeds; per-document work
can run concurrently via --jobs without changing output order.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from collections import Counter
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import fileio
from .baselines import fit_ranker, greedy_similarity, rank_with, LinearRanker
from .candidates import (
    SentenceRanking,
    attach_rouge,
    enumerate_extractive,
    fuse_sentences,
    heuristic_ranking,
    ingest_beam,
    pool_systems,
)
from .embeddings import FileEmbeddings, HashEmbeddings
from .evaluation import (
    SelectionRecord,
    bin_analysis,
    corpus_report,
    oracle_select,
    score_table_selector,
    selection_accuracy,
    significance,
)
from .features import extract_features
from .matching import select
from .textproc import Document, Sentence, tokenize, tokenize_flat
from .training import TrainConfig, TrainExample, train
from .weighting import init_scorer_params

RERANK_METHODS = (
    "refactor",
    "bertscore-like",
    "ranksvm-like",
    "oracle-min",
    "oracle-max",
    "random",
)


def _default_jobs() -> int:
    try:
        return max(1, int(os.environ.get("SUMMARANK_JOBS", "1")))
    except ValueError:
        return 1


def _map_jobs(fn, items, jobs):
    if jobs <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _doc_seed(doc_id: str, seed: int) -> int:
    digest = hashlib.blake2b(
        doc_id.encode("utf-8"), digest_size=8, key=str(seed).encode("utf-8")
    ).digest()
    return int.from_bytes(digest, "little")


def _record_document(record: fileio.DatasetRecord):
    """Tokenize a dataset record honoring its sentence boundaries."""
    if record.sentence_scores is not None and len(record.sentence_scores) != len(
        record.sentences
    ):
        raise ValueError("sentence_scores length does not match sentences")
    sentences = []
    kept_scores = []
    for idx, raw in enumerate(record.sentences):
        tokens = tokenize_flat(raw)
        if not tokens:
            continue
        sentences.append(Sentence(index=len(sentences), tokens=tokens))
        if record.sentence_scores is not None:
            kept_scores.append(record.sentence_scores[idx])
    if not sentences:
        raise ValueError("empty document")
    doc = Document(doc_id=record.doc_id, sentences=tuple(sentences))
    scores = tuple(kept_scores) if record.sentence_scores is not None else None
    return doc, scores


# ---------------------------------------------------------------------------
# generate-candidates
# ---------------------------------------------------------------------------


def _build_candidates(record, args, corpus_counts):
    doc, file_scores = _record_document(record)
    reference = tokenize_flat(record.reference) if record.reference else None

    if args.mode == "enumerate":
        if file_scores is not None and args.ranking == "auto":
            ranking = SentenceRanking(scores=file_scores)
        elif args.ranking == "oracle" or (args.ranking == "auto" and reference):
            if not reference:
                raise ValueError("oracle ranking needs a reference")
            ranking = heuristic_ranking(doc, reference)
        else:
            ranking = heuristic_ranking(doc, token_counts=corpus_counts)
        sizes = tuple(int(s) for s in args.sizes.split(","))
        cand_set = enumerate_extractive(doc, ranking, sizes=sizes, top_n=args.top_n, cap=args.cap)
    elif args.mode == "beam":
        if not record.systems:
            raise ValueError("no system outputs")
        if args.system:
            if args.system not in record.systems:
                raise ValueError(f"system {args.system!r} not present")
            outputs = record.systems[args.system]
        elif len(record.systems) == 1:
            outputs = next(iter(record.systems.values()))
        else:
            raise ValueError("multiple systems present; pass --system")
        pairs = [(rank, tokenize_flat(text)) for rank, text in enumerate(outputs, start=1)]
        pairs = [(r, t) for r, t in pairs if t]
        cand_set = ingest_beam(pairs, beam_size=args.beam_size, doc_id=doc.doc_id)
    elif args.mode == "pool":
        per_system = []
        for tag in sorted(record.systems):
            outputs = record.systems[tag]
            if outputs:
                tokens = tokenize_flat(outputs[0])
                if tokens:
                    per_system.append((tag, tokens))
        cand_set = pool_systems(per_system, doc_id=doc.doc_id)
    elif args.mode == "fuse":
        pool = []
        for tag in sorted(record.systems):
            outputs = record.systems[tag]
            if not outputs:
                continue
            for sent in tokenize(outputs[0]).sentences:
                pool.append(list(sent.tokens))
        cand_set = fuse_sentences(pool, m=args.fuse_m, doc_id=doc.doc_id)
    else:  # pragma: no cover - argparse restricts choices
        raise ValueError(f"unknown mode {args.mode!r}")

    if reference:
        cand_set = attach_rouge(cand_set, reference, key=args.rouge_key)
    return doc, reference, cand_set


def cmd_generate_candidates(args) -> int:
    records = fileio.read_dataset(args.input)
    corpus_counts = Counter()
    for record in records:
        for raw in record.sentences:
            corpus_counts.update(tokenize_flat(raw))

    def worker(record):
        try:
            return _build_candidates(record, args, corpus_counts), None
        except ValueError as exc:
            return None, f"{record.doc_id}: {exc}"

    results = _map_jobs(worker, records, args.jobs)
    entries = [entry for entry, err in results if entry is not None]
    failures = [err for _, err in results if err is not None]
    for err in failures:
        print(f"skipped {err}", file=sys.stderr)
    if entries:
        fileio.write_candidate_sets(args.output, entries)
    return 1 if failures or not entries else 0


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------

ARCH_KEYS = ("dim", "heads", "n_blocks", "use_projection")
ARCH_DEFAULTS = {"dim": 64, "heads": 4, "n_blocks": 2, "use_projection": True}


def _load_config(path):
    if not path:
        return {}
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _load_examples(path) -> list[TrainExample]:
    examples = []
    for doc, reference, cand_set in fileio.read_candidate_sets(path):
        examples.append(TrainExample(document=doc, reference=reference, candidates=cand_set))
    return examples


def _provider_from_args(args, dim, seed):
    if getattr(args, "embeddings", None):
        return FileEmbeddings.from_file(args.embeddings)
    return HashEmbeddings(dim=dim, seed=seed)


def cmd_train(args) -> int:
    raw_config = _load_config(args.config)
    arch = {key: raw_config.pop(key, ARCH_DEFAULTS[key]) for key in ARCH_KEYS}
    raw_config["mode"] = args.mode
    known = set(TrainConfig.__dataclass_fields__)
    unknown = set(raw_config) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    config = TrainConfig(**raw_config)

    if args.mode == "finetune":
        init, _meta = fileio.load_checkpoint(args.init)
    else:
        init = init_scorer_params(seed=config.seed, **arch)

    examples = _load_examples(args.candidates)
    val = _load_examples(args.val_candidates) if args.val_candidates else None
    provider = _provider_from_args(args, init.dim, config.seed)

    state = train(examples, config, init, provider, val)

    embedding_info = (
        {"kind": "file", "path": os.path.abspath(args.embeddings)}
        if args.embeddings
        else {"kind": "hash", "dim": init.dim, "seed": config.seed}
    )
    metadata = {
        "step": state.step,
        "seed": config.seed,
        "mode": config.mode,
        "validation": state.best_validation,
        "embedding": embedding_info,
    }
    fileio.save_checkpoint(args.out_checkpoint, state.params, metadata)

    log_path = args.log or (args.out_checkpoint + ".log.jsonl")
    with open(log_path, "w", encoding="utf-8") as fh:
        for record in state.log:
            fh.write(json.dumps(record, sort_keys=True, separators=(",", ":")) + "\n")
    print(f"best validation {state.best_validation:.4f} after {state.step} steps")
    return 0


# ---------------------------------------------------------------------------
# rerank
# ---------------------------------------------------------------------------


def _require_rouge(cand_set):
    triples = [c.rouge_vs_ref for c in cand_set.candidates]
    if any(t is None for t in triples):
        raise ValueError(
            f"{cand_set.doc_id}: candidates lack ROUGE scores (generate with a reference)"
        )
    return triples


def _token_rows(provider, tokens):
    rows = provider.matrix(list(tokens))
    if rows.shape[0] == len(tokens) + 1:
        return rows[1:]
    return rows


def _load_ranker(path) -> LinearRanker:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    return LinearRanker(
        weights=np.asarray(raw["weights"], dtype=float),
        bias=float(raw["bias"]),
        feature_mean=np.asarray(raw["feature_mean"], dtype=float),
        feature_std=np.asarray(raw["feature_std"], dtype=float),
        c=float(raw["c"]),
    )


def cmd_rerank(args) -> int:
    entries = fileio.read_candidate_sets(args.candidates)

    params = None
    provider = None
    ranker = None
    if args.method == "refactor":
        params, meta = fileio.load_checkpoint(args.checkpoint)
        if args.embeddings:
            provider = FileEmbeddings.from_file(args.embeddings)
        else:
            info = meta.get("embedding") or {}
            if info.get("kind") == "hash":
                provider = HashEmbeddings(dim=info.get("dim", params.dim), seed=info.get("seed", 0))
            elif info.get("kind") == "file":
                provider = FileEmbeddings.from_file(info["path"])
            else:
                provider = HashEmbeddings(dim=params.dim, seed=args.seed)
    elif args.method == "bertscore-like":
        if args.embeddings:
            provider = FileEmbeddings.from_file(args.embeddings)
        else:
            provider = HashEmbeddings(dim=args.dim, seed=args.seed)
    elif args.method == "ranksvm-like":
        ranker = _load_ranker(args.ranker)

    def worker(entry):
        doc, _reference, cand_set = entry
        triples = _require_rouge(cand_set)
        tags = tuple(c.system_tag for c in cand_set.candidates)
        if args.method.startswith("oracle-") or args.method == "random":
            which = args.method.split("-", 1)[1] if "-" in args.method else "random"
            record = oracle_select(cand_set, which, seed=_doc_seed(doc.doc_id, args.seed))
            return SelectionRecord(
                doc_id=record.doc_id,
                method_tag=args.method if args.method != "random" else "random",
                chosen_index=record.chosen_index,
                chosen=record.chosen,
                per_candidate=record.per_candidate,
                candidate_tags=tags,
                scores=record.scores,
            )
        if args.method == "refactor":
            chosen, breakdowns = select(doc, cand_set, params, provider)
            scores = tuple(b.score for b in breakdowns)
        elif args.method == "bertscore-like":
            doc_rows = _token_rows(provider, doc.tokens)
            scores = tuple(
                greedy_similarity(doc_rows, _token_rows(provider, c.text_tokens))
                for c in cand_set.candidates
            )
            chosen = int(np.argmax(scores))
        else:  # ranksvm-like
            feats = [extract_features(doc, c) for c in cand_set.candidates]
            chosen = rank_with(ranker, feats)
            scores = tuple(ranker.decision(f.as_array()) for f in feats)
        return SelectionRecord(
            doc_id=doc.doc_id,
            method_tag=args.method,
            chosen_index=chosen,
            chosen=triples[chosen],
            per_candidate=tuple(triples),
            candidate_tags=tags,
            scores=scores,
        )

    records = _map_jobs(worker, entries, args.jobs)
    fileio.write_selections(args.output, records)
    return 0


# ---------------------------------------------------------------------------
# fit-ranker
# ---------------------------------------------------------------------------


def cmd_fit_ranker(args) -> int:
    groups = []
    for doc, _reference, cand_set in fileio.read_candidate_sets(args.candidates):
        _require_rouge(cand_set)
        groups.append([extract_features(doc, c) for c in cand_set.candidates])
    ranker = fit_ranker(groups, c=args.c, folds=args.folds)
    payload = {
        "weights": ranker.weights.tolist(),
        "bias": ranker.bias,
        "feature_mean": ranker.feature_mean.tolist(),
        "feature_std": ranker.feature_std.tolist(),
        "c": ranker.c,
    }
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n")
    print(f"fitted ranker with c={ranker.c}")
    return 0


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------


def _aligned(records_by_method):
    """Per-method records aligned by sorted doc_id."""
    out = {}
    for method, records in records_by_method.items():
        out[method] = sorted(records, key=lambda r: r.doc_id)
    return out


def cmd_evaluate(args) -> int:
    records_by_method: dict[str, list[SelectionRecord]] = {}
    for path in args.selections:
        records = fileio.read_selections(path)
        if not records:
            raise ValueError(f"{path}: no selection records")
        tags = {r.method_tag for r in records}
        if len(tags) > 1:
            raise ValueError(f"{path}: mixed method tags {sorted(tags)}")
        method = records[0].method_tag
        if method in records_by_method:
            raise ValueError(f"duplicate method {method!r}")
        records_by_method[method] = records

    report = corpus_report(records_by_method)
    aligned = _aligned(records_by_method)
    output = {"corpus": {m: {"r1": r1, "r2": r2, "rl": rl} for m, r1, r2, rl in report.rows}}

    text_parts = [report.to_text()]

    if args.bins:
        bin_lines = ["", f"bin analysis (width {args.bins})"]
        output["bins"] = {}
        for method, records in aligned.items():
            if any(r.candidate_tags is None or r.scores is None for r in records):
                raise ValueError(f"{method}: selections lack candidate tags or scores")
            tag_set = set(records[0].candidate_tags)
            if any(set(r.candidate_tags) != tag_set for r in records):
                raise ValueError(f"{method}: candidate tags differ across documents")
            positions = [
                {tag: i for i, tag in enumerate(r.candidate_tags)} for r in records
            ]
            per_doc = {
                tag: [
                    100.0 * r.per_candidate[pos[tag]].r1.f1
                    for r, pos in zip(records, positions)
                ]
                for tag in sorted(tag_set)
            }
            score_table = {
                tag: [r.scores[pos[tag]] for r, pos in zip(records, positions)]
                for tag in sorted(tag_set)
            }
            reports, success = bin_analysis(
                per_doc, args.bins, score_table_selector(score_table), seed=args.seed
            )
            output["bins"][method] = {
                "success_rate": success,
                "bins": [
                    {
                        "range": [b.lower, b.upper],
                        "systems": list(b.tags),
                        "max": b.mean_max,
                        "min": b.mean_min,
                        "random": b.mean_random,
                        "best_single": b.mean_best_single,
                        "method": b.mean_method,
                    }
                    for b in reports
                ],
            }
            bin_lines.append(f"{method}: success rate {success:.3f}")
            for b in reports:
                bin_lines.append(
                    f"  [{b.lower:.2f},{b.upper:.2f}) n={len(b.tags)} "
                    f"max={b.mean_max:.2f} min={b.mean_min:.2f} rand={b.mean_random:.2f} "
                    f"best={b.mean_best_single:.2f} method={b.mean_method:.2f}"
                )
        text_parts.append("\n".join(bin_lines) + "\n")

    if args.buckets:
        edges = tuple(float(e) for e in args.buckets.split(","))
        bucket_lines = ["", f"selection accuracy (bucket edges {list(edges)})"]
        output["buckets"] = {}
        for method, records in aligned.items():
            pairs = []
            for r in records:
                values = [t.mean_f for t in r.per_candidate]
                order = np.argsort(values)[::-1]
                delta = values[order[0]] - values[order[1]]
                if delta <= 0:
                    continue
                pairs.append((delta, r.chosen_index == int(order[0])))
            buckets = selection_accuracy(pairs, edges)
            output["buckets"][method] = [
                {
                    "range": [b.lower, b.upper],
                    "correct": b.correct,
                    "total": b.total,
                    "accuracy": b.accuracy,
                }
                for b in buckets
            ]
            bucket_lines.append(f"{method}:")
            for b in buckets:
                bucket_lines.append(
                    f"  ({b.lower:.3f},{b.upper:.3f}] accuracy {b.accuracy:.3f} ({b.correct}/{b.total})"
                )
        text_parts.append("\n".join(bucket_lines) + "\n")

    if args.significance:
        name_a, name_b = args.significance.split(",")
        if name_a not in aligned or name_b not in aligned:
            raise ValueError(f"significance pair {args.significance!r} not among methods")
        sig_lines = ["", f"significance {name_a} vs {name_b} (paired randomization)"]
        output["significance"] = {}
        for metric, getter in (
            ("r1", lambda t: t.r1.f1),
            ("r2", lambda t: t.r2.f1),
            ("rl", lambda t: t.rl.f1),
        ):
            a = [getter(r.chosen) for r in aligned[name_a]]
            b = [getter(r.chosen) for r in aligned[name_b]]
            p = significance(a, b, trials=args.trials, seed=args.seed)
            output["significance"][metric] = p
            sig_lines.append(f"  {metric}: p = {p:.4f}")
        text_parts.append("\n".join(sig_lines) + "\n")

    text = "\n".join(text_parts)
    with open(args.report + ".txt", "w", encoding="utf-8") as fh:
        fh.write(text)
    with open(args.report + ".csv", "w", encoding="utf-8") as fh:
        fh.write(report.to_csv())
    if args.json:
        with open(args.report + ".json", "w", encoding="utf-8") as fh:
            fh.write(json.dumps(output, sort_keys=True, separators=(",", ":")) + "\n")
    print(text, end="")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="summarank",
        description="Candidate-summary generation, trainable reranking, and evaluation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate-candidates", help="build candidate sets from a dataset")
    gen.add_argument("--input", required=True)
    gen.add_argument("--mode", required=True, choices=("enumerate", "beam", "pool", "fuse"))
    gen.add_argument("--sizes", default="2,3", help="combination sizes for enumerate")
    gen.add_argument("--top-n", type=int, default=5)
    gen.add_argument("--cap", type=int, default=20)
    gen.add_argument("--beam-size", type=int, default=4)
    gen.add_argument("--system", default=None, help="system tag for beam mode")
    gen.add_argument("--fuse-m", type=int, default=3)
    gen.add_argument("--ranking", default="auto", choices=("auto", "oracle", "frequency"))
    gen.add_argument("--rouge-key", default="mean_f", choices=("mean_f", "r1"))
    gen.add_argument("--output", required=True)
    gen.add_argument("--jobs", type=int, default=_default_jobs())
    gen.set_defaults(func=cmd_generate_candidates)

    tr = sub.add_parser("train", help="train the scorer on candidate sets")
    tr.add_argument("--candidates", required=True)
    tr.add_argument("--mode", required=True, choices=("pretrain", "finetune", "supervised"))
    tr.add_argument("--init", default=None, help="checkpoint to start from (finetune)")
    tr.add_argument("--config", default=None, help="JSON training configuration")
    tr.add_argument("--out-checkpoint", required=True)
    tr.add_argument("--log", default=None)
    tr.add_argument("--embeddings", default=None, help="embedding file (default: builtin)")
    tr.add_argument("--val-candidates", default=None)
    tr.set_defaults(func=cmd_train)

    rr = sub.add_parser("rerank", help="select one candidate per document")
    rr.add_argument("--candidates", required=True)
    rr.add_argument("--method", required=True, choices=RERANK_METHODS)
    rr.add_argument("--checkpoint", default=None)
    rr.add_argument("--ranker", default=None)
    rr.add_argument("--embeddings", default=None)
    rr.add_argument("--dim", type=int, default=64, help="builtin embedding dim")
    rr.add_argument("--seed", type=int, default=0)
    rr.add_argument("--output", required=True)
    rr.add_argument("--jobs", type=int, default=_default_jobs())
    rr.set_defaults(func=cmd_rerank)

    fr = sub.add_parser("fit-ranker", help="fit the pairwise feature ranker")
    fr.add_argument("--candidates", required=True)
    fr.add_argument("--output", required=True)
    fr.add_argument("--c", type=float, default=None)
    fr.add_argument("--folds", type=int, default=3)
    fr.set_defaults(func=cmd_fit_ranker)

    ev = sub.add_parser("evaluate", help="aggregate selection files into reports")
    ev.add_argument("--selections", action="append", required=True)
    ev.add_argument("--report", required=True, help="output path prefix")
    ev.add_argument("--bins", type=float, default=None, help="bin width on the x100 scale")
    ev.add_argument("--buckets", default=None, help="comma-separated bucket edges")
    ev.add_argument("--significance", default=None, help="pair of method tags: A,B")
    ev.add_argument("--trials", type=int, default=10000)
    ev.add_argument("--seed", type=int, default=0)
    ev.add_argument("--json", action="store_true")
    ev.set_defaults(func=cmd_evaluate)

    return parser


def _validate_usage(parser, args):
    if args.command == "train":
        if args.mode == "finetune" and not args.init:
            parser.error("--mode finetune requires --init")
        if args.mode != "finetune" and args.init:
            parser.error(f"--mode {args.mode} does not accept --init")
    if args.command == "rerank":
        if args.method == "refactor" and not args.checkpoint:
            parser.error("--method refactor requires --checkpoint")
        if args.method == "ranksvm-like" and not args.ranker:
            parser.error("--method ranksvm-like requires --ranker")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _validate_usage(parser, args)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
