"""Command-line entry point: ``kbrank --config <file> <command> ...``.

Exit codes: 0 success, 1 error, 2 usage error, 3 method abstained.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, load_config
from .ensemble import JudgmentMatrix, Vote, correlation_matrix
from .golddata import (BUCKETS, agreement_distribution, evaluate, fleiss_kappa, in_bucket,
                       random_agreement_model, run_judge)
from .judgment import Abstention, Winner
from .pipeline import UnknownMethodError, Workspace
from .pivot import FeatureMode, InsufficientPivotData, pivot_accuracy, read_pairs

logger = logging.getLogger("kbrank")

EXIT_OK, EXIT_ERROR, EXIT_USAGE, EXIT_ABSTAIN = 0, 1, 2, 3


class UsageError(Exception):
    pass


def write_atomic(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.{os.getpid()}.tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(path)
    return path


def _tsv(rows) -> str:
    buf = io.StringIO()
    csv.writer(buf, delimiter="\t", lineterminator="\n").writerows(rows)
    return buf.getvalue()


def _write_manifest(ws: Workspace, command: str, outputs: list[Path], extra: dict | None = None) -> Path:
    out_dir = ws.config.path("output_dir")
    manifest = {
        "command": command,
        "version": __version__,
        "config_hash": ws.config.digest(),
        "corpus_fingerprint": ws.corpus.fingerprint if "corpus" in ws.__dict__ else None,
        "timings_seconds": {k: round(v, 3) for k, v in sorted(ws.timings.items())},
        "outputs": sorted(str(p) for p in outputs),
    }
    manifest.update(extra or {})
    return write_atomic(out_dir / f"manifest-{command}.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def cmd_ingest(ws: Workspace, args) -> int:
    store = ws.ingest()
    for err in store.errors:
        print(f"warning: {err}", file=sys.stderr)
    stats = store.stats()
    print(f"entities\t{stats['entities']}")
    print(f"properties\t{stats['properties']}")
    print(f"property_assertions\t{stats['property_assertions']}")
    print(f"entities_with_article\t{stats['with_article']}")
    print(f"ingest_errors\t{stats['ingest_errors']}")
    if ws.config.paths.corpus:
        corpus = ws.corpus
        print(f"corpus_documents\t{len(corpus)}")
        print(f"vocabulary_size\t{len(corpus.vocabulary)}")
        print(f"corpus_fingerprint\t{corpus.fingerprint}")
    print("usage")
    for p, n in stats["usage"].items():
        print(f"  {p}\t{store.properties[p].label}\t{n}")
    _write_manifest(ws, "ingest", [ws.store_path])
    return EXIT_OK


def cmd_stats(ws: Workspace, args) -> int:
    store = ws.store
    stats = store.stats()
    print(f"entities\t{stats['entities']}")
    print(f"properties\t{stats['properties']}")
    if ws.config.paths.gold:
        records = ws.gold
        hist, mean = agreement_distribution(records)
        print(f"gold_records\t{len(records)}")
        print(f"mean_agreement\t{mean:.4f}")
        print(f"fleiss_kappa\t{fleiss_kappa(records):.4f}")
        rnd = random_agreement_model()
        print("agreement\trecords\tshare\trandom_share")
        for level, n in hist.items():
            print(f"{level:.1f}\t{n}\t{n / len(records):.4f}\t{float(rnd[_frac(level)]):.4f}")
        for name, thr, exact in BUCKETS:
            print(f"bucket {name}\t{sum(in_bucket(r, thr, exact) for r in records)}")
        if args.figures:
            from .plotting import agreement_figure
            path = ws.config.path("output_dir") / "agreement.png"
            path.parent.mkdir(parents=True, exist_ok=True)
            agreement_figure(hist, {float(k): float(v) for k, v in rnd.items()}, path)
            print(f"figure\t{path}")
    return EXIT_OK


def _frac(level: float):
    from fractions import Fraction
    return Fraction(round(level * 10), 10)


def cmd_train_topics(ws: Workspace, args) -> int:
    for kind in (["lsi", "lda"] if args.kind == "both" else [args.kind]):
        model = ws.topic_model(kind, retrain=args.retrain)
        print(f"{kind}\tk={model.k}\t{ws.topic_model_dir(kind)}")
    _write_manifest(ws, "train-topics", [ws.topic_model_dir(k) for k in ("lsi", "lda")
                                         if (ws.topic_model_dir(k) / "manifest.json").exists()])
    return EXIT_OK


def cmd_train_pivot(ws: Workspace, args) -> int:
    pairs = read_pairs(args.pairs)
    store = ws.store
    modes = [FeatureMode.COUNTS, FeatureMode.TFIDF] if args.mode == "both" else [FeatureMode(args.mode)]
    rows = [["first", "second", "mode", "train_sizes", "holdout", "accuracy", "epochs", "converged"]]
    failed = 0
    for p, q in pairs:
        p, q = store.property_id(p), store.property_id(q)
        for mode in modes:
            trainer = ws.pivot_trainer(mode)
            try:
                model = trainer.model(p, q)
                ds = trainer.dataset(p, q)
            except InsufficientPivotData as exc:
                failed += 1
                rows.append([p, q, mode.value, "-", "-", f"abstain: {exc}", "-", "-"])
                continue
            held = len(ds.holdout_positives) + len(ds.holdout_negatives)
            acc = pivot_accuracy(model, ds, store, ws.corpus) if held else float("nan")
            rows.append([*ds.pair, mode.value, f"{len(ds.positives)}/{len(ds.negatives)}",
                         str(held), f"{acc:.3f}", str(model.epochs), str(model.converged)])
    sys.stdout.write(_tsv(rows))
    out = write_atomic(ws.config.path("output_dir") / "pivot_accuracy.tsv", _tsv(rows))
    _write_manifest(ws, "train-pivot", [out])
    return EXIT_OK


def cmd_judge(ws: Workspace, args) -> int:
    store = ws.store
    e = store.entity_id(args.entity)
    p, q = store.property_id(args.first), store.property_id(args.second)
    if p == q:
        raise UsageError("the two properties must differ")
    judge = ws.judge(args.method)
    try:
        j = judge.judge(e, p, q)
    except Abstention as exc:
        print(f"abstain\t{exc}")
        return EXIT_ABSTAIN
    winner = {Winner.FIRST: p, Winner.SECOND: q, Winner.TIE: "tie"}[j.winner]
    label = store.properties[winner].label if winner in store.properties else winner
    print(f"method\t{judge.name}")
    print(f"entity\t{e}\t{store.entities[e].label}")
    print(f"winner\t{j.winner.value}\t{winner}\t{label}")
    print(f"score_first\t{j.score_first!r}")
    print(f"score_second\t{j.score_second!r}")
    return EXIT_OK


def _judgments(ws: Workspace, methods, records, queries):
    results, failures = {}, {}
    for m in methods:
        try:
            judge = ws.judge(m, records)
            results[m] = ws._timed(f"judge:{m}", lambda: run_judge(judge, queries))
        except Exception as exc:  # a failing method must not stop the run
            logger.error("method %s failed: %s", m, exc)
            failures[m] = f"{type(exc).__name__}: {exc}"
    return results, failures


def _matrix(records, methods, results) -> JudgmentMatrix:
    matrix = JudgmentMatrix([r.record_id for r in records], list(methods))
    for j, m in enumerate(methods):
        for i, jd in enumerate(results.get(m, [None] * len(records))):
            matrix.cells[i][j] = Vote.of(jd)
    return matrix


def cmd_evaluate(ws: Workspace, args) -> int:
    records = ws.gold
    methods = args.methods or ws.config.methods
    queries = ws.queries(records)
    results, failures = _judgments(ws, methods, records, queries)
    report = evaluate(results, records, failures)
    out_dir = ws.config.path("output_dir")
    outputs = [
        write_atomic(out_dir / "evaluation.tsv", _tsv(report.rows())),
        write_atomic(out_dir / "evaluation.json", json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n"),
        write_atomic(out_dir / "judgments.tsv", _tsv([["record_id", "method", "judgment"]]
                                                     + _matrix(records, methods, results).to_rows())),
    ]
    if not args.no_figures:
        from .plotting import agreement_figure, ppref_figure
        hist, _ = agreement_distribution(records)
        rnd = {float(k): float(v) for k, v in random_agreement_model().items()}
        outputs.append(agreement_figure(hist, rnd, out_dir / "agreement.png"))
        outputs.append(ppref_figure(report, out_dir / "ppref.png"))
    sys.stdout.write(_tsv(report.rows()))
    for m, msg in failures.items():
        print(f"error\t{m}\t{msg}", file=sys.stderr)
    _write_manifest(ws, "evaluate", outputs, {"unresolved_records": sum(q is None for q in queries)})
    return EXIT_OK


def cmd_correlate(ws: Workspace, args) -> int:
    records = ws.gold
    threshold = args.min_agreement if args.min_agreement is not None else ws.config.correlation_min_agreement
    kept = [r for r in records if in_bucket(r, threshold)]
    logger.info("correlating over %d records with agreement >= %.2f", len(kept), threshold)
    print(f"records\t{len(kept)}\tagreement>={threshold}")
    if args.judgments:
        full = JudgmentMatrix.read_tsv(args.judgments)
        ids = {r.record_id for r in kept}
        matrix = full.subset(i for i, rid in enumerate(full.record_ids) if rid in ids)
    else:
        methods = args.methods or [m for m in ws.config.methods if ws.config.ensemble(m) is None]
        results, failures = _judgments(ws, methods, kept, ws.queries(kept))
        for m, msg in failures.items():
            print(f"error\t{m}\t{msg}", file=sys.stderr)
        matrix = _matrix(kept, [m for m in methods if m in results], results)
    table = correlation_matrix(matrix)
    rows = [["method"] + matrix.methods]
    for name, row in zip(matrix.methods, table):
        rows.append([name] + ["-" if np.isnan(v) else f"{v:.4f}" for v in row])
    out_dir = ws.config.path("output_dir")
    outputs = [write_atomic(out_dir / "correlation.tsv", _tsv(rows))]
    if not args.no_figures:
        from .plotting import correlation_figure
        out_dir.mkdir(parents=True, exist_ok=True)
        outputs.append(correlation_figure(table, matrix.methods, out_dir / "correlation.png"))
    sys.stdout.write(_tsv(rows))
    _write_manifest(ws, "correlate", outputs, {"records": len(kept), "min_agreement": threshold})
    return EXIT_OK


def _report_unconverged(ws: Workspace) -> None:
    for key, trainer in ws.__dict__.items():
        if key.startswith("_trainer_") and trainer.unconverged:
            print(f"warning: {len(trainer.unconverged)} {trainer.mode.value} pivot models stopped "
                  f"at max_epochs without reaching tol", file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kbrank", description=__doc__.splitlines()[0])
    parser.add_argument("--config", "-c", default=os.environ.get("KBRANK_CONFIG", "kbrank.yaml"),
                        help='configuration file, or "toy" for the bundled toy world')
    parser.add_argument("--cache-dir", help="override paths.cache_dir")
    parser.add_argument("--output-dir", help="override paths.output_dir")
    parser.add_argument("--gold", help="override paths.gold")
    parser.add_argument("--recorded", help="override paths.recorded")
    parser.add_argument("-v", "--verbose", action="store_true")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("ingest", help="index the entity and property files")
    p = sub.add_parser("stats", help="store and gold-dataset statistics")
    p.add_argument("--figures", action="store_true", help="also render the agreement figure")
    p = sub.add_parser("train-topics", help="train LSI and/or LDA topic models")
    p.add_argument("--kind", choices=["lsi", "lda", "both"], default="both")
    p.add_argument("--retrain", action="store_true")
    p = sub.add_parser("train-pivot", help="train pivot classifiers for a list of pairs")
    p.add_argument("--pairs", required=True, help="file with one property pair per line")
    p.add_argument("--mode", choices=["counts", "tfidf", "both"], default="both")
    p = sub.add_parser("judge", help="judge one (entity, property, property) query")
    p.add_argument("--method", "-m", required=True)
    p.add_argument("entity")
    p.add_argument("first")
    p.add_argument("second")
    p = sub.add_parser("evaluate", help="ppref report over the gold dataset")
    p.add_argument("--methods", nargs="+", help="methods to evaluate (default: configuration)")
    p.add_argument("--no-figures", action="store_true")
    p = sub.add_parser("correlate", help="Pearson correlation between methods")
    p.add_argument("--methods", nargs="+")
    p.add_argument("--judgments", help="reuse a judgments.tsv written by evaluate")
    p.add_argument("--min-agreement", type=float)
    p.add_argument("--no-figures", action="store_true")
    return parser


COMMANDS = {"ingest": cmd_ingest, "stats": cmd_stats, "train-topics": cmd_train_topics,
            "train-pivot": cmd_train_pivot, "judge": cmd_judge, "evaluate": cmd_evaluate,
            "correlate": cmd_correlate}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args.config)
        for attr in ("cache_dir", "output_dir", "gold", "recorded"):
            value = getattr(args, attr)
            if value:
                setattr(config.paths, attr, str(Path(value).resolve()))
        ws = Workspace(config)
        t0 = time.perf_counter()
        code = COMMANDS[args.command](ws, args)
        _report_unconverged(ws)
        logger.info("%s finished in %.2fs", args.command, time.perf_counter() - t0)
        return code
    except (UsageError, UnknownMethodError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, ConfigError, KeyError, ValueError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
