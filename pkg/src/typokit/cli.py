"""Command-line interface.

One executable, subcommand per operation. Exit codes: 0 success, 1 data
error (parse failures, invalid values), 2 I/O error, 64 usage error.
Data goes to stdout or the named output files, progress goes to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .augment import (
    DEVSET_REPORT_NAME,
    AugmentPolicy,
    augment_training_file,
    make_typo_dev_sets,
)
from .bm25 import DEFAULT_B, DEFAULT_K1, Bm25Index, batch_search, build_index
from .evaluation import (
    evaluate_run,
    parse_qrels,
    parse_run,
    rank_loss,
    table_report,
)

EXIT_OK = 0
EXIT_DATA = 1
EXIT_IO = 2
EXIT_USAGE = 64

log = logging.getLogger("typokit")


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that exits 64 on usage errors instead of 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="typokit", description=__doc__)
    parser.add_argument("--version", action="version", version=f"typokit {__version__}")
    parser.add_argument(
        "--seed", type=int, default=42, help="global random seed (default 42)"
    )
    parser.add_argument(
        "--threads",
        type=int,
        default=os.cpu_count() or 1,
        help="worker threads (default: available cores)",
    )
    parser.add_argument(
        "--quiet", action="store_true", help="suppress progress messages"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("index", help="build a BM25 index from a TSV collection")
    p.add_argument("collection", help="doc_id<TAB>text file")
    p.add_argument("out_index", help="output index file")
    p.add_argument("--k1", type=float, default=DEFAULT_K1)
    p.add_argument("--b", type=float, default=DEFAULT_B)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("search", help="run queries against an index")
    p.add_argument("index", help="index file from 'typokit index'")
    p.add_argument("queries", help="query_id<TAB>query_text file")
    p.add_argument("out_run", help="output TREC run file")
    p.add_argument("--k", type=int, default=1000, help="results per query")
    p.add_argument("--tag", default="typokit", help="run tag column")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("perturb", help="write one typo dev set per typo kind")
    p.add_argument("queries", help="query_id<TAB>query_text file")
    p.add_argument("out_dir", help="output directory")
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("augment", help="apply the typos-aware policy to queries")
    p.add_argument("queries", help="query_id<TAB>query_text file")
    p.add_argument("out_queries", help="output query file")
    p.add_argument("out_log", help="output JSONL perturbation log")
    p.add_argument(
        "--probability",
        type=float,
        default=0.5,
        help="per-query perturbation probability",
    )
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("eval", help="score a run file against qrels")
    p.add_argument("run", help="TREC or 3-column run file")
    p.add_argument("qrels", help="qrels file")
    p.add_argument("--k-mrr", type=int, default=10)
    p.add_argument("--k-recall", type=int, default=1000)
    p.add_argument("--json", action="store_true", help="emit the full JSON report")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", help="compare variant runs against a baseline run")
    p.add_argument("qrels", help="qrels file")
    p.add_argument("baseline_run", help="baseline run file")
    p.add_argument("variant_runs", nargs="+", help="variant run files")
    p.add_argument("--k-mrr", type=int, default=10)
    p.add_argument("--k-recall", type=int, default=1000)
    p.add_argument(
        "--m",
        type=int,
        default=None,
        help="Bonferroni m (default: number of comparisons)",
    )
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--json", action="store_true", help="emit the JSON twin")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("rankloss", help="first-relevant rank loss between two runs")
    p.add_argument("run_original", help="original-query run file")
    p.add_argument("run_typo", help="typo-query run file")
    p.add_argument("qrels", help="qrels file")
    p.add_argument("out_csv", help="output CSV (query_id,loss)")
    p.add_argument("--cutoff", type=int, default=1000)
    p.add_argument(
        "--only-retrieved",
        action="store_true",
        help="drop queries unresolved within the cutoff in either run",
    )
    p.set_defaults(func=cmd_rankloss)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def cmd_index(args) -> int:
    index = build_index(args.collection, k1=args.k1, b=args.b)
    index.save(args.out_index)
    log.info("indexed %d docs -> %s", index.doc_count, args.out_index)
    return EXIT_OK


def cmd_search(args) -> int:
    index = Bm25Index.load(args.index)
    n = batch_search(
        index, args.queries, args.k, args.out_run, tag=args.tag, threads=args.threads
    )
    log.info("searched %d queries -> %s", n, args.out_run)
    return EXIT_OK


def cmd_perturb(args) -> int:
    paths = make_typo_dev_sets(args.queries, args.out_dir, global_seed=args.seed)
    manifest = {
        "out_dir": str(args.out_dir),
        "files": {kind.value: str(path) for kind, path in paths.items()},
        "report": str(Path(args.out_dir) / DEVSET_REPORT_NAME),
    }
    json.dump(manifest, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return EXIT_OK


def cmd_augment(args) -> int:
    policy = AugmentPolicy(probability=args.probability, global_seed=args.seed)
    stats = augment_training_file(args.queries, args.out_queries, args.out_log, policy)
    json.dump(stats.to_json_dict(), sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return EXIT_OK


def cmd_eval(args) -> int:
    run = parse_run(args.run)
    qrels = parse_qrels(args.qrels)
    report = evaluate_run(run, qrels, k_mrr=args.k_mrr, k_recall=args.k_recall)
    if args.json:
        json.dump(report.to_json_dict(), sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
    else:
        sys.stdout.write(f"num_queries: {report.num_queries}\n")
        sys.stdout.write(f"{report.mrr.label}: {report.mrr.mean:.6f}\n")
        sys.stdout.write(f"{report.recall.label}: {report.recall.mean:.6f}\n")
    return EXIT_OK


def _run_labels(paths: list[str]) -> list[str]:
    stems = [Path(p).stem for p in paths]
    if len(set(stems)) != len(stems):
        return [str(p) for p in paths]
    return stems


def cmd_compare(args) -> int:
    qrels = parse_qrels(args.qrels)
    run_paths = [args.baseline_run, *args.variant_runs]
    labels = _run_labels(run_paths)
    results = {
        label: evaluate_run(
            parse_run(path), qrels, k_mrr=args.k_mrr, k_recall=args.k_recall
        )
        for label, path in zip(labels, run_paths)
    }
    text, twin = table_report(results, labels[0], m=args.m, alpha=args.alpha)
    if args.json:
        json.dump(twin, sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_rankloss(args) -> int:
    run_original = parse_run(args.run_original)
    run_typo = parse_run(args.run_typo)
    qrels = parse_qrels(args.qrels)
    series = rank_loss(
        run_original,
        run_typo,
        qrels,
        cutoff=args.cutoff,
        include_unretrieved=not args.only_retrieved,
    )
    series.write_csv(args.out_csv)
    log.info("wrote %d rank-loss rows -> %s", len(series.losses), args.out_csv)
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def _configure_logging(quiet: bool) -> None:
    # rebuild the handler each call so it binds the current sys.stderr
    for handler in list(log.handlers):
        log.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.WARNING if quiet else logging.INFO)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    _configure_logging(args.quiet)
    try:
        return args.func(args)
    except ValueError as exc:
        log.error("error: %s", exc)
        return EXIT_DATA
    except OSError as exc:
        log.error("error: %s", exc)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
