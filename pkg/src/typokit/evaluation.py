"""Run-file evaluation: MRR@k, Recall@k, significance tests, rank loss.

Works on TREC-style run files scored against qrels. Comparison reports
follow the usual layout for robustness tables: a baseline row, an
average-across-variants row, and one row per variant with percentage
reductions and Bonferroni-corrected paired t-tests.
"""

from __future__ import annotations

import csv
import math
from collections.abc import Mapping
from dataclasses import dataclass
from pathlib import Path
from statistics import fmean

import numpy as np
from scipy.special import betainc

from .dataio import ParseError

# qid -> set of relevant doc_ids
Qrels = dict[str, set[str]]
# qid -> ranked list of (doc_id, score), best first
Run = dict[str, list[tuple[str, float]]]

AVG_LABEL = "avg"


def parse_qrels(path: str | Path) -> Qrels:
    """Read TREC qrels rows ``qid 0 docid grade``; keeps grade >= 1 only."""
    qrels: Qrels = {}
    with open(path, encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, 1):
            line = raw.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 4:
                raise ParseError(path, line_no, "expected 'qid 0 docid grade'")
            qid, _, doc_id, grade_s = parts
            try:
                grade = int(grade_s)
            except ValueError:
                raise ParseError(path, line_no, f"grade {grade_s!r} is not an integer")
            if grade >= 1:
                qrels.setdefault(qid, set()).add(doc_id)
    return qrels


def parse_run(path: str | Path) -> Run:
    """Read a run file, auto-detecting the format by column count.

    6 columns is TREC (``qid Q0 doc_id rank score tag``), 3 columns is the
    MS MARCO triple (``qid doc_id rank``, score synthesized as -rank).
    Rows within a query are ordered by the rank column.
    """
    groups: dict[str, list[tuple[int, str, float]]] = {}
    seen: dict[tuple[str, str], int] = {}
    ncols: int | None = None
    with open(path, encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, 1):
            line = raw.strip()
            if not line:
                continue
            parts = line.split()
            if ncols is None:
                if len(parts) not in (3, 6):
                    raise ParseError(
                        path, line_no, "expected 6-column TREC or 3-column triple"
                    )
                ncols = len(parts)
            if len(parts) != ncols:
                raise ParseError(
                    path, line_no, f"expected {ncols} columns, got {len(parts)}"
                )
            try:
                if ncols == 6:
                    qid, _, doc_id, rank_s, score_s, _ = parts
                    rank = int(rank_s)
                    score = float(score_s)
                else:
                    qid, doc_id, rank_s = parts
                    rank = int(rank_s)
                    score = float(-rank)
            except ValueError:
                raise ParseError(path, line_no, "rank/score fields do not parse")
            key = (qid, doc_id)
            if key in seen:
                raise ParseError(
                    path,
                    line_no,
                    f"duplicate doc {doc_id!r} for query {qid!r}"
                    f" (first on line {seen[key]})",
                )
            seen[key] = line_no
            groups.setdefault(qid, []).append((rank, doc_id, score))
    run: Run = {}
    for qid, rows in groups.items():
        rows.sort(key=lambda row: row[0])
        run[qid] = [(doc_id, score) for _, doc_id, score in rows]
    return run


def first_relevant_rank(doc_ids, relevant: set[str], cutoff: int) -> int:
    """1-based rank of the first relevant doc, or cutoff+1 if none in top cutoff."""
    for rank, doc_id in enumerate(doc_ids, 1):
        if rank > cutoff:
            break
        if doc_id in relevant:
            return rank
    return cutoff + 1


@dataclass(frozen=True)
class MetricResult:
    """Per-query values of one metric plus its aggregate mean."""

    name: str
    k: int
    per_query: dict[str, float]

    @property
    def label(self) -> str:
        return f"{self.name}_at_{self.k}"

    @property
    def mean(self) -> float:
        if not self.per_query:
            return 0.0
        return fmean(self.per_query.values())


def mrr_at_k(run: Run, qrels: Qrels, k: int = 10) -> MetricResult:
    """Mean reciprocal rank at k over the judged queries.

    Judged queries absent from the run score 0.
    """
    per_query = {}
    for qid in sorted(qrels):
        docs = [doc_id for doc_id, _ in run.get(qid, [])]
        rank = first_relevant_rank(docs, qrels[qid], k)
        per_query[qid] = 1.0 / rank if rank <= k else 0.0
    return MetricResult("mrr", k, per_query)


def recall_at_k(run: Run, qrels: Qrels, k: int = 1000) -> MetricResult:
    per_query = {}
    for qid in sorted(qrels):
        relevant = qrels[qid]
        retrieved = {doc_id for doc_id, _ in run.get(qid, [])[:k]}
        per_query[qid] = len(relevant & retrieved) / len(relevant)
    return MetricResult("recall", k, per_query)


@dataclass(frozen=True)
class EvalReport:
    mrr: MetricResult
    recall: MetricResult

    @property
    def query_ids(self) -> list[str]:
        return sorted(self.mrr.per_query)

    @property
    def num_queries(self) -> int:
        return len(self.mrr.per_query)

    def to_json_dict(self) -> dict:
        return {
            "k_mrr": self.mrr.k,
            "k_recall": self.recall.k,
            "num_queries": self.num_queries,
            "aggregate": {
                self.mrr.label: self.mrr.mean,
                self.recall.label: self.recall.mean,
            },
            "per_query": {
                qid: {
                    self.mrr.label: self.mrr.per_query[qid],
                    self.recall.label: self.recall.per_query[qid],
                }
                for qid in self.query_ids
            },
        }


def evaluate_run(
    run: Run, qrels: Qrels, k_mrr: int = 10, k_recall: int = 1000
) -> EvalReport:
    return EvalReport(
        mrr=mrr_at_k(run, qrels, k_mrr), recall=recall_at_k(run, qrels, k_recall)
    )


def _aligned(a, b) -> tuple[list[float], list[float]]:
    if isinstance(a, Mapping) or isinstance(b, Mapping):
        if not (isinstance(a, Mapping) and isinstance(b, Mapping)):
            raise ValueError("a and b must both be mappings or both sequences")
        missing_b = sorted(set(a) - set(b))
        missing_a = sorted(set(b) - set(a))
        if missing_a or missing_b:
            details = []
            if missing_b:
                details.append(f"missing from b: {missing_b}")
            if missing_a:
                details.append(f"missing from a: {missing_a}")
            raise ValueError("query sets differ; " + "; ".join(details))
        qids = sorted(a)
        return [float(a[q]) for q in qids], [float(b[q]) for q in qids]
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")
    return [float(x) for x in a], [float(x) for x in b]


def paired_t_test(a, b) -> tuple[float, float]:
    """Two-tailed paired t-test of b against a.

    Accepts aligned sequences or qid-keyed mappings (aligned by qid).
    Returns (t, p). The p-value comes from the regularized incomplete
    beta function, p = I_x(df/2, 1/2) with x = df/(df + t^2). Degenerate
    zero-variance differences give p = 1 when the mean difference is 0
    and p = 0 otherwise.
    """
    a_vec, b_vec = _aligned(a, b)
    n = len(a_vec)
    if n < 2:
        raise ValueError(f"need at least 2 paired values, got {n}")
    d = np.asarray(b_vec) - np.asarray(a_vec)
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        if mean == 0.0:
            return 0.0, 1.0
        return math.copysign(math.inf, mean), 0.0
    t = mean / (sd / math.sqrt(n))
    df = n - 1
    p = float(betainc(df / 2.0, 0.5, df / (df + t * t)))
    return t, p


def bonferroni(p: float, m: int) -> float:
    """Bonferroni-corrected p-value, min(1, p*m)."""
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    return min(1.0, p * m)


@dataclass(frozen=True)
class Comparison:
    """Variant-vs-baseline block: reductions and significance."""

    pct_reduction_mrr: float | None
    pct_reduction_recall: float | None
    t_statistic: float
    p_raw: float
    p_bonferroni: float
    significant: bool

    def to_json_dict(self) -> dict:
        # degenerate zero-variance tests have t = +-inf, which is not
        # representable in strict JSON
        t = self.t_statistic if math.isfinite(self.t_statistic) else None
        return {
            "pct_reduction_mrr": self.pct_reduction_mrr,
            "pct_reduction_recall": self.pct_reduction_recall,
            "t_statistic": t,
            "p_raw": self.p_raw,
            "p_bonferroni": self.p_bonferroni,
            "significant": self.significant,
        }


def _pct_reduction(base: float, variant: float) -> float | None:
    if base == 0.0:
        return None
    return (variant - base) / base * 100.0


def compare(
    report_baseline: EvalReport,
    report_variant: EvalReport,
    m: int,
    alpha: float = 0.01,
) -> Comparison:
    """Percentage reductions per metric plus a paired t-test on MRR@k."""
    t, p = paired_t_test(report_baseline.mrr.per_query, report_variant.mrr.per_query)
    p_bonf = bonferroni(p, m)
    return Comparison(
        pct_reduction_mrr=_pct_reduction(
            report_baseline.mrr.mean, report_variant.mrr.mean
        ),
        pct_reduction_recall=_pct_reduction(
            report_baseline.recall.mean, report_variant.recall.mean
        ),
        t_statistic=t,
        p_raw=p,
        p_bonferroni=p_bonf,
        significant=p_bonf < alpha,
    )


@dataclass(frozen=True)
class RankLossSeries:
    """Per-query rank losses, sorted by decreasing loss (ties by qid).

    loss = rank_first_relevant(original) - rank_first_relevant(typo), so
    negative values mean the typo run found the relevant doc later.
    """

    cutoff: int
    losses: list[tuple[str, int]]

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(["query_id", "loss"])
            writer.writerows(self.losses)


def rank_loss(
    run_original: Run,
    run_typo: Run,
    qrels: Qrels,
    cutoff: int = 1000,
    include_unretrieved: bool = True,
) -> RankLossSeries:
    """First-relevant rank difference per judged query.

    A query with no relevant doc in a run's top ``cutoff`` (or missing
    from the run) gets rank cutoff+1 there; set ``include_unretrieved``
    to False to drop queries unresolved in either run.
    """
    if cutoff < 1:
        raise ValueError(f"cutoff must be >= 1, got {cutoff}")
    rows = []
    for qid in sorted(qrels):
        relevant = qrels[qid]
        r_orig = first_relevant_rank(
            [d for d, _ in run_original.get(qid, [])], relevant, cutoff
        )
        r_typo = first_relevant_rank(
            [d for d, _ in run_typo.get(qid, [])], relevant, cutoff
        )
        if not include_unretrieved and (r_orig > cutoff or r_typo > cutoff):
            continue
        rows.append((qid, r_orig - r_typo))
    rows.sort(key=lambda row: (-row[1], row[0]))
    return RankLossSeries(cutoff=cutoff, losses=rows)


def _check_same_queries(baseline: EvalReport, label: str, report: EvalReport) -> None:
    base_ids = set(baseline.mrr.per_query)
    ids = set(report.mrr.per_query)
    if ids != base_ids:
        mismatched = sorted(base_ids ^ ids)
        raise ValueError(
            f"report {label!r} query set differs from baseline; "
            f"mismatched ids: {mismatched}"
        )


def table_report(
    results: dict[str, EvalReport],
    baseline_label: str,
    m: int | None = None,
    alpha: float = 0.01,
) -> tuple[str, dict]:
    """Render a comparison table as text plus its JSON twin.

    One row per label; when two or more variants are present an extra
    "avg" row averages the per-kind per-query values. Default m is the
    number of comparisons made (variants plus the avg row). The dagger
    marks Bonferroni-significant rows at the given alpha.
    """
    if baseline_label not in results:
        raise ValueError(f"baseline label {baseline_label!r} not in results")
    baseline = results[baseline_label]
    variant_labels = [label for label in results if label != baseline_label]
    if AVG_LABEL in variant_labels:
        raise ValueError(f"label {AVG_LABEL!r} is reserved for the average row")
    for label in variant_labels:
        _check_same_queries(baseline, label, results[label])

    include_avg = len(variant_labels) >= 2
    if m is None:
        m = len(variant_labels) + (1 if include_avg else 0)

    rows: list[tuple[str, EvalReport, Comparison | None]] = [
        (baseline_label, baseline, None)
    ]
    if include_avg:
        avg_report = EvalReport(
            mrr=MetricResult(
                baseline.mrr.name,
                baseline.mrr.k,
                {
                    qid: fmean(results[v].mrr.per_query[qid] for v in variant_labels)
                    for qid in baseline.mrr.per_query
                },
            ),
            recall=MetricResult(
                baseline.recall.name,
                baseline.recall.k,
                {
                    qid: fmean(results[v].recall.per_query[qid] for v in variant_labels)
                    for qid in baseline.recall.per_query
                },
            ),
        )
        rows.append((AVG_LABEL, avg_report, compare(baseline, avg_report, m, alpha)))
    for label in variant_labels:
        rows.append((label, results[label], compare(baseline, results[label], m, alpha)))

    mrr_head = f"MRR@{baseline.mrr.k}"
    recall_head = f"R@{baseline.recall.k}"
    label_width = max(len("run"), max(len(label) for label, _, _ in rows))

    def pct_cell(value: float | None) -> str:
        return "-" if value is None else f"{value:+.1f}"

    lines = [
        f"{'run':<{label_width}}  {mrr_head:>8}  {'Δ%':>8}  "
        f"{recall_head:>8}  {'Δ%':>8}  {'p_bonf':>10}  sig"
    ]
    json_rows = []
    for label, report, comparison in rows:
        mrr_mean, recall_mean = report.mrr.mean, report.recall.mean
        row_json: dict = {
            "label": label,
            "baseline": comparison is None,
            report.mrr.label: mrr_mean,
            report.recall.label: recall_mean,
        }
        if comparison is None:
            lines.append(
                f"{label:<{label_width}}  {mrr_mean:>8.4f}  {'-':>8}  "
                f"{recall_mean:>8.4f}  {'-':>8}  {'-':>10}  "
            )
        else:
            dagger = "†" if comparison.significant else ""
            lines.append(
                f"{label:<{label_width}}  {mrr_mean:>8.4f}  "
                f"{pct_cell(comparison.pct_reduction_mrr):>8}  "
                f"{recall_mean:>8.4f}  "
                f"{pct_cell(comparison.pct_reduction_recall):>8}  "
                f"{comparison.p_bonferroni:>10.3g}  {dagger}"
            )
            row_json.update(comparison.to_json_dict())
        json_rows.append(row_json)

    text = "\n".join(lines) + "\n"
    report_json = {
        "baseline_label": baseline_label,
        "m": m,
        "alpha": alpha,
        "k_mrr": baseline.mrr.k,
        "k_recall": baseline.recall.k,
        "rows": json_rows,
    }
    return text, report_json
