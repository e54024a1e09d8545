"""Typos-aware query augmentation.

Training queries are perturbed with a configurable probability (an
unbiased coin by default) using a uniformly sampled typo generator; dev
queries can be materialized once per typo kind. Randomness is keyed by
(global seed, query id), so any sharding or call order produces identical
results.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path

from .dataio import iter_tsv_pairs, read_tsv_pairs
from .typo_gen import (
    KeyboardLayout,
    PerturbationRecord,
    TypoKind,
    _inject_with_stream,
    derive_stream_seed,
    inject_typo,
    sample_kind,
)

DEVSET_REPORT_NAME = "typo_dev_sets.report.json"


@dataclass(frozen=True)
class AugmentPolicy:
    """Perturbation probability, seed, and keyboard layout for augmentation."""

    probability: float = 0.5
    global_seed: int = 42
    layout: KeyboardLayout = field(default_factory=KeyboardLayout.qwerty)

    def __post_init__(self) -> None:
        if not 0.0 <= self.probability <= 1.0:
            raise ValueError(f"probability must be in [0, 1], got {self.probability}")


@dataclass
class AugmentStats:
    """Exact accounting of one augmentation pass."""

    total: int = 0
    modified: int = 0
    unchanged_no_eligible: int = 0
    per_kind: dict[TypoKind, int] = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "total": self.total,
            "modified": self.modified,
            "unchanged_no_eligible": self.unchanged_no_eligible,
            "per_kind": {kind.value: self.per_kind.get(kind, 0) for kind in TypoKind},
        }


def _transform(
    query_id: str, query_text: str, policy: AugmentPolicy
) -> tuple[str, PerturbationRecord | None, bool]:
    """Apply the policy; also report whether the coin chose perturbation."""
    rng = random.Random(derive_stream_seed(policy.global_seed, query_id))
    if rng.random() >= policy.probability:
        return query_text, None, False
    kind = sample_kind(rng)
    text, record = _inject_with_stream(
        query_id, query_text, kind, rng, policy.layout, policy.global_seed
    )
    return text, record, True


def typos_aware_transform(
    query_id: str, query_text: str, policy: AugmentPolicy
) -> tuple[str, PerturbationRecord | None]:
    """Perturb the query with ``policy.probability``, else return it verbatim.

    The coin flip, the kind draw, and the perturbation itself all derive
    from (global_seed, query_id): the same query under the same policy
    always meets the same fate.
    """
    text, record, _ = _transform(query_id, query_text, policy)
    return text, record


def augment_training_file(
    queries_in: str | Path,
    queries_out: str | Path,
    log_out: str | Path,
    policy: AugmentPolicy,
) -> AugmentStats:
    """Transform a query file, logging one JSON record per modified query.

    Output rows keep the input ids and order; stats are exact counts.
    """
    stats = AugmentStats()
    with open(queries_out, "w", encoding="utf-8") as out, open(
        log_out, "w", encoding="utf-8"
    ) as log:
        for query_id, text in iter_tsv_pairs(queries_in):
            new_text, record, coin_perturb = _transform(query_id, text, policy)
            out.write(f"{query_id}\t{new_text}\n")
            stats.total += 1
            if record is not None:
                stats.modified += 1
                stats.per_kind[record.kind] = stats.per_kind.get(record.kind, 0) + 1
                log.write(json.dumps(record.to_json_dict(), ensure_ascii=False) + "\n")
            elif coin_perturb:
                stats.unchanged_no_eligible += 1
    return stats


def make_typo_dev_sets(
    queries_in: str | Path,
    out_dir: str | Path,
    global_seed: int = 42,
    layout: KeyboardLayout | None = None,
) -> dict[TypoKind, Path]:
    """Write one query file per typo kind, perturbing every input query.

    Queries with no eligible keyword pass through unchanged and are
    counted in a sidecar JSON report next to the output files. Row order
    and ids are preserved.
    """
    if layout is None:
        layout = KeyboardLayout.qwerty()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    queries = read_tsv_pairs(queries_in)

    paths: dict[TypoKind, Path] = {}
    report: dict = {"total": len(queries), "kinds": {}}
    for kind in TypoKind:
        out_path = out_dir / f"queries.{kind.value}.tsv"
        unchanged = 0
        with open(out_path, "w", encoding="utf-8") as out:
            for query_id, text in queries:
                new_text, record = inject_typo(query_id, text, kind, global_seed, layout)
                if record is None:
                    unchanged += 1
                out.write(f"{query_id}\t{new_text}\n")
        paths[kind] = out_path
        report["kinds"][kind.value] = {
            "path": out_path.name,
            "modified": len(queries) - unchanged,
            "unchanged_no_eligible": unchanged,
        }

    with open(out_dir / DEVSET_REPORT_NAME, "w", encoding="utf-8") as handle:
        json.dump(report, handle, indent=2, sort_keys=True)
        handle.write("\n")
    return paths
