"""Exact-keyword BM25 retrieval over an inverted index.

Okapi BM25 with the non-negative Lucene idf variant,
``ln(1 + (N - df + 0.5) / (df + 0.5))``. Defaults k1=0.9, b=0.4 (the
common MS MARCO tuning). No stemming and no stopword removal, so term
mismatch is attributable purely to the tokens themselves.
"""

from __future__ import annotations

import json
import math
import re
import struct
from array import array
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataio import ParseError, read_tsv_pairs

DEFAULT_K1 = 0.9
DEFAULT_B = 0.4

_INDEX_MAGIC = b"BMIX"
_INDEX_VERSION = 1

# Maximal runs of alphanumeric characters (underscore excluded), lowercased.
_TERM_RE = re.compile(r"[^\W_]+", re.UNICODE)


def analyze(text: str) -> list[str]:
    """Lowercase and split on every non-alphanumeric character."""
    return _TERM_RE.findall(text.lower())


@dataclass(frozen=True)
class ScoredDoc:
    doc_id: str
    score: float


class Bm25Index:
    """Inverted index with postings sorted by doc id.

    Documents are stored in ascending doc-id (string) order, so posting
    arrays ascending in internal index are also ascending in doc id and
    score ties break deterministically.
    """

    def __init__(
        self,
        doc_ids: list[str],
        doc_lengths: np.ndarray,
        postings: dict[str, tuple[np.ndarray, np.ndarray]],
        k1: float = DEFAULT_K1,
        b: float = DEFAULT_B,
    ):
        if len(doc_ids) == 0:
            raise ValueError("index must contain at least one document")
        self.doc_ids = doc_ids
        self.doc_lengths = doc_lengths
        self.k1 = float(k1)
        self.b = float(b)
        self._postings = postings
        self._doc_index = {doc_id: i for i, doc_id in enumerate(doc_ids)}

    @property
    def doc_count(self) -> int:
        return len(self.doc_ids)

    @property
    def avgdl(self) -> float:
        return float(self.doc_lengths.sum()) / self.doc_count

    @property
    def vocabulary(self) -> list[str]:
        return sorted(self._postings)

    def df(self, term: str) -> int:
        posting = self._postings.get(term)
        return 0 if posting is None else len(posting[0])

    def idf(self, term: str) -> float:
        df = self.df(term)
        n = self.doc_count
        return math.log(1.0 + (n - df + 0.5) / (df + 0.5))

    def postings(self, term: str) -> list[tuple[str, int]]:
        """Posting list as (doc_id, term_frequency), ascending doc_id."""
        posting = self._postings.get(term)
        if posting is None:
            return []
        docs, tfs = posting
        return [(self.doc_ids[i], int(tf)) for i, tf in zip(docs, tfs)]

    def doc_length(self, doc_id: str) -> int:
        return int(self.doc_lengths[self._doc_index[doc_id]])

    def _tf(self, term: str, doc_idx: int) -> int:
        posting = self._postings.get(term)
        if posting is None:
            return 0
        docs, tfs = posting
        pos = np.searchsorted(docs, doc_idx)
        if pos < len(docs) and docs[pos] == doc_idx:
            return int(tfs[pos])
        return 0

    def score(self, query_terms: list[str], doc_id: str) -> float:
        """BM25 score of one document for the given term sequence.

        Duplicate query terms contribute once per occurrence.
        """
        if doc_id not in self._doc_index:
            raise ValueError(f"unknown doc_id {doc_id!r}")
        doc_idx = self._doc_index[doc_id]
        dl = float(self.doc_lengths[doc_idx])
        norm = self.k1 * (1.0 - self.b + self.b * dl / self.avgdl)
        total = 0.0
        for term in query_terms:
            tf = self._tf(term, doc_idx)
            if tf == 0:
                continue
            total += self.idf(term) * tf * (self.k1 + 1.0) / (tf + norm)
        return total

    def search(self, query_text: str, k: int) -> list[ScoredDoc]:
        """Top-k matching documents, score descending, doc_id ascending on ties.

        Only documents containing at least one query term are candidates.
        """
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        terms = analyze(query_text)
        n = self.doc_count
        scores = np.zeros(n)
        matched = np.zeros(n, dtype=bool)
        k1, b, avgdl = self.k1, self.b, self.avgdl
        for term in terms:
            posting = self._postings.get(term)
            if posting is None:
                continue
            docs, tfs = posting
            tfs = tfs.astype(np.float64)
            weight = (
                self.idf(term)
                * tfs
                * (k1 + 1.0)
                / (tfs + k1 * (1.0 - b + b * self.doc_lengths[docs] / avgdl))
            )
            scores[docs] += weight
            matched[docs] = True
        candidates = np.flatnonzero(matched)
        if len(candidates) == 0:
            return []
        # lexsort: primary score descending, secondary doc index ascending
        order = np.lexsort((candidates, -scores[candidates]))[:k]
        picked = candidates[order]
        return [ScoredDoc(self.doc_ids[i], float(scores[i])) for i in picked]

    def save(self, path: str | Path) -> None:
        """Serialize to the versioned binary index format."""
        terms = sorted(self._postings)
        meta = {
            "k1": self.k1,
            "b": self.b,
            "doc_ids": self.doc_ids,
            "doc_lengths": [int(x) for x in self.doc_lengths],
            "terms": [[t, int(len(self._postings[t][0]))] for t in terms],
        }
        meta_bytes = json.dumps(
            meta, sort_keys=True, ensure_ascii=False, separators=(",", ":")
        ).encode("utf-8")
        with open(path, "wb") as out:
            out.write(_INDEX_MAGIC)
            out.write(bytes([_INDEX_VERSION]))
            out.write(struct.pack("<Q", len(meta_bytes)))
            out.write(meta_bytes)
            for term in terms:
                docs, tfs = self._postings[term]
                out.write(docs.astype("<i4").tobytes())
                out.write(tfs.astype("<i4").tobytes())

    @classmethod
    def load(cls, path: str | Path) -> "Bm25Index":
        with open(path, "rb") as handle:
            magic = handle.read(4)
            if magic != _INDEX_MAGIC:
                raise ValueError(f"{path}: not a BM25 index file (bad magic {magic!r})")
            version = handle.read(1)
            if version != bytes([_INDEX_VERSION]):
                raise ValueError(
                    f"{path}: unsupported index format version {version!r}"
                )
            (meta_len,) = struct.unpack("<Q", handle.read(8))
            meta = json.loads(handle.read(meta_len).decode("utf-8"))
            postings = {}
            for term, count in meta["terms"]:
                docs = np.frombuffer(handle.read(4 * count), dtype="<i4").astype(np.int64)
                tfs = np.frombuffer(handle.read(4 * count), dtype="<i4").astype(np.int64)
                postings[term] = (docs, tfs)
        return cls(
            doc_ids=meta["doc_ids"],
            doc_lengths=np.asarray(meta["doc_lengths"], dtype=np.int64),
            postings=postings,
            k1=meta["k1"],
            b=meta["b"],
        )


def build_index(
    collection: str | Path, k1: float = DEFAULT_K1, b: float = DEFAULT_B
) -> Bm25Index:
    """Index a ``doc_id<TAB>text`` collection file.

    Duplicate doc ids and malformed rows raise :class:`ParseError` with
    the offending line number; an empty collection is an error.
    """
    doc_ids: list[str] = []
    doc_lengths = array("i")
    seen: dict[str, int] = {}
    acc_docs: dict[str, array] = {}
    acc_tfs: dict[str, array] = {}

    with open(collection, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, 1):
            line = line.rstrip("\n")
            parts = line.split("\t", 1)
            if len(parts) != 2 or not parts[0]:
                raise ParseError(collection, line_no, "expected 'doc_id<TAB>text'")
            doc_id, text = parts
            if doc_id in seen:
                raise ParseError(
                    collection,
                    line_no,
                    f"duplicate doc_id {doc_id!r} (first seen on line {seen[doc_id]})",
                )
            seen[doc_id] = line_no
            idx = len(doc_ids)
            doc_ids.append(doc_id)
            terms = analyze(text)
            doc_lengths.append(len(terms))
            counts: dict[str, int] = {}
            for term in terms:
                counts[term] = counts.get(term, 0) + 1
            for term, tf in counts.items():
                acc_docs.setdefault(term, array("i")).append(idx)
                acc_tfs.setdefault(term, array("i")).append(tf)

    if not doc_ids:
        raise ValueError(f"{collection}: collection is empty")

    # Reassign internal indices so ascending index == ascending doc_id.
    order = sorted(range(len(doc_ids)), key=doc_ids.__getitem__)
    rank = np.empty(len(doc_ids), dtype=np.int64)
    rank[order] = np.arange(len(doc_ids))
    sorted_ids = [doc_ids[i] for i in order]
    lengths = np.asarray(doc_lengths, dtype=np.int64)[order]

    postings: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    for term in acc_docs:
        docs = rank[np.frombuffer(acc_docs[term], dtype=np.intc)]
        tfs = np.frombuffer(acc_tfs[term], dtype=np.intc).astype(np.int64)
        perm = np.argsort(docs)
        postings[term] = (docs[perm], tfs[perm])

    return Bm25Index(sorted_ids, lengths, postings, k1=k1, b=b)


def batch_search(
    index: Bm25Index,
    queries: str | Path,
    k: int,
    out: str | Path,
    tag: str = "typokit",
    threads: int = 1,
) -> int:
    """Search every query and write a TREC run file.

    Rows are ``qid Q0 doc_id rank score tag``; output order follows input
    query order regardless of thread count. Returns the number of queries
    processed.
    """
    rows = read_tsv_pairs(queries)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda row: index.search(row[1], k), rows))
    else:
        results = [index.search(text, k) for _, text in rows]

    with open(out, "w", encoding="utf-8") as handle:
        for (query_id, _), hits in zip(rows, results):
            for rank, hit in enumerate(hits, 1):
                handle.write(
                    f"{query_id} Q0 {hit.doc_id} {rank} {hit.score:.6f} {tag}\n"
                )
    return len(rows)
