"""HTTP service wrapping the library.

Lets long-lived clients (training data loaders, the TypeScript bindings)
call the typo and retrieval operations without shelling out. File
arguments are paths on the server's filesystem; indexes built or loaded
are held in memory and addressed by an index id.
"""

from __future__ import annotations

import threading
from pathlib import Path
from typing import Optional

from fastapi import FastAPI
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import __version__
from .augment import (
    DEVSET_REPORT_NAME,
    AugmentPolicy,
    augment_training_file,
    make_typo_dev_sets,
    typos_aware_transform,
)
from .bm25 import DEFAULT_B, DEFAULT_K1, Bm25Index, batch_search, build_index
from .evaluation import (
    evaluate_run,
    parse_qrels,
    parse_run,
    rank_loss,
    table_report,
)
from .typo_gen import KIND_NAMES, TypoKind, inject_typo


class QueryIn(BaseModel):
    query_id: str
    query_text: str


class InjectRequest(QueryIn):
    kind: str
    seed: int = 42


class TransformRequest(QueryIn):
    probability: float = 0.5
    seed: int = 42


class RecordModel(BaseModel):
    qid: str
    kind: str
    word_index: int
    original_word: str
    perturbed_word: str
    seed: int


class TransformResponse(BaseModel):
    query_id: str
    query_text: str
    modified: bool
    record: Optional[RecordModel] = None


class BatchTransformRequest(BaseModel):
    queries: list[QueryIn]
    probability: float = 0.5
    seed: int = 42


class BatchTransformResponse(BaseModel):
    results: list[TransformResponse]


class AugmentFileRequest(BaseModel):
    queries_in: str
    queries_out: str
    log_out: str
    probability: float = 0.5
    seed: int = 42


class StatsResponse(BaseModel):
    total: int
    modified: int
    unchanged_no_eligible: int
    per_kind: dict[str, int]


class DevsetsRequest(BaseModel):
    queries_in: str
    out_dir: str
    seed: int = 42


class DevsetsResponse(BaseModel):
    out_dir: str
    files: dict[str, str]
    report: str


class IndexBuildRequest(BaseModel):
    collection: str
    out_index: Optional[str] = None
    k1: float = DEFAULT_K1
    b: float = DEFAULT_B


class IndexLoadRequest(BaseModel):
    path: str


class IndexInfo(BaseModel):
    index_id: str
    doc_count: int
    avgdl: float


class SearchRequest(BaseModel):
    index_id: str
    query_text: str
    k: int = 10


class Hit(BaseModel):
    doc_id: str
    score: float


class SearchResponse(BaseModel):
    hits: list[Hit]


class BatchSearchRequest(BaseModel):
    index_id: str
    queries: str
    out_run: str
    k: int = 1000
    tag: str = "typokit"
    threads: int = 1


class BatchSearchResponse(BaseModel):
    num_queries: int
    out_run: str


class EvalRequest(BaseModel):
    run: str
    qrels: str
    k_mrr: int = 10
    k_recall: int = 1000


class EvalResponse(BaseModel):
    k_mrr: int
    k_recall: int
    num_queries: int
    aggregate: dict[str, float]
    per_query: dict[str, dict[str, float]]


class CompareRequest(BaseModel):
    qrels: str
    baseline_run: str
    variant_runs: list[str]
    labels: Optional[list[str]] = None
    m: Optional[int] = None
    alpha: float = 0.01
    k_mrr: int = 10
    k_recall: int = 1000


class CompareResponse(BaseModel):
    text: str
    report: dict


class RankLossRequest(BaseModel):
    run_original: str
    run_typo: str
    qrels: str
    cutoff: int = 1000
    include_unretrieved: bool = True
    out_csv: Optional[str] = None


class RankLossResponse(BaseModel):
    cutoff: int
    losses: list[tuple[str, int]]
    out_csv: Optional[str] = None


class _NotFound(LookupError):
    pass


def _transform_one(query: QueryIn, policy: AugmentPolicy) -> TransformResponse:
    text, record = typos_aware_transform(query.query_id, query.query_text, policy)
    return TransformResponse(
        query_id=query.query_id,
        query_text=text,
        modified=record is not None,
        record=RecordModel(**record.to_json_dict()) if record else None,
    )


def create_app() -> FastAPI:
    app = FastAPI(title="typokit", version=__version__)
    indexes: dict[str, Bm25Index] = {}
    lock = threading.Lock()

    def register(index: Bm25Index) -> IndexInfo:
        with lock:
            index_id = f"idx-{len(indexes) + 1}"
            indexes[index_id] = index
        return IndexInfo(
            index_id=index_id, doc_count=index.doc_count, avgdl=index.avgdl
        )

    def resolve(index_id: str) -> Bm25Index:
        index = indexes.get(index_id)
        if index is None:
            raise _NotFound(f"unknown index_id {index_id!r}")
        return index

    @app.exception_handler(ValueError)
    async def _on_value_error(request, exc):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(_NotFound)
    async def _on_not_found(request, exc):
        return JSONResponse(status_code=404, content={"detail": str(exc)})

    @app.exception_handler(FileNotFoundError)
    async def _on_missing_file(request, exc):
        return JSONResponse(status_code=404, content={"detail": str(exc)})

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.get("/version")
    def version() -> dict:
        return {"name": "typokit", "version": __version__}

    @app.get("/kinds")
    def kinds() -> dict:
        return {"kinds": list(KIND_NAMES)}

    @app.post("/typo/inject", response_model=TransformResponse)
    def typo_inject(req: InjectRequest) -> TransformResponse:
        kind = TypoKind.from_name(req.kind)
        text, record = inject_typo(req.query_id, req.query_text, kind, req.seed)
        return TransformResponse(
            query_id=req.query_id,
            query_text=text,
            modified=record is not None,
            record=RecordModel(**record.to_json_dict()) if record else None,
        )

    @app.post("/typo/transform", response_model=TransformResponse)
    def typo_transform(req: TransformRequest) -> TransformResponse:
        policy = AugmentPolicy(probability=req.probability, global_seed=req.seed)
        return _transform_one(QueryIn(query_id=req.query_id, query_text=req.query_text), policy)

    @app.post("/typo/transform/batch", response_model=BatchTransformResponse)
    def typo_transform_batch(req: BatchTransformRequest) -> BatchTransformResponse:
        policy = AugmentPolicy(probability=req.probability, global_seed=req.seed)
        return BatchTransformResponse(
            results=[_transform_one(query, policy) for query in req.queries]
        )

    @app.post("/augment/file", response_model=StatsResponse)
    def augment_file(req: AugmentFileRequest) -> StatsResponse:
        policy = AugmentPolicy(probability=req.probability, global_seed=req.seed)
        stats = augment_training_file(
            req.queries_in, req.queries_out, req.log_out, policy
        )
        return StatsResponse(**stats.to_json_dict())

    @app.post("/devsets", response_model=DevsetsResponse)
    def devsets(req: DevsetsRequest) -> DevsetsResponse:
        paths = make_typo_dev_sets(req.queries_in, req.out_dir, global_seed=req.seed)
        return DevsetsResponse(
            out_dir=req.out_dir,
            files={kind.value: str(path) for kind, path in paths.items()},
            report=str(Path(req.out_dir) / DEVSET_REPORT_NAME),
        )

    @app.post("/index/build", response_model=IndexInfo)
    def index_build(req: IndexBuildRequest) -> IndexInfo:
        index = build_index(req.collection, k1=req.k1, b=req.b)
        if req.out_index:
            index.save(req.out_index)
        return register(index)

    @app.post("/index/load", response_model=IndexInfo)
    def index_load(req: IndexLoadRequest) -> IndexInfo:
        return register(Bm25Index.load(req.path))

    @app.post("/search", response_model=SearchResponse)
    def search(req: SearchRequest) -> SearchResponse:
        index = resolve(req.index_id)
        hits = index.search(req.query_text, req.k)
        return SearchResponse(
            hits=[Hit(doc_id=hit.doc_id, score=hit.score) for hit in hits]
        )

    @app.post("/search/batch", response_model=BatchSearchResponse)
    def search_batch(req: BatchSearchRequest) -> BatchSearchResponse:
        index = resolve(req.index_id)
        n = batch_search(
            index, req.queries, req.k, req.out_run, tag=req.tag, threads=req.threads
        )
        return BatchSearchResponse(num_queries=n, out_run=req.out_run)

    @app.post("/eval", response_model=EvalResponse)
    def eval_run(req: EvalRequest) -> EvalResponse:
        report = evaluate_run(
            parse_run(req.run),
            parse_qrels(req.qrels),
            k_mrr=req.k_mrr,
            k_recall=req.k_recall,
        )
        return EvalResponse(**report.to_json_dict())

    @app.post("/compare", response_model=CompareResponse)
    def compare_runs(req: CompareRequest) -> CompareResponse:
        qrels = parse_qrels(req.qrels)
        run_paths = [req.baseline_run, *req.variant_runs]
        if req.labels is not None:
            if len(req.labels) != len(run_paths):
                raise ValueError(
                    f"expected {len(run_paths)} labels, got {len(req.labels)}"
                )
            labels = req.labels
        else:
            stems = [Path(p).stem for p in run_paths]
            labels = stems if len(set(stems)) == len(stems) else run_paths
        results = {
            label: evaluate_run(
                parse_run(path), qrels, k_mrr=req.k_mrr, k_recall=req.k_recall
            )
            for label, path in zip(labels, run_paths)
        }
        text, twin = table_report(results, labels[0], m=req.m, alpha=req.alpha)
        return CompareResponse(text=text, report=twin)

    @app.post("/rankloss", response_model=RankLossResponse)
    def rankloss(req: RankLossRequest) -> RankLossResponse:
        series = rank_loss(
            parse_run(req.run_original),
            parse_run(req.run_typo),
            parse_qrels(req.qrels),
            cutoff=req.cutoff,
            include_unretrieved=req.include_unretrieved,
        )
        if req.out_csv:
            series.write_csv(req.out_csv)
        return RankLossResponse(
            cutoff=series.cutoff, losses=series.losses, out_csv=req.out_csv
        )

    return app
