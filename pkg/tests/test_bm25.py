import math
import random

import pytest

from typokit import Bm25Index, ParseError, analyze, batch_search, build_index

from oracles import bf_bm25_score, bf_bm25_search, bf_tokenize

VOCAB = [
    "apple", "banana", "cherry", "dog", "cat", "fish", "tree", "river",
    "mountain", "cloud", "rain", "sun", "moon", "star", "book", "paper",
    "stone", "glass", "metal", "wood", "fire", "ice", "wind", "sand",
    "grass", "bird", "horse", "train", "plane", "ship",
]


def synth_corpus(rng: random.Random, n_docs: int) -> dict[str, str]:
    # skewed term draws so documents share vocabulary and tie often
    weights = [1.0 / (i + 1) for i in range(len(VOCAB))]
    docs = {}
    for i in rng.sample(range(n_docs * 3), n_docs):
        length = rng.randint(4, 14)
        docs[f"d{i}"] = " ".join(rng.choices(VOCAB, weights=weights, k=length))
    return docs


def write_collection(tmp_path, docs: dict[str, str], name="coll.tsv"):
    path = tmp_path / name
    path.write_text(
        "".join(f"{d}\t{t}\n" for d, t in docs.items()), encoding="utf-8"
    )
    return path


class TestAnalyze:
    def test_basic(self):
        assert analyze("Hello, World!") == ["hello", "world"]
        assert analyze("a_b") == ["a", "b"]
        assert analyze("café 42-x") == ["café", "42", "x"]
        assert analyze("") == []

    def test_matches_character_scan(self):
        rng = random.Random(0)
        for _ in range(50):
            text = " ".join(
                rng.choice(VOCAB) + rng.choice(["", ",", "!", "-x", "_1"])
                for _ in range(rng.randint(1, 8))
            )
            assert analyze(text) == bf_tokenize(text)


class TestScoring:
    def test_single_doc_single_term(self, tmp_path):
        path = write_collection(tmp_path, {"d1": "hello"})
        index = build_index(path)
        # N=1, df=1, tf=1, dl=avgdl: the length norm cancels and the
        # score reduces to idf = ln(4/3)
        assert index.score(["hello"], "d1") == pytest.approx(
            math.log(4.0 / 3.0), abs=1e-15
        )

    def test_matches_bruteforce(self, tmp_path):
        rng = random.Random(20240615)
        docs = synth_corpus(rng, 100)
        index = build_index(write_collection(tmp_path, docs))
        for _ in range(20):
            query = " ".join(rng.choices(VOCAB, k=rng.randint(1, 4)))
            expected = bf_bm25_search(docs, query, 10)
            got = index.search(query, 10)
            assert [h.doc_id for h in got] == [d for d, _ in expected]
            for hit, (_, score) in zip(got, expected):
                assert hit.score == pytest.approx(score, abs=1e-9)

    def test_score_matches_bruteforce_pairs(self, tmp_path):
        rng = random.Random(4)
        docs = synth_corpus(rng, 40)
        index = build_index(write_collection(tmp_path, docs))
        ids = sorted(docs)
        for _ in range(25):
            doc_id = rng.choice(ids)
            terms = rng.choices(VOCAB, k=rng.randint(1, 3))
            assert index.score(terms, doc_id) == pytest.approx(
                bf_bm25_score(docs, terms, doc_id), abs=1e-12
            )

    def test_duplicate_query_terms_add_up(self, tmp_path):
        index = build_index(
            write_collection(tmp_path, {"d1": "apple banana", "d2": "cherry"})
        )
        once = index.score(["apple"], "d1")
        assert index.score(["apple", "apple"], "d1") == pytest.approx(2 * once)

    def test_b_zero_ignores_doc_length(self, tmp_path):
        docs = {"d1": "apple", "d2": "apple " + " ".join(["cherry"] * 20)}
        index = build_index(write_collection(tmp_path, docs), b=0.0)
        assert index.score(["apple"], "d1") == pytest.approx(
            index.score(["apple"], "d2")
        )

    def test_idf_monotone_decreasing_in_df(self, tmp_path):
        docs = {
            "d1": "rare mid common",
            "d2": "mid common",
            "d3": "common",
            "d4": "filler",
        }
        index = build_index(write_collection(tmp_path, docs))
        assert index.df("rare") == 1 and index.df("mid") == 2 and index.df("common") == 3
        assert index.idf("rare") > index.idf("mid") > index.idf("common") > 0
        assert index.idf("missing") > index.idf("rare")

    def test_tf_monotone(self, tmp_path):
        # equal lengths, increasing tf of "apple"
        docs = {
            "d1": "apple wood sand ice",
            "d2": "apple apple sand ice",
            "d3": "apple apple apple ice",
        }
        index = build_index(write_collection(tmp_path, docs))
        scores = [index.score(["apple"], d) for d in ("d1", "d2", "d3")]
        assert scores[0] < scores[1] < scores[2]

    def test_unknown_doc_rejected(self, tmp_path):
        index = build_index(write_collection(tmp_path, {"d1": "apple"}))
        with pytest.raises(ValueError):
            index.score(["apple"], "nope")


class TestSearch:
    def test_tie_break_by_doc_id_string(self, tmp_path):
        docs = {"d10": "apple", "d2": "apple", "d1": "apple"}
        index = build_index(write_collection(tmp_path, docs))
        hits = index.search("apple", 10)
        assert [h.doc_id for h in hits] == ["d1", "d10", "d2"]
        assert hits[0].score == hits[1].score == hits[2].score

    def test_no_shared_terms_empty(self, tmp_path):
        index = build_index(write_collection(tmp_path, {"d1": "apple"}))
        assert index.search("zzz qqq", 5) == []
        assert index.search("", 5) == []

    def test_k_larger_than_matches(self, tmp_path):
        docs = {"d1": "apple", "d2": "apple", "d3": "cherry"}
        index = build_index(write_collection(tmp_path, docs))
        assert len(index.search("apple", 1000)) == 2

    def test_k_validated(self, tmp_path):
        index = build_index(write_collection(tmp_path, {"d1": "apple"}))
        with pytest.raises(ValueError):
            index.search("apple", 0)


class TestBuildErrors:
    def test_empty_collection(self, tmp_path):
        path = tmp_path / "empty.tsv"
        path.write_text("")
        with pytest.raises(ValueError, match="empty"):
            build_index(path)

    def test_duplicate_doc_id_names_line(self, tmp_path):
        path = tmp_path / "dup.tsv"
        path.write_text("d1\tapple\nd2\tcherry\nd1\tbanana\n")
        with pytest.raises(ParseError, match=r"dup\.tsv:3.*d1"):
            build_index(path)

    def test_malformed_row_names_line(self, tmp_path):
        path = tmp_path / "bad.tsv"
        path.write_text("d1\tapple\njust-one-field\n")
        with pytest.raises(ParseError, match=r"bad\.tsv:2"):
            build_index(path)


class TestPersistence:
    def test_round_trip_preserves_results(self, tmp_path):
        rng = random.Random(8)
        docs = synth_corpus(rng, 60)
        index = build_index(write_collection(tmp_path, docs), k1=1.1, b=0.3)
        saved = tmp_path / "index.bmix"
        index.save(saved)
        loaded = Bm25Index.load(saved)
        assert loaded.k1 == index.k1 and loaded.b == index.b
        assert loaded.doc_ids == index.doc_ids
        for _ in range(10):
            query = " ".join(rng.choices(VOCAB, k=2))
            assert [
                (h.doc_id, h.score) for h in loaded.search(query, 10)
            ] == [(h.doc_id, h.score) for h in index.search(query, 10)]

    def test_serialization_deterministic(self, tmp_path):
        docs = synth_corpus(random.Random(9), 30)
        path = write_collection(tmp_path, docs)
        a, b = tmp_path / "a.bmix", tmp_path / "b.bmix"
        build_index(path).save(a)
        build_index(path).save(b)
        assert a.read_bytes() == b.read_bytes()

    def test_rejects_non_index_file(self, tmp_path):
        junk = tmp_path / "junk.bin"
        junk.write_bytes(b"definitely not an index")
        with pytest.raises(ValueError, match="magic"):
            Bm25Index.load(junk)

    def test_rejects_unknown_version(self, tmp_path):
        docs = {"d1": "apple"}
        saved = tmp_path / "x.bmix"
        build_index(write_collection(tmp_path, docs)).save(saved)
        payload = bytearray(saved.read_bytes())
        payload[4] = 99
        saved.write_bytes(bytes(payload))
        with pytest.raises(ValueError, match="version"):
            Bm25Index.load(saved)


class TestBatchSearch:
    def queries(self, tmp_path, rows):
        path = tmp_path / "queries.tsv"
        path.write_text("".join(f"{q}\t{t}\n" for q, t in rows))
        return path

    def test_run_file_shape(self, tmp_path):
        docs = synth_corpus(random.Random(10), 50)
        index = build_index(write_collection(tmp_path, docs))
        queries = self.queries(
            tmp_path, [("q1", "apple banana"), ("q2", "zzz"), ("q3", "cherry")]
        )
        out = tmp_path / "run.trec"
        n = batch_search(index, queries, 10, out, tag="tagx")
        assert n == 3
        by_query: dict[str, list[tuple[int, float]]] = {}
        for line in out.read_text().splitlines():
            qid, q0, doc_id, rank, score, tag = line.split(" ")
            assert q0 == "Q0" and tag == "tagx"
            assert doc_id in docs
            by_query.setdefault(qid, []).append((int(rank), float(score)))
        assert "q2" not in by_query  # no matching docs, no rows
        for qid, rows in by_query.items():
            assert [r for r, _ in rows] == list(range(1, len(rows) + 1))
            scores = [s for _, s in rows]
            assert scores == sorted(scores, reverse=True)
            assert len(rows) <= 10

    def test_thread_count_does_not_change_output(self, tmp_path):
        docs = synth_corpus(random.Random(11), 50)
        index = build_index(write_collection(tmp_path, docs))
        rng = random.Random(12)
        queries = self.queries(
            tmp_path,
            [(f"q{i}", " ".join(rng.choices(VOCAB, k=3))) for i in range(20)],
        )
        single, multi = tmp_path / "one.run", tmp_path / "four.run"
        batch_search(index, queries, 10, single, threads=1)
        batch_search(index, queries, 10, multi, threads=4)
        assert single.read_bytes() == multi.read_bytes()
