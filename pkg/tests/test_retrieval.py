"""More-like-this retrieval, cross-checked against a brute-force scorer.

The oracle below recomputes tf-idf term selection and BM25 from the formulas
directly, with no inverted index, no postings, and no shared code paths
beyond the tokenizer and stopword list (which are data, not ranking logic).
"""

from __future__ import annotations

import math
import random
from collections import Counter

import pytest

from slcforge import (
    DuplicateId,
    EmptyIndex,
    TemplateIndex,
    TemplateRecord,
    UnknownId,
    index_terms,
    load_library,
)
from slcforge.retrieval import B as BM25_B
from slcforge.retrieval import K1 as BM25_K1
from slcforge.retrieval import MAX_QUERY_TERMS
from tests.conftest import LIBRARY_DIR


class BruteForceBM25:
    """Reference ranker: O(terms × docs) rescoring from first principles."""

    def __init__(self, docs: dict[str, str], k1: float = BM25_K1, b: float = BM25_B):
        self.k1 = k1
        self.b = b
        self.doc_terms = {doc_id: index_terms(text) for doc_id, text in docs.items()}

    def df(self, term: str) -> int:
        return sum(1 for terms in self.doc_terms.values() if term in terms)

    def idf(self, term: str) -> float:
        n = len(self.doc_terms)
        df = self.df(term)
        return math.log(1.0 + (n - df + 0.5) / (df + 0.5))

    def avgdl(self) -> float:
        if not self.doc_terms:
            return 0.0
        return sum(len(t) for t in self.doc_terms.values()) / len(self.doc_terms)

    def select_terms(self, text: str, max_terms: int = MAX_QUERY_TERMS) -> list[tuple[str, float]]:
        counts = Counter(index_terms(text))
        scored = [(term, tf * self.idf(term)) for term, tf in counts.items()]
        scored.sort(key=lambda pair: (-pair[1], pair[0]))
        return scored[:max_terms]

    def rank(self, text: str, top_n: int) -> list[tuple[str, float]]:
        query = [term for term, _ in self.select_terms(text)]
        avgdl = self.avgdl()
        results = []
        for doc_id, terms in self.doc_terms.items():
            counts = Counter(terms)
            score = 0.0
            for term in query:
                tf = counts.get(term, 0)
                if tf == 0:
                    continue
                norm = 1.0 - self.b + self.b * len(terms) / avgdl
                score += self.idf(term) * (tf * (self.k1 + 1.0)) / (tf + self.k1 * norm)
            if score > 0.0:
                results.append((doc_id, score))
        results.sort(key=lambda pair: (-pair[1], pair[0]))
        return results[:top_n]


def record(idx: str, text: str) -> TemplateRecord:
    return TemplateRecord(
        id=idx,
        name=f"record {idx}",
        sample_text=text,
        cicero_text=text,
        concerto_text="",
        metadata={},
    )


class TestIndexStats:
    def test_empty(self):
        index = TemplateIndex()
        stats = index.stats()
        assert stats.doc_count == 0
        assert stats.avg_doc_len == 0.0
        assert stats.doc_frequencies == {}

    def test_single_doc(self):
        index = TemplateIndex()
        index.index(record("a", "prompt delivery of goods"))
        stats = index.stats()
        assert stats.doc_count == 1
        assert stats.doc_frequencies == {"prompt": 1, "delivery": 1, "goods": 1}
        assert stats.avg_doc_len == 3.0  # "of" is a stopword

    def test_shared_term_counted_per_doc(self):
        index = TemplateIndex()
        index.index(record("a", "delivery today"))
        index.index(record("b", "delivery delivery tomorrow"))
        index.index(record("c", "late delivery"))
        stats = index.stats()
        assert stats.doc_frequencies["delivery"] == 3
        assert dict(stats.postings["delivery"]) == {"a": 1, "b": 2, "c": 1}
        assert stats.avg_doc_len == (2 + 3 + 2) / 3

    def test_df_equals_postings_length(self):
        index = TemplateIndex()
        index.index(record("a", "alpha beta"))
        index.index(record("b", "beta gamma"))
        stats = index.stats()
        for term, df in stats.doc_frequencies.items():
            assert df == len(stats.postings[term])

    def test_duplicate_id(self):
        index = TemplateIndex()
        index.index(record("a", "text one"))
        with pytest.raises(DuplicateId):
            index.index(record("a", "text two"))

    def test_reindex_replaces(self):
        index = TemplateIndex()
        index.index(record("a", "old words"))
        index.index(record("a", "new words"), reindex=True)
        assert "old" not in index.stats().doc_frequencies
        assert index.record("a").sample_text == "new words"

    def test_remove_unknown(self):
        index = TemplateIndex()
        with pytest.raises(UnknownId):
            index.remove("ghost")

    def test_remove_decrements_df(self):
        index = TemplateIndex()
        index.index(record("a", "shared term delivery"))
        index.index(record("b", "another delivery"))
        index.remove("a")
        assert index.stats().doc_frequencies["delivery"] == 1

    def test_remove_sole_doc_restores_empty(self):
        index = TemplateIndex()
        index.index(record("a", "only doc"))
        index.remove("a")
        stats = index.stats()
        assert stats.doc_count == 0 and stats.doc_frequencies == {} and stats.postings == {}

    def test_index_remove_is_exact_inverse(self):
        index = TemplateIndex()
        index.index(record("a", "delivery of goods and payment"))
        index.index(record("b", "acceptance after inspection"))
        before = index.stats()
        index.index(record("c", "penalty for late delivery applies"))
        index.remove("c")
        after = index.stats()
        assert after.doc_count == before.doc_count
        assert after.doc_frequencies == before.doc_frequencies
        assert after.postings == before.postings
        assert after.avg_doc_len == before.avg_doc_len  # exact: lengths are ints


class TestQueryTermSelection:
    def test_empty_index_raises(self):
        with pytest.raises(EmptyIndex):
            TemplateIndex().select_query_terms("anything")

    def test_max_terms_zero(self):
        index = TemplateIndex()
        index.index(record("a", "something indexed"))
        assert index.select_query_terms("anything", max_terms=0) == []

    def test_unseen_term_idf_is_ln4_on_single_doc(self):
        # df=0, N=1: idf = ln(1 + 1.5/0.5) = ln 4
        index = TemplateIndex()
        index.index(record("a", "delivery of goods"))
        terms = dict(index.select_query_terms("zeppelin"))
        assert terms["zeppelin"] == pytest.approx(math.log(4.0), abs=0.0)

    def test_terms_in_every_doc_rank_by_tf(self):
        # every query term in both docs: idf constant ln(1 + 0.5/(N+0.5)), order by tf
        index = TemplateIndex()
        index.index(record("a", "alpha beta gamma"))
        index.index(record("b", "alpha beta gamma"))
        selected = index.select_query_terms("beta beta beta alpha alpha gamma")
        idf = math.log(1.0 + 0.5 / 2.5)
        assert selected == [
            ("beta", pytest.approx(3 * idf, abs=0.0)),
            ("alpha", pytest.approx(2 * idf, abs=0.0)),
            ("gamma", pytest.approx(1 * idf, abs=0.0)),
        ]

    def test_stopwords_never_selected(self):
        index = TemplateIndex()
        index.index(record("a", "delivery shall be prompt"))
        terms = [t for t, _ in index.select_query_terms("the goods shall be of quality")]
        assert "shall" not in terms and "the" not in terms and "of" not in terms

    def test_truncates_to_max_terms(self):
        index = TemplateIndex()
        index.index(record("a", "word"))
        text = " ".join(f"term{i}" for i in range(40))
        assert len(index.select_query_terms(text)) == MAX_QUERY_TERMS
        assert len(index.select_query_terms(text, max_terms=7)) == 7

    def test_matches_oracle_scores(self):
        docs = {
            "a": "delivery of goods upon acceptance",
            "b": "late delivery incurs a penalty fee",
            "c": "payment terms and delivery schedule",
        }
        index = TemplateIndex()
        for doc_id, text in docs.items():
            index.index(record(doc_id, text))
        oracle = BruteForceBM25(docs)
        query = "penalty for late delivery of the goods"
        got = index.select_query_terms(query)
        want = oracle.select_terms(query)
        assert [t for t, _ in got] == [t for t, _ in want]
        for (_, g), (_, w) in zip(got, want):
            assert g == pytest.approx(w, abs=1e-12)


class TestMoreLikeThis:
    def test_empty_index_raises(self):
        with pytest.raises(EmptyIndex):
            TemplateIndex().more_like_this("anything")

    def test_no_shared_terms_returns_empty(self):
        index = TemplateIndex()
        index.index(record("a", "delivery of goods"))
        assert index.more_like_this("zeppelin armada") == []

    def test_three_doc_ranking_matches_oracle(self):
        docs = {
            "a": "the shipper delivers the goods and the receiver inspects them",
            "b": "payment is due upon delivery of the goods to the buyer",
            "c": "a penalty applies for every late delivery beyond the grace period",
        }
        index = TemplateIndex()
        for doc_id, text in docs.items():
            index.index(record(doc_id, text))
        oracle = BruteForceBM25(docs)
        query = "the buyer pays upon delivery of goods"
        got = index.more_like_this(query, top_n=10)
        want = oracle.rank(query, top_n=10)
        assert [r.id for r, _ in got] == [doc_id for doc_id, _ in want]
        for (_, g), (_, w) in zip(got, want):
            assert g == pytest.approx(w, abs=1e-9)

    def test_ties_break_by_ascending_id(self):
        index = TemplateIndex()
        index.index(record("b", "identical text here"))
        index.index(record("a", "identical text here"))
        got = index.more_like_this("identical text here")
        assert [r.id for r, _ in got] == ["a", "b"]
        assert got[0][1] == got[1][1]

    def test_top_n_limits(self):
        index = TemplateIndex()
        for i in range(5):
            index.index(record(f"d{i}", "common phrase delivery"))
        assert len(index.more_like_this("delivery", top_n=2)) == 2

    def test_self_retrieval_on_library(self):
        index = TemplateIndex()
        for rec in load_library(LIBRARY_DIR):
            index.index(rec)
        for rec in index.records():
            ranked = index.more_like_this(rec.sample_text)
            assert ranked[0][0].id == rec.id


def _random_corpus(rng: random.Random) -> dict[str, str]:
    """Synthetic corpora: per-doc unique terms plus a shared pool."""
    shared_pool = [f"shared{i}" for i in range(12)]
    n_docs = rng.randint(1, 20)
    docs = {}
    for d in range(n_docs):
        words = []
        for u in range(rng.randint(3, 8)):
            words += [f"doc{d}uniq{u}"] * rng.randint(1, 3)
        for term in rng.sample(shared_pool, rng.randint(0, 10)):
            words += [term] * rng.randint(1, 2)
        rng.shuffle(words)
        docs[f"doc{d:02d}"] = " ".join(words)
    return docs


class TestOracleEquivalence:
    def test_random_corpora_match_oracle(self):
        rng = random.Random(20240817)
        for trial in range(60):
            docs = _random_corpus(rng)
            index = TemplateIndex()
            for doc_id, text in docs.items():
                index.index(record(doc_id, text))
            oracle = BruteForceBM25(docs)
            queries = [docs[rng.choice(sorted(docs))] for _ in range(2)]
            # a mixed query: words drawn across docs plus terms the index has never seen
            all_words = " ".join(docs.values()).split()
            mixed = rng.sample(all_words, min(len(all_words), rng.randint(3, 15)))
            mixed += [f"unseen{i}" for i in range(rng.randint(0, 3))]
            rng.shuffle(mixed)
            queries.append(" ".join(mixed))
            for query in queries:
                got = index.more_like_this(query, top_n=20)
                want = oracle.rank(query, top_n=20)
                assert [r.id for r, _ in got] == [doc_id for doc_id, _ in want], (
                    f"trial {trial}: ranking diverged for query {query!r}"
                )
                for (_, g), (_, w) in zip(got, want):
                    assert g == pytest.approx(w, abs=1e-9)

    def test_random_corpora_self_retrieval(self):
        rng = random.Random(99)
        for _ in range(20):
            docs = _random_corpus(rng)
            index = TemplateIndex()
            for doc_id, text in docs.items():
                index.index(record(doc_id, text))
            for doc_id, text in docs.items():
                assert index.more_like_this(text)[0][0].id == doc_id

    def test_random_index_remove_inverse(self):
        rng = random.Random(7)
        for _ in range(20):
            docs = _random_corpus(rng)
            index = TemplateIndex()
            for doc_id, text in docs.items():
                index.index(record(doc_id, text))
            before = index.stats()
            extra_id = "zz-extra"
            index.index(record(extra_id, _random_corpus(rng)[f"doc00"]))
            index.remove(extra_id)
            after = index.stats()
            assert after.doc_count == before.doc_count
            assert after.doc_frequencies == before.doc_frequencies
            assert after.postings == before.postings
            assert after.avg_doc_len == before.avg_doc_len
