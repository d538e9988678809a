"""Template library retrieval: a BM25 more-like-this index.

Query terms are picked from the input document by tf-idf and the library
is ranked by BM25 over those terms. Terms are lowercased tokenizer
outputs with a fixed stopword list removed; there is no stemming. All
statistics update in place on index and remove, so retrieval needs no
retraining step when the library grows.
"""

from __future__ import annotations

import json
import math
import re
import threading
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .core import SlcError, tokenize

# Fixed 50-word stopword list, applied before query term selection and
# at indexing time. Includes the modal verbs that saturate contract text.
STOPWORDS = frozenset(
    """
    a an and are as at be been but by for from had has have he her his
    i if in into is it its may no not of on or our shall she that the
    their them they this to upon was we were which will with would you
    """.split()
)

K1 = 1.2
B = 0.75
MAX_QUERY_TERMS = 25
MIN_TERM_FREQ = 1
MIN_DOC_FREQ = 1


class DuplicateId(SlcError):
    code = "DUPLICATE_ID"


class UnknownId(SlcError):
    code = "UNKNOWN_TEMPLATE"


class EmptyIndex(SlcError):
    code = "EMPTY_INDEX"


class LibraryError(SlcError):
    code = "LIBRARY_LAYOUT"


@dataclass(frozen=True)
class TemplateRecord:
    """One library entry: the raw sample plus its paired artifacts."""

    id: str
    name: str
    sample_text: str
    cicero_text: str
    concerto_text: str
    metadata: dict = field(default_factory=dict)


@dataclass
class IndexStats:
    doc_count: int
    doc_frequencies: dict[str, int]
    avg_doc_len: float
    postings: dict[str, dict[str, int]]


def index_terms(text: str) -> list[str]:
    return [
        t.surface.lower() for t in tokenize(text) if t.surface.lower() not in STOPWORDS
    ]


class TemplateIndex:
    """In-memory inverted index over template sample texts.

    Reads and writes share one lock: queries never observe a partially
    applied mutation, and a remove exactly undoes the matching index call.
    """

    def __init__(
        self,
        k1: float = K1,
        b: float = B,
        max_terms: int = MAX_QUERY_TERMS,
        min_term_freq: int = MIN_TERM_FREQ,
        min_doc_freq: int = MIN_DOC_FREQ,
    ) -> None:
        self.k1 = k1
        self.b = b
        self.max_terms = max_terms
        self.min_term_freq = min_term_freq
        self.min_doc_freq = min_doc_freq
        self._lock = threading.RLock()
        self._records: dict[str, TemplateRecord] = {}
        self._postings: dict[str, dict[str, int]] = {}
        self._doc_len: dict[str, int] = {}

    def __len__(self) -> int:
        with self._lock:
            return len(self._records)

    def __contains__(self, template_id: str) -> bool:
        with self._lock:
            return template_id in self._records

    def record(self, template_id: str) -> TemplateRecord:
        with self._lock:
            try:
                return self._records[template_id]
            except KeyError:
                raise UnknownId(
                    f"no template with id: {template_id}", template_id=template_id
                ) from None

    def records(self) -> list[TemplateRecord]:
        with self._lock:
            return [self._records[i] for i in sorted(self._records)]

    def index(self, record: TemplateRecord, reindex: bool = False) -> None:
        with self._lock:
            if record.id in self._records:
                if not reindex:
                    raise DuplicateId(
                        f"template already indexed: {record.id}", template_id=record.id
                    )
                self.remove(record.id)
            counts = Counter(index_terms(record.sample_text))
            self._records[record.id] = record
            self._doc_len[record.id] = sum(counts.values())
            for term, tf in counts.items():
                self._postings.setdefault(term, {})[record.id] = tf

    def remove(self, template_id: str) -> None:
        with self._lock:
            if template_id not in self._records:
                raise UnknownId(
                    f"no template with id: {template_id}", template_id=template_id
                )
            del self._records[template_id]
            del self._doc_len[template_id]
            for term in [t for t, docs in self._postings.items() if template_id in docs]:
                docs = self._postings[term]
                del docs[template_id]
                if not docs:
                    del self._postings[term]

    def stats(self) -> IndexStats:
        with self._lock:
            n = len(self._records)
            return IndexStats(
                doc_count=n,
                doc_frequencies={t: len(d) for t, d in sorted(self._postings.items())},
                avg_doc_len=sum(self._doc_len.values()) / n if n else 0.0,
                postings={t: dict(d) for t, d in sorted(self._postings.items())},
            )

    def idf(self, term: str) -> float:
        with self._lock:
            n = len(self._records)
            df = len(self._postings.get(term, ()))
            return math.log(1.0 + (n - df + 0.5) / (df + 0.5))

    def select_query_terms(
        self, text: str, max_terms: int | None = None
    ) -> list[tuple[str, float]]:
        """Rank candidate query terms by tf-idf against the current index.

        Terms absent from the index keep their (maximal) idf and may still
        be selected; they simply contribute nothing to document scores.
        The min_doc_freq floor only prunes terms the index has seen.
        """
        limit = self.max_terms if max_terms is None else max_terms
        with self._lock:
            if not self._records:
                raise EmptyIndex("cannot select query terms against an empty index")
            scored: list[tuple[str, float]] = []
            for term, tf in Counter(index_terms(text)).items():
                if tf < self.min_term_freq:
                    continue
                df = len(self._postings.get(term, ()))
                if 0 < df < self.min_doc_freq:
                    continue
                scored.append((term, tf * self.idf(term)))
            scored.sort(key=lambda pair: (-pair[1], pair[0]))
            return scored[:limit]

    def more_like_this(
        self, text: str, top_n: int = 10
    ) -> list[tuple[TemplateRecord, float]]:
        """Rank the library against a query document.

        Score(d) = sum over selected query terms t of
            idf(t) * tf(t,d)*(k1+1) / (tf(t,d) + k1*(1 - b + b*|d|/avgdl))

        Zero-score entries are dropped; ties break by ascending id.
        """
        if top_n < 0:
            raise ValueError("top_n must be >= 0")
        with self._lock:
            if not self._records:
                raise EmptyIndex("no templates indexed")
            avgdl = sum(self._doc_len.values()) / len(self._records)
            scores: dict[str, float] = {}
            for term, _ in self.select_query_terms(text):
                idf = self.idf(term)
                for doc_id, tf in self._postings.get(term, {}).items():
                    norm = self.k1 * (1.0 - self.b + self.b * self._doc_len[doc_id] / avgdl)
                    scores[doc_id] = scores.get(doc_id, 0.0) + idf * (
                        tf * (self.k1 + 1.0) / (tf + norm)
                    )
            ranked = sorted(
                ((doc_id, s) for doc_id, s in scores.items() if s > 0.0),
                key=lambda pair: (-pair[1], pair[0]),
            )
            return [(self._records[doc_id], s) for doc_id, s in ranked[:top_n]]


# Library directory layout: one subdirectory per template holding
# sample.txt, template.cicero, model.cto and metadata.json.

_LIBRARY_FILES = ("sample.txt", "template.cicero", "model.cto", "metadata.json")


def load_library(path: str | Path) -> list[TemplateRecord]:
    root = Path(path)
    if not root.is_dir():
        raise LibraryError(f"not a directory: {root}", path=str(root))
    records: list[TemplateRecord] = []
    for sub in sorted(p for p in root.iterdir() if p.is_dir()):
        for name in _LIBRARY_FILES:
            if not (sub / name).is_file():
                raise LibraryError(
                    f"template directory {sub.name!r} is missing {name}",
                    path=str(sub),
                )
        try:
            meta = json.loads((sub / "metadata.json").read_text(encoding="utf-8"))
        except ValueError as exc:
            raise LibraryError(
                f"malformed metadata.json in {sub.name!r}: {exc}", path=str(sub)
            ) from exc
        if not isinstance(meta, dict) or "id" not in meta or "name" not in meta:
            raise LibraryError(
                f"metadata.json in {sub.name!r} needs 'id' and 'name'", path=str(sub)
            )
        records.append(
            TemplateRecord(
                id=str(meta["id"]),
                name=str(meta["name"]),
                sample_text=(sub / "sample.txt").read_text(encoding="utf-8"),
                cicero_text=(sub / "template.cicero").read_text(encoding="utf-8"),
                concerto_text=(sub / "model.cto").read_text(encoding="utf-8"),
                metadata=dict(meta.get("metadata", {})),
            )
        )
    return records


def write_record(path: str | Path, record: TemplateRecord) -> Path:
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    dirname = re.sub(r"[^A-Za-z0-9_-]", "-", record.id)
    sub = root / dirname
    sub.mkdir(exist_ok=True)
    (sub / "sample.txt").write_text(record.sample_text, encoding="utf-8")
    (sub / "template.cicero").write_text(record.cicero_text, encoding="utf-8")
    (sub / "model.cto").write_text(record.concerto_text, encoding="utf-8")
    (sub / "metadata.json").write_text(
        json.dumps(
            {"id": record.id, "name": record.name, "metadata": record.metadata},
            indent=2,
            sort_keys=True,
        )
        + "\n",
        encoding="utf-8",
    )
    return sub


def build_index(library_dir: str | Path) -> TemplateIndex:
    index = TemplateIndex()
    for record in load_library(library_dir):
        index.index(record)
    return index
