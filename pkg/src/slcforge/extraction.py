"""Extractive question answering over contracts, one model field at a time.

Long documents are cut into overlapping token windows so any span
extractor with a bounded input still sees every potential answer; the
chunk answers are merged by confidence. The extractor itself is an
interface: the baseline here does exact phrase search, the remote client
in ``clients`` speaks to a served QA model.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Mapping, Protocol

from .concerto import ConcertoModel, DataInstance, FieldDecl, effective_fields
from .core import SlcError, SourceDocument

DEFAULT_WINDOW = 512
DEFAULT_STRIDE = 384


class InvalidStride(SlcError):
    code = "INVALID_STRIDE"


class MisalignedSpan(SlcError):
    code = "MISALIGNED_SPAN"


def human_field_name(field_name: str) -> str:
    """Human form of an identifier: costOfGoods / cost_of_goods -> 'cost of goods'."""
    spaced = field_name.replace("_", " ")
    spaced = re.sub(r"(?<=[a-z0-9])(?=[A-Z])", " ", spaced)
    return " ".join(spaced.lower().split())


_INTERROGATIVES = {
    "Party": "Who is the {}?",
    "DateTime": "When is the {}?",
    "TemporalUnit": "When is the {}?",
    "MonetaryAmount": "How much is the {}?",
}


@dataclass(frozen=True)
class Question:
    field_name: str
    text: str
    target_type: str

    def __post_init__(self) -> None:
        if not self.text.endswith("?"):
            raise ValueError("question text must end with '?'")
        if human_field_name(self.field_name) not in self.text.lower():
            raise ValueError("question text must mention the field")


def generate_question(field_name: str, target_type: str) -> Question:
    """Build the question asked for one model field.

    >>> generate_question("costOfGoods", "MonetaryAmount").text
    'How much is the cost of goods?'
    """
    pattern = _INTERROGATIVES.get(target_type, "What is the {}?")
    return Question(
        field_name=field_name,
        text=pattern.format(human_field_name(field_name)),
        target_type=target_type,
    )


@dataclass(frozen=True)
class Chunk:
    """A token window over the document, with its character extent.

    The first chunk starts at character 0 and the last ends at the end of
    the raw text, so a single-chunk document is passed to the extractor
    verbatim.
    """

    index: int
    token_start: int
    token_end: int
    char_start: int
    char_end: int


def chunk_document(
    document: SourceDocument,
    window: int = DEFAULT_WINDOW,
    stride: int = DEFAULT_STRIDE,
) -> list[Chunk]:
    """Overlapping token windows: chunk i covers [i*stride, i*stride+window).

    Generation stops at the first chunk whose end reaches the token count,
    so every token is covered and the chunk list is as short as possible.
    """
    if window <= 0:
        raise InvalidStride(f"window must be positive, got {window}")
    if stride <= 0 or stride > window:
        raise InvalidStride(
            f"stride must satisfy 0 < stride <= window, got stride={stride} window={window}"
        )
    n = len(document.tokens)
    chunks: list[Chunk] = []
    i = 0
    while True:
        tok_start = i * stride
        tok_end = min(tok_start + window, n)
        chunks.append(
            Chunk(
                index=i,
                token_start=tok_start,
                token_end=tok_end,
                char_start=0 if tok_start == 0 else document.tokens[tok_start].start,
                char_end=len(document.text) if tok_end >= n else document.tokens[tok_end - 1].end,
            )
        )
        if tok_start + window >= n:
            return chunks
        i += 1


@dataclass(frozen=True)
class ExtractorSpan:
    """Raw extractor output: chunk-local character offsets plus confidences."""

    start: int
    end: int
    start_confidence: float
    end_confidence: float


@dataclass(frozen=True)
class Answer:
    """A merged answer with document-level character offsets."""

    text: str
    start: int
    end: int
    confidence: float
    chunk_index: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence out of range: {self.confidence}")


class SpanExtractor(Protocol):
    extractor_id: str

    def answer(self, question: str, context: str) -> ExtractorSpan | None: ...


def _better(a: Answer, b: Answer) -> bool:
    if a.confidence != b.confidence:
        return a.confidence > b.confidence
    if a.start != b.start:
        return a.start < b.start
    return a.chunk_index < b.chunk_index


def extract_field(
    question: Question,
    document: SourceDocument,
    extractor: SpanExtractor,
    window: int = DEFAULT_WINDOW,
    stride: int = DEFAULT_STRIDE,
) -> Answer | None:
    """Ask one question against every chunk and keep the best answer.

    Confidence of a chunk answer is the mean of its start and end
    confidences. Ties go to the earliest document offset, then the lowest
    chunk index. Returns None when every chunk abstains.
    """
    best: Answer | None = None
    for chunk in chunk_document(document, window, stride):
        context = document.text[chunk.char_start : chunk.char_end]
        result = extractor.answer(question.text, context)
        if result is None:
            continue
        if not (0 <= result.start < result.end <= len(context)):
            raise MisalignedSpan(
                f"extractor span [{result.start}, {result.end}) outside chunk "
                f"of length {len(context)}",
                field=question.field_name,
                chunk_index=chunk.index,
            )
        candidate = Answer(
            text=document.text[chunk.char_start + result.start : chunk.char_start + result.end],
            start=chunk.char_start + result.start,
            end=chunk.char_start + result.end,
            confidence=(result.start_confidence + result.end_confidence) / 2.0,
            chunk_index=chunk.index,
        )
        if best is None or _better(candidate, best):
            best = candidate
    return best


_DETERMINER_RE = re.compile(r"\A(?:the|a|an)\s+", re.IGNORECASE)
_TRAILING_PUNCTUATION = ".,;:!?"


def normalize_answer(text: str) -> str:
    """Strip one leading determiner and trailing sentence punctuation.

    >>> normalize_answer("the Widgets")
    'Widgets'
    >>> normalize_answer("An apple.")
    'apple'
    """
    out = _DETERMINER_RE.sub("", text, count=1)
    return out.rstrip(_TRAILING_PUNCTUATION)


def coerce_value(value: str, type_name: str, relationship: bool = False) -> object:
    """Best-effort typing of an extracted string; failures keep the string."""
    if relationship:
        return value
    try:
        if type_name == "Integer":
            return int(value)
        if type_name == "Double":
            return float(value)
    except ValueError:
        return value
    if type_name == "Boolean" and value.lower() in ("true", "false"):
        return value.lower() == "true"
    return value


@dataclass
class ExtractionResult:
    instance: DataInstance
    confidences: dict[str, float] = field(default_factory=dict)
    missing: list[str] = field(default_factory=list)
    answers: dict[str, Answer] = field(default_factory=dict)


def fill_instance(
    model: ConcertoModel,
    class_name: str,
    document: SourceDocument,
    extractor: SpanExtractor,
    window: int = DEFAULT_WINDOW,
    stride: int = DEFAULT_STRIDE,
) -> ExtractionResult:
    """Generate, ask and normalize one question per effective field.

    Fields whose extractor abstains stay unset and are listed in
    ``missing``; nothing here is fatal, the caller decides how much
    completeness to require at emit time.
    """
    instance = DataInstance(class_name)
    result = ExtractionResult(instance=instance)
    for fd in effective_fields(model, class_name):
        question = generate_question(fd.name, fd.type_name)
        answer = extract_field(question, document, extractor, window, stride)
        if answer is None:
            result.missing.append(fd.name)
            continue
        instance.values[fd.name] = coerce_value(
            normalize_answer(answer.text), fd.type_name, fd.relationship
        )
        result.confidences[fd.name] = answer.confidence
        result.answers[fd.name] = answer
    return result


class BaselineExtractor:
    """Answer-key extractor: case-insensitive exact phrase search.

    Seeded with a field -> phrase map; the question is matched back to a
    field by its human-readable name (longest name first). Both
    confidences are 1.0 on a hit and the extractor abstains on a miss.
    """

    def __init__(self, answer_key: Mapping[str, str], extractor_id: str = "baseline:phrase-match") -> None:
        self.extractor_id = extractor_id
        self._by_human_name = {
            human_field_name(fd): phrase for fd, phrase in answer_key.items()
        }

    def answer(self, question: str, context: str) -> ExtractorSpan | None:
        lowered = question.lower()
        phrase: str | None = None
        for human in sorted(self._by_human_name, key=lambda h: (-len(h), h)):
            if human in lowered:
                phrase = self._by_human_name[human]
                break
        if phrase is None:
            return None
        at = context.lower().find(phrase.lower())
        if at < 0:
            return None
        return ExtractorSpan(
            start=at, end=at + len(phrase), start_confidence=1.0, end_confidence=1.0
        )
