"""Core text and domain types shared by every stage of the conversion engine.

The tokenizer here is the single source of truth for token boundaries:
marks, tag matrices and extraction chunks all align to the offsets it
produces, so it must stay deterministic and reversible.
"""

from __future__ import annotations

import re
import uuid
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from .concerto import DataInstance
    from .pipeline import ConversionOutput


class SlcError(Exception):
    """Base class for every error this package raises on purpose.

    ``code`` is the stable machine-readable identifier the HTTP layer
    exposes; subclasses override it.
    """

    code = "INTERNAL"

    def __init__(self, message: str, **details: object) -> None:
        super().__init__(message)
        self.message = message
        self.details = details


class DuplicateLabel(SlcError):
    code = "DUPLICATE_LABEL"


class UnknownLabel(SlcError):
    code = "UNKNOWN_LABEL"


VARIABLE_NAME_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")


def new_id() -> str:
    return str(uuid.uuid4())


@dataclass(frozen=True)
class Token:
    """One tokenizer output: the exact surface plus character offsets.

    Offsets count Unicode scalar values; ``end`` is exclusive, so
    ``text[start:end] == surface`` always holds.
    """

    surface: str
    start: int
    end: int


def _is_word_char(ch: str) -> bool:
    return ch.isalnum() or ch == "_"


def tokenize(text: str) -> list[Token]:
    """Split ``text`` into tokens with exact character offsets.

    Rules, in priority order:
      - whitespace separates tokens and is never part of one;
      - a maximal run of the same brace character is one token, so the
        template delimiters ``{{``, ``}}``, ``{{{`` and ``}}}`` survive
        as single units;
      - any other non-alphanumeric character is a token by itself;
      - maximal runs of alphanumeric/underscore characters form a token.

    >>> [t.surface for t in tokenize("Bob pays Alice.")]
    ['Bob', 'pays', 'Alice', '.']
    >>> [t.surface for t in tokenize("{{buyer}}")]
    ['{{', 'buyer', '}}']
    """
    tokens: list[Token] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        start = i
        if ch in "{}":
            while i < n and text[i] == ch:
                i += 1
        elif _is_word_char(ch):
            while i < n and _is_word_char(text[i]):
                i += 1
        else:
            i += 1
        tokens.append(Token(text[start:i], start, i))
    return tokens


@dataclass(frozen=True)
class SourceDocument:
    """An immutable input contract plus its token layer."""

    id: str
    text: str
    tokens: tuple[Token, ...]

    @classmethod
    def from_text(cls, text: str, doc_id: str | None = None) -> SourceDocument:
        return cls(id=doc_id or new_id(), text=text, tokens=tuple(tokenize(text)))

    @cached_property
    def _starts(self) -> frozenset[int]:
        return frozenset(t.start for t in self.tokens)

    @cached_property
    def _ends(self) -> frozenset[int]:
        return frozenset(t.end for t in self.tokens)

    def is_token_aligned(self, start: int, end: int) -> bool:
        """True when both offsets land exactly on token boundaries."""
        return start in self._starts and end in self._ends and start < end

    def slice(self, start: int, end: int) -> str:
        return self.text[start:end]


# Built-in entity labels and the Concerto type each one maps to when a
# mark is proposed from it. User extensions register alongside these.
BUILTIN_LABELS: dict[str, str] = {
    "String": "String",
    "Party": "Party",
    "Object": "String",
    "TemporalUnit": "DateTime",
}


class LabelRegistry:
    """Registry of entity labels known to the tagging side of the system.

    The four built-ins are always present and cannot be re-registered.
    Each label carries the Concerto type that proposed marks default to.
    """

    def __init__(self) -> None:
        self._types: dict[str, str] = dict(BUILTIN_LABELS)

    def register(self, name: str, concerto_type: str = "String") -> None:
        if not VARIABLE_NAME_RE.fullmatch(name):
            raise UnknownLabel(f"invalid label name: {name!r}", name=name)
        if name in self._types:
            raise DuplicateLabel(f"label already registered: {name}", name=name)
        self._types[name] = concerto_type

    def __contains__(self, name: str) -> bool:
        return name in self._types

    def names(self) -> list[str]:
        return list(self._types)

    def concerto_type(self, name: str) -> str:
        try:
            return self._types[name]
        except KeyError:
            raise UnknownLabel(f"unknown label: {name}", name=name) from None


@dataclass(frozen=True)
class LabeledSpan:
    """A labeled character range over a document.

    Spans are produced against a specific document and must start and end
    on that document's token boundaries; producers enforce this, and the
    pipeline re-checks it before accepting externally edited marks.
    """

    start: int
    end: int
    label: str
    probability: float

    def __post_init__(self) -> None:
        if self.start < 0 or self.end <= self.start:
            raise SlcError(
                f"invalid span range [{self.start}, {self.end})",
                start=self.start,
                end=self.end,
            )
        if not 0.0 <= self.probability <= 1.0:
            raise SlcError(
                f"probability out of range: {self.probability}",
                probability=self.probability,
            )

    def overlaps(self, other: LabeledSpan) -> bool:
        return self.start < other.end and other.start < self.end

    def to_dict(self) -> dict:
        return {
            "start": self.start,
            "end": self.end,
            "label": self.label,
            "probability": self.probability,
        }

    @classmethod
    def from_dict(cls, data: dict) -> LabeledSpan:
        return cls(
            start=data["start"],
            end=data["end"],
            label=data["label"],
            probability=data["probability"],
        )


@dataclass(frozen=True)
class VariableBinding:
    """A span the user accepted (or a tagger proposed) as a template variable.

    ``secondary_spans`` carries later occurrences of the same surface form
    that collapsed into this binding; only the primary span is substituted
    when the Cicero template is produced.
    """

    span: LabeledSpan
    variable_name: str
    concerto_type: str
    raw: bool = False
    secondary_spans: tuple[LabeledSpan, ...] = ()

    def __post_init__(self) -> None:
        if not VARIABLE_NAME_RE.fullmatch(self.variable_name):
            raise SlcError(
                f"invalid variable name: {self.variable_name!r}",
                variable_name=self.variable_name,
            )

    def to_dict(self) -> dict:
        return {
            "span": self.span.to_dict(),
            "variable_name": self.variable_name,
            "concerto_type": self.concerto_type,
            "raw": self.raw,
            "secondary_spans": [s.to_dict() for s in self.secondary_spans],
        }

    @classmethod
    def from_dict(cls, data: dict) -> VariableBinding:
        return cls(
            span=LabeledSpan.from_dict(data["span"]),
            variable_name=data["variable_name"],
            concerto_type=data["concerto_type"],
            raw=data.get("raw", False),
            secondary_spans=tuple(
                LabeledSpan.from_dict(s) for s in data.get("secondary_spans", [])
            ),
        )


class JobStatus(str, Enum):
    """Lifecycle of a conversion job; transitions only move forward."""

    CREATED = "Created"
    TEMPLATE_SELECTED = "TemplateSelected"
    MARKED = "Marked"
    EXTRACTED = "Extracted"
    EMITTED = "Emitted"

    @property
    def rank(self) -> int:
        return _STATUS_ORDER.index(self)


_STATUS_ORDER = (
    JobStatus.CREATED,
    JobStatus.TEMPLATE_SELECTED,
    JobStatus.MARKED,
    JobStatus.EXTRACTED,
    JobStatus.EMITTED,
)


@dataclass
class ConversionJob:
    """Mutable record of one document's trip through the pipeline.

    Everything needed to re-execute the automatic path is kept here:
    the pinned tagger versions, the mark threshold and the extractor id.
    """

    id: str
    document: SourceDocument
    template_id: str | None = None
    data_class: str | None = None
    marks: list[VariableBinding] = field(default_factory=list)
    instance: DataInstance | None = None
    tagger_versions: dict[str, str] = field(default_factory=dict)
    status: JobStatus = JobStatus.CREATED
    mark_threshold: float | None = None
    extractor_id: str | None = None
    confidences: dict[str, float] = field(default_factory=dict)
    missing_fields: list[str] = field(default_factory=list)
    created_at: str = ""
    emitted_at: str | None = None
    output: ConversionOutput | None = None
