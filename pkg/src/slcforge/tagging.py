"""Entity marking: multi-label token tagging and span decoding.

A tagger emits, for every token and every label it knows, independent
begin/inside probabilities (no softmax across labels), so one token can
open spans under several labels at once. Greedy per-label BIO decoding
turns the matrix into spans; overlap across labels is preserved and the
human picks the winner later.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Protocol, Sequence

from .cicero import CiceroTemplate
from .core import (
    BUILTIN_LABELS,
    LabeledSpan,
    LabelRegistry,
    SlcError,
    SourceDocument,
    Token,
    UnknownLabel,
    VariableBinding,
)


class MalformedTag(SlcError):
    code = "MALFORMED_TAG"


class InvalidPattern(SlcError):
    code = "INVALID_PATTERN"


class DuplicateVersion(SlcError):
    code = "DUPLICATE_VERSION"


class UnknownVersion(SlcError):
    code = "UNKNOWN_VERSION"


# Dataset-tag aggregation: every entity mark is at least a String; the
# named-entity classes that denote people/organizations/places also count
# as Party, artifacts/miscellany/natural phenomena as Object, and time
# expressions as TemporalUnit.
_PARTY_TYPES = ("per", "org", "geo", "gpe")
_OBJECT_TYPES = ("art", "MISC", "nat")
_TEMPORAL_TYPES = ("tim",)


def aggregate_label(tag: str) -> frozenset[str]:
    """Map one BIO dataset tag to the set of entity labels it implies.

    >>> sorted(aggregate_label("B-per"))
    ['Party', 'String']
    >>> aggregate_label("O")
    frozenset()
    """
    if tag == "O":
        return frozenset()
    if len(tag) < 3 or tag[0] not in "BI" or tag[1] != "-":
        raise MalformedTag(f"not a BIO tag: {tag!r}", tag=tag)
    entity = tag[2:]
    if entity in _PARTY_TYPES:
        return frozenset(("Party", "String"))
    if entity in _OBJECT_TYPES:
        return frozenset(("Object", "String"))
    if entity in _TEMPORAL_TYPES:
        return frozenset(("TemporalUnit", "String"))
    return frozenset(("String",))


@dataclass(frozen=True)
class TokenLabelMatrix:
    """Per-token, per-label begin/inside probabilities.

    ``probs`` maps label -> one (P(B), P(I)) pair per token. Labels are
    independent of each other; rows do not sum to one.
    """

    n_tokens: int
    probs: dict[str, tuple[tuple[float, float], ...]]

    def __post_init__(self) -> None:
        normalized: dict[str, tuple[tuple[float, float], ...]] = {}
        for label, pairs in self.probs.items():
            if len(pairs) != self.n_tokens:
                raise ValueError(
                    f"label {label!r} has {len(pairs)} rows for {self.n_tokens} tokens"
                )
            for b, i in pairs:
                if not (0.0 <= b <= 1.0 and 0.0 <= i <= 1.0):
                    raise ValueError(f"probability out of range for {label!r}")
            normalized[label] = tuple((float(b), float(i)) for b, i in pairs)
        object.__setattr__(self, "probs", normalized)

    @property
    def labels(self) -> list[str]:
        return list(self.probs)

    def begin(self, label: str, idx: int) -> float:
        pairs = self.probs.get(label)
        return pairs[idx][0] if pairs is not None else 0.0

    def inside(self, label: str, idx: int) -> float:
        pairs = self.probs.get(label)
        return pairs[idx][1] if pairs is not None else 0.0

    def to_wire(self) -> list[dict]:
        return [
            {label: {"b": pairs[i][0], "i": pairs[i][1]} for label, pairs in self.probs.items()}
            for i in range(self.n_tokens)
        ]

    @classmethod
    def from_wire(
        cls, rows: Sequence[Mapping], labels: Iterable[str] | None = None
    ) -> TokenLabelMatrix:
        if labels is None:
            labels = sorted({label for row in rows for label in row})
        probs: dict[str, list[tuple[float, float]]] = {label: [] for label in labels}
        for row in rows:
            for label in probs:
                cell = row.get(label)
                if (
                    not isinstance(cell, Mapping)
                    or not isinstance(cell.get("b"), (int, float))
                    or not isinstance(cell.get("i"), (int, float))
                ):
                    raise ValueError(f"malformed matrix cell for label {label!r}")
                probs[label].append((float(cell["b"]), float(cell["i"])))
        return cls(n_tokens=len(rows), probs=probs)


def matrix_from_conll(tags: Sequence[str]) -> TokenLabelMatrix:
    """Lift a single-label BIO tag sequence into a probability matrix.

    Each dataset tag contributes probability 1.0 to every entity label it
    aggregates to, under the same B/I position.
    """
    labels = list(BUILTIN_LABELS)
    probs: dict[str, list[tuple[float, float]]] = {label: [] for label in labels}
    for tag in tags:
        implied = aggregate_label(tag)
        begin = tag.startswith("B-")
        for label in labels:
            if label in implied:
                probs[label].append((1.0, 0.0) if begin else (0.0, 1.0))
            else:
                probs[label].append((0.0, 0.0))
    return TokenLabelMatrix(n_tokens=len(tags), probs=probs)


def decode_spans(
    tokens: Sequence[Token], matrix: TokenLabelMatrix, threshold: float = 0.5
) -> list[LabeledSpan]:
    """Greedy per-label BIO decode.

    A span opens at any token whose P(B-label) clears the threshold and
    extends while P(I-label) does; its probability is the arithmetic mean
    of the token probabilities that formed it. Spans of one label never
    overlap; spans of different labels may.
    """
    if matrix.n_tokens != len(tokens):
        raise ValueError(f"matrix covers {matrix.n_tokens} tokens, document has {len(tokens)}")
    spans: list[LabeledSpan] = []
    for label in matrix.labels:
        i = 0
        while i < len(tokens):
            b = matrix.begin(label, i)
            if b < threshold:
                i += 1
                continue
            collected = [b]
            j = i + 1
            while j < len(tokens) and matrix.inside(label, j) >= threshold:
                collected.append(matrix.inside(label, j))
                j += 1
            spans.append(
                LabeledSpan(
                    start=tokens[i].start,
                    end=tokens[j - 1].end,
                    label=label,
                    probability=sum(collected) / len(collected),
                )
            )
            i = j
    spans.sort(key=lambda s: (s.start, s.end, s.label))
    return spans


class Tagger(Protocol):
    def tag(self, document: SourceDocument) -> TokenLabelMatrix: ...

    def versions(self) -> dict[str, str]: ...


class BaselineTagger:
    """Deterministic tagger built from gazetteers and regex patterns.

    Gazetteer phrases match exact token-surface sequences (longest match
    first); patterns match against the raw text and mark the tokens they
    fully cover. Matches get probability 1.0: B on the first token, I on
    continuations.
    """

    def __init__(
        self,
        gazetteers: Mapping[str, Iterable[str]] | None = None,
        patterns: Mapping[str, Iterable[str]] | None = None,
        version: str = "baseline:v1",
    ) -> None:
        self.version = version
        self._gazetteers = {
            label: sorted(set(phrases), key=lambda p: (-len(p.split()), p))
            for label, phrases in (gazetteers or {}).items()
        }
        self._patterns: dict[str, list[re.Pattern]] = {}
        for label, exprs in (patterns or {}).items():
            compiled = []
            for expr in exprs:
                try:
                    compiled.append(re.compile(expr))
                except re.error as exc:
                    raise InvalidPattern(
                        f"bad pattern for {label!r}: {exc}", label=label, pattern=expr
                    ) from exc
            self._patterns[label] = compiled

    def labels(self) -> list[str]:
        return sorted(set(self._gazetteers) | set(self._patterns))

    def versions(self) -> dict[str, str]:
        return {label: self.version for label in self.labels()}

    def tag(self, document: SourceDocument) -> TokenLabelMatrix:
        tokens = document.tokens
        probs: dict[str, list[list[float]]] = {
            label: [[0.0, 0.0] for _ in tokens] for label in self.labels()
        }

        def mark(label: str, first: int, last: int) -> None:
            probs[label][first][0] = 1.0
            for k in range(first + 1, last + 1):
                probs[label][k][1] = 1.0

        for label, phrases in self._gazetteers.items():
            split_phrases = [(p.split(), p) for p in phrases]
            i = 0
            while i < len(tokens):
                matched = 0
                for surfaces, _ in split_phrases:
                    k = len(surfaces)
                    if k and [t.surface for t in tokens[i : i + k]] == surfaces:
                        matched = k
                        break
                if matched:
                    mark(label, i, i + matched - 1)
                    i += matched
                else:
                    i += 1
        for label, compiled in self._patterns.items():
            for pattern in compiled:
                for m in pattern.finditer(document.text):
                    covered = [
                        k
                        for k, t in enumerate(tokens)
                        if t.start >= m.start() and t.end <= m.end()
                    ]
                    if covered:
                        mark(label, covered[0], covered[-1])
        return TokenLabelMatrix(
            n_tokens=len(tokens),
            probs={label: [tuple(pair) for pair in rows] for label, rows in probs.items()},
        )


class TaggerVersionRegistry:
    """Tracks which tagger version serves each label.

    ``resolve`` picks the latest registered version per label (max by
    version string) unless the caller pins one explicitly.
    """

    def __init__(self) -> None:
        self._versions: dict[str, dict[str, str]] = {}

    def register(self, label: str, version: str, source: str = "baseline") -> None:
        if source not in ("baseline", "remote"):
            raise ValueError(f"source must be 'baseline' or 'remote', got {source!r}")
        known = self._versions.setdefault(label, {})
        if version in known:
            raise DuplicateVersion(
                f"version already registered for {label}: {version}",
                label=label,
                version=version,
            )
        known[version] = source

    def versions(self, label: str) -> dict[str, str]:
        if label not in self._versions:
            raise UnknownLabel(f"no versions registered for label: {label}", label=label)
        return dict(self._versions[label])

    def resolve(
        self, labels: Iterable[str], pins: Mapping[str, str] | None = None
    ) -> dict[str, str]:
        pins = pins or {}
        resolved: dict[str, str] = {}
        for label in labels:
            known = self.versions(label)
            if label in pins:
                if pins[label] not in known:
                    raise UnknownVersion(
                        f"version not registered for {label}: {pins[label]}",
                        label=label,
                        version=pins[label],
                    )
                resolved[label] = pins[label]
            else:
                resolved[label] = max(known)
        return resolved


def propose_marks(
    document: SourceDocument,
    template: CiceroTemplate | None,
    tagger: Tagger,
    threshold: float = 0.5,
    registry: LabelRegistry | None = None,
) -> list[VariableBinding]:
    """Turn decoded spans into variable binding proposals.

    Names are generated per label (party1, party2, ...) and avoid the
    selected template's existing variable names. Repeats of the same
    surface under the same label collapse into one binding, with later
    occurrences kept as secondary spans. Overlapping candidates across
    labels are all returned; accepting a non-overlapping subset is the
    caller's (ultimately the user's) job.
    """
    matrix = tagger.tag(document)
    spans = decode_spans(document.tokens, matrix, threshold)
    reserved: set[str] = set()
    if template is not None:
        reserved.update(name for name, _ in ((v.name, v.raw) for v in template.variables))
    counters: dict[str, int] = {}
    primaries: dict[tuple[str, str], VariableBinding] = {}
    secondaries: dict[tuple[str, str], list[LabeledSpan]] = {}
    order: list[tuple[str, str]] = []
    for span in spans:
        surface = document.slice(span.start, span.end)
        key = (span.label, surface)
        if key in primaries:
            secondaries[key].append(span)
            continue
        base = span.label.lower()
        while True:
            counters[base] = counters.get(base, 0) + 1
            name = f"{base}{counters[base]}"
            if name not in reserved:
                break
        reserved.add(name)
        if registry is not None and span.label in registry:
            concerto_type = registry.concerto_type(span.label)
        else:
            concerto_type = BUILTIN_LABELS.get(span.label, "String")
        primaries[key] = VariableBinding(
            span=span, variable_name=name, concerto_type=concerto_type, raw=False
        )
        secondaries[key] = []
        order.append(key)
    out: list[VariableBinding] = []
    for key in order:
        binding = primaries[key]
        extra = tuple(secondaries[key])
        if extra:
            binding = VariableBinding(
                span=binding.span,
                variable_name=binding.variable_name,
                concerto_type=binding.concerto_type,
                raw=binding.raw,
                secondary_spans=extra,
            )
        out.append(binding)
    return out
