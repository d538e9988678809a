"""Cicero template text: parsing, rendering and production from marked documents.

Supported grammar is the variable subset only: ``{{name}}`` for bound
variables and ``{{{name}}}`` for raw (unescaped) ones. Logic blocks,
sections and partials are out of scope. Brace characters in literal text
are rejected loudly rather than escaped, so any template this module
produces from a brace-free document re-parses to an equal value.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence, Union

from .core import (
    SlcError,
    SourceDocument,
    VariableBinding,
    VARIABLE_NAME_RE,
)


class UnbalancedBraces(SlcError):
    code = "UNBALANCED_BRACES"


class EmptyVariableName(SlcError):
    code = "EMPTY_VARIABLE_NAME"


class DuplicateVariable(SlcError):
    code = "DUPLICATE_VARIABLE"


class NestedBraces(SlcError):
    code = "NESTED_BRACES"


class MissingValue(SlcError):
    code = "MISSING_VALUE"


class OverlappingMarks(SlcError):
    code = "OVERLAPPING_MARKS"


@dataclass(frozen=True)
class Literal:
    text: str


@dataclass(frozen=True)
class Variable:
    name: str
    raw: bool = False


Segment = Union[Literal, Variable]


def _normalized(segments: Sequence[Segment]) -> tuple[Segment, ...]:
    # Merge adjacent literals and drop empty ones so structurally equal
    # templates compare equal regardless of how they were built.
    out: list[Segment] = []
    for seg in segments:
        if isinstance(seg, Literal):
            if not seg.text:
                continue
            if out and isinstance(out[-1], Literal):
                out[-1] = Literal(out[-1].text + seg.text)
                continue
        out.append(seg)
    return tuple(out)


@dataclass(frozen=True)
class CiceroTemplate:
    segments: tuple[Segment, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "segments", _normalized(self.segments))
        seen: set[str] = set()
        for seg in self.segments:
            if isinstance(seg, Variable):
                if seg.name in seen:
                    raise DuplicateVariable(
                        f"duplicate variable: {seg.name}", name=seg.name
                    )
                seen.add(seg.name)

    @property
    def variables(self) -> list[Variable]:
        return [s for s in self.segments if isinstance(s, Variable)]


def _run_length(text: str, i: int, ch: str) -> int:
    j = i
    while j < len(text) and text[j] == ch:
        j += 1
    return j - i


def parse_template(text: str) -> CiceroTemplate:
    """Parse Cicero template text into segments.

    Raises UnbalancedBraces, NestedBraces, EmptyVariableName or
    DuplicateVariable; position details are character offsets.
    """
    segments: list[Segment] = []
    buf: list[str] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "{":
            run = _run_length(text, i, "{")
            if run == 1:
                raise UnbalancedBraces("stray '{' in template text", position=i)
            if run > 3:
                raise NestedBraces("too many opening braces", position=i)
            if buf:
                segments.append(Literal("".join(buf)))
                buf = []
            j = i + run
            name_start = j
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            name = text[name_start:j]
            if j < n and text[j] == "{":
                raise NestedBraces("brace inside variable", position=j)
            if not name:
                raise EmptyVariableName("empty variable name", position=name_start)
            if not VARIABLE_NAME_RE.fullmatch(name):
                raise UnbalancedBraces(
                    f"malformed variable name: {name!r}", position=name_start
                )
            if _run_length(text, j, "}") < run:
                raise UnbalancedBraces("variable not closed", position=j)
            segments.append(Variable(name, raw=run == 3))
            i = j + run
        elif ch == "}":
            raise UnbalancedBraces("stray '}' in template text", position=i)
        else:
            buf.append(ch)
            i += 1
    if buf:
        segments.append(Literal("".join(buf)))
    return CiceroTemplate(tuple(segments))


def serialize_template(template: CiceroTemplate) -> str:
    """Inverse of parse_template for templates with brace-free literals."""
    parts: list[str] = []
    for seg in template.segments:
        if isinstance(seg, Literal):
            parts.append(seg.text)
        elif seg.raw:
            parts.append("{{{" + seg.name + "}}}")
        else:
            parts.append("{{" + seg.name + "}}")
    return "".join(parts)


def render(template: CiceroTemplate, values: Mapping[str, object]) -> str:
    """Substitute every variable; a variable without a value is an error."""
    parts: list[str] = []
    for seg in template.segments:
        if isinstance(seg, Literal):
            parts.append(seg.text)
        else:
            if seg.name not in values:
                raise MissingValue(
                    f"no value for variable: {seg.name}", variable_name=seg.name
                )
            parts.append(str(values[seg.name]))
    return "".join(parts)


def list_variables(template: CiceroTemplate) -> list[tuple[str, bool]]:
    return [(v.name, v.raw) for v in template.variables]


def apply_marks(
    document: SourceDocument, marks: Sequence[VariableBinding]
) -> CiceroTemplate:
    """Replace each mark's primary span with its variable, in span order.

    Secondary spans (collapsed repeats of the same surface) stay literal:
    Cicero variable names are unique within a template, so only the first
    occurrence becomes a substitution site. Rendering the result with each
    variable's original span text reproduces the document exactly.
    """
    for i, ch in enumerate(document.text):
        if ch in "{}":
            raise UnbalancedBraces(
                "document text contains a brace character", position=i
            )
    ordered = sorted(marks, key=lambda m: m.span.start)
    for a, b in zip(ordered, ordered[1:]):
        if a.span.end > b.span.start:
            raise OverlappingMarks(
                f"marks overlap: {a.variable_name} and {b.variable_name}",
                a=a.variable_name,
                b=b.variable_name,
            )
        if a.span.end > len(document.text) or b.span.end > len(document.text):
            raise ValueError("mark span outside document")
    if ordered and ordered[-1].span.end > len(document.text):
        raise ValueError("mark span outside document")
    segments: list[Segment] = []
    cursor = 0
    for mark in ordered:
        segments.append(Literal(document.text[cursor : mark.span.start]))
        segments.append(Variable(mark.variable_name, raw=mark.raw))
        cursor = mark.span.end
    segments.append(Literal(document.text[cursor:]))
    return CiceroTemplate(tuple(segments))
