"""Tokenizer, documents, labels, spans."""

from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from slcforge import (
    DuplicateLabel,
    JobStatus,
    LabeledSpan,
    LabelRegistry,
    SlcError,
    SourceDocument,
    Token,
    UnknownLabel,
    VariableBinding,
    tokenize,
)


class TestTokenize:
    def test_empty(self):
        assert tokenize("") == []
        assert tokenize("   \t\n") == []

    def test_simple_sentence(self):
        toks = tokenize("Bob pays Alice.")
        assert [(t.surface, t.start, t.end) for t in toks] == [
            ("Bob", 0, 3),
            ("pays", 4, 8),
            ("Alice", 9, 14),
            (".", 14, 15),
        ]

    def test_punctuation_is_single_char_tokens(self):
        assert [t.surface for t in tokenize("a,b;c")] == ["a", ",", "b", ";", "c"]

    def test_apostrophe_splits(self):
        assert [t.surface for t in tokenize("Alice's opinion")] == [
            "Alice",
            "'",
            "s",
            "opinion",
        ]

    def test_brace_runs_are_single_tokens(self):
        assert [t.surface for t in tokenize("{{buyer}}")] == ["{{", "buyer", "}}"]
        assert [t.surface for t in tokenize("{{{amount}}}")] == ["{{{", "amount", "}}}"]

    def test_mixed_brace_runs_split(self):
        # runs are maximal over the *same* character
        assert [t.surface for t in tokenize("}{")] == ["}", "{"]
        assert [t.surface for t in tokenize("{{}}")] == ["{{", "}}"]

    def test_underscore_and_digits_stay_in_words(self):
        assert [t.surface for t in tokenize("cost_of_goods v2")] == ["cost_of_goods", "v2"]

    def test_offsets_slice_back(self):
        text = 'He said: "pay 200.00 USD {{now}}!"'
        for tok in tokenize(text):
            assert text[tok.start : tok.end] == tok.surface

    @given(st.text(max_size=200))
    def test_offsets_always_slice_back(self, text: str):
        toks = tokenize(text)
        last_end = 0
        for tok in toks:
            assert text[tok.start : tok.end] == tok.surface
            assert tok.start >= last_end  # ordered, non-overlapping
            assert tok.start < tok.end
            last_end = tok.end

    @given(st.text(max_size=200))
    def test_surfaces_stable_under_space_join(self, text: str):
        surfaces = [t.surface for t in tokenize(text)]
        again = [t.surface for t in tokenize(" ".join(surfaces))]
        assert again == surfaces

    @given(st.text(max_size=200))
    def test_no_whitespace_inside_tokens(self, text: str):
        for tok in tokenize(text):
            assert not any(ch.isspace() for ch in tok.surface)


class TestSourceDocument:
    def test_from_text(self):
        doc = SourceDocument.from_text("Bob pays Alice.")
        assert doc.text == "Bob pays Alice."
        assert len(doc.tokens) == 4
        assert doc.id

    def test_token_alignment(self):
        doc = SourceDocument.from_text("Bob pays Alice.")
        assert doc.is_token_aligned(0, 3)
        assert doc.is_token_aligned(4, 14)  # "pays Alice", spans two tokens
        assert not doc.is_token_aligned(1, 3)  # mid-token start
        assert not doc.is_token_aligned(0, 2)  # mid-token end
        assert not doc.is_token_aligned(3, 4)  # whitespace only

    def test_slice(self):
        doc = SourceDocument.from_text("Bob pays Alice.")
        assert doc.slice(4, 14) == "pays Alice"


class TestLabeledSpan:
    def test_validates_range(self):
        with pytest.raises(SlcError):
            LabeledSpan(start=3, end=3, label="Party", probability=1.0)
        with pytest.raises(SlcError):
            LabeledSpan(start=-1, end=2, label="Party", probability=1.0)

    def test_validates_probability(self):
        with pytest.raises(SlcError):
            LabeledSpan(start=0, end=1, label="Party", probability=1.5)

    def test_overlap(self):
        a = LabeledSpan(start=0, end=5, label="Party", probability=1.0)
        b = LabeledSpan(start=4, end=9, label="Party", probability=1.0)
        c = LabeledSpan(start=5, end=9, label="Party", probability=1.0)
        assert a.overlaps(b)
        assert not a.overlaps(c)  # half-open: touching is not overlap

    def test_dict_round_trip(self):
        span = LabeledSpan(start=2, end=7, label="Object", probability=0.25)
        assert LabeledSpan.from_dict(span.to_dict()) == span


class TestVariableBinding:
    def test_name_must_be_identifier(self):
        span = LabeledSpan(start=0, end=3, label="Party", probability=1.0)
        for bad in ("", "1st", "has space", "dash-ed", "{x}"):
            with pytest.raises(SlcError):
                VariableBinding(span=span, variable_name=bad, concerto_type="Party")

    def test_dict_round_trip_keeps_secondary_spans(self):
        primary = LabeledSpan(start=0, end=3, label="Party", probability=1.0)
        echo = LabeledSpan(start=20, end=23, label="Party", probability=1.0)
        binding = VariableBinding(
            span=primary,
            variable_name="party1",
            concerto_type="Party",
            secondary_spans=(echo,),
        )
        assert VariableBinding.from_dict(binding.to_dict()) == binding


class TestLabelRegistry:
    def test_builtins(self):
        reg = LabelRegistry()
        assert set(reg.names()) == {"String", "Party", "Object", "TemporalUnit"}
        assert reg.concerto_type("Party") == "Party"
        assert reg.concerto_type("Object") == "String"
        assert reg.concerto_type("TemporalUnit") == "DateTime"
        assert reg.concerto_type("String") == "String"

    def test_register_and_duplicate(self):
        reg = LabelRegistry()
        reg.register("Jurisdiction", "String")
        assert reg.concerto_type("Jurisdiction") == "String"
        with pytest.raises(DuplicateLabel):
            reg.register("Jurisdiction", "String")
        with pytest.raises(DuplicateLabel):
            reg.register("Party", "Party")

    def test_unknown(self):
        reg = LabelRegistry()
        with pytest.raises(UnknownLabel):
            reg.concerto_type("Nope")


class TestJobStatus:
    def test_order(self):
        order = [
            JobStatus.CREATED,
            JobStatus.TEMPLATE_SELECTED,
            JobStatus.MARKED,
            JobStatus.EXTRACTED,
            JobStatus.EMITTED,
        ]
        assert [s.rank for s in order] == sorted(s.rank for s in order)
        assert JobStatus.CREATED.value == "Created"
        assert JobStatus.EMITTED.value == "Emitted"

    def test_is_plain_string(self):
        assert JobStatus.MARKED == "Marked"


def test_token_is_frozen():
    tok = Token(surface="a", start=0, end=1)
    with pytest.raises(AttributeError):
        tok.start = 5  # type: ignore[misc]
