"""Shared fixtures: the delivery walk-through, a three-template library, baseline models."""

from __future__ import annotations

import json
import shutil
from pathlib import Path

import pytest

from slcforge import (
    BaselineExtractor,
    BaselineTagger,
    ConversionPipeline,
    LabelRegistry,
    TaggerVersionRegistry,
)

DATA_DIR = Path(__file__).parent / "data"
LIBRARY_DIR = DATA_DIR / "library"
GOLDEN_DIR = DATA_DIR / "golden"

DELIVERY_TEXT = (DATA_DIR / "contracts" / "delivery.txt").read_text().rstrip("\n")
DELIVERY_ANSWERS = json.loads((DATA_DIR / "contracts" / "delivery_answers.json").read_text())

# The payment-upon-delivery exemplar: marked clause, data model, filled values.
# Also checked in under tests/data/library/payment-upon-delivery/.
PAYMENT_TEMPLATE_TEXT = (
    "Upon delivery and acceptance, {{buyer}} shall pay to {{seller}} the cost "
    "of goods {{{costOfGoods}}} and the delivery fee {{{deliveryFee}}}."
)
PAYMENT_RENDERED = (
    "Upon delivery and acceptance, Dan shall pay to Jerome the cost "
    "of goods 200.00 USD and the delivery fee 20.00 USD."
)
PAYMENT_VALUES = {
    "buyer": "Dan",
    "seller": "Jerome",
    "costOfGoods": "200.00 USD",
    "deliveryFee": "20.00 USD",
}

PAYMENT_MODEL_TEXT = """asset PaymentUponDeliveryContract extends Contract {
  --> Party buyer
  --> Party seller
  o MonetaryAmount costOfGoods
  o MonetaryAmount deliveryFee
}
"""

DELIVERY_TARGET_FIELDS = {"shipper": "Bob", "receiver": "Alice", "deliverable": "Widgets"}


@pytest.fixture()
def library_dir(tmp_path: Path) -> Path:
    """A private copy of the checked-in library, safe to mutate."""
    dest = tmp_path / "library"
    shutil.copytree(LIBRARY_DIR, dest)
    return dest


@pytest.fixture()
def registries() -> tuple[LabelRegistry, TaggerVersionRegistry]:
    labels = LabelRegistry()
    versions = TaggerVersionRegistry()
    for label in labels.names():
        versions.register(label, "baseline:v1", source="baseline")
    return labels, versions


@pytest.fixture()
def pipeline(tmp_path: Path, library_dir: Path, registries) -> ConversionPipeline:
    labels, versions = registries
    return ConversionPipeline(
        data_dir=tmp_path / "state",
        library_dir=library_dir,
        label_registry=labels,
        version_registry=versions,
    )


def delivery_tagger() -> BaselineTagger:
    """Gazetteer tagger that reproduces the delivery walk-through marks."""
    return BaselineTagger(
        gazetteers={
            "Party": ["Bob", "Alice"],
            "String": ["the Widgets"],
        }
    )


def delivery_extractor() -> BaselineExtractor:
    return BaselineExtractor(DELIVERY_ANSWERS)


@pytest.fixture()
def tagger() -> BaselineTagger:
    return delivery_tagger()


@pytest.fixture()
def extractor() -> BaselineExtractor:
    return delivery_extractor()
