"""Command line interface tests.

The convert command is checked against frozen golden artifacts; listing and
indexing commands against their exact stdout. Exit codes: 0 success, 1
conversion/validation failure, 2 usage errors.
"""

from __future__ import annotations

import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from slcforge.cli import main

from tests.conftest import GOLDEN_DIR, LIBRARY_DIR

CONTRACT = Path(__file__).parent / "data" / "contracts" / "delivery.txt"
ANSWERS = Path(__file__).parent / "data" / "contracts" / "delivery_answers.json"


@pytest.fixture()
def runner():
    return CliRunner()


def convert_args(out_dir: Path, *extra: str) -> list[str]:
    return [
        "convert",
        str(CONTRACT),
        "--template",
        "acceptance-of-delivery",
        "--library",
        str(LIBRARY_DIR),
        "--out",
        str(out_dir),
        *extra,
    ]


class TestConvert:
    def test_matches_golden_artifacts(self, runner, tmp_path):
        out = tmp_path / "artifacts"
        result = runner.invoke(main, convert_args(out, "--answers", str(ANSWERS)))
        assert result.exit_code == 0, result.output + result.stderr
        golden = GOLDEN_DIR / "delivery"
        assert (out / "template.cicero").read_bytes() == (golden / "template.cicero").read_bytes()
        assert (out / "instance.json").read_bytes() == (golden / "instance.json").read_bytes()

    def test_reports_marks_values_and_files(self, runner, tmp_path):
        out = tmp_path / "artifacts"
        result = runner.invoke(main, convert_args(out, "--answers", str(ANSWERS)))
        assert result.exit_code == 0
        lines = result.output.splitlines()
        assert lines[:6] == [
            "mark party1 [Party] = 'Bob'",
            "mark party2 [Party] = 'Alice'",
            "mark string1 [String] = 'the Widgets'",
            "value deliverable = 'Widgets' (1.00)",
            "value receiver = 'Alice' (1.00)",
            "value shipper = 'Bob' (1.00)",
        ]
        assert lines[6:] == [
            f"wrote {out / 'template.cicero'}",
            f"wrote {out / 'instance.json'}",
            f"wrote {out / 'provenance.json'}",
        ]

    def test_provenance_written_alongside(self, runner, tmp_path):
        out = tmp_path / "artifacts"
        result = runner.invoke(main, convert_args(out, "--answers", str(ANSWERS)))
        assert result.exit_code == 0
        provenance = json.loads((out / "provenance.json").read_text())
        assert provenance["template_id"] == "acceptance-of-delivery"
        assert provenance["extractor_id"] == "baseline:phrase-match"
        assert provenance["tagger_versions"] == {"Party": "baseline:v1", "String": "baseline:v1"}
        assert provenance["threshold"] == 0.5

    def test_without_answers_fails_validation(self, runner, tmp_path):
        out = tmp_path / "artifacts"
        result = runner.invoke(main, convert_args(out))
        assert result.exit_code == 1
        assert "error [VALIDATION_FAILED]" in result.stderr
        assert not out.exists()

    def test_force_emits_partial_instance(self, runner, tmp_path):
        out = tmp_path / "artifacts"
        result = runner.invoke(main, convert_args(out, "--force"))
        assert result.exit_code == 0
        instance = json.loads((out / "instance.json").read_text())
        assert instance == {"$class": "AcceptanceOfDelivery"}
        for field in ("deliverable", "receiver", "shipper"):
            assert f"value {field} = <unset>" in result.output

    def test_unknown_template_is_a_conversion_failure(self, runner, tmp_path):
        result = runner.invoke(
            main,
            [
                "convert",
                str(CONTRACT),
                "--template",
                "no-such-template",
                "--library",
                str(LIBRARY_DIR),
                "--out",
                str(tmp_path / "artifacts"),
            ],
        )
        assert result.exit_code == 1
        assert "error [UNKNOWN_TEMPLATE]" in result.stderr

    def test_missing_document_is_a_usage_error(self, runner, tmp_path):
        result = runner.invoke(
            main,
            [
                "convert",
                str(tmp_path / "missing.txt"),
                "--template",
                "acceptance-of-delivery",
                "--library",
                str(LIBRARY_DIR),
                "--out",
                str(tmp_path / "artifacts"),
            ],
        )
        assert result.exit_code == 2

    def test_missing_required_options_is_a_usage_error(self, runner):
        result = runner.invoke(main, ["convert", str(CONTRACT)])
        assert result.exit_code == 2


class TestTemplatesList:
    def test_lists_id_and_name_sorted(self, runner):
        result = runner.invoke(main, ["templates", "list", "--library", str(LIBRARY_DIR)])
        assert result.exit_code == 0
        assert result.output == (
            "acceptance-of-delivery\tAcceptance of Delivery\n"
            "late-delivery-penalty\tLate Delivery Penalty\n"
            "payment-upon-delivery\tPayment upon Delivery\n"
        )

    def test_empty_directory_lists_nothing(self, runner, tmp_path):
        result = runner.invoke(main, ["templates", "list", "--library", str(tmp_path)])
        assert result.exit_code == 0
        assert result.output == ""

    def test_library_from_environment(self, runner):
        result = runner.invoke(
            main, ["templates", "list"], env={"SLCFORGE_LIBRARY_DIR": str(LIBRARY_DIR)}
        )
        assert result.exit_code == 0
        assert result.output.startswith("acceptance-of-delivery\t")

    def test_missing_library_is_a_usage_error(self, runner):
        result = runner.invoke(main, ["templates", "list"])
        assert result.exit_code == 2


class TestIndex:
    def test_reports_document_and_term_counts(self, runner):
        result = runner.invoke(main, ["index", str(LIBRARY_DIR)])
        assert result.exit_code == 0
        assert result.output == "indexed 3 templates, 38 distinct terms\n"

    def test_empty_directory_indexes_nothing(self, runner, tmp_path):
        result = runner.invoke(main, ["index", str(tmp_path)])
        assert result.exit_code == 0
        assert result.output == "indexed 0 templates, 0 distinct terms\n"

    def test_broken_record_fails(self, runner, tmp_path):
        record_dir = tmp_path / "broken"
        record_dir.mkdir()
        (record_dir / "sample.txt").write_text("some text\n", encoding="utf-8")
        (record_dir / "template.cicero").write_text("{{oops\n", encoding="utf-8")
        (record_dir / "model.cto").write_text("asset A extends Contract {\n  o String x\n}\n", encoding="utf-8")
        (record_dir / "metadata.json").write_text(
            json.dumps({"id": "broken", "name": "Broken", "metadata": {}}), encoding="utf-8"
        )
        result = runner.invoke(main, ["index", str(tmp_path)])
        assert result.exit_code == 1
        assert "error [" in result.stderr

    def test_missing_directory_is_a_usage_error(self, runner, tmp_path):
        result = runner.invoke(main, ["index", str(tmp_path / "nope")])
        assert result.exit_code == 2
