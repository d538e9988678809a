"""Command line entry points.

Exit codes: 0 on success, 1 when a conversion or validation fails, 2 on
usage errors (argument parsing is left to click).
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import clients, concerto, retrieval
from .core import SlcError
from .extraction import BaselineExtractor
from .pipeline import ConversionPipeline
from .service import create_app
from .tagging import BaselineTagger

# Which entity label carries marks for a field of a given Concerto type;
# used when seeding the baseline tagger from an answer key.
_LABEL_FOR_TYPE = {"Party": "Party", "DateTime": "TemporalUnit"}


def _fail(error: SlcError) -> None:
    click.echo(f"error [{error.code}]: {error.message}", err=True)
    sys.exit(1)


@click.group()
def main() -> None:
    """Convert legal contract text into smart legal contract artifacts."""


@main.command()
@click.option("--data-dir", envvar="SLCFORGE_DATA_DIR", type=click.Path(file_okay=False), default=None, help="Where jobs and the contribution queue persist.")
@click.option("--library", "library_dir", envvar="SLCFORGE_LIBRARY_DIR", type=click.Path(file_okay=False), default=None, help="Template library directory.")
@click.option("--host", envvar="SLCFORGE_HOST", default="127.0.0.1", show_default=True)
@click.option("--port", envvar="SLCFORGE_PORT", default=8400, type=int, show_default=True)
@click.option("--tagger-url", envvar="SLCFORGE_TAGGER_URL", default=None, help="Remote tagger base URL; baseline tagger when unset.")
@click.option("--qa-url", envvar="SLCFORGE_QA_URL", default=None, help="Remote QA model base URL; baseline extractor when unset.")
@click.option("--gazetteers", "gazetteers_path", envvar="SLCFORGE_GAZETTEERS", type=click.Path(exists=True, dir_okay=False), default=None, help="JSON file: label -> list of phrases for the baseline tagger.")
@click.option("--patterns", "patterns_path", envvar="SLCFORGE_PATTERNS", type=click.Path(exists=True, dir_okay=False), default=None, help="JSON file: label -> list of regexes for the baseline tagger.")
@click.option("--threshold", envvar="SLCFORGE_THRESHOLD", default=0.5, type=float, show_default=True, help="Default mark probability threshold.")
@click.option("--ui-dir", envvar="SLCFORGE_UI_DIR", type=click.Path(exists=True, file_okay=False), default=None, help="Static directory served at /ui.")
def serve(data_dir, library_dir, host, port, tagger_url, qa_url, gazetteers_path, patterns_path, threshold, ui_dir) -> None:
    """Run the HTTP service."""
    import uvicorn

    try:
        pipeline = ConversionPipeline(data_dir=data_dir, library_dir=library_dir)
        if tagger_url:
            labels = pipeline.labels.names()
            tagger = clients.RemoteTagger(
                tagger_url, labels, versions={label: "remote:v1" for label in labels}
            )
        else:
            gazetteers = json.loads(Path(gazetteers_path).read_text(encoding="utf-8")) if gazetteers_path else {}
            patterns = json.loads(Path(patterns_path).read_text(encoding="utf-8")) if patterns_path else {}
            tagger = BaselineTagger(gazetteers=gazetteers, patterns=patterns)
        extractor = clients.RemoteSpanExtractor(qa_url) if qa_url else BaselineExtractor({})
        app = create_app(pipeline, tagger, extractor, default_threshold=threshold, ui_dir=ui_dir)
    except SlcError as error:
        _fail(error)
    uvicorn.run(app, host=host, port=port)


@main.command()
@click.argument("library_dir", type=click.Path(exists=True, file_okay=False))
def index(library_dir) -> None:
    """Validate a template library directory and report index statistics."""
    from .cicero import parse_template

    try:
        records = retrieval.load_library(library_dir)
        idx = retrieval.TemplateIndex()
        for record in records:
            parse_template(record.cicero_text)
            concerto.parse_model(record.concerto_text)
            idx.index(record)
    except SlcError as error:
        _fail(error)
        return
    stats = idx.stats()
    click.echo(f"indexed {stats.doc_count} templates, {len(stats.doc_frequencies)} distinct terms")


@main.command()
@click.argument("document", type=click.Path(exists=True, dir_okay=False))
@click.option("--template", "template_id", required=True, help="Template id from the library.")
@click.option("--library", "library_dir", envvar="SLCFORGE_LIBRARY_DIR", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--answers", "answers_path", type=click.Path(exists=True, dir_okay=False), default=None, help="JSON answer key: field -> phrase, for the baseline models.")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--threshold", default=0.5, type=float, show_default=True)
@click.option("--force", is_flag=True, help="Emit even when the instance fails validation.")
def convert(document, template_id, library_dir, answers_path, out_dir, threshold, force) -> None:
    """Convert one contract file using the baseline tagger and extractor.

    The answer key seeds both models: each field's phrase becomes a
    gazetteer entry under the label implied by the field's type, and the
    extractor finds the same phrases when their questions come up.
    """
    text = Path(document).read_text(encoding="utf-8")
    answers: dict[str, str] = {}
    if answers_path:
        answers = json.loads(Path(answers_path).read_text(encoding="utf-8"))
    try:
        pipeline = ConversionPipeline(library_dir=library_dir)
        job = pipeline.create_job(text)
        pipeline.select_template(job.id, template_id)
        record = pipeline.index.record(template_id)
        model = concerto.parse_model(record.concerto_text)
        fields = {fd.name: fd for fd in concerto.effective_fields(model, concerto.contract_class(model))}
        gazetteers: dict[str, set[str]] = {}
        for field_name, phrase in answers.items():
            fd = fields.get(field_name)
            label = _LABEL_FOR_TYPE.get(fd.type_name, "String") if fd else "String"
            gazetteers.setdefault(label, set()).add(phrase)
        pipeline.auto_mark(job.id, BaselineTagger(gazetteers=gazetteers), threshold)
        pipeline.auto_extract(job.id, BaselineExtractor(answers))
        output = pipeline.emit_output(job.id, force=force)
    except SlcError as error:
        _fail(error)
        return
    job = pipeline.get_job(job.id)
    for mark in job.marks:
        surface = job.document.slice(mark.span.start, mark.span.end)
        click.echo(f"mark {mark.variable_name} [{mark.span.label}] = {surface!r}")
    instance = json.loads(output.instance_json)
    for field_name in sorted(k for k in instance if k != "$class"):
        confidence = job.confidences.get(field_name)
        shown = f"{confidence:.2f}" if confidence is not None else "manual"
        click.echo(f"value {field_name} = {instance[field_name]!r} ({shown})")
    for field_name in job.missing_fields:
        click.echo(f"value {field_name} = <unset>")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "template.cicero").write_text(output.cicero_text, encoding="utf-8")
    (out / "instance.json").write_text(output.instance_json, encoding="utf-8")
    (out / "provenance.json").write_text(
        json.dumps(output.provenance.to_dict(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    click.echo(f"wrote {out / 'template.cicero'}")
    click.echo(f"wrote {out / 'instance.json'}")
    click.echo(f"wrote {out / 'provenance.json'}")


@main.group()
def templates() -> None:
    """Template library commands."""


@templates.command("list")
@click.option("--library", "library_dir", envvar="SLCFORGE_LIBRARY_DIR", required=True, type=click.Path(exists=True, file_okay=False))
def templates_list(library_dir) -> None:
    """List templates in a library directory, one id and name per line."""
    try:
        records = retrieval.load_library(library_dir)
    except SlcError as error:
        _fail(error)
        return
    for record in sorted(records, key=lambda r: r.id):
        click.echo(f"{record.id}\t{record.name}")


if __name__ == "__main__":
    main()
