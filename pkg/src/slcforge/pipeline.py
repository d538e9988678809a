"""The conversion pipeline: jobs, their state machine, and persistence.

A job walks Created -> TemplateSelected -> Marked -> Extracted -> Emitted.
Transitions only move forward, with one sanctioned kind of re-entry:
marking and extraction may be re-run before the job is emitted, which
clears everything derived downstream. Every mutation is validated before
any state changes, so a rejected call leaves the job exactly as it was.

Jobs persist as one JSON file each, written atomically (temp file then
rename); the contribution queue is a single JSON list handled the same
way. Everything needed to re-execute the automatic path byte-for-byte is
pinned on the job: template id, tagger versions, threshold, extractor id.
"""

from __future__ import annotations

import json
import os
import tempfile
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Mapping, Protocol, Sequence

from . import cicero, concerto, extraction, retrieval, tagging
from .cicero import CiceroTemplate, DuplicateVariable, OverlappingMarks
from .concerto import DataInstance, UnknownField, ValidationFailed
from .core import (
    ConversionJob,
    JobStatus,
    LabeledSpan,
    LabelRegistry,
    SlcError,
    SourceDocument,
    VariableBinding,
    new_id,
)
from .extraction import SpanExtractor
from .retrieval import TemplateIndex, TemplateRecord
from .tagging import Tagger


class EmptyDocument(SlcError):
    code = "EMPTY_DOCUMENT"


class UnknownJob(SlcError):
    code = "UNKNOWN_JOB"


class InvalidState(SlcError):
    code = "INVALID_STATE"


class InvalidEdit(SlcError):
    code = "INVALID_EDIT"


class DuplicateName(SlcError):
    code = "DUPLICATE_NAME"


class ProvenanceMismatch(SlcError):
    code = "PROVENANCE_MISMATCH"


@dataclass(frozen=True)
class Provenance:
    """The compact record that re-executes an automatic conversion."""

    template_id: str
    tagger_versions: dict[str, str]
    extractor_id: str | None
    threshold: float | None
    created_at: str
    emitted_at: str

    def to_dict(self) -> dict:
        return {
            "template_id": self.template_id,
            "tagger_versions": dict(self.tagger_versions),
            "extractor_id": self.extractor_id,
            "threshold": self.threshold,
            "created_at": self.created_at,
            "emitted_at": self.emitted_at,
        }

    @classmethod
    def from_dict(cls, data: dict) -> Provenance:
        return cls(
            template_id=data["template_id"],
            tagger_versions=dict(data["tagger_versions"]),
            extractor_id=data.get("extractor_id"),
            threshold=data.get("threshold"),
            created_at=data["created_at"],
            emitted_at=data["emitted_at"],
        )


@dataclass(frozen=True)
class ConversionOutput:
    cicero_text: str
    instance_json: str
    provenance: Provenance

    def to_dict(self) -> dict:
        return {
            "cicero_text": self.cicero_text,
            "instance_json": self.instance_json,
            "provenance": self.provenance.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> ConversionOutput:
        return cls(
            cicero_text=data["cicero_text"],
            instance_json=data["instance_json"],
            provenance=Provenance.from_dict(data["provenance"]),
        )

    def canonical(self) -> str:
        return concerto.canonical_json(self.to_dict())


@dataclass(frozen=True)
class ContributionRecord:
    """One entry in the active-learning queue."""

    id: str
    job_id: str
    template_id: str
    name: str
    sample_text: str
    marks: tuple[VariableBinding, ...]
    instance_json: str
    queued_at: str

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "job_id": self.job_id,
            "template_id": self.template_id,
            "name": self.name,
            "sample_text": self.sample_text,
            "marks": [m.to_dict() for m in self.marks],
            "instance_json": self.instance_json,
            "queued_at": self.queued_at,
        }

    @classmethod
    def from_dict(cls, data: dict) -> ContributionRecord:
        return cls(
            id=data["id"],
            job_id=data["job_id"],
            template_id=data["template_id"],
            name=data["name"],
            sample_text=data["sample_text"],
            marks=tuple(VariableBinding.from_dict(m) for m in data["marks"]),
            instance_json=data["instance_json"],
            queued_at=data["queued_at"],
        )


class RetrainHook(Protocol):
    def retrain(self, records: Sequence[ContributionRecord]) -> None: ...


class BaselineRetrainHook:
    """Rebuilds gazetteers from corrected marks; produces a fresh tagger."""

    def __init__(self, version: str = "baseline:v2") -> None:
        self.version = version
        self.tagger: tagging.BaselineTagger | None = None

    def retrain(self, records: Sequence[ContributionRecord]) -> None:
        gazetteers: dict[str, set[str]] = {}
        for record in records:
            for mark in record.marks:
                for span in (mark.span, *mark.secondary_spans):
                    surface = record.sample_text[span.start : span.end]
                    gazetteers.setdefault(span.label, set()).add(surface)
        self.tagger = tagging.BaselineTagger(gazetteers=gazetteers, version=self.version)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def job_to_dict(job: ConversionJob) -> dict:
    return {
        "id": job.id,
        "document_id": job.document.id,
        "text": job.document.text,
        "template_id": job.template_id,
        "data_class": job.data_class,
        "marks": [m.to_dict() for m in job.marks],
        "instance": concerto.instance_to_obj(job.instance) if job.instance else None,
        "tagger_versions": dict(job.tagger_versions),
        "status": job.status.value,
        "mark_threshold": job.mark_threshold,
        "extractor_id": job.extractor_id,
        "confidences": dict(job.confidences),
        "missing_fields": list(job.missing_fields),
        "created_at": job.created_at,
        "emitted_at": job.emitted_at,
        "output": job.output.to_dict() if job.output else None,
    }


def job_from_dict(data: dict) -> ConversionJob:
    instance = None
    if data.get("instance") is not None:
        instance = concerto.instance_from_obj(data["instance"])
    return ConversionJob(
        id=data["id"],
        document=SourceDocument.from_text(data["text"], doc_id=data["document_id"]),
        template_id=data.get("template_id"),
        data_class=data.get("data_class"),
        marks=[VariableBinding.from_dict(m) for m in data.get("marks", [])],
        instance=instance,
        tagger_versions=dict(data.get("tagger_versions", {})),
        status=JobStatus(data["status"]),
        mark_threshold=data.get("mark_threshold"),
        extractor_id=data.get("extractor_id"),
        confidences=dict(data.get("confidences", {})),
        missing_fields=list(data.get("missing_fields", [])),
        created_at=data.get("created_at", ""),
        emitted_at=data.get("emitted_at"),
        output=ConversionOutput.from_dict(data["output"]) if data.get("output") else None,
    )


class ConversionPipeline:
    """Coordinates the template index, taggers, extractors and job store.

    ``data_dir`` (optional) is where jobs and the contribution queue
    persist; ``library_dir`` (optional) is read at startup to build the
    index and receives contributed templates.
    """

    def __init__(
        self,
        data_dir: str | Path | None = None,
        library_dir: str | Path | None = None,
        label_registry: LabelRegistry | None = None,
        version_registry: tagging.TaggerVersionRegistry | None = None,
    ) -> None:
        self.data_dir = Path(data_dir) if data_dir else None
        self.library_dir = Path(library_dir) if library_dir else None
        self.labels = label_registry or LabelRegistry()
        self.versions = version_registry or tagging.TaggerVersionRegistry()
        self.index = TemplateIndex()
        self._jobs: dict[str, ConversionJob] = {}
        self._queue: list[ContributionRecord] = []
        self._lock = threading.RLock()
        if self.library_dir and self.library_dir.is_dir():
            for record in retrieval.load_library(self.library_dir):
                self.index.index(record)
        if self.data_dir:
            self._load_state()

    # ------------------------------------------------------------------
    # persistence

    def _jobs_dir(self) -> Path:
        assert self.data_dir is not None
        return self.data_dir / "jobs"

    def _queue_path(self) -> Path:
        assert self.data_dir is not None
        return self.data_dir / "contributions.json"

    def _load_state(self) -> None:
        jobs_dir = self._jobs_dir()
        if jobs_dir.is_dir():
            for path in sorted(jobs_dir.glob("*.json")):
                job = job_from_dict(json.loads(path.read_text(encoding="utf-8")))
                self._jobs[job.id] = job
        queue_path = self._queue_path()
        if queue_path.is_file():
            raw = json.loads(queue_path.read_text(encoding="utf-8"))
            self._queue = [ContributionRecord.from_dict(item) for item in raw]

    def _persist_job(self, job: ConversionJob) -> None:
        if self.data_dir is None:
            return
        path = self._jobs_dir() / f"{job.id}.json"
        _atomic_write(path, json.dumps(job_to_dict(job), indent=2, sort_keys=True) + "\n")

    def _persist_queue(self) -> None:
        if self.data_dir is None:
            return
        text = json.dumps([r.to_dict() for r in self._queue], indent=2, sort_keys=True)
        _atomic_write(self._queue_path(), text + "\n")

    # ------------------------------------------------------------------
    # template library

    def add_template(self, record: TemplateRecord, persist: bool = True) -> None:
        with self._lock:
            for existing in self.index.records():
                if existing.name == record.name:
                    raise DuplicateName(
                        f"template name already in library: {record.name}",
                        name=record.name,
                    )
            self.index.index(record)
            if persist and self.library_dir:
                retrieval.write_record(self.library_dir, record)

    # ------------------------------------------------------------------
    # job lifecycle

    def get_job(self, job_id: str) -> ConversionJob:
        with self._lock:
            try:
                return self._jobs[job_id]
            except KeyError:
                raise UnknownJob(f"no job with id: {job_id}", job_id=job_id) from None

    def jobs(self) -> list[ConversionJob]:
        with self._lock:
            return list(self._jobs.values())

    def _require_status(
        self, job: ConversionJob, allowed: tuple[JobStatus, ...], op: str
    ) -> None:
        if job.status not in allowed:
            raise InvalidState(
                f"{op} not allowed while job is {job.status.value}",
                job_id=job.id,
                status=job.status.value,
                operation=op,
            )

    def create_job(self, text: str) -> ConversionJob:
        if not text.strip():
            raise EmptyDocument("document text is empty")
        with self._lock:
            job = ConversionJob(
                id=new_id(),
                document=SourceDocument.from_text(text),
                created_at=_now(),
            )
            self._jobs[job.id] = job
            self._persist_job(job)
            return job

    def suggest_templates(
        self, job_id: str, top_n: int = 5
    ) -> list[tuple[TemplateRecord, float]]:
        with self._lock:
            job = self.get_job(job_id)
            return self.index.more_like_this(job.document.text, top_n)

    def select_template(self, job_id: str, template_id: str) -> ConversionJob:
        with self._lock:
            job = self.get_job(job_id)
            self._require_status(job, (JobStatus.CREATED,), "select_template")
            record = self.index.record(template_id)
            # Parse both artifacts before touching the job: a broken
            # template must leave it untouched.
            cicero.parse_template(record.cicero_text)
            model = concerto.parse_model(record.concerto_text)
            job.template_id = template_id
            job.data_class = concerto.contract_class(model)
            job.status = JobStatus.TEMPLATE_SELECTED
            self._persist_job(job)
            return job

    _MARKABLE = (JobStatus.TEMPLATE_SELECTED, JobStatus.MARKED, JobStatus.EXTRACTED)
    _EXTRACTABLE = (JobStatus.MARKED, JobStatus.EXTRACTED)

    def _reset_extraction(self, job: ConversionJob) -> None:
        job.instance = None
        job.confidences = {}
        job.missing_fields = []
        job.extractor_id = None
        job.output = None
        job.emitted_at = None

    def _template_for(self, job: ConversionJob) -> tuple[TemplateRecord, CiceroTemplate]:
        assert job.template_id is not None
        record = self.index.record(job.template_id)
        return record, cicero.parse_template(record.cicero_text)

    def auto_mark(
        self, job_id: str, tagger: Tagger, threshold: float = 0.5
    ) -> ConversionJob:
        if not 0.0 <= threshold <= 1.0:
            raise InvalidEdit(f"threshold out of range: {threshold}")
        with self._lock:
            job = self.get_job(job_id)
            self._require_status(job, self._MARKABLE, "auto_mark")
            _, template = self._template_for(job)
            marks = tagging.propose_marks(
                job.document, template, tagger, threshold, registry=self.labels
            )
            job.marks = marks
            job.tagger_versions = dict(tagger.versions())
            job.mark_threshold = threshold
            self._reset_extraction(job)
            job.status = JobStatus.MARKED
            self._persist_job(job)
            return job

    def update_marks(self, job_id: str, edits: Sequence[Mapping]) -> ConversionJob:
        """Apply add/remove/rename/retype edits as one atomic batch."""
        with self._lock:
            job = self.get_job(job_id)
            self._require_status(job, self._MARKABLE, "update_marks")
            marks = list(job.marks)

            def find(name: str) -> int:
                for i, m in enumerate(marks):
                    if m.variable_name == name:
                        return i
                raise InvalidEdit(f"no mark named {name!r}", variable_name=name)

            def named(edit: Mapping, key: str = "variable_name") -> str:
                name = edit.get(key)
                if not isinstance(name, str):
                    raise InvalidEdit(f"edit needs a string {key!r}")
                return name

            for edit in edits:
                op = edit.get("op")
                if op == "add":
                    label = edit.get("label", "String")
                    concerto_type = edit.get("concerto_type")
                    if concerto_type is None:
                        concerto_type = (
                            self.labels.concerto_type(label)
                            if label in self.labels
                            else "String"
                        )
                    name = named(edit)
                    try:
                        binding = VariableBinding(
                            span=LabeledSpan(
                                start=int(edit["start"]),
                                end=int(edit["end"]),
                                label=label,
                                probability=1.0,
                            ),
                            variable_name=name,
                            concerto_type=concerto_type,
                            raw=bool(edit.get("raw", False)),
                        )
                    except (KeyError, ValueError, TypeError, SlcError) as exc:
                        raise InvalidEdit(f"bad add edit: {exc}") from exc
                    marks.append(binding)
                elif op == "remove":
                    marks.pop(find(named(edit)))
                elif op == "rename":
                    i = find(named(edit))
                    new_name = named(edit, "new_name")
                    try:
                        marks[i] = VariableBinding(
                            span=marks[i].span,
                            variable_name=new_name,
                            concerto_type=marks[i].concerto_type,
                            raw=marks[i].raw,
                            secondary_spans=marks[i].secondary_spans,
                        )
                    except SlcError as exc:
                        raise InvalidEdit(f"bad rename edit: {exc}") from exc
                elif op == "retype":
                    i = find(named(edit))
                    marks[i] = VariableBinding(
                        span=marks[i].span,
                        variable_name=marks[i].variable_name,
                        concerto_type=named(edit, "concerto_type"),
                        raw=bool(edit.get("raw", marks[i].raw)),
                        secondary_spans=marks[i].secondary_spans,
                    )
                else:
                    raise InvalidEdit(f"unknown edit op: {op!r}", op=op)

            self._validate_marks(job.document, marks)
            job.marks = marks
            self._reset_extraction(job)
            job.status = JobStatus.MARKED
            self._persist_job(job)
            return job

    @staticmethod
    def _validate_marks(document: SourceDocument, marks: Sequence[VariableBinding]) -> None:
        names: set[str] = set()
        for mark in marks:
            if mark.variable_name in names:
                raise DuplicateVariable(
                    f"duplicate variable: {mark.variable_name}",
                    name=mark.variable_name,
                )
            names.add(mark.variable_name)
            span = mark.span
            if span.end > len(document.text):
                raise InvalidEdit(
                    f"mark {mark.variable_name!r} extends past the document",
                    variable_name=mark.variable_name,
                )
            if not document.is_token_aligned(span.start, span.end):
                raise InvalidEdit(
                    f"mark {mark.variable_name!r} is not aligned to token boundaries",
                    variable_name=mark.variable_name,
                )
        ordered = sorted(marks, key=lambda m: m.span.start)
        for a, b in zip(ordered, ordered[1:]):
            if a.span.end > b.span.start:
                raise OverlappingMarks(
                    f"marks overlap: {a.variable_name} and {b.variable_name}",
                    a=a.variable_name,
                    b=b.variable_name,
                )

    def auto_extract(
        self,
        job_id: str,
        extractor: SpanExtractor,
        window: int = extraction.DEFAULT_WINDOW,
        stride: int = extraction.DEFAULT_STRIDE,
    ) -> ConversionJob:
        with self._lock:
            job = self.get_job(job_id)
            self._require_status(job, self._EXTRACTABLE, "auto_extract")
            record, _ = self._template_for(job)
            model = concerto.parse_model(record.concerto_text)
            assert job.data_class is not None
            result = extraction.fill_instance(
                model, job.data_class, job.document, extractor, window, stride
            )
            job.instance = result.instance
            job.confidences = dict(result.confidences)
            job.missing_fields = list(result.missing)
            job.extractor_id = extractor.extractor_id
            job.output = None
            job.emitted_at = None
            job.status = JobStatus.EXTRACTED
            self._persist_job(job)
            return job

    def update_value(self, job_id: str, field_name: str, value: object) -> ConversionJob:
        """Manual value entry or override; confidence becomes 1.0."""
        with self._lock:
            job = self.get_job(job_id)
            self._require_status(job, self._EXTRACTABLE, "update_value")
            record, _ = self._template_for(job)
            model = concerto.parse_model(record.concerto_text)
            assert job.data_class is not None
            fields = {fd.name: fd for fd in concerto.effective_fields(model, job.data_class)}
            if field_name not in fields:
                raise UnknownField(
                    f"not a field of {job.data_class}: {field_name}", field=field_name
                )
            if isinstance(value, str):
                fd = fields[field_name]
                value = extraction.coerce_value(value, fd.type_name, fd.relationship)
            if job.instance is None:
                job.instance = DataInstance(job.data_class)
            job.instance.values[field_name] = value
            job.confidences[field_name] = 1.0
            job.missing_fields = [f for f in job.missing_fields if f != field_name]
            job.output = None
            job.emitted_at = None
            job.status = JobStatus.EXTRACTED
            self._persist_job(job)
            return job

    def emit_output(self, job_id: str, force: bool = False) -> ConversionOutput:
        """Produce the final artifact pair and freeze the job.

        The instance must validate against the template's model unless
        ``force`` is set; marks must be a clean (non-overlapping) set.
        """
        with self._lock:
            job = self.get_job(job_id)
            self._require_status(job, (JobStatus.EXTRACTED,), "emit_output")
            record, _ = self._template_for(job)
            model = concerto.parse_model(record.concerto_text)
            assert job.data_class is not None
            instance = job.instance or DataInstance(job.data_class)
            report = concerto.validate_instance(model, instance)
            if not report.ok and not force:
                raise ValidationFailed(report)
            marked = cicero.apply_marks(job.document, job.marks)
            emitted_at = _now()
            output = ConversionOutput(
                cicero_text=cicero.serialize_template(marked),
                instance_json=concerto.instance_to_json(instance),
                provenance=Provenance(
                    template_id=job.template_id or "",
                    tagger_versions=dict(job.tagger_versions),
                    extractor_id=job.extractor_id,
                    threshold=job.mark_threshold,
                    created_at=job.created_at,
                    emitted_at=emitted_at,
                ),
            )
            job.instance = instance
            job.output = output
            job.emitted_at = emitted_at
            job.status = JobStatus.EMITTED
            self._persist_job(job)
            return output

    # ------------------------------------------------------------------
    # contribution / active learning

    def contribute(self, job_id: str, name: str) -> ContributionRecord:
        """Add the finished conversion to the library and queue it for
        retraining. The new template is retrievable immediately."""
        with self._lock:
            job = self.get_job(job_id)
            self._require_status(job, (JobStatus.EMITTED,), "contribute")
            assert job.output is not None
            record = TemplateRecord(
                id=new_id(),
                name=name,
                sample_text=job.document.text,
                cicero_text=job.output.cicero_text,
                concerto_text=self.index.record(job.output.provenance.template_id).concerto_text
                if job.output.provenance.template_id in self.index
                else "",
                metadata={"origin": "contribution", "job_id": job.id},
            )
            self.add_template(record)  # raises DuplicateName before any change
            contribution = ContributionRecord(
                id=new_id(),
                job_id=job.id,
                template_id=record.id,
                name=name,
                sample_text=job.document.text,
                marks=tuple(job.marks),
                instance_json=job.output.instance_json,
                queued_at=_now(),
            )
            self._queue.append(contribution)
            self._persist_queue()
            return contribution

    def contribution_queue(self) -> list[ContributionRecord]:
        with self._lock:
            return list(self._queue)

    def run_retrain(self, hook: RetrainHook) -> int:
        """Hand the queue to a retraining hook, then clear it."""
        with self._lock:
            records = list(self._queue)
            hook.retrain(records)
            self._queue = []
            self._persist_queue()
            return len(records)

    # ------------------------------------------------------------------
    # provenance replay

    def replay(
        self,
        provenance: Provenance,
        text: str,
        tagger: Tagger,
        extractor: SpanExtractor,
        window: int = extraction.DEFAULT_WINDOW,
        stride: int = extraction.DEFAULT_STRIDE,
    ) -> ConversionOutput:
        """Re-execute the automatic path recorded in a provenance record.

        The supplied tagger and extractor must match the pinned versions;
        manual mark or value edits are not part of the provenance tuple,
        so replay covers the tagger/extractor-driven path.
        """
        if dict(tagger.versions()) != dict(provenance.tagger_versions):
            raise ProvenanceMismatch(
                "tagger versions do not match provenance",
                expected=provenance.tagger_versions,
                actual=tagger.versions(),
            )
        if provenance.extractor_id is not None and extractor.extractor_id != provenance.extractor_id:
            raise ProvenanceMismatch(
                "extractor id does not match provenance",
                expected=provenance.extractor_id,
                actual=extractor.extractor_id,
            )
        with self._lock:
            record = self.index.record(provenance.template_id)
        document = SourceDocument.from_text(text)
        template = cicero.parse_template(record.cicero_text)
        model = concerto.parse_model(record.concerto_text)
        threshold = 0.5 if provenance.threshold is None else provenance.threshold
        marks = tagging.propose_marks(
            document, template, tagger, threshold, registry=self.labels
        )
        result = extraction.fill_instance(
            model, concerto.contract_class(model), document, extractor, window, stride
        )
        marked = cicero.apply_marks(document, marks)
        return ConversionOutput(
            cicero_text=cicero.serialize_template(marked),
            instance_json=concerto.instance_to_json(result.instance),
            provenance=provenance,
        )
