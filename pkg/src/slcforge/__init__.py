"""slcforge: contract text in, smart legal contract artifacts out."""

from .core import (
    BUILTIN_LABELS,
    ConversionJob,
    DuplicateLabel,
    JobStatus,
    LabeledSpan,
    LabelRegistry,
    SlcError,
    SourceDocument,
    Token,
    UnknownLabel,
    VariableBinding,
    new_id,
    tokenize,
)
from .cicero import (
    CiceroTemplate,
    DuplicateVariable,
    EmptyVariableName,
    Literal,
    MissingValue,
    NestedBraces,
    OverlappingMarks,
    UnbalancedBraces,
    Variable,
    apply_marks,
    list_variables,
    parse_template,
    render,
    serialize_template,
)
from .concerto import (
    ConcertoModel,
    CyclicInheritance,
    DataInstance,
    Declaration,
    DuplicateDeclaration,
    DuplicateField,
    FieldDecl,
    JsonSyntaxError,
    ModelSyntaxError,
    UnknownClass,
    UnknownField,
    UnknownSuperType,
    ValidationFailed,
    ValidationReport,
    Violation,
    canonical_json,
    contract_class,
    effective_fields,
    instance_from_json,
    instance_from_obj,
    instance_to_json,
    instance_to_obj,
    parse_model,
    print_model,
    validate_instance,
)
from .retrieval import (
    DuplicateId,
    EmptyIndex,
    IndexStats,
    LibraryError,
    TemplateIndex,
    TemplateRecord,
    UnknownId,
    build_index,
    index_terms,
    load_library,
    write_record,
)
from .tagging import (
    BaselineTagger,
    DuplicateVersion,
    InvalidPattern,
    MalformedTag,
    TaggerVersionRegistry,
    TokenLabelMatrix,
    UnknownVersion,
    aggregate_label,
    decode_spans,
    matrix_from_conll,
    propose_marks,
)
from .extraction import (
    Answer,
    BaselineExtractor,
    Chunk,
    ExtractionResult,
    ExtractorSpan,
    InvalidStride,
    MisalignedSpan,
    Question,
    chunk_document,
    coerce_value,
    extract_field,
    fill_instance,
    generate_question,
    human_field_name,
    normalize_answer,
)
from .pipeline import (
    BaselineRetrainHook,
    ContributionRecord,
    ConversionOutput,
    ConversionPipeline,
    DuplicateName,
    EmptyDocument,
    InvalidEdit,
    InvalidState,
    Provenance,
    ProvenanceMismatch,
    UnknownJob,
    job_from_dict,
    job_to_dict,
)
from .clients import (
    ProtocolViolation,
    RemoteSpanExtractor,
    RemoteTagger,
    RemoteUnavailable,
)
from .service import create_app

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
