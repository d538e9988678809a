"""A small Concerto object-model subset: classes, inheritance, typed fields.

Supported grammar:

    asset|participant|transaction|concept Name [extends Name] {
        ("o" | "-->") Type fieldName ["optional"]
        ...
    }

Namespaces, imports, enums, decorators and array types are out of scope.
``Contract`` and ``Party`` exist as built-in supertypes with no fields of
their own. Instances serialize to canonical JSON (sorted keys, compact
separators) with the class name carried in the reserved ``$class`` key.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .core import SlcError

DECLARATION_KEYWORDS = ("asset", "participant", "transaction", "concept")
PRIMITIVE_TYPES = ("String", "MonetaryAmount", "DateTime", "Integer", "Double", "Boolean")
BUILTIN_SUPERTYPES = ("Contract", "Party")

_MONETARY_RE = re.compile(r"[0-9]+(\.[0-9]+)? [A-Z]{3}\Z")


class ModelSyntaxError(SlcError):
    code = "MODEL_SYNTAX"


class UnknownSuperType(SlcError):
    code = "UNKNOWN_SUPER_TYPE"


class DuplicateDeclaration(SlcError):
    code = "DUPLICATE_DECLARATION"


class CyclicInheritance(SlcError):
    code = "CYCLIC_INHERITANCE"


class DuplicateField(SlcError):
    code = "DUPLICATE_FIELD"


class UnknownClass(SlcError):
    code = "UNKNOWN_CLASS"


class UnknownField(SlcError):
    code = "UNKNOWN_FIELD"


class JsonSyntaxError(SlcError):
    code = "JSON_SYNTAX"


class ValidationFailed(SlcError):
    code = "VALIDATION_FAILED"

    def __init__(self, report: ValidationReport) -> None:
        super().__init__(
            "instance failed validation", violations=report.to_dict()["violations"]
        )
        self.report = report


@dataclass(frozen=True)
class FieldDecl:
    type_name: str
    name: str
    relationship: bool = False
    optional: bool = False


@dataclass(frozen=True)
class Declaration:
    keyword: str
    name: str
    super_name: str | None
    fields: tuple[FieldDecl, ...]


@dataclass(frozen=True)
class ConcertoModel:
    declarations: tuple[Declaration, ...]

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for decl in self.declarations:
            if decl.name in seen or decl.name in PRIMITIVE_TYPES or decl.name in BUILTIN_SUPERTYPES:
                raise DuplicateDeclaration(
                    f"duplicate declaration: {decl.name}", name=decl.name
                )
            seen.add(decl.name)
        for decl in self.declarations:
            sup = decl.super_name
            if sup is not None and sup not in seen and sup not in BUILTIN_SUPERTYPES:
                raise UnknownSuperType(f"unknown supertype: {sup}", name=sup)
        for decl in self.declarations:
            self._check_acyclic(decl)
        for decl in self.declarations:
            names: set[str] = set()
            for fd in self._chain_fields(decl.name):
                if fd.name in names:
                    raise DuplicateField(
                        f"field declared twice in {decl.name}: {fd.name}",
                        name=fd.name,
                    )
                names.add(fd.name)

    def _check_acyclic(self, decl: Declaration) -> None:
        path = [decl.name]
        cur = decl.super_name
        while cur is not None and cur not in BUILTIN_SUPERTYPES:
            if cur in path:
                raise CyclicInheritance(
                    "inheritance cycle: " + " -> ".join(path + [cur]),
                    path=path + [cur],
                )
            path.append(cur)
            cur = self.declaration(cur).super_name

    def _chain_fields(self, class_name: str) -> list[FieldDecl]:
        # Root-first: inherited fields come before a subclass's own.
        chain: list[Declaration] = []
        cur: str | None = class_name
        while cur is not None and cur not in BUILTIN_SUPERTYPES:
            chain.append(self.declaration(cur))
            cur = chain[-1].super_name
        fields: list[FieldDecl] = []
        for decl in reversed(chain):
            fields.extend(decl.fields)
        return fields

    def declaration(self, name: str) -> Declaration:
        for decl in self.declarations:
            if decl.name == name:
                return decl
        raise UnknownClass(f"unknown class: {name}", name=name)

    def declares(self, name: str) -> bool:
        return any(d.name == name for d in self.declarations)

    def resolvable(self, name: str) -> bool:
        return (
            name in PRIMITIVE_TYPES
            or name in BUILTIN_SUPERTYPES
            or self.declares(name)
        )

    def is_subclass(self, sub: str, sup: str) -> bool:
        cur: str | None = sub
        while cur is not None:
            if cur == sup:
                return True
            if cur in BUILTIN_SUPERTYPES or not self.declares(cur):
                return False
            cur = self.declaration(cur).super_name
        return False


@dataclass
class DataInstance:
    """A typed value: the class name plus a flat map of field values.

    Values are strings, numbers, booleans, nested instances or (for
    relationship fields) reference strings. Keys are kept insertion-
    ordered here; ordering is normalized only at JSON serialization.
    """

    class_name: str
    values: dict[str, object] = field(default_factory=dict)


@dataclass(frozen=True)
class Violation:
    kind: str  # missing_field | unknown_field | type_mismatch | unknown_class
    path: str
    message: str

    def to_dict(self) -> dict:
        return {"kind": self.kind, "path": self.path, "message": self.message}


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)
    warnings: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "violations": [v.to_dict() for v in self.violations],
            "warnings": [w.to_dict() for w in self.warnings],
        }


def parse_model(text: str) -> ConcertoModel:
    """Parse model text; positions in errors are 1-based line/column."""
    toks = _scan(text)
    pos = 0
    decls: list[Declaration] = []
    while toks[pos].kind != "eof":
        decl, pos = _parse_declaration(toks, pos)
        decls.append(decl)
    return ConcertoModel(tuple(decls))


def print_model(model: ConcertoModel) -> str:
    """Canonical text form; parse_model(print_model(m)) == m."""
    blocks: list[str] = []
    for decl in model.declarations:
        head = f"{decl.keyword} {decl.name}"
        if decl.super_name is not None:
            head += f" extends {decl.super_name}"
        lines = [head + " {"]
        for fd in decl.fields:
            marker = "-->" if fd.relationship else "o"
            line = f"  {marker} {fd.type_name} {fd.name}"
            if fd.optional:
                line += " optional"
            lines.append(line)
        lines.append("}")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + ("\n" if blocks else "")


def effective_fields(model: ConcertoModel, class_name: str) -> list[FieldDecl]:
    """All fields of a class, inherited ones first in supertype order."""
    model.declaration(class_name)  # raises UnknownClass
    return model._chain_fields(class_name)


def validate_instance(model: ConcertoModel, instance: DataInstance) -> ValidationReport:
    """Check an instance against its declared class.

    Violations are data, not exceptions: callers decide whether an
    incomplete instance is acceptable at their stage of the pipeline.
    """
    report = ValidationReport()
    _validate_into(model, instance, "", report)
    return report


def _validate_into(
    model: ConcertoModel, instance: DataInstance, prefix: str, report: ValidationReport
) -> None:
    if not model.declares(instance.class_name):
        report.violations.append(
            Violation(
                "unknown_class",
                prefix or "$class",
                f"class not declared in model: {instance.class_name!r}",
            )
        )
        return
    fields = {fd.name: fd for fd in model._chain_fields(instance.class_name)}
    for fd in fields.values():
        path = f"{prefix}.{fd.name}" if prefix else fd.name
        if fd.name not in instance.values:
            if not fd.optional:
                report.violations.append(
                    Violation("missing_field", path, f"required field unset: {fd.name}")
                )
            continue
        _check_value(model, fd, instance.values[fd.name], path, report)
    for key in instance.values:
        if key not in fields:
            path = f"{prefix}.{key}" if prefix else key
            report.violations.append(
                Violation("unknown_field", path, f"field not declared: {key}")
            )


def _check_value(
    model: ConcertoModel,
    fd: FieldDecl,
    value: object,
    path: str,
    report: ValidationReport,
) -> None:
    def mismatch(expected: str) -> None:
        report.violations.append(
            Violation(
                "type_mismatch",
                path,
                f"expected {expected}, got {type(value).__name__}",
            )
        )

    if fd.relationship:
        # Relationships stay unresolved: any non-empty reference string is fine.
        if not isinstance(value, str):
            mismatch("reference string")
        return
    t = fd.type_name
    if t == "String" or t == "DateTime":
        if not isinstance(value, str):
            mismatch(t)
    elif t == "MonetaryAmount":
        if not isinstance(value, str):
            mismatch("MonetaryAmount string")
        elif not _MONETARY_RE.fullmatch(value):
            report.warnings.append(
                Violation(
                    "monetary_format",
                    path,
                    f"not in '<amount> <CUR>' form: {value!r}",
                )
            )
    elif t == "Integer":
        if isinstance(value, bool) or not isinstance(value, int):
            mismatch("Integer")
    elif t == "Double":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            mismatch("Double")
    elif t == "Boolean":
        if not isinstance(value, bool):
            mismatch("Boolean")
    elif model.declares(t):
        if not isinstance(value, DataInstance):
            mismatch(t)
        elif not model.is_subclass(value.class_name, t):
            mismatch(t)
        else:
            _validate_into(model, value, path, report)
    else:
        # Unresolvable property type: nothing to check against.
        report.warnings.append(
            Violation("unresolved_type", path, f"cannot resolve type: {t}")
        )


def canonical_json(obj: object) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def instance_to_json(instance: DataInstance) -> str:
    """Canonical JSON: sorted keys, no insignificant whitespace."""
    return canonical_json(instance_to_obj(instance))


def instance_to_obj(instance: DataInstance) -> dict:
    obj: dict[str, object] = {"$class": instance.class_name}
    for key, value in instance.values.items():
        obj[key] = instance_to_obj(value) if isinstance(value, DataInstance) else value
    return obj


def contract_class(model: ConcertoModel) -> str:
    """The class a conversion targets: the first declaration rooted in
    Contract, or failing that the first declaration."""
    if not model.declarations:
        raise UnknownClass("model declares no classes", name="")
    for decl in model.declarations:
        if model.is_subclass(decl.name, "Contract"):
            return decl.name
    return model.declarations[0].name


def instance_from_json(
    model: ConcertoModel, text: str, default_class: str | None = None
) -> DataInstance:
    """Parse and validate instance JSON; any violation is fatal here."""
    try:
        obj = json.loads(text)
    except ValueError as exc:
        raise JsonSyntaxError(f"malformed JSON: {exc}") from exc
    instance = instance_from_obj(obj, default_class)
    report = validate_instance(model, instance)
    if not report.ok:
        raise ValidationFailed(report)
    return instance


def instance_from_obj(obj: object, default_class: str | None = None) -> DataInstance:
    if not isinstance(obj, dict):
        raise JsonSyntaxError("instance JSON must be an object")
    class_name = obj.get("$class", default_class)
    if not isinstance(class_name, str) or not class_name:
        raise JsonSyntaxError("missing '$class' key")
    values: dict[str, object] = {}
    for key, value in obj.items():
        if key == "$class":
            continue
        if isinstance(value, dict):
            values[key] = instance_from_obj(value)
        elif isinstance(value, (str, int, float, bool)):
            values[key] = value
        else:
            raise JsonSyntaxError(f"unsupported value for {key!r}")
    return DataInstance(class_name, values)


@dataclass(frozen=True)
class _Tok:
    kind: str  # ident | lbrace | rbrace | arrow | eof
    text: str
    line: int
    col: int


def _scan(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
        elif ch.isspace():
            col += 1
            i += 1
        elif ch == "{":
            toks.append(_Tok("lbrace", "{", line, col))
            col += 1
            i += 1
        elif ch == "}":
            toks.append(_Tok("rbrace", "}", line, col))
            col += 1
            i += 1
        elif ch == "-":
            if text[i : i + 3] != "-->":
                raise ModelSyntaxError("expected '-->'", line=line, col=col)
            toks.append(_Tok("arrow", "-->", line, col))
            col += 3
            i += 3
        elif ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            toks.append(_Tok("ident", text[i:j], line, col))
            col += j - i
            i = j
        else:
            raise ModelSyntaxError(f"unexpected character {ch!r}", line=line, col=col)
    toks.append(_Tok("eof", "", line, col))
    return toks


def _expect(toks: list[_Tok], pos: int, kind: str, what: str) -> tuple[_Tok, int]:
    tok = toks[pos]
    if tok.kind != kind:
        raise ModelSyntaxError(
            f"expected {what}, got {tok.text or 'end of input'!r}",
            line=tok.line,
            col=tok.col,
        )
    return tok, pos + 1


def _parse_declaration(toks: list[_Tok], pos: int) -> tuple[Declaration, int]:
    kw, pos = _expect(toks, pos, "ident", "declaration keyword")
    if kw.text not in DECLARATION_KEYWORDS:
        raise ModelSyntaxError(
            f"expected one of {'/'.join(DECLARATION_KEYWORDS)}, got {kw.text!r}",
            line=kw.line,
            col=kw.col,
        )
    name, pos = _expect(toks, pos, "ident", "declaration name")
    super_name: str | None = None
    if toks[pos].kind == "ident" and toks[pos].text == "extends":
        pos += 1
        sup, pos = _expect(toks, pos, "ident", "supertype name")
        super_name = sup.text
    _, pos = _expect(toks, pos, "lbrace", "'{'")
    fields: list[FieldDecl] = []
    while toks[pos].kind != "rbrace":
        tok = toks[pos]
        if tok.kind == "arrow":
            relationship = True
            pos += 1
        elif tok.kind == "ident" and tok.text == "o":
            relationship = False
            pos += 1
        else:
            raise ModelSyntaxError(
                f"expected 'o', '-->' or '}}', got {tok.text or 'end of input'!r}",
                line=tok.line,
                col=tok.col,
            )
        type_tok, pos = _expect(toks, pos, "ident", "field type")
        name_tok, pos = _expect(toks, pos, "ident", "field name")
        optional = False
        if toks[pos].kind == "ident" and toks[pos].text == "optional":
            optional = True
            pos += 1
        fields.append(
            FieldDecl(type_tok.text, name_tok.text, relationship=relationship, optional=optional)
        )
    pos += 1  # consume '}'
    return Declaration(kw.text, name.text, super_name, tuple(fields)), pos
