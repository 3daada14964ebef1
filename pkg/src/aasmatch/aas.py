"""Typed model and parser for a subset of the AAS JSON serialization.

Recognized shape::

    {
      "assetAdministrationShells": [
        {"id": ..., "idShort": ..., "assetKind": "Instance"|"Type",
         "submodels": ["sm-id", ...]}
      ],
      "submodels": [
        {"id": ..., "idShort": ..., "semanticId": ...,
         "submodelElements": [
            {"idShort": ..., "semanticId": ..., "valueType": ..., "value": ...}
         ]}
      ]
    }

References and semanticIds may also be given in the metamodel's
``{"keys": [{"value": ...}]}`` form, ``valueType`` may use ``xs:`` names, and
``assetKind`` may sit inside ``assetInformation``. Unknown keys are ignored and
recorded in :attr:`AASDocument.warnings`.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from typing import Any, Optional, Union

from .errors import JSONSyntaxError, MissingFieldError, TypeMismatchError

logger = logging.getLogger(__name__)

VALUE_TYPES = ("string", "integer", "decimal", "boolean")
ASSET_KINDS = ("Instance", "Type")

_XS_ALIASES = {
    "xs:string": "string",
    "xs:anyURI": "string",
    "xs:integer": "integer",
    "xs:int": "integer",
    "xs:long": "integer",
    "xs:short": "integer",
    "xs:byte": "integer",
    "xs:nonNegativeInteger": "integer",
    "xs:positiveInteger": "integer",
    "xs:unsignedInt": "integer",
    "xs:unsignedLong": "integer",
    "xs:decimal": "decimal",
    "xs:double": "decimal",
    "xs:float": "decimal",
    "xs:boolean": "boolean",
}

_INTEGER = re.compile(r"^[+-]?[0-9]+$")
_DECIMAL = re.compile(r"^[+-]?([0-9]+(\.[0-9]*)?|\.[0-9]+)([eE][+-]?[0-9]+)?$")
_BOOLEAN = ("true", "false", "1", "0")


def lexical_ok(value: str, value_type: str) -> bool:
    """Whether ``value`` is a valid lexical form for ``value_type``."""
    if value_type == "string":
        return True
    if value_type == "integer":
        return bool(_INTEGER.match(value))
    if value_type == "decimal":
        return bool(_DECIMAL.match(value))
    if value_type == "boolean":
        return value in _BOOLEAN
    return False


@dataclass(frozen=True)
class SubmodelElement:
    id_short: str
    value_type: str = "string"
    semantic_id: Optional[str] = None
    value: Optional[str] = None


@dataclass(frozen=True)
class Submodel:
    id: str
    id_short: str
    semantic_id: Optional[str] = None
    elements: tuple[SubmodelElement, ...] = ()


@dataclass(frozen=True)
class Shell:
    id: str
    id_short: str
    asset_kind: str = "Instance"
    submodel_refs: tuple[str, ...] = ()


@dataclass(frozen=True)
class AASDocument:
    shells: tuple[Shell, ...] = ()
    submodels: tuple[Submodel, ...] = ()
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def submodel(self, sm_id: str) -> Optional[Submodel]:
        for sm in self.submodels:
            if sm.id == sm_id:
                return sm
        return None

    def to_json(self) -> dict:
        """Inverse of :func:`parse_aas_json` on the recognized subset."""
        shells = []
        for sh in self.shells:
            shells.append(
                {
                    "id": sh.id,
                    "idShort": sh.id_short,
                    "assetKind": sh.asset_kind,
                    "submodels": list(sh.submodel_refs),
                }
            )
        submodels = []
        for sm in self.submodels:
            entry: dict[str, Any] = {"id": sm.id, "idShort": sm.id_short}
            if sm.semantic_id is not None:
                entry["semanticId"] = sm.semantic_id
            elems = []
            for el in sm.elements:
                e: dict[str, Any] = {"idShort": el.id_short}
                if el.semantic_id is not None:
                    e["semanticId"] = el.semantic_id
                e["valueType"] = el.value_type
                if el.value is not None:
                    e["value"] = el.value
                elems.append(e)
            entry["submodelElements"] = elems
            submodels.append(entry)
        return {"assetAdministrationShells": shells, "submodels": submodels}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, ensure_ascii=False) + "\n"


@dataclass(frozen=True)
class Violation:
    kind: str
    path: str
    message: str


class _Reader:
    def __init__(self):
        self.warnings: list[str] = []

    def warn_unknown(self, obj: dict, known: set[str], path: str):
        for key in obj:
            if key not in known:
                msg = f"{path}.{key}: unknown key ignored"
                self.warnings.append(msg)
                logger.warning(msg)

    @staticmethod
    def require(obj: dict, key: str, path: str):
        if key not in obj or obj[key] is None:
            raise MissingFieldError(f"missing required field {key!r}", f"{path}.{key}")
        return obj[key]

    @staticmethod
    def string(value, path: str) -> str:
        if not isinstance(value, str):
            raise TypeMismatchError(f"expected string, got {type(value).__name__}", path)
        return value

    @staticmethod
    def obj(value, path: str) -> dict:
        if not isinstance(value, dict):
            raise TypeMismatchError(f"expected object, got {type(value).__name__}", path)
        return value

    @staticmethod
    def array(value, path: str) -> list:
        if not isinstance(value, list):
            raise TypeMismatchError(f"expected array, got {type(value).__name__}", path)
        return value

    def reference(self, value, path: str) -> str:
        """A plain identifier string, or the last key of a Reference object."""
        if isinstance(value, str):
            return value
        ref = self.obj(value, path)
        keys = self.array(self.require(ref, "keys", path), f"{path}.keys")
        if not keys:
            raise MissingFieldError("reference has no keys", f"{path}.keys")
        last = self.obj(keys[-1], f"{path}.keys[{len(keys) - 1}]")
        return self.string(
            self.require(last, "value", f"{path}.keys[{len(keys) - 1}]"),
            f"{path}.keys[{len(keys) - 1}].value",
        )

    def element(self, raw, path: str) -> Optional[SubmodelElement]:
        el = self.obj(raw, path)
        model_type = el.get("modelType", "Property")
        if isinstance(model_type, dict):
            model_type = model_type.get("name", "Property")
        if model_type != "Property":
            msg = f"{path}: element of modelType {model_type!r} skipped"
            self.warnings.append(msg)
            logger.warning(msg)
            return None
        self.warn_unknown(el, {"idShort", "semanticId", "valueType", "value", "modelType"}, path)
        id_short = self.string(self.require(el, "idShort", path), f"{path}.idShort")
        vt_raw = self.string(self.require(el, "valueType", path), f"{path}.valueType")
        value_type = _XS_ALIASES.get(vt_raw, vt_raw)
        if value_type not in VALUE_TYPES:
            raise TypeMismatchError(f"unsupported valueType {vt_raw!r}", f"{path}.valueType")
        semantic_id = None
        if el.get("semanticId") is not None:
            semantic_id = self.reference(el["semanticId"], f"{path}.semanticId")
        value = None
        if el.get("value") is not None:
            value = el["value"]
            if isinstance(value, bool):
                value = "true" if value else "false"
            elif isinstance(value, (int, float)):
                value = repr(value)
            value = self.string(value, f"{path}.value")
            if not lexical_ok(value, value_type):
                raise TypeMismatchError(
                    f"value {value!r} is not a valid {value_type}", f"{path}.value"
                )
        return SubmodelElement(id_short, value_type, semantic_id, value)

    def submodel(self, raw, path: str) -> Submodel:
        sm = self.obj(raw, path)
        self.warn_unknown(sm, {"id", "idShort", "semanticId", "submodelElements", "modelType"}, path)
        sm_id = self.string(self.require(sm, "id", path), f"{path}.id")
        id_short = self.string(self.require(sm, "idShort", path), f"{path}.idShort")
        semantic_id = None
        if sm.get("semanticId") is not None:
            semantic_id = self.reference(sm["semanticId"], f"{path}.semanticId")
        elements = []
        raw_elems = self.array(sm.get("submodelElements") or [], f"{path}.submodelElements")
        for j, raw_el in enumerate(raw_elems):
            el = self.element(raw_el, f"{path}.submodelElements[{j}]")
            if el is not None:
                elements.append(el)
        return Submodel(sm_id, id_short, semantic_id, tuple(elements))

    def shell(self, raw, path: str) -> Shell:
        sh = self.obj(raw, path)
        self.warn_unknown(
            sh, {"id", "idShort", "assetKind", "assetInformation", "submodels", "modelType"}, path
        )
        sh_id = self.string(self.require(sh, "id", path), f"{path}.id")
        id_short = self.string(self.require(sh, "idShort", path), f"{path}.idShort")
        kind = sh.get("assetKind")
        kind_path = f"{path}.assetKind"
        if kind is None and isinstance(sh.get("assetInformation"), dict):
            kind = sh["assetInformation"].get("assetKind")
            kind_path = f"{path}.assetInformation.assetKind"
        if kind is None:
            kind = "Instance"
        kind = self.string(kind, kind_path)
        if kind not in ASSET_KINDS:
            raise TypeMismatchError(f"assetKind must be one of {ASSET_KINDS}", kind_path)
        refs = self.array(sh.get("submodels") or [], f"{path}.submodels")
        submodel_refs = tuple(
            self.reference(r, f"{path}.submodels[{k}]") for k, r in enumerate(refs)
        )
        return Shell(sh_id, id_short, kind, submodel_refs)


def parse_aas_json(text: Union[bytes, str]) -> AASDocument:
    """Parse AAS JSON into an :class:`AASDocument`.

    Raises:
        JSONSyntaxError: the input is not JSON.
        MissingFieldError: a required field is absent (``path`` names it).
        TypeMismatchError: a field has the wrong JSON type or an invalid
            lexical value for its ``valueType``.
    """
    try:
        data = json.loads(text)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise JSONSyntaxError(str(exc)) from None
    reader = _Reader()
    root = reader.obj(data, "$")
    reader.warn_unknown(root, {"assetAdministrationShells", "submodels", "conceptDescriptions"}, "$")
    shells = tuple(
        reader.shell(raw, f"assetAdministrationShells[{i}]")
        for i, raw in enumerate(
            reader.array(root.get("assetAdministrationShells") or [], "assetAdministrationShells")
        )
    )
    submodels = tuple(
        reader.submodel(raw, f"submodels[{i}]")
        for i, raw in enumerate(reader.array(root.get("submodels") or [], "submodels"))
    )
    return AASDocument(shells, submodels, tuple(reader.warnings))


def validate(doc: AASDocument) -> list[Violation]:
    """Check document invariants; an empty list means the document is consistent."""
    out: list[Violation] = []
    seen_ids: set[str] = set()
    for i, sh in enumerate(doc.shells):
        path = f"shells[{i}]"
        if not sh.id:
            out.append(Violation("empty-field", f"{path}.id", "shell id is empty"))
        if not sh.id_short:
            out.append(Violation("empty-field", f"{path}.idShort", "shell idShort is empty"))
        if sh.asset_kind not in ASSET_KINDS:
            out.append(Violation("invalid-value", f"{path}.assetKind", f"bad assetKind {sh.asset_kind!r}"))
        if sh.id in seen_ids:
            out.append(Violation("duplicate-id", f"{path}.id", f"id {sh.id!r} already used"))
        seen_ids.add(sh.id)
    sm_ids: set[str] = set()
    for i, sm in enumerate(doc.submodels):
        path = f"submodels[{i}]"
        if not sm.id:
            out.append(Violation("empty-field", f"{path}.id", "submodel id is empty"))
        if not sm.id_short:
            out.append(Violation("empty-field", f"{path}.idShort", "submodel idShort is empty"))
        if sm.id in seen_ids:
            out.append(Violation("duplicate-id", f"{path}.id", f"id {sm.id!r} already used"))
        seen_ids.add(sm.id)
        sm_ids.add(sm.id)
        short_names: set[str] = set()
        for j, el in enumerate(sm.elements):
            epath = f"{path}.submodelElements[{j}]"
            if not el.id_short:
                out.append(Violation("empty-field", f"{epath}.idShort", "element idShort is empty"))
            if el.id_short in short_names:
                out.append(
                    Violation("duplicate-idshort", f"{epath}.idShort", f"idShort {el.id_short!r} repeated")
                )
            short_names.add(el.id_short)
            if el.value_type not in VALUE_TYPES:
                out.append(Violation("invalid-value", f"{epath}.valueType", f"bad valueType {el.value_type!r}"))
            elif el.value is not None and not lexical_ok(el.value, el.value_type):
                out.append(
                    Violation("type-mismatch", f"{epath}.value", f"{el.value!r} is not a valid {el.value_type}")
                )
    for i, sh in enumerate(doc.shells):
        for k, ref in enumerate(sh.submodel_refs):
            if ref not in sm_ids:
                out.append(
                    Violation(
                        "dangling-reference",
                        f"shells[{i}].submodelRefs[{k}]",
                        f"no submodel with id {ref!r}",
                    )
                )
    return out
