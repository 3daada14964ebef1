import json

import pytest
from hypothesis import given

from aasmatch.aas import lexical_ok, parse_aas_json, validate
from aasmatch.errors import JSONSyntaxError, MissingFieldError, TypeMismatchError

from aas_strategies import documents

NAMEPLATE = {
    "assetAdministrationShells": [
        {
            "id": "urn:ex:aas:1",
            "idShort": "Pump1",
            "assetInformation": {"assetKind": "Type"},
            "submodels": [{"type": "ModelReference", "keys": [{"type": "Submodel", "value": "urn:ex:sm:np"}]}],
        }
    ],
    "submodels": [
        {
            "id": "urn:ex:sm:np",
            "idShort": "Nameplate",
            "semanticId": {"keys": [{"value": "https://admin-shell.io/zvei/nameplate/2/0/Nameplate"}]},
            "submodelElements": [
                {"modelType": "Property", "idShort": "ManufacturerName", "valueType": "xs:string", "value": "ACME"},
                {"modelType": "Property", "idShort": "YearOfConstruction", "valueType": "xs:integer", "value": 2021},
                {"modelType": "File", "idShort": "Logo"},
            ],
        }
    ],
}


def test_parse_nameplate_subset():
    doc = parse_aas_json(json.dumps(NAMEPLATE))
    (shell,) = doc.shells
    assert shell.asset_kind == "Type"
    assert shell.submodel_refs == ("urn:ex:sm:np",)
    sm = doc.submodel("urn:ex:sm:np")
    assert sm.semantic_id.endswith("/Nameplate")
    assert [e.id_short for e in sm.elements] == ["ManufacturerName", "YearOfConstruction"]
    assert sm.elements[1].value == "2021" and sm.elements[1].value_type == "integer"
    assert any("Logo" in w or "File" in w for w in doc.warnings)
    assert validate(doc) == []


def test_asset_kind_defaults_to_instance():
    doc = parse_aas_json('{"assetAdministrationShells": [{"id": "x", "idShort": "y"}]}')
    assert doc.shells[0].asset_kind == "Instance"


def test_unknown_keys_are_warnings(caplog):
    doc = parse_aas_json('{"assetAdministrationShells": [{"id": "x", "idShort": "y", "extra": 1}]}')
    assert doc.warnings and "extra" in doc.warnings[0]


def test_syntax_error():
    with pytest.raises(JSONSyntaxError):
        parse_aas_json("{not json")


def test_missing_field_names_path():
    with pytest.raises(MissingFieldError) as info:
        parse_aas_json('{"submodels": [{"id": "s", "idShort": "S", "submodelElements": [{"idShort": "p"}]}]}')
    assert info.value.path == "submodels[0].submodelElements[0].valueType"


def test_bad_value_for_type():
    bad = '{"submodels": [{"id": "s", "idShort": "S", "submodelElements": [{"idShort": "p", "valueType": "xs:integer", "value": "12a"}]}]}'
    with pytest.raises(TypeMismatchError):
        parse_aas_json(bad)


def test_dangling_reference_is_a_violation_not_an_error():
    doc = parse_aas_json('{"assetAdministrationShells": [{"id": "x", "idShort": "y", "submodels": ["urn:missing"]}]}')
    (v,) = validate(doc)
    assert v.kind == "dangling-reference"
    assert v.path == "shells[0].submodelRefs[0]"


def test_duplicate_idshort_violation():
    raw = {"submodels": [{"id": "s", "idShort": "S", "submodelElements": [
        {"idShort": "p", "valueType": "xs:string"}, {"idShort": "p", "valueType": "xs:string"}]}]}
    assert [v.kind for v in validate(parse_aas_json(json.dumps(raw)))] == ["duplicate-idshort"]


@pytest.mark.parametrize(
    "value, vt, ok",
    [("12", "integer", True), ("-1.5e3", "decimal", True), ("1.2.3", "decimal", False),
     ("true", "boolean", True), ("yes", "boolean", False), ("anything", "string", True)],
)
def test_lexical_forms(value, vt, ok):
    assert lexical_ok(value, vt) is ok


@given(documents())
def test_json_round_trip(doc):
    back = parse_aas_json(doc.dumps())
    assert back == doc
    assert validate(back) == []
