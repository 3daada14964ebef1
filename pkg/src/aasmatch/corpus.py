"""Synthetic AAS corpora with controlled vocabulary and structure drift.

Each template is a set of submodel skeletons whose properties come from
synonym pools (``PowerInput`` / ``ElectricPower``). Instances are drawn from a
template and then perturbed: property names are swapped for synonyms with
probability ``synonym_rate`` (the semanticId follows the name, modelling a
different vocabulary) and optional submodels are dropped with probability
``drop_rate``.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

from .aas import AASDocument, Shell, Submodel, SubmodelElement, validate
from .errors import InvalidSpecError, UnknownPropertyError

CONCEPT_NS = "urn:aasmatch:concept:"
SUBMODEL_NS = "urn:aasmatch:submodel-template:"


def concept_id(name: str) -> str:
    return CONCEPT_NS + name


@dataclass(frozen=True)
class PropertyTemplate:
    pool: tuple[str, ...]
    value_type: str = "string"
    # ("int", lo, hi) | ("dec", lo, hi) | ("choice", a, b, ...) | ("bool",)
    values: tuple = ("choice", "n/a")

    @property
    def name(self) -> str:
        return self.pool[0]

    def draw(self, rng: random.Random) -> str:
        kind = self.values[0]
        if kind == "int":
            return str(rng.randint(self.values[1], self.values[2]))
        if kind == "dec":
            return f"{rng.uniform(self.values[1], self.values[2]):.2f}"
        if kind == "bool":
            return rng.choice(("true", "false"))
        return rng.choice(self.values[1:])


@dataclass(frozen=True)
class SubmodelTemplate:
    id_short: str
    properties: tuple[PropertyTemplate, ...]
    mandatory: bool = False

    @property
    def semantic_id(self) -> str:
        return SUBMODEL_NS + self.id_short


@dataclass(frozen=True)
class Template:
    id: str
    submodels: tuple[SubmodelTemplate, ...]


def _p(*pool, vt="string", values=("choice", "n/a")):
    return PropertyTemplate(tuple(pool), vt, values)


_MANUFACTURERS = ("choice", "ACME Automation", "Nordwerk GmbH", "Kobalt Systems", "Helix Drives")
_COUNTRIES = ("choice", "DE", "AT", "CH", "FR", "IT")

BUILTIN_TEMPLATES: dict[str, Template] = {
    t.id: t
    for t in (
        Template(
            "nameplate",
            (
                SubmodelTemplate(
                    "Nameplate",
                    (
                        _p("ManufacturerName", "ProducerName", "VendorName", values=_MANUFACTURERS),
                        _p("ManufacturerProductDesignation", "ProductDesignation",
                           values=("choice", "Servo Motor", "Gear Unit", "Frequency Converter")),
                        _p("SerialNumber", "SerialNo", values=("choice", "SN-1001", "SN-2002", "SN-3003")),
                        _p("YearOfConstruction", "ConstructionYear", vt="integer", values=("int", 2005, 2025)),
                        _p("CountryOfOrigin", "OriginCountry", values=_COUNTRIES),
                    ),
                    mandatory=True,
                ),
                SubmodelTemplate(
                    "ContactInformation",
                    (
                        _p("Company", "CompanyName", values=_MANUFACTURERS),
                        _p("Phone", "Telephone", values=("choice", "+49 711 000", "+49 89 111")),
                        _p("Email", "EmailAddress", values=("choice", "info@example.com", "sales@example.com")),
                    ),
                ),
                SubmodelTemplate(
                    "Markings",
                    (
                        _p("CEMarking", "CEConformity", vt="boolean", values=("bool",)),
                        _p("ExplosionProtection", "ExProtection", vt="boolean", values=("bool",)),
                    ),
                ),
            ),
        ),
        Template(
            "timeseries",
            (
                SubmodelTemplate(
                    "TimeSeriesData",
                    (
                        _p("Name", "SeriesName", values=("choice", "SpindleLoad", "AxisTemperature")),
                        _p("Description", "SeriesDescription", values=("choice", "recorded signal", "sampled data")),
                        _p("SamplingInterval", "SampleRate", vt="decimal", values=("dec", 0.01, 10.0)),
                        _p("RecordCount", "NumberOfRecords", vt="integer", values=("int", 100, 100000)),
                    ),
                    mandatory=True,
                ),
                SubmodelTemplate(
                    "Segments",
                    (
                        _p("StartTime", "SegmentStart", values=("choice", "2024-01-01T00:00:00Z", "2024-06-01T00:00:00Z")),
                        _p("EndTime", "SegmentEnd", values=("choice", "2024-02-01T00:00:00Z", "2024-07-01T00:00:00Z")),
                        _p("SegmentState", "State", values=("choice", "completed", "in progress")),
                    ),
                ),
                SubmodelTemplate(
                    "DataSource",
                    (
                        _p("EndpointURL", "DataEndpoint", values=("choice", "opc.tcp://plc:4840", "mqtt://broker:1883")),
                        _p("Protocol", "TransportProtocol", values=("choice", "OPC UA", "MQTT")),
                    ),
                ),
            ),
        ),
        Template(
            "technical",
            (
                SubmodelTemplate(
                    "TechnicalData",
                    (
                        _p("PowerInput", "ElectricPower", "RatedPower", vt="decimal", values=("dec", 0.1, 75.0)),
                        _p("RatedVoltage", "NominalVoltage", vt="integer", values=("int", 24, 690)),
                        _p("RatedCurrent", "NominalCurrent", vt="decimal", values=("dec", 0.5, 150.0)),
                        _p("RatedTorque", "NominalTorque", vt="decimal", values=("dec", 1.0, 500.0)),
                        _p("Weight", "Mass", vt="decimal", values=("dec", 0.5, 800.0)),
                    ),
                    mandatory=True,
                ),
                SubmodelTemplate(
                    "ProductClassifications",
                    (
                        _p("ClassificationSystem", "ClassSystem", values=("choice", "ECLASS", "IEC CDD")),
                        _p("ProductClassId", "ClassId", values=("choice", "27-02-01-01", "27-02-22-02")),
                    ),
                ),
                SubmodelTemplate(
                    "FurtherInformation",
                    (
                        _p("TextStatement", "Remark", values=("choice", "see manual", "none")),
                        _p("ValidDate", "ValidFrom", values=("choice", "2024-01-01", "2025-01-01")),
                    ),
                ),
            ),
        ),
        Template(
            "energy",
            (
                SubmodelTemplate(
                    "EnergyConsumption",
                    (
                        _p("ActivePower", "RealPower", vt="decimal", values=("dec", 0.1, 120.0)),
                        _p("EnergyCounter", "ConsumedEnergy", vt="decimal", values=("dec", 10.0, 90000.0)),
                        _p("PowerFactor", "CosPhi", vt="decimal", values=("dec", 0.6, 1.0)),
                        _p("MeasurementPeriod", "AveragingPeriod", vt="integer", values=("int", 1, 3600)),
                    ),
                    mandatory=True,
                ),
                SubmodelTemplate(
                    "OperationalData",
                    (
                        _p("OperatingHours", "RunTime", vt="integer", values=("int", 10, 50000)),
                        _p("SwitchingCycles", "StartCount", vt="integer", values=("int", 1, 200000)),
                        _p("StandbyActive", "IdleMode", vt="boolean", values=("bool",)),
                    ),
                ),
                SubmodelTemplate(
                    "CarbonFootprint",
                    (
                        _p("PCFCO2eq", "CO2Equivalent", vt="decimal", values=("dec", 1.0, 5000.0)),
                        _p("PCFReferenceValue", "ReferenceUnit", values=("choice", "piece", "kg")),
                    ),
                ),
            ),
        ),
        Template(
            "maintenance",
            (
                SubmodelTemplate(
                    "MaintenanceInstructions",
                    (
                        _p("MaintenanceInterval", "ServiceInterval", vt="integer", values=("int", 500, 20000)),
                        _p("LastMaintenance", "LastService", values=("choice", "2024-03-12", "2025-01-20")),
                        _p("ResponsibleTechnician", "ServiceEngineer", values=("choice", "Team A", "Team B")),
                        _p("LubricationRequired", "NeedsLubrication", vt="boolean", values=("bool",)),
                    ),
                    mandatory=True,
                ),
                SubmodelTemplate(
                    "HandoverDocumentation",
                    (
                        _p("DocumentTitle", "Title", values=("choice", "Operating Manual", "Safety Sheet")),
                        _p("DocumentLanguage", "Language", values=("choice", "en", "de")),
                        _p("DocumentVersion", "Revision", values=("choice", "1.0", "2.1")),
                    ),
                ),
                SubmodelTemplate(
                    "SpareParts",
                    (
                        _p("PartNumber", "ArticleNumber", values=("choice", "SP-100", "SP-200", "SP-300")),
                        _p("StockLevel", "QuantityInStock", vt="integer", values=("int", 0, 250)),
                    ),
                ),
            ),
        ),
    )
}


@dataclass(frozen=True)
class CorpusSpec:
    templates: tuple[Template, ...] = tuple(BUILTIN_TEMPLATES.values())
    instances_per_template: int = 10
    synonym_rate: float = 0.3
    drop_rate: float = 0.2
    seed: int = 0

    def validate(self) -> None:
        if len(self.templates) < 2:
            raise InvalidSpecError("at least 2 templates are required")
        if len({t.id for t in self.templates}) != len(self.templates):
            raise InvalidSpecError("template ids must be distinct")
        if self.instances_per_template < 1:
            raise InvalidSpecError("instances_per_template must be positive")
        for name in ("synonym_rate", "drop_rate"):
            rate = getattr(self, name)
            if not 0.0 <= rate <= 1.0:
                raise InvalidSpecError(f"{name} must lie in [0, 1]")
        for t in self.templates:
            if not any(sm.mandatory for sm in t.submodels):
                raise InvalidSpecError(f"template {t.id!r} has no mandatory submodel")
            for sm in t.submodels:
                names = [n for p in sm.properties for n in p.pool]
                if len(set(names)) != len(names):
                    raise InvalidSpecError(f"{t.id}/{sm.id_short}: synonym pools overlap")

    def _submodel_template(self, id_short: str) -> Optional[SubmodelTemplate]:
        for t in self.templates:
            for sm in t.submodels:
                if sm.id_short == id_short:
                    return sm
        return None

    def _pool(self, sm_id_short: str, prop: str) -> Optional[tuple[str, ...]]:
        sm = self._submodel_template(sm_id_short)
        candidates = [sm] if sm is not None else [s for t in self.templates for s in t.submodels]
        for s in candidates:
            for p in s.properties:
                if prop in p.pool:
                    return p.pool
        return None

    @classmethod
    def from_json(cls, data: dict) -> "CorpusSpec":
        """Build a spec from JSON; templates are built-in names or full definitions."""
        templates = []
        for entry in data.get("templates", list(BUILTIN_TEMPLATES)):
            if isinstance(entry, str):
                if entry not in BUILTIN_TEMPLATES:
                    raise InvalidSpecError(f"unknown built-in template {entry!r}")
                templates.append(BUILTIN_TEMPLATES[entry])
                continue
            try:
                templates.append(
                    Template(
                        entry["id"],
                        tuple(
                            SubmodelTemplate(
                                sm["idShort"],
                                tuple(
                                    PropertyTemplate(
                                        tuple(p["pool"]),
                                        p.get("valueType", "string"),
                                        tuple(p.get("values", ("choice", "n/a"))),
                                    )
                                    for p in sm["properties"]
                                ),
                                bool(sm.get("mandatory", False)),
                            )
                            for sm in entry["submodels"]
                        ),
                    )
                )
            except (KeyError, TypeError) as exc:
                raise InvalidSpecError(f"bad template definition: {exc}") from None
        try:
            spec = cls(
                tuple(templates),
                int(data.get("instances_per_template", 10)),
                float(data.get("synonym_rate", 0.3)),
                float(data.get("drop_rate", 0.2)),
                int(data.get("seed", 0)),
            )
        except (TypeError, ValueError) as exc:
            raise InvalidSpecError(str(exc)) from None
        spec.validate()
        return spec


@dataclass
class GroundTruth:
    template_of: dict[str, str] = field(default_factory=dict)
    perturbations: dict[str, list[str]] = field(default_factory=dict)

    def to_tsv(self) -> str:
        lines = ["doc_id\ttemplate\tperturbations"]
        for doc_id in sorted(self.template_of):
            log = ";".join(self.perturbations.get(doc_id, []))
            lines.append(f"{doc_id}\t{self.template_of[doc_id]}\t{log}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_tsv(cls, text: str) -> "GroundTruth":
        truth = cls()
        for line in text.splitlines()[1:]:
            if not line.strip():
                continue
            parts = line.split("\t")
            doc_id, template = parts[0], parts[1]
            truth.template_of[doc_id] = template
            truth.perturbations[doc_id] = [p for p in (parts[2] if len(parts) > 2 else "").split(";") if p]
        return truth


def derive_seed(*parts) -> int:
    data = "\x1f".join(str(p) for p in parts).encode("utf-8")
    return int.from_bytes(hashlib.blake2b(data, digest_size=8).digest(), "big")


def instantiate(template: Template, index: int, rng: random.Random) -> AASDocument:
    """Unperturbed instance ``index`` of ``template`` with canonical names."""
    base = f"urn:example:aas:{template.id}-{index:03d}"
    submodels = []
    for sm in template.submodels:
        elements = tuple(
            SubmodelElement(p.name, p.value_type, concept_id(p.name), p.draw(rng)) for p in sm.properties
        )
        submodels.append(Submodel(f"{base}/sm/{sm.id_short}", sm.id_short, sm.semantic_id, elements))
    shell = Shell(base, f"{template.id.capitalize()}Asset{index:03d}", "Instance", tuple(s.id for s in submodels))
    return AASDocument((shell,), tuple(submodels))


def perturb(doc: AASDocument, spec: CorpusSpec, seed: int) -> AASDocument:
    """Apply synonym swaps and optional-submodel drops to ``doc``."""
    doc, _ = _perturb(doc, spec, seed)
    return doc


def _perturb(doc: AASDocument, spec: CorpusSpec, seed: int) -> tuple[AASDocument, list[str]]:
    rng = random.Random(seed)
    log: list[str] = []
    kept: list[Submodel] = []
    for sm in doc.submodels:
        sm_t = spec._submodel_template(sm.id_short)
        mandatory = sm_t is not None and sm_t.mandatory
        if rng.random() < spec.drop_rate and not mandatory:
            log.append(f"drop:{sm.id_short}")
            continue
        elements = []
        for el in sm.elements:
            pool = spec._pool(sm.id_short, el.id_short)
            if pool is None:
                raise UnknownPropertyError(f"no synonym pool contains {el.id_short!r}")
            if rng.random() < spec.synonym_rate and len(pool) > 1:
                new = rng.choice([n for n in pool if n != el.id_short])
                log.append(f"rename:{sm.id_short}/{el.id_short}->{new}")
                sem = concept_id(new) if el.semantic_id in (None, concept_id(el.id_short)) else el.semantic_id
                el = replace(el, id_short=new, semantic_id=sem)
            elements.append(el)
        kept.append(replace(sm, elements=tuple(elements)))
    kept_ids = {sm.id for sm in kept}
    shells = tuple(
        replace(sh, submodel_refs=tuple(r for r in sh.submodel_refs if r in kept_ids)) for sh in doc.shells
    )
    return AASDocument(shells, tuple(kept)), log


def gen_corpus(spec: CorpusSpec = CorpusSpec()) -> tuple[list[AASDocument], GroundTruth]:
    """Generate ``instances_per_template`` perturbed documents per template.

    Document ids are the shell ids. Output is a pure function of ``spec``.
    """
    spec.validate()
    docs: list[AASDocument] = []
    truth = GroundTruth()
    for template in spec.templates:
        for i in range(spec.instances_per_template):
            value_rng = random.Random(derive_seed(spec.seed, template.id, i, "values"))
            base = instantiate(template, i, value_rng)
            doc, log = _perturb(base, spec, derive_seed(spec.seed, template.id, i, "perturb"))
            violations = validate(doc)
            if violations:
                raise InvalidSpecError(f"generated document is invalid: {violations[0]}")
            doc_id = doc.shells[0].id
            docs.append(doc)
            truth.template_of[doc_id] = template.id
            truth.perturbations[doc_id] = log
    return docs, truth
