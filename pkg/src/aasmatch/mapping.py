"""Deterministic AAS to RDF mapping and per-shell subgraph extraction.

Mapping table (``ns`` is :attr:`MappingRules.namespace`, ``v:`` the fixed
vocabulary namespace)::

    shell S       = ns + pct(shell.id)
    submodel M    = ns + pct(submodel.id)
    element E     = M + "/" + pct(element.idShort)

    S v:hasIdShort    "idShort"
    S v:assetKind     v:Instance | v:Type
    S v:hasSubmodel   M                   one per resolved reference
    M v:hasIdShort    "idShort"
    M v:hasSemanticId <semanticId>        if present
    M v:hasElement    E
    E v:hasIdShort    "idShort"
    E v:hasValueType  xsd:<type>
    E v:hasSemanticId <semanticId>        if present
    E v:hasValue      "value"^^xsd:<type> if present (strings are plain literals)
    X rdf:type        v:Shell | v:Submodel | v:Property   only with type_triples

For a one-shell document whose submodels and elements all carry semanticIds
and values this is ``2 + 3*|submodels| + 5*|elements|`` triples.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence
from urllib.parse import quote, unquote

from .aas import AASDocument, validate
from .errors import MalformedTermError, UnknownShellError, UnresolvedReferenceError
from .rdf import IRI, RDF_TYPE, XSD, Graph, Literal, Term, Triple

VOCAB = "urn:aasmatch:vocab#"

# printable ASCII that may stay unescaped in a semanticId IRI
_SEMANTIC_SAFE = "!#$%&'()*+,-./:;=?@[]_~"

_XSD_BY_VALUE_TYPE = {
    "string": XSD + "string",
    "integer": XSD + "integer",
    "decimal": XSD + "decimal",
    "boolean": XSD + "boolean",
}


@dataclass(frozen=True)
class Vocabulary:
    has_submodel: IRI = IRI(VOCAB + "hasSubmodel")
    has_element: IRI = IRI(VOCAB + "hasElement")
    has_id_short: IRI = IRI(VOCAB + "hasIdShort")
    has_semantic_id: IRI = IRI(VOCAB + "hasSemanticId")
    has_value: IRI = IRI(VOCAB + "hasValue")
    has_value_type: IRI = IRI(VOCAB + "hasValueType")
    asset_kind: IRI = IRI(VOCAB + "assetKind")
    rdf_type: IRI = IRI(RDF_TYPE)


@dataclass(frozen=True)
class MappingRules:
    namespace: str = "urn:aasmatch:repo/"
    vocab: Vocabulary = Vocabulary()
    type_triples: bool = False

    def __post_init__(self):
        if not self.namespace or self.namespace[-1] not in "/#" or ":" not in self.namespace:
            raise MalformedTermError(
                f"namespace must be an absolute IRI ending in '/' or '#': {self.namespace!r}"
            )

    def shell_iri(self, shell_id: str) -> IRI:
        return IRI(self.namespace + quote(shell_id, safe=""))

    def submodel_iri(self, submodel_id: str) -> IRI:
        return IRI(self.namespace + quote(submodel_id, safe=""))

    def element_iri(self, submodel_id: str, id_short: str) -> IRI:
        return IRI(self.namespace + quote(submodel_id, safe="") + "/" + quote(id_short, safe=""))

    def id_of(self, iri: Term) -> str:
        """Recover a shell or submodel id from its minted IRI."""
        value = str(iri)
        if not value.startswith(self.namespace):
            raise ValueError(f"{value!r} is not in namespace {self.namespace!r}")
        return unquote(value[len(self.namespace):])


def semantic_iri(semantic_id: str) -> IRI:
    return IRI(quote(semantic_id, safe=_SEMANTIC_SAFE))


def _value_literal(value: str, value_type: str) -> Literal:
    if value_type == "string":
        return Literal(value)
    return Literal(value, datatype=_XSD_BY_VALUE_TYPE[value_type])


def map_document(doc: AASDocument, rules: MappingRules = MappingRules()) -> Graph:
    """Map a validated document to an RDF graph.

    Raises:
        UnresolvedReferenceError: ``doc`` has validation violations, e.g. a
            shell referencing a submodel that is not in the document.
    """
    violations = validate(doc)
    if violations:
        first = violations[0]
        raise UnresolvedReferenceError(
            f"document failed validation ({len(violations)} violations), first: "
            f"{first.kind} at {first.path}: {first.message}"
        )
    v = rules.vocab
    g = Graph()
    add = g.add
    for sh in doc.shells:
        s = rules.shell_iri(sh.id)
        add(Triple(s, v.has_id_short, Literal(sh.id_short)))
        add(Triple(s, v.asset_kind, IRI(VOCAB + sh.asset_kind)))
        if rules.type_triples:
            add(Triple(s, v.rdf_type, IRI(VOCAB + "Shell")))
        for ref in sh.submodel_refs:
            add(Triple(s, v.has_submodel, rules.submodel_iri(ref)))
    for sm in doc.submodels:
        m = rules.submodel_iri(sm.id)
        add(Triple(m, v.has_id_short, Literal(sm.id_short)))
        if sm.semantic_id is not None:
            add(Triple(m, v.has_semantic_id, semantic_iri(sm.semantic_id)))
        if rules.type_triples:
            add(Triple(m, v.rdf_type, IRI(VOCAB + "Submodel")))
        for el in sm.elements:
            e = rules.element_iri(sm.id, el.id_short)
            add(Triple(m, v.has_element, e))
            add(Triple(e, v.has_id_short, Literal(el.id_short)))
            add(Triple(e, v.has_value_type, IRI(_XSD_BY_VALUE_TYPE[el.value_type])))
            if el.semantic_id is not None:
                add(Triple(e, v.has_semantic_id, semantic_iri(el.semantic_id)))
            if el.value is not None:
                add(Triple(e, v.has_value, _value_literal(el.value, el.value_type)))
            if rules.type_triples:
                add(Triple(e, v.rdf_type, IRI(VOCAB + "Property")))
    return g


def expected_triple_count(doc: AASDocument, rules: MappingRules = MappingRules()) -> int:
    """Triple count predicted by the mapping table, without building the graph."""
    per_type = 1 if rules.type_triples else 0
    n = 0
    for sh in doc.shells:
        n += 2 + per_type + len(sh.submodel_refs)
    for sm in doc.submodels:
        n += 1 + per_type + (sm.semantic_id is not None)
        for el in sm.elements:
            n += 3 + per_type + (el.semantic_id is not None) + (el.value is not None)
    return n


def map_repository(
    docs: Iterable[AASDocument], rules: MappingRules = MappingRules()
) -> tuple[Graph, list[IRI]]:
    """Merge several documents into one graph; returns it with all shell IRIs."""
    g = Graph()
    shells: list[IRI] = []
    for doc in docs:
        g.update(map_document(doc, rules))
        shells.extend(rules.shell_iri(sh.id) for sh in doc.shells)
    return g, shells


def subgraph_of(graph: Graph, shell: Term) -> Graph:
    """All triples reachable from ``shell`` by following edges forward."""
    if not graph.has_subject(shell):
        raise UnknownShellError(f"{shell} is not a subject of the graph")
    out = Graph()
    seen = {shell}
    queue = deque([shell])
    while queue:
        node = queue.popleft()
        for t in graph.triples(subject=node):
            out.add(t)
            if not isinstance(t.object, Literal) and t.object not in seen:
                seen.add(t.object)
                queue.append(t.object)
    return out


def shell_subgraphs(graph: Graph, shells: Sequence[Term]) -> list[tuple[Term, Graph]]:
    return [(s, subgraph_of(graph, s)) for s in shells]
