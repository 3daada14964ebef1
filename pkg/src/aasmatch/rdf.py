"""RDF terms, triples and an indexed in-memory graph."""

from __future__ import annotations

import re
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Union

from .errors import MalformedTermError

XSD = "http://www.w3.org/2001/XMLSchema#"
RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"

# Characters that may not appear unescaped inside an IRIREF.
_IRI_FORBIDDEN = re.compile(r'[\x00-\x20<>"{}|^`\\]')
_LANG = re.compile(r"^[a-zA-Z]+(-[a-zA-Z0-9]+)*$")
_BNODE = re.compile(r"^[A-Za-z0-9_][A-Za-z0-9_\-]*$")

_ECHAR_OUT = {
    "\\": "\\\\",
    '"': '\\"',
    "\n": "\\n",
    "\r": "\\r",
    "\t": "\\t",
    "\b": "\\b",
    "\f": "\\f",
}


def _escape_lexical(text: str) -> str:
    out = []
    for ch in text:
        esc = _ECHAR_OUT.get(ch)
        if esc is not None:
            out.append(esc)
        elif ord(ch) < 0x20 or ord(ch) == 0x7F:
            out.append("\\u%04X" % ord(ch))
        else:
            out.append(ch)
    return "".join(out)


def check_iri(value: str) -> str:
    if not isinstance(value, str) or not value:
        raise MalformedTermError("IRI must be a non-empty string")
    if _IRI_FORBIDDEN.search(value):
        raise MalformedTermError(f"IRI contains whitespace or forbidden characters: {value!r}")
    return value


@dataclass(frozen=True, slots=True)
class IRI:
    value: str

    def __post_init__(self):
        check_iri(self.value)

    def n3(self) -> str:
        return f"<{self.value}>"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True, slots=True)
class Literal:
    lexical: str
    datatype: Optional[str] = None
    language: Optional[str] = None

    def __post_init__(self):
        if not isinstance(self.lexical, str):
            raise MalformedTermError("literal lexical form must be a string")
        if self.datatype is not None and self.language is not None:
            raise MalformedTermError("literal cannot carry both a datatype and a language tag")
        if self.datatype is not None:
            check_iri(self.datatype)
        if self.language is not None and not _LANG.match(self.language):
            raise MalformedTermError(f"invalid language tag {self.language!r}")

    def n3(self) -> str:
        body = f'"{_escape_lexical(self.lexical)}"'
        if self.datatype is not None:
            return f"{body}^^<{self.datatype}>"
        if self.language is not None:
            return f"{body}@{self.language}"
        return body

    def __str__(self) -> str:
        return self.lexical


@dataclass(frozen=True, slots=True)
class BlankNode:
    id: str

    def __post_init__(self):
        if not isinstance(self.id, str) or not _BNODE.match(self.id):
            raise MalformedTermError(f"invalid blank node label {self.id!r}")

    def n3(self) -> str:
        return f"_:{self.id}"

    def __str__(self) -> str:
        return f"_:{self.id}"


Term = Union[IRI, Literal, BlankNode]


def term_key(term: Term) -> str:
    """Canonical sort key: the N-Triples form of the term."""
    return term.n3()


@dataclass(frozen=True, slots=True)
class Triple:
    subject: Term
    predicate: Term
    object: Term

    def __post_init__(self):
        if not isinstance(self.subject, (IRI, BlankNode)):
            raise MalformedTermError(f"subject must be an IRI or blank node, got {self.subject!r}")
        if not isinstance(self.predicate, IRI):
            raise MalformedTermError(f"predicate must be an IRI, got {self.predicate!r}")
        if not isinstance(self.object, (IRI, Literal, BlankNode)):
            raise MalformedTermError(f"object is not an RDF term: {self.object!r}")

    def n3(self) -> str:
        return f"{self.subject.n3()} {self.predicate.n3()} {self.object.n3()} ."

    def __iter__(self):
        return iter((self.subject, self.predicate, self.object))


class Graph:
    """A set of triples with subject, predicate and object indexes.

    Graphs are built once and then read; concurrent readers are fine but
    nothing guards concurrent mutation.
    """

    def __init__(self, triples: Iterable[Triple] = ()):
        self._triples: set[Triple] = set()
        self._by_subject: dict[Term, set[Triple]] = defaultdict(set)
        self._by_predicate: dict[Term, set[Triple]] = defaultdict(set)
        self._by_object: dict[Term, set[Triple]] = defaultdict(set)
        self._neighbor_cache: dict[Term, list[tuple[Term, Term]]] = {}
        for t in triples:
            self.add(t)

    def add(self, triple: Triple) -> bool:
        """Insert ``triple``; returns False if it was already present."""
        if not isinstance(triple, Triple):
            raise MalformedTermError(f"not a Triple: {triple!r}")
        if triple in self._triples:
            return False
        self._triples.add(triple)
        self._by_subject[triple.subject].add(triple)
        self._by_predicate[triple.predicate].add(triple)
        self._by_object[triple.object].add(triple)
        self._neighbor_cache.pop(triple.subject, None)
        return True

    def update(self, triples: Iterable[Triple]) -> None:
        for t in triples:
            self.add(t)

    def __len__(self) -> int:
        return len(self._triples)

    def __iter__(self) -> Iterator[Triple]:
        return iter(self._triples)

    def __contains__(self, triple) -> bool:
        return triple in self._triples

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self._triples == other._triples

    def __repr__(self) -> str:
        return f"<Graph with {len(self)} triples>"

    def copy(self) -> "Graph":
        return Graph(self._triples)

    def sorted_triples(self) -> list[Triple]:
        return sorted(self._triples, key=Triple.n3)

    def triples(
        self,
        subject: Optional[Term] = None,
        predicate: Optional[Term] = None,
        object: Optional[Term] = None,
    ) -> Iterator[Triple]:
        """Yield triples matching the pattern; ``None`` is a wildcard."""
        buckets = []
        if subject is not None:
            buckets.append(self._by_subject.get(subject, ()))
        if predicate is not None:
            buckets.append(self._by_predicate.get(predicate, ()))
        if object is not None:
            buckets.append(self._by_object.get(object, ()))
        if not buckets:
            yield from self._triples
            return
        smallest = min(buckets, key=len)
        for t in smallest:
            if subject is not None and t.subject != subject:
                continue
            if predicate is not None and t.predicate != predicate:
                continue
            if object is not None and t.object != object:
                continue
            yield t

    def neighbors(self, node: Term) -> list[tuple[Term, Term]]:
        """Outgoing ``(predicate, object)`` pairs of ``node`` in canonical order."""
        cached = self._neighbor_cache.get(node)
        if cached is None:
            cached = sorted(
                ((t.predicate, t.object) for t in self._by_subject.get(node, ())),
                key=lambda po: (po[0].n3(), po[1].n3()),
            )
            self._neighbor_cache[node] = cached
        return list(cached)

    def subjects(self) -> list[Term]:
        return sorted((s for s, b in self._by_subject.items() if b), key=term_key)

    def has_subject(self, node: Term) -> bool:
        return bool(self._by_subject.get(node))

    def has_term(self, node: Term) -> bool:
        return bool(
            self._by_subject.get(node) or self._by_object.get(node) or self._by_predicate.get(node)
        )

    def terms(self) -> set[Term]:
        out: set[Term] = set()
        for t in self._triples:
            out.update((t.subject, t.predicate, t.object))
        return out

    def index_consistent(self) -> bool:
        """Check that every index bucket mirrors the triple set exactly."""
        for index, pos in ((self._by_subject, 0), (self._by_predicate, 1), (self._by_object, 2)):
            seen: set[Triple] = set()
            for key, bucket in index.items():
                for t in bucket:
                    if tuple(t)[pos] != key or t not in self._triples or t in seen:
                        return False
                    seen.add(t)
            if seen != self._triples:
                return False
        return True


def add_triple(graph: Graph, triple: Triple) -> Graph:
    """Add ``triple`` to ``graph`` in place and return the graph."""
    graph.add(triple)
    return graph


def neighbors(graph: Graph, node: Term) -> list[tuple[Term, Term]]:
    return graph.neighbors(node)
