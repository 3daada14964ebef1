"""Random and breadth-first walk extraction over RDF graphs.

Walks alternate entity and predicate tokens, ``[e0, p1, e1, p2, e2, ...]``.
Entities and predicates are tokenized by their IRI string, blank nodes as
``_:label`` and literals by a normalized lexical form. A walk that ends on a
numeric literal may carry one extra magnitude token such as ``~1e2`` so that
quantities of similar size share context.
"""

from __future__ import annotations

import hashlib
import logging
import math
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Iterable, Iterator, Optional, Sequence
from collections import Counter

from .rdf import XSD, BlankNode, Graph, IRI, Literal, Term

logger = logging.getLogger(__name__)

STRATEGIES = ("random", "bfs")

_INTEGER_TYPES = {
    XSD + t
    for t in (
        "integer", "int", "long", "short", "byte", "nonNegativeInteger", "positiveInteger",
        "negativeInteger", "nonPositiveInteger", "unsignedInt", "unsignedLong",
        "unsignedShort", "unsignedByte",
    )
}
_DECIMAL_TYPES = {XSD + "decimal", XSD + "double", XSD + "float"}
EMPTY_LITERAL_TOKEN = '""'
MAGNITUDE_PREFIX = "~"


@dataclass(frozen=True)
class WalkConfig:
    strategy: str = "random"
    depth: int = 4
    walks_per_entity: int = 100
    seed: int = 0
    include_literals: bool = True
    magnitude_tokens: bool = True
    literal_retries: int = 10

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        if self.walks_per_entity < 1:
            raise ValueError("walks_per_entity must be >= 1")
        if self.literal_retries < 0:
            raise ValueError("literal_retries must be >= 0")


def _numeric_value(lit: Literal) -> Optional[Decimal]:
    if lit.datatype not in _INTEGER_TYPES and lit.datatype not in _DECIMAL_TYPES:
        return None
    try:
        value = Decimal(lit.lexical.strip())
    except InvalidOperation:
        return None
    return value if value.is_finite() else None


def _canonical_number(value: Decimal) -> str:
    if value == value.to_integral_value():
        return str(int(value))
    return format(value.normalize(), "f")


def magnitude_token(value: Decimal) -> str:
    """Order-of-magnitude bucket, e.g. 42 -> ``~1e1``, -0.05 -> ``~-1e-2``."""
    if value == 0:
        return MAGNITUDE_PREFIX + "0"
    sign = "-" if value < 0 else ""
    return f"{MAGNITUDE_PREFIX}{sign}1e{value.adjusted()}"


def literal_token(lit: Literal) -> str:
    value = _numeric_value(lit)
    if value is not None:
        return _canonical_number(value)
    if lit.datatype == XSD + "boolean":
        return "true" if lit.lexical.strip() in ("true", "1") else "false"
    return lit.lexical if lit.lexical else EMPTY_LITERAL_TOKEN


def token(term: Term) -> str:
    if isinstance(term, IRI):
        return term.value
    if isinstance(term, BlankNode):
        return "_:" + term.id
    return literal_token(term)


def is_magnitude_token(tok: str) -> bool:
    return tok.startswith(MAGNITUDE_PREFIX)


def encode_token(tok: str) -> str:
    out = []
    for ch in tok:
        if ch == "%" or ch.isspace():
            out.append("".join("%%%02X" % b for b in ch.encode("utf-8")))
        else:
            out.append(ch)
    return "".join(out)


def decode_token(text: str) -> str:
    from urllib.parse import unquote

    return unquote(text)


@dataclass
class WalkCorpus:
    sentences: list[list[str]] = field(default_factory=list)

    def __len__(self):
        return len(self.sentences)

    def __iter__(self) -> Iterator[list[str]]:
        return iter(self.sentences)

    def __eq__(self, other):
        if not isinstance(other, WalkCorpus):
            return NotImplemented
        return self.sentences == other.sentences

    def token_counts(self) -> Counter:
        c: Counter = Counter()
        for s in self.sentences:
            c.update(s)
        return c

    def to_text(self) -> str:
        return "".join(" ".join(encode_token(t) for t in s) + "\n" for s in self.sentences)

    @classmethod
    def from_text(cls, text: str) -> "WalkCorpus":
        return cls([[decode_token(t) for t in line.split(" ")] for line in text.split("\n") if line])

    def save(self, path) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "WalkCorpus":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))


def walk_seed(seed: int, entity_token: str, index: int) -> int:
    """Per-walk seed derived from (seed, entity, walk index)."""
    digest = hashlib.blake2b(
        f"{seed}\x1f{entity_token}\x1f{index}".encode("utf-8"), digest_size=8
    ).digest()
    return int.from_bytes(digest, "big")


def _literal_tail(lit: Literal, config: WalkConfig) -> list[str]:
    out = [literal_token(lit)]
    if config.magnitude_tokens:
        value = _numeric_value(lit)
        if value is not None:
            out.append(magnitude_token(value))
    return out


def _random_walks(graph: Graph, entity: Term, config: WalkConfig) -> list[list[str]]:
    start_tok = token(entity)
    walks = []
    for index in range(config.walks_per_entity):
        rng = random.Random(walk_seed(config.seed, start_tok, index))
        walk = [start_tok]
        node = entity
        for _ in range(config.depth):
            edges = graph.neighbors(node)
            if not edges:
                break
            p, o = edges[rng.randrange(len(edges))]
            if isinstance(o, Literal) and not config.include_literals:
                for _ in range(config.literal_retries):
                    p, o = edges[rng.randrange(len(edges))]
                    if not isinstance(o, Literal):
                        break
                if isinstance(o, Literal):
                    break
            walk.append(token(p))
            if isinstance(o, Literal):
                walk.extend(_literal_tail(o, config))
                break
            walk.append(token(o))
            node = o
        walks.append(walk)
    return walks


def _bfs_walks(graph: Graph, entity: Term, config: WalkConfig) -> list[list[str]]:
    cap = config.walks_per_entity
    out: list[list[str]] = []

    def extend(node: Term, path: list[str], hops: int):
        if len(out) >= cap:
            return
        edges = graph.neighbors(node) if hops < config.depth else []
        if not config.include_literals:
            edges = [(p, o) for p, o in edges if not isinstance(o, Literal)]
        if not edges:
            out.append(path)
            return
        for p, o in edges:
            if len(out) >= cap:
                return
            if isinstance(o, Literal):
                out.append(path + [token(p)] + _literal_tail(o, config))
            else:
                extend(o, path + [token(p), token(o)], hops + 1)

    extend(entity, [token(entity)], 0)
    return out


def generate_walks(
    graph: Graph,
    start_entities: Optional[Sequence[Term]],
    config: WalkConfig = WalkConfig(),
    threads: int = 1,
) -> WalkCorpus:
    """Extract walks rooted at each start entity.

    ``start_entities=None`` means every subject of the graph in canonical
    order. Entities that do not occur in the graph, and literals, are skipped
    with a warning. Output is ordered by (entity, walk index) whatever the
    thread count.
    """
    if start_entities is None:
        start_entities = graph.subjects()
    valid = []
    for e in start_entities:
        if isinstance(e, Literal) or not graph.has_term(e):
            logger.warning("start entity %s not in graph, skipped", e)
            continue
        valid.append(e)
    fn = _random_walks if config.strategy == "random" else _bfs_walks
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_entity = list(pool.map(lambda e: fn(graph, e, config), valid))
    else:
        per_entity = [fn(graph, e, config) for e in valid]
    return WalkCorpus([w for ws in per_entity for w in ws])
