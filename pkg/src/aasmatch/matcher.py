"""Graph vectors, similarity metrics, score normalization and decision policies."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .errors import (
    DimensionMismatchError,
    DomainError,
    EmptyCandidatesError,
    NoResolvableTokensError,
    ZeroVectorError,
)
from .rdf import Graph, Literal, Term, term_key
from .skipgram import EmbeddingTable
from .walks import token

STRATEGIES = ("root", "mean", "weighted_mean")
METRICS = ("cosine", "euclidean")


class CandidateSet:
    """Distinct ``(shell IRI, subgraph)`` pairs left after pre-filtering."""

    def __init__(self, items: Iterable[tuple[Term, Graph]] = ()):
        self.items = sorted(items, key=lambda it: term_key(it[0]))
        shells = [s for s, _ in self.items]
        if len(set(shells)) != len(shells):
            raise ValueError("candidate shell IRIs must be distinct")

    def __len__(self):
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def __getitem__(self, i):
        return self.items[i]

    def shells(self) -> list[Term]:
        return [s for s, _ in self.items]

    def __eq__(self, other):
        if not isinstance(other, CandidateSet):
            return NotImplemented
        return self.items == other.items

    def __repr__(self):
        return f"CandidateSet({[str(s) for s in self.shells()]})"


@dataclass(frozen=True)
class Threshold:
    t: float

    def __post_init__(self):
        if not 0.0 <= self.t <= 1.0:
            raise ValueError("threshold must lie in [0, 1]")


@dataclass(frozen=True)
class TopK:
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")


@dataclass(frozen=True)
class Hybrid:
    t: float
    k: int

    def __post_init__(self):
        if not 0.0 <= self.t <= 1.0:
            raise ValueError("threshold must lie in [0, 1]")
        if self.k < 1:
            raise ValueError("k must be >= 1")


DecisionPolicy = Union[Threshold, TopK, Hybrid]


def parse_policy(text: str) -> DecisionPolicy:
    """Parse ``threshold:T``, ``topk:K`` or ``hybrid:T,K``."""
    kind, _, arg = text.partition(":")
    kind = kind.strip().lower()
    try:
        if kind == "threshold":
            return Threshold(float(arg))
        if kind == "topk":
            return TopK(int(arg))
        if kind == "hybrid":
            t, k = arg.split(",")
            return Hybrid(float(t), int(k))
    except ValueError as exc:
        raise ValueError(f"bad policy {text!r}: {exc}") from None
    raise ValueError(f"unknown policy {text!r}; use threshold:T, topk:K or hybrid:T,K")


def format_policy(policy: DecisionPolicy) -> str:
    if isinstance(policy, Threshold):
        return f"threshold:{policy.t!r}"
    if isinstance(policy, TopK):
        return f"topk:{policy.k}"
    return f"hybrid:{policy.t!r},{policy.k}"


@dataclass(frozen=True)
class MatchResult:
    shell: Term
    raw: float
    score: float
    rank: int


# ------------------------------------------------------------------ vectors


def entity_terms(graph: Graph) -> list[Term]:
    """Distinct non-literal nodes of ``graph`` (predicates excluded), sorted."""
    nodes: set[Term] = set()
    for t in graph:
        nodes.add(t.subject)
        if not isinstance(t.object, Literal):
            nodes.add(t.object)
    return sorted(nodes, key=term_key)


def find_root(graph: Graph) -> Term:
    """The unique subject that never appears as an object."""
    objects = {t.object for t in graph}
    roots = sorted({t.subject for t in graph} - objects, key=term_key)
    if len(roots) != 1:
        raise NoResolvableTokensError(f"graph has {len(roots)} root candidates; pass root explicitly")
    return roots[0]


def graph_vector(
    graph: Graph,
    table: EmbeddingTable,
    strategy: str = "mean",
    root: Optional[Term] = None,
    counts: Optional[Mapping[str, int]] = None,
) -> np.ndarray:
    """Aggregate a subgraph into one float64 vector.

    ``root`` uses the shell entity's own vector; ``mean`` averages the
    vectors of all distinct entity tokens; ``weighted_mean`` weights each
    token by ``1 / corpus count`` (``counts`` defaults to ``table.counts``).
    Tokens missing from the table are skipped.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"strategy must be one of {STRATEGIES}")
    if strategy == "root":
        if root is None:
            entities = entity_terms(graph)
            root = entities[0] if len(entities) == 1 else find_root(graph)
        vec = table.get(token(root))
        if vec is None:
            raise NoResolvableTokensError(f"root {root} has no embedding")
        return vec.astype(np.float64)

    toks = [token(e) for e in entity_terms(graph)]
    rows = [table.index[t] for t in toks if t in table.index]
    if not rows:
        raise NoResolvableTokensError("no entity of the graph has an embedding")
    vecs = table.vectors[rows].astype(np.float64)
    if strategy == "mean":
        return vecs.sum(axis=0) / len(rows)
    counts = table.counts if counts is None else counts
    if counts is None:
        raise ValueError("weighted_mean needs token counts")
    kept = [table.tokens[r] for r in rows]
    w = np.array([1.0 / counts.get(t, 1) for t in kept])
    return (w[:, None] * vecs).sum(axis=0) / w.sum()


# ------------------------------------------------------------------ metrics


def _check_dims(a: np.ndarray, b: np.ndarray):
    if a.shape != b.shape or a.ndim != 1:
        raise DimensionMismatchError(f"dimension mismatch: {a.shape} vs {b.shape}")


def cosine(v1, v2) -> float:
    """Cosine similarity, clamped to [-1, 1]. Identical vectors give exactly 1."""
    a = np.asarray(v1, dtype=np.float64)
    b = np.asarray(v2, dtype=np.float64)
    _check_dims(a, b)
    na, nb = float(np.dot(a, a)), float(np.dot(b, b))
    if na == 0.0 or nb == 0.0:
        raise ZeroVectorError("cosine is undefined for a zero vector")
    c = float(np.dot(a, b)) / math.sqrt(na * nb)
    return min(1.0, max(-1.0, c))


def euclidean(x, y) -> float:
    a = np.asarray(x, dtype=np.float64)
    b = np.asarray(y, dtype=np.float64)
    _check_dims(a, b)
    d = a - b
    return math.sqrt(float(np.dot(d, d)))


def raw_score(v1, v2, metric: str) -> float:
    if metric == "cosine":
        return cosine(v1, v2)
    if metric == "euclidean":
        return euclidean(v1, v2)
    raise ValueError(f"metric must be one of {METRICS}")


def normalize_score(raw: float, metric: str) -> float:
    """Map a raw score onto [0, 1], higher meaning more similar."""
    if metric == "cosine":
        if not -1.0 <= raw <= 1.0:
            raise DomainError(f"cosine {raw} outside [-1, 1]")
        return (raw + 1.0) / 2.0
    if metric == "euclidean":
        if not raw >= 0.0 or math.isinf(raw):
            raise DomainError(f"distance {raw} must be finite and >= 0")
        return 1.0 / (1.0 + raw)
    raise ValueError(f"metric must be one of {METRICS}")


# ------------------------------------------------------------------ ranking


def apply_policy(
    scored: Sequence[tuple[Term, float, float]], policy: DecisionPolicy
) -> list[MatchResult]:
    """Order ``(shell, raw, normalized)`` triples and cut them per ``policy``.

    Ordering is by normalized score descending, then shell IRI ascending.
    """
    ordered = sorted(scored, key=lambda x: (-x[2], term_key(x[0])))
    if isinstance(policy, Threshold):
        chosen = [x for x in ordered if x[2] >= policy.t]
    elif isinstance(policy, TopK):
        chosen = ordered[: policy.k]
    elif isinstance(policy, Hybrid):
        chosen = [x for x in ordered if x[2] >= policy.t]
        if len(chosen) < policy.k:
            chosen = ordered[: min(policy.k, len(ordered))]
    else:
        raise TypeError(f"unknown policy {policy!r}")
    return [MatchResult(s, raw, norm, i + 1) for i, (s, raw, norm) in enumerate(chosen)]


def rank(
    query: Graph,
    candidates: Union[CandidateSet, Iterable[tuple[Term, Graph]]],
    table: EmbeddingTable,
    strategy: str = "mean",
    metric: str = "cosine",
    policy: DecisionPolicy = Hybrid(0.7, 5),
    query_root: Optional[Term] = None,
    counts: Optional[Mapping[str, int]] = None,
) -> list[MatchResult]:
    """Score every candidate against the query graph and apply ``policy``."""
    if not isinstance(candidates, CandidateSet):
        candidates = CandidateSet(candidates)
    if len(candidates) == 0:
        raise EmptyCandidatesError("candidate set is empty")
    qv = graph_vector(query, table, strategy, root=query_root, counts=counts)
    scored = []
    for shell, g in candidates:
        cv = graph_vector(g, table, strategy, root=shell, counts=counts)
        raw = raw_score(qv, cv, metric)
        scored.append((shell, raw, normalize_score(raw, metric)))
    return apply_policy(scored, policy)
