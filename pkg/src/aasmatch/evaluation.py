"""Retrieval metrics against corpus ground truth."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from math import comb
from typing import Mapping, Optional, Sequence

from .corpus import GroundTruth
from .errors import MissingGroundTruthError


@dataclass
class QueryDetail:
    query: str
    template: str
    hits_at_k: int
    first_hit_rank: Optional[int]
    reciprocal_rank: float


@dataclass
class RetrievalMetrics:
    precision_at_k: float
    mean_reciprocal_rank: float
    k: int
    details: list[QueryDetail] = field(default_factory=list)

    def to_tsv(self) -> str:
        lines = ["metric\tvalue", f"precision@{self.k}\t{self.precision_at_k:.6f}",
                 f"mrr\t{self.mean_reciprocal_rank:.6f}", f"queries\t{len(self.details)}"]
        return "\n".join(lines) + "\n"


def eval_retrieval(
    results: Mapping[str, Sequence[str]], truth: GroundTruth, k: int
) -> RetrievalMetrics:
    """Precision@k and MRR of same-template retrieval.

    ``results`` maps each query document id to its ranked candidate ids. A
    query whose list holds no same-template candidate contributes a
    reciprocal rank of 0.
    """
    if k < 1:
        raise ValueError("k must be positive")
    details = []
    for query in sorted(results):
        if query not in truth.template_of:
            raise MissingGroundTruthError(f"no ground truth for query {query!r}")
        target = truth.template_of[query]
        ranked = list(results[query])
        if query in ranked:
            raise ValueError(f"query {query!r} appears in its own candidate list")
        relevant = []
        for cand in ranked:
            if cand not in truth.template_of:
                raise MissingGroundTruthError(f"no ground truth for candidate {cand!r}")
            relevant.append(truth.template_of[cand] == target)
        first = next((i + 1 for i, r in enumerate(relevant) if r), None)
        details.append(
            QueryDetail(query, target, sum(relevant[:k]), first, 1.0 / first if first else 0.0)
        )
    if not details:
        return RetrievalMetrics(0.0, 0.0, k, [])
    p = sum(d.hits_at_k for d in details) / (k * len(details))
    mrr = sum(d.reciprocal_rank for d in details) / len(details)
    return RetrievalMetrics(p, mrr, k, details)


def expected_random_rr(n_candidates: int, n_relevant: int, cutoff: Optional[int] = None) -> float:
    """Expected reciprocal rank of the first relevant item under a uniformly
    random ranking, counting 0 when it falls beyond ``cutoff``."""
    if not 0 <= n_relevant <= n_candidates:
        raise ValueError("need 0 <= n_relevant <= n_candidates")
    if n_relevant == 0:
        return 0.0
    last = n_candidates - n_relevant + 1
    if cutoff is not None:
        last = min(last, cutoff)
    total = comb(n_candidates, n_relevant)
    return sum(comb(n_candidates - r, n_relevant - 1) / total / r for r in range(1, last + 1))


def simulate_random_rr(
    n_candidates: int,
    n_relevant: int,
    cutoff: Optional[int] = None,
    trials: int = 20000,
    seed: int = 0,
) -> float:
    """Monte Carlo estimate of :func:`expected_random_rr`."""
    rng = random.Random(seed)
    items = [True] * n_relevant + [False] * (n_candidates - n_relevant)
    limit = n_candidates if cutoff is None else min(cutoff, n_candidates)
    acc = 0.0
    for _ in range(trials):
        rng.shuffle(items)
        for i in range(limit):
            if items[i]:
                acc += 1.0 / (i + 1)
                break
    return acc / trials


def random_baseline_mrr(truth: GroundTruth, cutoff: Optional[int] = None) -> float:
    """Expected leave-one-out MRR of random rankings for this ground truth."""
    sizes: dict[str, int] = {}
    for t in truth.template_of.values():
        sizes[t] = sizes.get(t, 0) + 1
    n = len(truth.template_of)
    vals = [expected_random_rr(n - 1, sizes[t] - 1, cutoff) for t in truth.template_of.values()]
    return sum(vals) / len(vals) if vals else 0.0
