import random

import numpy as np
import pytest
from hypothesis import given, strategies as st

from aasmatch.errors import DimensionMismatchError, DomainError, EmptyCandidatesError, ZeroVectorError
from aasmatch.mapping import map_repository, shell_subgraphs
from aasmatch.matcher import (
    CandidateSet,
    Hybrid,
    Threshold,
    TopK,
    apply_policy,
    cosine,
    entity_terms,
    euclidean,
    format_policy,
    graph_vector,
    normalize_score,
    parse_policy,
    rank,
)
from aasmatch.rdf import IRI, Graph, Triple
from aasmatch.skipgram import EmbeddingTable, Hyperparams, build_vocab, train
from aasmatch.walks import WalkConfig, generate_walks, token

from oracles import cosine_oracle, euclidean_oracle, policy_oracle

# 32 / sqrt(14 * 77), evaluated at 30 digits and frozen
COS_123_456 = 0.974631846197076271


def test_metric_oracles_random_pairs():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        a, b = rng.normal(size=8), rng.normal(size=8)
        assert abs(cosine(a, b) - cosine_oracle(a, b)) <= 1e-12
        assert abs(euclidean(a, b) - euclidean_oracle(a, b)) <= 1e-12


def test_metric_fixed_values():
    assert abs(cosine([1, 2, 3], [4, 5, 6]) - COS_123_456) <= 1e-6
    assert euclidean([0, 0], [3, 4]) == 5.0


def test_normalization_endpoints():
    assert [normalize_score(x, "cosine") for x in (-1.0, 0.0, 1.0)] == [0.0, 0.5, 1.0]
    assert normalize_score(0.0, "euclidean") == 1.0


def test_identical_vectors_cosine_exactly_one():
    rng = np.random.default_rng(5)
    for _ in range(200):
        v = rng.normal(size=16) * rng.uniform(1e-3, 1e3)
        assert cosine(v, v.copy()) == 1.0


def test_metric_errors():
    with pytest.raises(ZeroVectorError):
        cosine([0, 0], [1, 0])
    with pytest.raises(DimensionMismatchError):
        euclidean([1, 2], [1, 2, 3])
    with pytest.raises(DomainError):
        normalize_score(1.5, "cosine")
    with pytest.raises(DomainError):
        normalize_score(-0.1, "euclidean")


vec = st.lists(st.floats(-100, 100, allow_nan=False), min_size=4, max_size=4).filter(lambda v: any(abs(x) > 1e-3 for x in v))


@given(vec, vec, vec)
def test_metric_axioms(a, b, c):
    assert cosine(a, b) == pytest.approx(cosine(b, a), abs=1e-12)
    assert euclidean(a, b) == pytest.approx(euclidean(b, a), abs=1e-12)
    assert euclidean(a, a) == 0.0
    assert euclidean(a, c) <= euclidean(a, b) + euclidean(b, c) + 1e-9


@given(st.lists(st.floats(-1, 1), min_size=2, max_size=30))
def test_normalization_preserves_order(raws):
    for metric, vals in (("cosine", raws), ("euclidean", [abs(x) * 10 for x in raws])):
        norm = [normalize_score(x, metric) for x in vals]
        for i in range(len(vals)):
            for j in range(len(vals)):
                if vals[i] < vals[j]:
                    # rounding may merge raw scores closer than the float spacing
                    lo, hi = (norm[i], norm[j]) if metric == "cosine" else (norm[j], norm[i])
                    assert lo <= hi
                    if vals[j] - vals[i] > 1e-12:
                        assert lo < hi


def _random_policy(rng):
    kind = rng.choice(["t", "k", "h"])
    t = rng.choice([0.0, 0.25, 0.5, 0.7, 0.9, 1.0, rng.random()])
    k = rng.randint(1, 8)
    return {"t": Threshold(t), "k": TopK(k), "h": Hybrid(t, k)}[kind]


def test_policy_oracle_500_trials():
    rng = random.Random(0)
    for _ in range(500):
        n = rng.randint(1, 12)
        pool = [0.0, 0.25, 0.5, 0.7, 0.9, 1.0]
        scored = [
            (IRI(f"urn:s:{i:02d}"), 0.0, rng.choice(pool) if rng.random() < 0.5 else rng.random())
            for i in rng.sample(range(50), n)
        ]
        policy = _random_policy(rng)
        got = [r.shell.value for r in apply_policy(scored, policy)]
        assert got == policy_oracle([(s.value, x) for s, _, x in scored], policy)


def test_hybrid_fill_up_example():
    scored = [(IRI("urn:A"), 0, 0.95), (IRI("urn:B"), 0, 0.92), (IRI("urn:C"), 0, 0.85)]
    assert [r.shell.value for r in apply_policy(scored, Hybrid(0.9, 3))] == ["urn:A", "urn:B", "urn:C"]


@given(st.lists(st.floats(0, 1), min_size=1, max_size=15), st.floats(0, 1), st.integers(1, 20))
def test_policy_properties(scores, t, k):
    scored = [(IRI(f"urn:s:{i}"), 0.0, x) for i, x in enumerate(scores)]
    out = apply_policy(scored, Hybrid(t, k))
    assert len(out) >= min(k, len(scores))
    assert {r.shell for r in apply_policy(scored, Threshold(t))} <= {r.shell for r in out}
    assert len(apply_policy(scored, Threshold(0.0))) == len(scores)
    assert len(apply_policy(scored, TopK(len(scores)))) == len(scores)
    assert [r.rank for r in out] == list(range(1, len(out) + 1))


@pytest.mark.parametrize("text", ["threshold:0.5", "topk:3", "hybrid:0.7,5"])
def test_policy_text_round_trip(text):
    assert parse_policy(format_policy(parse_policy(text))) == parse_policy(text)


@pytest.mark.parametrize("text", ["threshold:1.5", "topk:0", "hybrid:0.5", "best:1"])
def test_bad_policies(text):
    with pytest.raises(ValueError):
        parse_policy(text)


@pytest.fixture(scope="module")
def trained(small_corpus):
    docs, _ = small_corpus
    graph, shells = map_repository(docs)
    corpus = generate_walks(graph, None, WalkConfig(walks_per_entity=20))
    table = train(corpus, build_vocab(corpus), Hyperparams(dim=16, epochs=3))
    return shell_subgraphs(graph, shells), table


@pytest.mark.parametrize("strategy", ["root", "mean", "weighted_mean"])
def test_duplicate_dominates(trained, strategy):
    repo, table = trained
    for q_shell, q_graph in repo[::3]:
        for policy in (TopK(1), TopK(5), Threshold(0.0), Threshold(1.0), Hybrid(0.7, 5), Hybrid(1.0, 1)):
            for metric in ("cosine", "euclidean"):
                res = rank(q_graph, repo, table, strategy, metric, policy, query_root=q_shell)
                assert res[0].shell == q_shell
                assert abs(res[0].score - 1.0) <= 1e-6


def test_rank_is_insertion_order_independent(trained):
    repo, table = trained
    q_shell, q_graph = repo[1]
    shuffled = list(repo)
    random.Random(3).shuffle(shuffled)
    assert rank(q_graph, repo, table, query_root=q_shell) == rank(q_graph, shuffled, table, query_root=q_shell)


def test_metric_swap_keeps_order(trained):
    repo, table = trained
    q_shell, q_graph = repo[2]
    res = rank(q_graph, repo, table, "mean", "cosine", TopK(len(repo)), query_root=q_shell)
    raws = [r.raw for r in res]
    assert raws == sorted(raws, reverse=True)


def test_graph_vector_strategies(trained):
    repo, table = trained
    shell, g = repo[0]
    assert np.array_equal(graph_vector(g, table, "root", root=shell), table.get(shell.value).astype(float))
    mean = graph_vector(g, table, "mean")
    rows = [table.get(token(e)).astype(float) for e in entity_terms(g) if token(e) in table]
    np.testing.assert_allclose(mean, np.mean(rows, axis=0), rtol=1e-12)
    assert graph_vector(g, table, "weighted_mean").shape == (table.dim,)


def test_unknown_tokens_are_skipped():
    table = EmbeddingTable(["urn:a"], np.ones((1, 3)))
    g = Graph([Triple(IRI("urn:a"), IRI("urn:p"), IRI("urn:zzz"))])
    assert np.array_equal(graph_vector(g, table, "mean"), np.ones(3))


def test_empty_candidates(trained):
    repo, table = trained
    with pytest.raises(EmptyCandidatesError):
        rank(repo[0][1], CandidateSet([]), table)
