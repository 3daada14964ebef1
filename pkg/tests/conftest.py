"""Shared strategies and fixtures."""

from __future__ import annotations

import itertools
import random

import pytest
from hypothesis import strategies as st

from aasmatch.corpus import BUILTIN_TEMPLATES, CorpusSpec, gen_corpus
from aasmatch.rdf import XSD, IRI, BlankNode, Graph, Literal, Triple

EX = "http://example.org/"

# Small pools so random graphs share nodes and queries find joins.
NODE_NAMES = ["a", "b", "c", "d", "e", "f"]
PRED_NAMES = ["p", "q", "r"]
LITERALS = [
    Literal("x"),
    Literal("42", XSD + "integer"),
    Literal("hallo", language="de"),
    Literal('tab\tquote"back\\slash\nnl'),
    Literal("ünïcødé ✓"),
    Literal(""),
]


def iri(name: str) -> IRI:
    return IRI(EX + name)


nodes = st.sampled_from([iri(n) for n in NODE_NAMES])
preds = st.sampled_from([iri(n) for n in PRED_NAMES])
objects = st.one_of(nodes, st.sampled_from(LITERALS), st.sampled_from([BlankNode("b0"), BlankNode("b1")]))
subjects = st.one_of(nodes, st.sampled_from([BlankNode("b0"), BlankNode("b1")]))
triples = st.builds(Triple, subjects, preds, objects)
graphs = st.lists(triples, max_size=50).map(Graph)

# Free-form terms for serialization round-trips.
_iri_chars = st.characters(
    blacklist_characters='<>"{}|^`\\ \t\n\r', blacklist_categories=("Cs", "Cc", "Zs", "Zl", "Zp")
)
free_iris = st.text(_iri_chars, min_size=1, max_size=12).map(lambda s: IRI(EX + s))
free_literals = st.one_of(
    st.builds(Literal, st.text(max_size=15)),
    st.builds(lambda s: Literal(s, XSD + "string"), st.text(max_size=8)),
    st.builds(lambda s, l: Literal(s, language=l), st.text(max_size=8), st.sampled_from(["en", "de-AT", "fr"])),
)
free_triples = st.builds(
    Triple,
    st.one_of(free_iris, st.builds(BlankNode, st.from_regex(r"[A-Za-z0-9_]{1,6}", fullmatch=True))),
    free_iris,
    st.one_of(free_iris, free_literals),
)
free_graphs = st.lists(free_triples, max_size=20).map(Graph)


def random_graph(rng: random.Random, n_triples: int, n_nodes: int = 8, n_preds: int = 3, literals: bool = True) -> Graph:
    """Seeded random graph over small node/predicate pools."""
    g = Graph()
    for _ in range(n_triples):
        s = iri(f"n{rng.randrange(n_nodes)}")
        p = iri(f"p{rng.randrange(n_preds)}")
        if literals and rng.random() < 0.25:
            o = rng.choice(LITERALS[:3] + [Literal(str(rng.randrange(-500, 500)), XSD + "integer")])
        else:
            o = iri(f"n{rng.randrange(n_nodes)}")
        g.add(Triple(s, p, o))
    return g


def brute_force_rows(graph: Graph, patterns, filters=()):
    """Enumerate every assignment of graph terms to variables and keep those
    that put every pattern into the graph."""
    from aasmatch.sparql import Variable

    def parts(p):
        return (p.subject, p.predicate, p.object)

    variables = sorted({t.name for p in patterns for t in parts(p) if isinstance(t, Variable)})
    terms = sorted(graph.terms(), key=lambda t: t.n3())
    rows = set()
    for combo in itertools.product(terms, repeat=len(variables)):
        b = dict(zip(variables, combo))
        ok = True
        for p in patterns:
            terms = [b[t.name] if isinstance(t, Variable) else t for t in parts(p)]
            try:
                tr = Triple(*terms)
            except Exception:
                ok = False
                break
            if tr not in graph:
                ok = False
                break
        if ok and all(_filter_ok(f, b) for f in filters):
            rows.add(tuple(sorted(b.items(), key=lambda kv: kv[0])))
    return rows


def _filter_ok(f, b):
    from aasmatch.sparql import Contains, Equals

    v = b[f.var]
    if isinstance(f, Equals):
        return v == f.value
    if isinstance(f, Contains):
        text = v.value if isinstance(v, IRI) else getattr(v, "lexical", None)
        return text is not None and f.substring in text
    raise TypeError(f)


@pytest.fixture(scope="session")
def small_corpus():
    """3 templates x 4 instances, lightly perturbed."""
    spec = CorpusSpec(templates=tuple(BUILTIN_TEMPLATES[n] for n in ("nameplate", "timeseries", "technical")), instances_per_template=4, seed=7)
    return gen_corpus(spec)


def random_query(
    rng: random.Random, form: str = "SELECT", n_nodes: int = 8, n_preds: int = 3, with_filters: bool = True
) -> str:
    """Random BGP query text with at most 3 patterns and 2 variables."""
    variables = ["?x", "?y"][: rng.randint(1, 2)]

    def node():
        return f"<{EX}n{rng.randrange(n_nodes)}>"

    def obj():
        r = rng.random()
        if r < 0.45:
            return rng.choice(variables)
        if r < 0.8:
            return node()
        return rng.choice(['"x"', '"hallo"@de', f'"{rng.randrange(-500, 500)}"^^<{XSD}integer>'])

    patterns = []
    for _ in range(rng.randint(1, 3)):
        s = rng.choice(variables) if rng.random() < 0.6 else node()
        p = rng.choice(variables) if rng.random() < 0.15 else f"<{EX}p{rng.randrange(n_preds)}>"
        patterns.append(f"{s} {p} {obj()}")
    used = [v for v in variables if any(v in pat for pat in patterns)]
    if not used:
        patterns[0] = f"{variables[0]} <{EX}p0> {patterns[0].split(' ', 2)[2]}"
        used = [variables[0]]
    filters = []
    if with_filters and rng.random() < 0.3:
        v = rng.choice(used)
        filters.append(f'FILTER(CONTAINS(STR({v}), "{rng.choice(["n1", "a", "/", "x"])}"))')
    if with_filters and rng.random() < 0.2:
        filters.append(f"FILTER({rng.choice(used)} = {node()})")
    body = " . ".join(patterns)
    head = "ASK" if form == "ASK" else "SELECT " + " ".join(used)
    return f"{head} WHERE {{ {body} {' '.join(filters)} }}"


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE_LINES[number] = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
