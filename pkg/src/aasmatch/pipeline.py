"""End-to-end orchestration: ingest, convert, prefilter, walk, train, match."""

from __future__ import annotations

import copy
import hashlib
import json
import logging
import os
import time
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Optional, Sequence

from .aas import AASDocument, parse_aas_json, validate
from .errors import AASMatchError, DataError
from .mapping import MappingRules, map_document, map_repository, subgraph_of
from .matcher import (
    METRICS,
    STRATEGIES,
    CandidateSet,
    DecisionPolicy,
    MatchResult,
    format_policy,
    parse_policy,
    rank,
)
from .ntriples import serialize_ntriples
from .rdf import Graph, Term
from .skipgram import EmbeddingTable, Hyperparams, build_vocab, load_embeddings, train
from .sparql import Query, prefilter
from .walks import WalkConfig, WalkCorpus, generate_walks

logger = logging.getLogger(__name__)

CONFIG_ENV = "AASMATCH_CONFIG"
SCOPES = ("repository", "filtered")


class StepError(DataError):
    """A component error tagged with the pipeline step it came from."""

    def __init__(self, step: str, error: Exception):
        super().__init__(f"[{step}] {error}")
        self.step = step
        self.error = error


@dataclass(frozen=True)
class PipelineConfig:
    seed: int = 0
    threads: int = 1
    namespace: str = "urn:aasmatch:repo/"
    walk: WalkConfig = WalkConfig()
    train: Hyperparams = Hyperparams()
    metric: str = "cosine"
    strategy: str = "mean"
    policy: DecisionPolicy = parse_policy("hybrid:0.7,5")
    scope: str = "repository"
    repo: Optional[str] = None
    cache: Optional[str] = None
    output: Optional[str] = None

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValueError(f"metric must be one of {METRICS}")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}")
        if self.scope not in SCOPES:
            raise ValueError(f"embedding scope must be one of {SCOPES}")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        # the global seed is the single source of randomness
        object.__setattr__(self, "walk", replace(self.walk, seed=self.seed))
        object.__setattr__(self, "train", replace(self.train, seed=self.seed))

    @property
    def rules(self) -> MappingRules:
        return MappingRules(self.namespace)

    def to_dict(self) -> dict:
        walk = asdict(self.walk)
        hp = asdict(self.train)
        walk.pop("seed")
        hp.pop("seed")
        return {
            "seed": self.seed,
            "threads": self.threads,
            "rdf": {"namespace": self.namespace},
            "walk": walk,
            "train": hp,
            "match": {"metric": self.metric, "strategy": self.strategy, "policy": format_policy(self.policy)},
            "embedding": {"scope": self.scope, "cache": self.cache},
            "paths": {"repo": self.repo, "output": self.output},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        data = copy.deepcopy(data)
        known = {"seed", "threads", "rdf", "walk", "train", "match", "embedding", "paths"}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config sections: {sorted(unknown)}")

        def section(name, allowed):
            sec = data.get(name) or {}
            bad = set(sec) - set(allowed)
            if bad:
                raise ValueError(f"unknown keys in {name!r}: {sorted(bad)}")
            return sec

        walk_keys = [f.name for f in fields(WalkConfig) if f.name != "seed"]
        hp_keys = [f.name for f in fields(Hyperparams) if f.name != "seed"]
        rdf = section("rdf", ["namespace"])
        walk = section("walk", walk_keys)
        hp = section("train", hp_keys)
        match = section("match", ["metric", "strategy", "policy"])
        emb = section("embedding", ["scope", "cache"])
        paths = section("paths", ["repo", "output"])
        kwargs: dict[str, Any] = {}
        if "seed" in data:
            kwargs["seed"] = int(data["seed"])
        if "threads" in data:
            kwargs["threads"] = int(data["threads"])
        if "namespace" in rdf:
            kwargs["namespace"] = rdf["namespace"]
        kwargs["walk"] = WalkConfig(**walk)
        kwargs["train"] = Hyperparams(**hp)
        if "metric" in match:
            kwargs["metric"] = match["metric"]
        if "strategy" in match:
            kwargs["strategy"] = match["strategy"]
        if "policy" in match:
            kwargs["policy"] = parse_policy(match["policy"])
        if "scope" in emb:
            kwargs["scope"] = emb["scope"]
        if "cache" in emb:
            kwargs["cache"] = emb["cache"]
        if "repo" in paths:
            kwargs["repo"] = paths["repo"]
        if "output" in paths:
            kwargs["output"] = paths["output"]
        return cls(**kwargs)


def _coerce(value: str) -> Any:
    try:
        return json.loads(value)
    except json.JSONDecodeError:
        return value


def load_config(path: Optional[str] = None, overrides: Sequence[str] = ()) -> PipelineConfig:
    """Read a JSON config (falling back to ``$AASMATCH_CONFIG``) and apply
    ``section.key=value`` overrides."""
    path = path or os.environ.get(CONFIG_ENV)
    data: dict = {}
    if path:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"cannot read config {path}: {exc}") from None
        if not isinstance(data, dict):
            raise DataError(f"config {path} must be a JSON object")
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep:
            raise ValueError(f"override {item!r} is not key=value")
        parts = key.strip().split(".")
        target = data
        for part in parts[:-1]:
            target = target.setdefault(part, {})
        target[parts[-1]] = _coerce(value)
    try:
        return PipelineConfig.from_dict(data)
    except (TypeError, ValueError) as exc:
        raise DataError(f"invalid config: {exc}") from None


# ------------------------------------------------------------ repository IO


def load_document(path) -> AASDocument:
    doc = parse_aas_json(Path(path).read_bytes())
    violations = validate(doc)
    if violations:
        v = violations[0]
        raise DataError(f"{path}: {len(violations)} violations, first {v.kind} at {v.path}: {v.message}")
    return doc


def load_repository(repo_dir) -> list[tuple[Path, AASDocument]]:
    repo = Path(repo_dir)
    if not repo.is_dir():
        raise DataError(f"repository directory {repo} does not exist")
    files = sorted(p for p in repo.iterdir() if p.suffix == ".json" and p.is_file())
    if not files:
        raise DataError(f"no AAS JSON files in {repo}")
    return [(p, load_document(p)) for p in files]


# ------------------------------------------------------------ embedding cache


def cache_key(corpus: WalkCorpus, hp: Hyperparams) -> str:
    h = hashlib.sha256()
    h.update(json.dumps(asdict(hp), sort_keys=True).encode("utf-8"))
    h.update(b"\0")
    h.update(corpus.to_text().encode("utf-8"))
    return h.hexdigest()


def train_or_load(
    corpus: WalkCorpus, hp: Hyperparams, cache_dir: Optional[str] = None
) -> tuple[EmbeddingTable, bool]:
    """Train on ``corpus`` unless a cached table for (corpus, hp) exists.

    Returns the table and whether it came from the cache.
    """
    key = cache_key(corpus, hp)
    if cache_dir is not None:
        cdir = Path(cache_dir)
        emb_path = cdir / f"emb-{key[:32]}.txt"
        meta_path = cdir / f"emb-{key[:32]}.json"
        if emb_path.exists() and meta_path.exists():
            meta = json.loads(meta_path.read_text(encoding="utf-8"))
            if meta.get("key") == key:
                table = load_embeddings(emb_path)
                table.counts = dict(corpus.token_counts())
                logger.info("cache-hit %s", emb_path)
                return table, True
            logger.warning("cache entry %s is stale (hash mismatch); retraining", emb_path)
    vocab = build_vocab(corpus, hp.min_count)
    table = train(corpus, vocab, hp)
    # the cache stores what a reload would give, so both paths agree exactly
    table = EmbeddingTable(table.tokens, table.vectors, counts=table.counts, epoch_losses=table.epoch_losses)
    if cache_dir is not None:
        cdir.mkdir(parents=True, exist_ok=True)
        table.save(emb_path)
        meta_path.write_text(json.dumps({"key": key, "train": asdict(hp)}, sort_keys=True), encoding="utf-8")
        logger.info("cache-store %s", emb_path)
    return table, False


# ------------------------------------------------------------ pipeline


@dataclass
class MatchReport:
    config: dict
    query: Optional[str]
    status: str
    steps: dict
    results: list[MatchResult] = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    cache_hit: bool = False
    threads: int = 1

    def deterministic_dict(self) -> dict:
        return {
            "config": self.config,
            "query": self.query,
            "status": self.status,
            "steps": self.steps,
            "results": [
                {"rank": r.rank, "shell": str(r.shell), "raw": r.raw, "score": r.score} for r in self.results
            ],
        }

    def to_dict(self) -> dict:
        d = self.deterministic_dict()
        d["runtime"] = {"timings": self.timings, "cache_hit": self.cache_hit, "threads": self.threads}
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def results_tsv(self) -> str:
        return results_tsv(self.results)


def results_tsv(results: Sequence[MatchResult]) -> str:
    lines = ["rank\tshell\traw\tnormalized"]
    lines.extend(f"{r.rank}\t{r.shell}\t{r.raw!r}\t{r.score!r}" for r in results)
    return "\n".join(lines) + "\n"


class _Timer:
    def __init__(self):
        self.timings: dict[str, float] = {}

    def run(self, step: str, fn, *args, **kwargs):
        t0 = time.perf_counter()
        try:
            return fn(*args, **kwargs)
        except AASMatchError as exc:
            raise StepError(step, exc) from exc
        finally:
            self.timings[step] = round(time.perf_counter() - t0, 6)


def _echo(config: PipelineConfig) -> dict:
    # thread count never changes results, so it is reported as runtime only
    d = config.to_dict()
    d.pop("threads")
    return d


def _query_graph(query_doc: AASDocument, rules: MappingRules) -> tuple[Term, Graph]:
    if len(query_doc.shells) != 1:
        raise DataError(f"query document must hold exactly one shell, found {len(query_doc.shells)}")
    shell = rules.shell_iri(query_doc.shells[0].id)
    return shell, map_document(query_doc, rules)


def run_pipeline(
    config: PipelineConfig,
    query_doc: AASDocument,
    constraint: Optional[Query] = None,
    repository: Optional[Sequence[AASDocument]] = None,
    embeddings: Optional[EmbeddingTable] = None,
) -> MatchReport:
    """Rank repository shells against ``query_doc``.

    The repository is read from ``config.repo`` unless ``repository`` is
    given. Without a constraint every shell is a candidate. An empty
    candidate set yields a report with status ``empty-candidate-set``.
    """
    timer = _Timer()
    rules = config.rules

    def ingest():
        if repository is not None:
            return list(repository)
        if config.repo is None:
            raise DataError("no repository directory configured")
        return [doc for _, doc in load_repository(config.repo)]

    docs = timer.run("ingest", ingest)

    def convert():
        graph, shells = map_repository(docs, rules)
        q_shell, q_graph = _query_graph(query_doc, rules)
        if graph.has_subject(q_shell) and subgraph_of(graph, q_shell) != q_graph:
            raise DataError(f"query shell {q_shell} collides with a different repository document")
        return graph, shells, q_shell, q_graph

    graph, shells, q_shell, q_graph = timer.run("convert", convert)

    def do_prefilter():
        repo = [(s, subgraph_of(graph, s)) for s in shells]
        if constraint is None:
            return CandidateSet(repo)
        return prefilter(constraint, repo, threads=config.threads)

    candidates = timer.run("prefilter", do_prefilter)
    steps = {
        "documents": len(docs),
        "triples": len(graph),
        "candidates": len(candidates),
    }
    if len(candidates) == 0:
        return MatchReport(
            _echo(config), str(q_shell), "empty-candidate-set", steps, [], timer.timings, threads=config.threads
        )

    def walk():
        if config.scope == "repository":
            g = graph.copy()
        else:
            g = Graph()
            for _, sub in candidates:
                g.update(sub)
        g.update(q_graph)
        return generate_walks(g, None, config.walk, threads=config.threads)

    cache_hit = False
    if embeddings is None:
        corpus = timer.run("walk", walk)
        table, cache_hit = timer.run("train", train_or_load, corpus, config.train, config.cache)
        steps["sentences"] = len(corpus)
    else:
        table = embeddings
    steps["vocab"] = len(table)
    steps["embedding_sha256"] = hashlib.sha256(table.to_bytes()).hexdigest()

    results = timer.run(
        "match",
        rank,
        q_graph,
        candidates,
        table,
        strategy=config.strategy,
        metric=config.metric,
        policy=config.policy,
        query_root=q_shell,
    )
    report = MatchReport(
        _echo(config), str(q_shell), "ok", steps, results, timer.timings, cache_hit, config.threads
    )
    if config.output is not None:
        out = Path(config.output)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(report.to_json(), encoding="utf-8")
        (out / "results.tsv").write_text(report.results_tsv(), encoding="utf-8")
    return report


def leave_one_out(
    config: PipelineConfig,
    docs: Sequence[AASDocument],
    constraint: Optional[Query] = None,
) -> tuple[dict[str, list[MatchResult]], EmbeddingTable]:
    """Rank every document against all others with one shared embedding.

    Returns results keyed by shell id (not IRI), plus the trained table.
    Embeddings are trained once on the whole repository.
    """
    rules = config.rules
    graph, shells = map_repository(docs, rules)
    subgraphs = {s: subgraph_of(graph, s) for s in shells}
    corpus = generate_walks(graph, None, config.walk, threads=config.threads)
    table, _ = train_or_load(corpus, config.train, config.cache)
    out: dict[str, list[MatchResult]] = {}
    for q in shells:
        repo = [(s, subgraphs[s]) for s in shells if s != q]
        cands = CandidateSet(repo) if constraint is None else prefilter(constraint, repo)
        if len(cands) == 0:
            out[rules.id_of(q)] = []
            continue
        out[rules.id_of(q)] = rank(
            subgraphs[q], cands, table, config.strategy, config.metric, config.policy, query_root=q
        )
    return out, table


def ranked_ids(results: dict[str, list[MatchResult]], rules: MappingRules) -> dict[str, list[str]]:
    return {q: [rules.id_of(r.shell) for r in rs] for q, rs in results.items()}


def export_graph(docs: Sequence[AASDocument], rules: MappingRules) -> bytes:
    graph, _ = map_repository(docs, rules)
    return serialize_ntriples(graph)
