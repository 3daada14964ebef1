"""Command line interface.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .aas import parse_aas_json, validate
from .corpus import CorpusSpec, GroundTruth, gen_corpus
from .errors import AASMatchError, DataError
from .evaluation import eval_retrieval
from .mapping import map_repository
from .ntriples import parse_ntriples, serialize_ntriples
from .pipeline import (
    PipelineConfig,
    leave_one_out,
    load_config,
    load_document,
    load_repository,
    results_tsv,
    run_pipeline,
    train_or_load,
)
from .rdf import IRI
from .skipgram import EmbeddingTable, build_vocab, load_embeddings, train
from .sparql import eval_ask, eval_select, parse_query
from .walks import WalkCorpus, generate_walks

logger = logging.getLogger("aasmatch")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _write(path: Optional[str], data, binary: bool = False):
    if path is None or path == "-":
        if binary:
            sys.stdout.buffer.write(data)
            sys.stdout.flush()
        else:
            sys.stdout.write(data)
        return
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    if binary:
        p.write_bytes(data)
    else:
        p.write_text(data, encoding="utf-8")


def _read_query(path: str):
    return parse_query(Path(path).read_text(encoding="utf-8"))


# flag name -> dotted config key
_OVERRIDES = {
    "seed": "seed",
    "threads": "threads",
    "namespace": "rdf.namespace",
    "walk_strategy": "walk.strategy",
    "depth": "walk.depth",
    "walks": "walk.walks_per_entity",
    "dim": "train.dim",
    "window": "train.window",
    "epochs": "train.epochs",
    "negatives": "train.negatives",
    "lr": "train.learning_rate",
    "min_lr": "train.min_learning_rate",
    "min_count": "train.min_count",
    "metric": "match.metric",
    "strategy": "match.strategy",
    "policy": "match.policy",
    "scope": "embedding.scope",
    "cache": "embedding.cache",
    "repo": "paths.repo",
}


def _config(args) -> PipelineConfig:
    overrides = list(getattr(args, "set", None) or [])
    for attr, key in _OVERRIDES.items():
        value = getattr(args, attr, None)
        if value is not None:
            overrides.append(f"{key}={json.dumps(value)}")
    if getattr(args, "no_literals", False):
        overrides.append("walk.include_literals=false")
    if getattr(args, "no_magnitude", False):
        overrides.append("walk.magnitude_tokens=false")
    return load_config(getattr(args, "config", None), overrides)


# ------------------------------------------------------------------ commands


def cmd_ingest(args) -> int:
    failed = False
    print("file\tshells\tsubmodels\telements\tviolations")
    for path in sorted(Path(args.repo).glob("*.json")):
        doc = parse_aas_json(path.read_bytes())
        violations = validate(doc)
        for v in violations:
            logger.error("%s: %s at %s: %s", path.name, v.kind, v.path, v.message)
        failed |= bool(violations)
        n_el = sum(len(sm.elements) for sm in doc.submodels)
        print(f"{path.name}\t{len(doc.shells)}\t{len(doc.submodels)}\t{n_el}\t{len(violations)}")
    return EXIT_DATA if failed else EXIT_OK


def _collect_docs(paths: Sequence[str]):
    docs = []
    for p in paths:
        path = Path(p)
        if path.is_dir():
            docs.extend(doc for _, doc in load_repository(path))
        else:
            docs.append(load_document(path))
    return docs


def cmd_convert(args) -> int:
    cfg = _config(args)
    graph, _ = map_repository(_collect_docs(args.input), cfg.rules)
    _write(args.out, serialize_ntriples(graph), binary=True)
    return EXIT_OK


def cmd_query(args) -> int:
    graph = parse_ntriples(Path(args.graph).read_bytes())
    query = _read_query(args.query)
    if query.form == "ASK":
        print("true" if eval_ask(query, graph) else "false")
    else:
        sys.stdout.write(eval_select(query, graph).to_tsv())
    return EXIT_OK


def cmd_walk(args) -> int:
    cfg = _config(args)
    graph = parse_ntriples(Path(args.graph).read_bytes())
    starts = [IRI(s) for s in args.start] if args.start else None
    corpus = generate_walks(graph, starts, cfg.walk, threads=cfg.threads)
    _write(args.out, corpus.to_text())
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _config(args)
    corpus = WalkCorpus.load(args.corpus)
    if args.output_vectors:
        table = train(corpus, build_vocab(corpus, cfg.train.min_count), cfg.train, keep_output=True)
        table.save(args.out, output_path=args.output_vectors)
    else:
        table, hit = train_or_load(corpus, cfg.train, cfg.cache)
        table.save(args.out)
    for i, loss in enumerate(table.epoch_losses, 1):
        logger.info("epoch %d loss %.6f", i, loss)
    return EXIT_OK


def cmd_match(args) -> int:
    cfg = _config(args)
    if cfg.repo is None:
        raise UsageError("match needs --repo (or paths.repo in the config)")
    query_doc = load_document(args.query)
    constraint = _read_query(args.constraint) if args.constraint else None
    table = load_embeddings(args.embeddings) if args.embeddings else None
    report = run_pipeline(cfg, query_doc, constraint, embeddings=table)
    if report.status != "ok":
        print(f"{report.status}: no candidates satisfy the constraint", file=sys.stderr)
    sys.stdout.write(report.results_tsv())
    return EXIT_OK


def cmd_pipeline(args) -> int:
    cfg = _config(args)
    if cfg.repo is None:
        raise UsageError("pipeline needs --repo (or paths.repo in the config)")
    constraint = _read_query(args.constraint) if args.constraint else None
    if args.leave_one_out:
        docs = [doc for _, doc in load_repository(cfg.repo)]
        results, _ = leave_one_out(cfg, docs, constraint)
        lines = ["query\trank\tcandidate\traw\tnormalized"]
        for q in sorted(results):
            for r in results[q]:
                lines.append(f"{q}\t{r.rank}\t{cfg.rules.id_of(r.shell)}\t{r.raw!r}\t{r.score!r}")
        _write(args.out, "\n".join(lines) + "\n")
        return EXIT_OK
    if not args.query:
        raise UsageError("pipeline needs --query unless --leave-one-out is given")
    report = run_pipeline(cfg, load_document(args.query), constraint)
    if report.status != "ok":
        print(f"{report.status}: no candidates satisfy the constraint", file=sys.stderr)
    _write(args.out, report.to_json())
    return EXIT_OK


def cmd_gen_corpus(args) -> int:
    data = json.loads(Path(args.spec).read_text(encoding="utf-8")) if args.spec else {}
    spec = CorpusSpec.from_json(data)
    docs, truth = gen_corpus(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for doc in docs:
        name = doc.shells[0].id.rsplit(":", 1)[-1]
        (out / f"{name}.json").write_text(doc.dumps(), encoding="utf-8")
    (out / "ground_truth.tsv").write_text(truth.to_tsv(), encoding="utf-8")
    print(f"wrote {len(docs)} documents to {out}")
    return EXIT_OK


def read_results_tsv(text: str, namespace: Optional[str] = None) -> dict[str, list[str]]:
    """Parse a ``query, rank, candidate`` TSV into ranked candidate lists."""
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        return {}
    header = lines[0].split("\t")
    try:
        qi, ri, ci = header.index("query"), header.index("rank"), header.index("candidate")
    except ValueError:
        raise DataError("results TSV needs query, rank and candidate columns") from None

    def norm(value: str) -> str:
        if namespace and value.startswith(namespace):
            from urllib.parse import unquote

            return unquote(value[len(namespace):])
        return value

    rows: dict[str, list[tuple[int, str]]] = {}
    for line in lines[1:]:
        parts = line.split("\t")
        rows.setdefault(norm(parts[qi]), []).append((int(parts[ri]), norm(parts[ci])))
    return {q: [c for _, c in sorted(v)] for q, v in rows.items()}


def cmd_eval(args) -> int:
    cfg = _config(args)
    truth = GroundTruth.from_tsv(Path(args.truth).read_text(encoding="utf-8"))
    results = read_results_tsv(Path(args.results).read_text(encoding="utf-8"), cfg.namespace)
    metrics = eval_retrieval(results, truth, args.k)
    sys.stdout.write(metrics.to_tsv())
    return EXIT_OK


# ------------------------------------------------------------------ parser


def _add_common(p):
    p.add_argument("--config", help="JSON config file (default: $AASMATCH_CONFIG)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key, e.g. walk.depth=2")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--namespace", help="base IRI for minted shell/submodel IRIs")


def _add_walk(p, flag="--strategy"):
    p.add_argument(flag, dest="walk_strategy", choices=("random", "bfs"))
    p.add_argument("--depth", type=int)
    p.add_argument("--walks", type=int, help="walks per entity")
    p.add_argument("--no-literals", action="store_true", help="do not emit literal tokens")
    p.add_argument("--no-magnitude", action="store_true", help="omit numeric magnitude tokens")


def _add_train(p):
    p.add_argument("--dim", type=int)
    p.add_argument("--window", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--negatives", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--min-lr", type=float)
    p.add_argument("--min-count", type=int)
    p.add_argument("--cache", help="embedding cache directory")


def _add_match(p):
    p.add_argument("--metric", choices=("cosine", "euclidean"))
    p.add_argument("--strategy", choices=("root", "mean", "weighted_mean"))
    p.add_argument("--policy", help="threshold:T | topk:K | hybrid:T,K")
    p.add_argument("--scope", choices=("repository", "filtered"), help="embedding training scope")
    p.add_argument("--repo", help="directory of AAS JSON files")
    p.add_argument("--constraint", help="SPARQL constraint file using ?aas")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="aasmatch", description="Hybrid SPARQL + graph-embedding AAS retrieval")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    verbose = _Parser(add_help=False)
    verbose.add_argument("-v", "--verbose", action="count", default=argparse.SUPPRESS)

    p = sub.add_parser("ingest", parents=[verbose], help="parse and validate a repository")
    p.add_argument("--repo", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("convert", parents=[verbose], help="map AAS JSON to canonical N-Triples")
    _add_common(p)
    p.add_argument("--input", nargs="+", required=True, help="AAS JSON files or directories")
    p.add_argument("--out")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("query", parents=[verbose], help="run a SPARQL query over an N-Triples file")
    p.add_argument("--graph", required=True)
    p.add_argument("--query", required=True)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("walk", parents=[verbose], help="extract a walk corpus")
    _add_common(p)
    _add_walk(p)
    p.add_argument("--graph", required=True)
    p.add_argument("--start", nargs="*", help="start entity IRIs (default: all subjects)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_walk)

    p = sub.add_parser("train", parents=[verbose], help="train skip-gram embeddings on a walk corpus")
    _add_common(p)
    _add_train(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--output-vectors", help="also write context vectors to this file")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("match", parents=[verbose], help="rank repository shells against a query AAS (TSV)")
    _add_common(p)
    _add_walk(p, "--walk-strategy")
    _add_train(p)
    _add_match(p)
    p.add_argument("--query", required=True, help="query AAS JSON")
    p.add_argument("--embeddings", help="use this embedding file instead of training")
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("pipeline", parents=[verbose], help="run the full pipeline and write a JSON report")
    _add_common(p)
    _add_walk(p, "--walk-strategy")
    _add_train(p)
    _add_match(p)
    p.add_argument("--query", help="query AAS JSON")
    p.add_argument("--leave-one-out", action="store_true", help="rank every repository document against the rest")
    p.add_argument("--out")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("gen-corpus", parents=[verbose], help="generate a synthetic AAS corpus")
    p.add_argument("--spec", help="corpus spec JSON (default: built-in 5 templates x 10)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_corpus)

    p = sub.add_parser("eval", parents=[verbose], help="score ranked results against ground truth")
    _add_common(p)
    p.add_argument("--results", required=True, help="TSV with query, rank, candidate columns")
    p.add_argument("--truth", required=True, help="ground_truth.tsv from gen-corpus")
    p.add_argument("--k", type=int, required=True)
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"aasmatch: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError, json.JSONDecodeError) as exc:
        print(f"aasmatch: {exc}", file=sys.stderr)
        return EXIT_DATA
    except AASMatchError as exc:
        print(f"aasmatch: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        logger.debug("internal error", exc_info=True)
        print(f"aasmatch: internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
