import json
import logging

import pytest

from aasmatch import cli
from aasmatch.aas import AASDocument
from aasmatch.errors import DataError
from aasmatch.pipeline import (
    CONFIG_ENV,
    PipelineConfig,
    StepError,
    leave_one_out,
    load_config,
    run_pipeline,
)
from aasmatch.sparql import parse_query

SMALL = [
    "walk.walks_per_entity=10",
    "train.dim=16",
    "train.epochs=2",
    "match.policy=topk:3",
]


@pytest.fixture
def repo_dir(tmp_path, small_corpus):
    docs, truth = small_corpus
    d = tmp_path / "repo"
    d.mkdir()
    for doc in docs:
        (d / (doc.shells[0].id.rsplit(":", 1)[-1] + ".json")).write_text(doc.dumps())
    (tmp_path / "truth.tsv").write_text(truth.to_tsv())
    return d


def _cfg(repo_dir, *extra):
    return load_config(None, SMALL + [f"paths.repo={repo_dir}", *extra])


def test_config_overrides_and_echo(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"seed": 3, "walk": {"depth": 2}}))
    cfg = load_config(str(p), ["train.dim=8", "match.policy=hybrid:0.5,2"])
    assert cfg.walk.depth == 2 and cfg.train.dim == 8
    assert cfg.walk.seed == cfg.train.seed == 3
    assert PipelineConfig.from_dict(cfg.to_dict()) == cfg


def test_config_from_environment(tmp_path, monkeypatch):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"seed": 11}))
    monkeypatch.setenv(CONFIG_ENV, str(p))
    assert load_config().seed == 11


@pytest.mark.parametrize("override", ["walk.bogus=1", "nosection=1", "match.metric=manhattan", "walk.depth=0"])
def test_config_rejects_bad_values(override):
    with pytest.raises(DataError):
        load_config(None, [override])


def test_pipeline_is_deterministic(repo_dir, small_corpus):
    query = small_corpus[0][0]
    a = run_pipeline(_cfg(repo_dir), query)
    b = run_pipeline(_cfg(repo_dir), query)
    assert a.status == "ok"
    assert a.deterministic_dict() == b.deterministic_dict()
    assert a.results[0].shell.value.endswith("nameplate-000")


def test_cache_hit_skips_training(repo_dir, small_corpus, tmp_path, caplog):
    query = small_corpus[0][2]
    cfg = _cfg(repo_dir, f"embedding.cache={tmp_path / 'cache'}")
    first = run_pipeline(cfg, query)
    with caplog.at_level(logging.INFO, logger="aasmatch"):
        second = run_pipeline(cfg, query)
    assert not first.cache_hit and second.cache_hit
    assert "cache-hit" in caplog.text
    assert first.deterministic_dict() == second.deterministic_dict()


def test_stale_cache_entry_is_retrained(repo_dir, small_corpus, tmp_path, caplog):
    cache = tmp_path / "cache"
    cfg = _cfg(repo_dir, f"embedding.cache={cache}")
    run_pipeline(cfg, small_corpus[0][0])
    (meta,) = cache.glob("*.json")
    meta.write_text(json.dumps({"key": "0" * 64}))
    report = run_pipeline(cfg, small_corpus[0][0])
    assert not report.cache_hit
    assert "stale" in caplog.text


def test_empty_candidate_set(repo_dir, small_corpus):
    c = parse_query('SELECT ?aas WHERE { ?aas <urn:aasmatch:vocab#hasIdShort> "no such shell" }')
    report = run_pipeline(_cfg(repo_dir), small_corpus[0][0], c)
    assert report.status == "empty-candidate-set" and report.results == []


def test_prefilter_restricts_results(repo_dir, small_corpus):
    c = parse_query(
        'PREFIX v: <urn:aasmatch:vocab#> SELECT ?aas WHERE { ?aas v:hasSubmodel ?s . ?s v:hasIdShort "TimeSeriesData" }'
    )
    for scope in ("repository", "filtered"):
        report = run_pipeline(_cfg(repo_dir, f"embedding.scope={scope}"), small_corpus[0][0], c)
        assert report.steps["candidates"] == 4
        assert all("timeseries" in r.shell.value for r in report.results)


def test_query_must_have_one_shell(repo_dir, small_corpus):
    a, b = small_corpus[0][:2]
    two = AASDocument(a.shells + b.shells, a.submodels + b.submodels)
    with pytest.raises(StepError) as info:
        run_pipeline(_cfg(repo_dir), two)
    assert info.value.step == "convert"


def test_output_files(repo_dir, small_corpus, tmp_path):
    out = tmp_path / "out"
    run_pipeline(_cfg(repo_dir, f"paths.output={out}"), small_corpus[0][0])
    report = json.loads((out / "report.json").read_text())
    assert report["config"]["walk"]["walks_per_entity"] == 10
    assert (out / "results.tsv").read_text().startswith("rank\tshell\traw\tnormalized\n")


def test_leave_one_out_excludes_query(repo_dir, small_corpus):
    results, _ = leave_one_out(_cfg(repo_dir), small_corpus[0])
    assert len(results) == 12
    for q, rs in results.items():
        assert len(rs) == 3 and all(not r.shell.value.endswith(q.rsplit(":", 1)[-1]) for r in rs)


def test_composition_equals_subcommands(repo_dir, small_corpus, tmp_path, capsys):
    query = repo_dir / "technical-001.json"
    walk_flags = ["--walks", "10"]
    train_flags = ["--dim", "16", "--epochs", "2"]
    flags = walk_flags + train_flags
    assert cli.main(["convert", "--input", str(repo_dir), "--out", str(tmp_path / "g.nt")]) == 0
    assert cli.main(["walk", "--graph", str(tmp_path / "g.nt"), "--out", str(tmp_path / "w.txt"), *walk_flags]) == 0
    assert cli.main(["train", "--corpus", str(tmp_path / "w.txt"), "--out", str(tmp_path / "e.txt"), *train_flags]) == 0
    capsys.readouterr()
    match_args = ["--query", str(query), "--repo", str(repo_dir), "--policy", "topk:3", *flags]
    assert cli.main(["match", *match_args, "--embeddings", str(tmp_path / "e.txt")]) == 0
    composed = capsys.readouterr().out
    assert cli.main(["match", *match_args]) == 0
    direct = capsys.readouterr().out
    assert composed == direct
    assert composed.count("\n") == 4


def test_threads_do_not_change_report(repo_dir, small_corpus):
    c = parse_query("SELECT ?aas WHERE { ?aas ?p ?o }")
    one = run_pipeline(_cfg(repo_dir, "threads=1"), small_corpus[0][5], c)
    four = run_pipeline(_cfg(repo_dir, "threads=4"), small_corpus[0][5], c)
    assert one.deterministic_dict() == four.deterministic_dict()
    assert four.to_dict()["runtime"]["threads"] == 4
