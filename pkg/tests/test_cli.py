import json

import pytest

from aasmatch import cli
from aasmatch.corpus import GroundTruth


@pytest.fixture
def repo(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"templates": ["nameplate", "timeseries"], "instances_per_template": 3}))
    out = tmp_path / "repo"
    assert cli.main(["gen-corpus", "--spec", str(spec), "--out", str(out)]) == 0
    return out


def test_usage_errors_exit_1(capsys):
    with pytest.raises(SystemExit) as info:
        cli.main([])
    assert info.value.code == 1
    with pytest.raises(SystemExit) as info:
        cli.main(["walk", "--bogus"])
    assert info.value.code == 1


def test_missing_file_exits_2(tmp_path):
    assert cli.main(["query", "--graph", str(tmp_path / "none.nt"), "--query", str(tmp_path / "q.rq")]) == 2


def test_bad_data_exits_2(tmp_path):
    g = tmp_path / "g.nt"
    g.write_text("not a triple\n")
    q = tmp_path / "q.rq"
    q.write_text("ASK { ?s ?p ?o }")
    assert cli.main(["query", "--graph", str(g), "--query", str(q)]) == 2


def test_internal_error_exits_3(repo, monkeypatch):
    def boom(*a, **k):
        raise RuntimeError("boom")

    monkeypatch.setattr(cli, "map_repository", boom)
    assert cli.main(["convert", "--input", str(repo)]) == 3


def test_ingest_reports_violations(tmp_path, capsys):
    d = tmp_path / "r"
    d.mkdir()
    (d / "a.json").write_text('{"assetAdministrationShells": [{"id": "x", "idShort": "y", "submodels": ["urn:nope"]}]}')
    assert cli.main(["ingest", "--repo", str(d)]) == 2
    assert "a.json\t1\t0\t0\t1" in capsys.readouterr().out


def test_query_ask_and_select(repo, tmp_path, capsys):
    nt = tmp_path / "g.nt"
    assert cli.main(["convert", "--input", str(repo), "--out", str(nt)]) == 0
    q = tmp_path / "q.rq"
    q.write_text('PREFIX v: <urn:aasmatch:vocab#> ASK { ?s v:hasIdShort "Nameplate" }')
    capsys.readouterr()
    assert cli.main(["query", "--graph", str(nt), "--query", str(q)]) == 0
    assert capsys.readouterr().out == "true\n"
    q.write_text('PREFIX v: <urn:aasmatch:vocab#> SELECT ?s WHERE { ?s v:hasIdShort "Nameplate" }')
    assert cli.main(["query", "--graph", str(nt), "--query", str(q)]) == 0
    assert capsys.readouterr().out.count("\n") == 4


def test_convert_is_byte_stable(repo, tmp_path):
    for name in ("a.nt", "b.nt"):
        assert cli.main(["convert", "--input", str(repo), "--out", str(tmp_path / name)]) == 0
    assert (tmp_path / "a.nt").read_bytes() == (tmp_path / "b.nt").read_bytes()


def test_walk_threads_flag(repo, tmp_path):
    nt = tmp_path / "g.nt"
    cli.main(["convert", "--input", str(repo), "--out", str(nt)])
    for t in ("1", "3"):
        assert cli.main(["walk", "--graph", str(nt), "--walks", "5", "--threads", t, "--out", str(tmp_path / f"w{t}")]) == 0
    assert (tmp_path / "w1").read_bytes() == (tmp_path / "w3").read_bytes()


def test_leave_one_out_then_eval(repo, tmp_path, capsys):
    loo = tmp_path / "loo.tsv"
    args = ["pipeline", "--repo", str(repo), "--leave-one-out", "--walks", "10", "--dim", "16", "--policy", "topk:2", "--out", str(loo)]
    assert cli.main(args) == 0
    truth = GroundTruth.from_tsv((repo / "ground_truth.tsv").read_text())
    assert {line.split("\t")[0] for line in loo.read_text().splitlines()[1:]} == set(truth.template_of)
    capsys.readouterr()
    assert cli.main(["eval", "--results", str(loo), "--truth", str(repo / "ground_truth.tsv"), "--k", "2"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("metric\tvalue\nprecision@2\t")


def test_pipeline_report_to_stdout(repo, capsys):
    q = sorted(repo.glob("*.json"))[0]
    assert cli.main(["pipeline", "--repo", str(repo), "--query", str(q), "--walks", "5", "--dim", "8", "--seed", "2"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["status"] == "ok" and report["config"]["seed"] == 2
