import csv
import json
import logging
import shutil
import subprocess
import sys

import pytest

from eccf.cli import main
from eccf.config import ExperimentConfig, load_config
from eccf.evaluation import METRICS


@pytest.fixture
def workdir(tmp_path, demo_paths):
    """Copy of the bundled corpus with a small, fast config."""
    d = tmp_path / "data"
    d.mkdir()
    for key in ("ratings", "items", "log", "lexicon"):
        shutil.copy(demo_paths[key], d / demo_paths[key].name)
    (d / "config.yaml").write_text(
        "ratings: ratings.csv\nitems: items.csv\nlog: query_log.tsv\nlexicon: lexicon.csv\n"
        "seed: 2\nfolds: 3\nk_values: [5, 10]\npositive_variants: [[4, 5]]\n"
        "algorithms: [U2UCF, SCCF, ECCF]\n",
        encoding="utf-8",
    )
    return d


def run(*argv):
    return main([str(a) for a in argv])


def test_ingest_writes_summary(workdir, tmp_path, capsys):
    assert run("ingest", "--config", workdir / "config.yaml", "--out", tmp_path / "o") == 0
    summary = json.loads((tmp_path / "o" / "ingest_summary.json").read_text())
    assert summary["ratings"]["users"] == 50
    assert summary["ratings"]["ratings"] == 1630
    assert summary["sessions"]["sessions"] == 167
    assert summary["tallies"]["sessions"] == 200
    assert json.loads(capsys.readouterr().out) == summary


def test_build_ccg_is_deterministic(workdir, tmp_path, capsys):
    cfg = workdir / "config.yaml"
    assert run("build-ccg", "--config", cfg, "--out", tmp_path / "a") == 0
    assert run("build-ccg", "--config", cfg, "--out", tmp_path / "b") == 0
    a, b = (tmp_path / "a" / "ccg.csv").read_bytes(), (tmp_path / "b" / "ccg.csv").read_bytes()
    assert a == b
    assert a.startswith(b"source,target,weight\n") or a.splitlines()[0].count(b",") == 2
    assert "edges=" in capsys.readouterr().out
    assert (tmp_path / "a" / "ccg_weights.csv").read_text().startswith("rank,weight")


def test_build_ccg_matches_library_graph(workdir, tmp_path, demo):
    from eccf.ccg import read_graph

    _, cat, _, g = demo
    assert run("build-ccg", "--config", workdir / "config.yaml", "--out", tmp_path) == 0
    h = read_graph(tmp_path / "ccg.csv", cat.categories)
    assert h.edges == g.edges


def test_empty_log_gives_empty_graph_and_warning(workdir, tmp_path, caplog):
    (workdir / "query_log.tsv").write_text("AnonID\tQuery\tQueryTime\tItemRank\tClickURL\n")
    with caplog.at_level(logging.WARNING):
        assert run("build-ccg", "--config", workdir / "config.yaml", "--out", tmp_path) == 0
    assert "empty" in caplog.text
    assert len((tmp_path / "ccg.csv").read_text().splitlines()) == 1


def test_build_profiles(workdir, tmp_path):
    out = tmp_path / "profiles"
    assert run("build-profiles", "--config", workdir / "config.yaml", "--out", out, "--positive", "3,4,5;5") == 0
    names = sorted(p.name for p in out.iterdir())
    assert names == ["profile_EP_3,4,5.csv", "profile_EP_5.csv", "profile_UC.csv"]


def test_inspect(workdir, tmp_path, capsys):
    assert run("inspect", "u0000", "--config", workdir / "config.yaml", "--out", tmp_path) == 0
    out = capsys.readouterr().out
    assert out.startswith("user u0000:")
    assert "UC:" in out and "EP{4,5}:" in out


def test_inspect_user_without_positive_ratings_has_ep_equal_uc(workdir, tmp_path, capsys):
    lines = (workdir / "ratings.csv").read_text().splitlines()
    lines += [f"lowrater,{item},1" for item in ("b0000", "b0001", "b0002")] * 1
    items = sorted({l.split(",")[1] for l in lines[1:]})[:20]
    lines += [f"lowrater,{i},2" for i in items]
    (workdir / "ratings.csv").write_text("\n".join(lines) + "\n")
    assert run("inspect", "lowrater", "--config", workdir / "config.yaml", "--out", tmp_path) == 0
    out = capsys.readouterr().out.splitlines()
    uc = next(l for l in out if l.startswith("UC:"))[3:]
    ep = next(l for l in out if l.startswith("EP{4,5}:"))[len("EP{4,5}:"):]
    assert uc == ep


def test_exit_codes(workdir, tmp_path, capsys):
    cfg = workdir / "config.yaml"
    assert run("inspect", "nobody", "--config", cfg, "--out", tmp_path) == 2
    assert run("run", "--config", cfg, "--bogus") == 1
    assert main(["frobnicate"]) == 1
    assert main(["--help"]) == 0
    assert run("run", "--config", tmp_path / "missing.yaml") == 1
    assert run("run", "--out", tmp_path) == 1  # no inputs configured
    (workdir / "bad.yaml").write_text("ratings: nope.csv\nitems: items.csv\n")
    assert run("run", "--config", workdir / "bad.yaml", "--out", tmp_path) == 2
    (workdir / "unknown.yaml").write_text("colour: blue\n")
    assert run("run", "--config", workdir / "unknown.yaml") == 1
    (workdir / "ratings.csv").write_text("who,what\n")
    assert run("ingest", "--config", cfg, "--out", tmp_path) == 2


def test_failed_run_leaves_no_partial_outputs(workdir, tmp_path):
    (workdir / "lexicon.csv").write_text("term,category\nsushi,Not A Category\n")
    out = tmp_path / "o"
    assert run("build-ccg", "--config", workdir / "config.yaml", "--out", out) == 2
    assert not out.exists() or not any(out.iterdir())


def test_run_and_rerun_from_report(workdir, tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("run", "--config", workdir / "config.yaml", "--out", a) == 0
    report = json.loads((a / "report.json").read_text())
    assert report["protocol"]["config"]["seed"] == 2
    assert set(report["results"]) == {"U2UCF", "SCCF", "ECCF{4,5}"}
    csv_lines = (a / "report.csv").read_text().splitlines()
    assert len(csv_lines) - 1 == 3 * 3 * 2 * len(METRICS)
    rows = list(csv.reader(csv_lines[1:]))
    assert len({tuple(r[:4]) for r in rows}) == len(rows)
    # the report itself is a valid config
    assert run("run", "--config", a / "report.json", "--out", b) == 0
    assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()
    capsys.readouterr()
    assert run("report", a / "report.json", "--csv", tmp_path / "long.csv") == 0
    assert "precision" in capsys.readouterr().out
    assert (tmp_path / "long.csv").read_text() == (a / "report.csv").read_text()


def test_eccf_on_empty_graph_equals_sccf_through_cli(workdir, tmp_path):
    (workdir / "query_log.tsv").write_text("AnonID\tQuery\tQueryTime\tItemRank\tClickURL\n")
    assert run("run", "--config", workdir / "config.yaml", "--algorithms", "SCCF,ECCF", "--out", tmp_path) == 0
    res = json.loads((tmp_path / "report.json").read_text())["results"]
    assert res["SCCF"] == res["ECCF{4,5}"]


def test_report_rejects_garbage(tmp_path):
    (tmp_path / "r.json").write_text("{not json")
    assert run("report", tmp_path / "r.json") == 2


def test_config_override_and_relative_paths(workdir):
    cfg = load_config(workdir / "config.yaml")
    assert cfg.ratings == str((workdir / "ratings.csv").resolve())
    assert cfg.override(seed=9, folds=None).seed == 9
    assert cfg.override(folds=None).folds == 3
    with pytest.raises(ValueError):
        ExperimentConfig(candidates="everything")
    with pytest.raises(ValueError):
        ExperimentConfig(positive_variants=[[0, 5]])


def test_console_script_entry_point(workdir, tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "eccf.cli", "ingest", "--config", str(workdir / "config.yaml"), "--out", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
