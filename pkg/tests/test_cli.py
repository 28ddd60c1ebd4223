from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from netautoma.cli import main
from netautoma.graph import write_edge_list
from netautoma.netgen import gen_watts_strogatz
from netautoma.llna import read_pgm

MANIFEST = """\
[dataset]
name = tiny
seed = 4
noise = 0.2

[class er]
model = random
n = 40
k_avg = 4
samples = 5

[class ws]
model = small_world
n = 40
k_avg = 4
samples = 5
"""

FAST = ["--timesteps", "30", "--transient", "5", "--bins", "10,20"]


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    (d / "m.ini").write_text(MANIFEST)
    res = CliRunner().invoke(main, ["generate", str(d / "m.ini"), "--out", str(d / "data")])
    assert res.exit_code == 0, res.output
    return d


def run(*args):
    return CliRunner().invoke(main, [str(a) for a in args])


def test_generate_layout(dataset):
    data = dataset / "data"
    assert (data / "index.csv").exists() and (data / "index_sigma0.2.csv").exists()
    assert len(list((data / "er").glob("*.edges"))) == 5
    assert len(list((data / "noise_0.2" / "ws").glob("*.edges"))) == 5


def test_extract_then_classify(dataset, tmp_path):
    out = tmp_path / "f.csv"
    res = run("extract", dataset / "data" / "index.csv", "--out", out, *FAST)
    assert res.exit_code == 0, res.output
    assert "10 rows x 180 features" in res.output
    res = run("classify", out, "--folds", "5", "--repetitions", "3")
    assert res.exit_code == 0, res.output
    assert "5-fold stratified CV x 3 repetitions" in res.output
    assert "rule         : B135678-S03456" in res.output
    assert "bins         : 10,20" in res.output
    ledger = (tmp_path / "results_ledger.csv").read_text().splitlines()
    assert len(ledger) == 2 and ledger[1].startswith("f,B135678-S03456,")
    res = run("classify", out, "--folds", "5", "--repetitions", "2", "--classifier", "knn",
              "--ledger", tmp_path / "other.csv", "--database", "toy")
    assert res.exit_code == 0, res.output
    assert "classifier   : knn" in res.output
    assert (tmp_path / "other.csv").read_text().splitlines()[1].startswith("toy,")


def test_extract_threads_byte_identical(dataset, tmp_path):
    idx = dataset / "data" / "index.csv"
    assert run("extract", idx, "--out", tmp_path / "a.csv", "--threads", "1", *FAST).exit_code == 0
    assert run("extract", idx, "--out", tmp_path / "b.csv", "--threads", "2", *FAST).exit_code == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_invalid_rule(dataset, tmp_path):
    res = run("extract", dataset / "data" / "index.csv", "--out", tmp_path / "x.csv",
              "--rule", "B9/S1")
    assert res.exit_code == 2
    assert "--rule" in res.output


def test_bad_time_window(dataset, tmp_path):
    res = run("extract", dataset / "data" / "index.csv", "--out", tmp_path / "x.csv",
              "--timesteps", "10", "--transient", "10")
    assert res.exit_code != 0


def test_classify_small_class(tmp_path):
    p = tmp_path / "f.csv"
    p.write_text("label,f0\na,1\na,2\nb,3\nb,4\n")
    res = run("classify", p)
    assert res.exit_code == 1
    assert "fewer than 10 folds" in res.output


def test_render(tmp_path):
    net_path = tmp_path / "g.edges"
    write_edge_list(gen_watts_strogatz(30, 4, 0.1, seed=1), net_path)
    res = run("render", net_path, "--out", tmp_path / "img" / "g", "--timesteps", "25", "--text")
    assert res.exit_code == 0, res.output
    for kind in ("tep", "dtep", "sdtep"):
        img = read_pgm(tmp_path / "img" / f"g_{kind}.pgm")
        assert img.shape == (26, 30)
        assert (tmp_path / "img" / f"g_{kind}.txt").exists()
    assert set(np.unique(read_pgm(tmp_path / "img" / "g_tep.pgm"))) <= {0, 255}


def test_rule_search_explicit(dataset, tmp_path):
    out = tmp_path / "rank.csv"
    res = run("rule-search", dataset / "data" / "index.csv", "--out", out,
              "--rules", "B135678-S03456,B-S", "--per-class", "4", "--folds", "2",
              "--repetitions", "1", *FAST)
    assert res.exit_code == 0, res.output
    rows = out.read_text().splitlines()
    assert rows[0] == "rank,rule,mean,std" and len(rows) == 3


def test_rule_search_sampled(dataset, tmp_path):
    out = tmp_path / "rank.csv"
    res = run("rule-search", dataset / "data" / "index.csv", "--out", out,
              "--sample-size", "3", "--per-class", "3", "--folds", "3", "--repetitions", "1",
              *FAST)
    assert res.exit_code == 0, res.output
    assert len(out.read_text().splitlines()) == 4


def test_config_file(dataset, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("[global]\ntimesteps = 30\ntransient = 5\n\n[extract]\nbins = 10\n")
    out = tmp_path / "f.csv"
    res = run("--config", cfg, "extract", dataset / "data" / "index.csv", "--out", out)
    assert res.exit_code == 0, res.output
    assert "x 60 features" in res.output
    res = run("--config", cfg, "extract", dataset / "data" / "index.csv", "--out", out,
              "--bins", "20")
    assert "x 120 features" in res.output


def test_pipeline_command(dataset, tmp_path):
    res = run("pipeline", dataset / "m.ini", "--workdir", tmp_path / "w", "--folds", "5",
              "--repetitions", "2", *FAST)
    assert res.exit_code == 0, res.output
    assert "== tiny" in res.output and "== tiny_sigma0.2" in res.output
    assert (tmp_path / "w" / "tiny.csv").exists()
    assert len((tmp_path / "w" / "results_ledger.csv").read_text().splitlines()) == 3
