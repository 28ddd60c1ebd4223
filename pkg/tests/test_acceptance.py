"""End-to-end acceptance checks, one verdict line per criterion.

Run alone with ``pytest -m acceptance -v``; the verdicts are repeated in the
"acceptance criteria" section of the terminal summary.
"""

from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from netautoma.classify import cross_validate
from netautoma.cli import main
from netautoma.features import (degree_histogram_mean, global_histogram, omega,
                                temporal_histogram_mean)
from netautoma.graph import from_edges
from netautoma.llna import LEVELS, Rule, RULE_SPACE_SIZE, evolve, parse_rule, sd_tep, transition
from netautoma.netgen import (gen_barabasi_albert, gen_dataset, gen_erdos_renyi,
                              gen_watts_strogatz, load_manifest)
from netautoma.pipeline import extract_features, read_feature_csv, samples_in_memory
from netautoma.seeding import derive_seed, make_rng
from oracles import brute_force_evolve

pytestmark = pytest.mark.acceptance

ROOT = Path(__file__).resolve().parents[1]
FOUR_MODELS = ROOT / "manifests" / "four_models.ini"
SCALE_FREE = ROOT / "manifests" / "scale_free.ini"
FOUR_RULE = "B135678-S03456"
SCALE_FREE_RULE = "B0157-S457"


def _pipeline(workdir: Path, threads: int):
    res = CliRunner().invoke(main, [
        "pipeline", str(FOUR_MODELS), "--workdir", str(workdir), "--rule", FOUR_RULE,
        "--timesteps", "350", "--transient", "20", "--bins", "40,100", "--classifier", "svm",
        "--folds", "10", "--repetitions", "10", "--seed", "0", "--threads", str(threads)])
    assert res.exit_code == 0, res.output
    reports = {}
    # stdout only: progress lines go to stderr and differ between thread counts
    for block in res.stdout.split("== ")[1:]:
        name, _, body = block.partition("\n")
        reports[name.strip()] = body.strip()
    return reports


@pytest.fixture(scope="module")
def four_models_runs(tmp_path_factory):
    """The full 4-models pipeline through the CLI, once per thread count."""
    base = tmp_path_factory.mktemp("four_models")
    return {t: (base / f"threads{t}", _pipeline(base / f"threads{t}", t)) for t in (1, 2)}


def _cv(csv_path, labels=None):
    y, X = read_feature_csv(csv_path)
    return cross_validate(X, y if labels is None else labels, folds=10, repetitions=10,
                          classifier="svm", seed=0)


def _accuracy(report_text: str) -> float:
    line = next(l for l in report_text.splitlines() if l.startswith("accuracy"))
    return float(line.split(":")[1].split("+-")[0])


def test_c1_four_models(four_models_runs, verdict):
    work, _ = four_models_runs[1]
    rep = _cv(work / "four-models.csv")
    verdict("C1 4-models", rep.mean_accuracy >= 98.0,
            f"{rep.mean_accuracy:.2f} +- {rep.std_accuracy:.2f} % (need >= 98.0)")


def test_c2_scale_free(verdict):
    spec = load_manifest(SCALE_FREE)
    nets, labels = samples_in_memory(gen_dataset(spec))
    X = extract_features(nets, parse_rule(SCALE_FREE_RULE), 350, 20, (40, 100), seed=0)
    rep = cross_validate(X, labels, folds=10, repetitions=10, classifier="svm", seed=0)
    verdict("C2 scale-free", rep.mean_accuracy >= 96.0,
            f"{rep.mean_accuracy:.2f} +- {rep.std_accuracy:.2f} % (need >= 96.0)")


@pytest.mark.parametrize("sigma,threshold", [(0.1, 96.0), (0.3, 94.0)])
def test_c3_noise(four_models_runs, verdict, sigma, threshold):
    work, _ = four_models_runs[1]
    rep = _cv(work / f"four-models_sigma{sigma:g}.csv")
    verdict(f"C3 noise sigma={sigma:g}", rep.mean_accuracy >= threshold,
            f"{rep.mean_accuracy:.2f} +- {rep.std_accuracy:.2f} % (need >= {threshold})")


def test_c4_user_edge_lists(tmp_path, verdict):
    # a hand-made corpus: string node names, comments, shuffled edge order,
    # tab and space separators, no generator metadata in the index
    rng = make_rng(11)
    rows = ["label,path"]
    originals = []
    for i in range(24):
        label = "lattice" if i % 2 else "hub"
        net = (gen_watts_strogatz(120, 4, 0.05, seed=i) if i % 2
               else gen_barabasi_albert(120, 4, seed=i))
        names = [f"node-{j}" for j in rng.permutation(net.node_count)]
        edges = net.edges()[rng.permutation(net.edge_count)]
        sep = "\t" if i % 3 else " "
        text = [f"# corpus graph {i}", ""] + [f"{names[u]}{sep}{names[v]}" for u, v in edges]
        p = tmp_path / "corpus" / f"g{i:02d}.txt"
        p.parent.mkdir(exist_ok=True)
        p.write_text("\n".join(text) + "\n")
        rows.append(f"{label},corpus/g{i:02d}.txt")
        originals.append(net)
    (tmp_path / "index.csv").write_text("\n".join(rows) + "\n")
    out = tmp_path / "features.csv"
    runner = CliRunner()
    res = runner.invoke(main, ["extract", str(tmp_path / "index.csv"), "--out", str(out),
                               "--timesteps", "120"])
    ok = res.exit_code == 0
    detail = res.output.strip().splitlines()[-1] if res.output else ""
    if ok:
        y, X = read_feature_csv(out)
        # two sources x two bin counts x three histograms, each summing to one
        ok = X.shape == (24, 840) and np.allclose(X.sum(axis=1), 12.0)
        res = runner.invoke(main, ["classify", str(out), "--folds", "4", "--repetitions", "3"])
        ok = ok and res.exit_code == 0 and _accuracy(res.output) >= 90.0
        detail = f"24 user edge lists -> {X.shape}, CV accuracy {_accuracy(res.output):.2f} %"
    verdict("C4 edge-list ingestion", ok, detail)


def test_c5_oracle_equivalence(verdict):
    rng = make_rng(derive_seed(5, "oracle-triples"))
    mismatches = 0
    for _ in range(200):
        n = int(rng.integers(1, 9))
        adj = np.triu(rng.random((n, n)) < rng.uniform(0.2, 0.9), 1)
        net = from_edges(n, np.argwhere(adj))
        rule = Rule.from_index(int(rng.integers(RULE_SPACE_SIZE)))
        rec = evolve(net, rule, 30, seed=int(rng.integers(1 << 63)))
        states, dens = brute_force_evolve(net.to_dense(), rec.tep[0], set(rule.born),
                                          set(rule.survive), 30)
        # c / k in floating point is the correctly rounded exact ratio
        same = (rec.tep.tolist() == states
                and rec.dtep.tolist() == [[float(x) for x in row] for row in dens])
        mismatches += not same
    verdict("C5 oracle equivalence", mismatches == 0,
            f"{200 - mismatches}/200 triples identical over 30 steps")


def test_c6_feature_identities(verdict):
    rng = make_rng(6)
    worst_a = 0.0
    for _ in range(100):
        net = gen_erdos_renyi(int(rng.integers(20, 80)), float(rng.uniform(2, 8)),
                              seed=int(rng.integers(1 << 31)))
        rule = Rule.from_index(int(rng.integers(RULE_SPACE_SIZE)))
        d = evolve(net, rule, int(rng.integers(5, 60)), seed=int(rng.integers(1 << 31))).dtep
        for L in (20, 40, 100):
            worst_a = max(worst_a, np.abs(temporal_histogram_mean(d, L)
                                          - global_histogram(d, L)).max())
    ok_a = worst_a <= 1e-9

    worst_b = 0.0
    for k in (2, 4, 6):
        net = gen_watts_strogatz(90, k, 0.0, seed=0)
        rec = evolve(net, parse_rule(FOUR_RULE), 80, seed=k)
        for m, dom in ((rec.dtep, "unit"), (sd_tep(rec), "signed")):
            for L in (40, 100):
                worst_b = max(worst_b, np.abs(degree_histogram_mean(m, net.degrees, L, dom)
                                              - global_histogram(m, L, dom)).max())
    ok_b = worst_b <= 1e-9

    rec = evolve(gen_barabasi_albert(150, 6, seed=1), parse_rule(FOUR_RULE), 60, seed=1)
    lengths = {bins: len(omega(rec, bins)) for bins in ((20,), (40, 100), (60, 100))}
    ok_c = all(v == 6 * sum(b) for b, v in lengths.items())

    worst_d = 0.0
    for bins in ((20,), (40, 100), (60, 100)):
        v = omega(rec, bins).values
        start = 0
        for _ in range(2):
            for L in sorted(bins):
                for _ in range(3):
                    worst_d = max(worst_d, abs(v[start:start + L].sum() - 1.0))
                    start += L
    ok_d = worst_d <= 1e-9
    verdict("C6 feature identities", ok_a and ok_b and ok_c and ok_d,
            f"(a) {worst_a:.1e} (b) {worst_b:.1e} (c) {sorted(lengths.values())} "
            f"(d) {worst_d:.1e}")


def test_c7_worked_examples(verdict):
    life = parse_rule("B3/S23")
    born = transition(0, 1 / 3, life)
    dies = transition(1, 5 / 6, life)
    exact = (transition(0, Fraction(1, 3), life), transition(1, Fraction(5, 6), life))
    verdict("C7 worked examples", (born, dies) == exact == (1, 0) and LEVELS == 9,
            f"rho=1/3 dead -> {born}, rho=5/6 alive -> {dies}")


def test_c8_determinism(four_models_runs, verdict):
    (w1, rep1), (w2, rep2) = four_models_runs[1], four_models_runs[2]
    names = sorted(p.name for p in w1.glob("*.csv") if p.name != "results_ledger.csv")
    same_csv = names and all((w1 / n).read_bytes() == (w2 / n).read_bytes() for n in names)
    same_data = all((w1 / "dataset" / p.relative_to(w1 / "dataset")).read_bytes()
                    == (w2 / "dataset" / p.relative_to(w1 / "dataset")).read_bytes()
                    for p in (w1 / "dataset").rglob("*") if p.is_file())
    same_reports = rep1 == rep2 and len(rep1) == 3
    verdict("C8 determinism", bool(same_csv and same_data and same_reports),
            f"1 vs 2 threads: {len(names)} feature CSVs identical={bool(same_csv)}, "
            f"dataset files identical={same_data}, {len(rep1)} reports identical={same_reports}")


def test_c9_chance_level(four_models_runs, verdict):
    work, _ = four_models_runs[1]
    y, X = read_feature_csv(work / "four-models.csv")
    perm = make_rng(derive_seed(9, "label-permutation")).permutation(len(y))
    rep = cross_validate(X, y[perm], folds=10, repetitions=10, classifier="svm", seed=0)
    verdict("C9 permuted labels", abs(rep.mean_accuracy - 25.0) <= 5.0,
            f"{rep.mean_accuracy:.2f} % (need 25 +- 5)")
