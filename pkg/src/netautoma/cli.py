"""Command-line interface.

Settings resolve in order: command-line flag, the command's section of the
``--config`` INI file, its ``[global]`` section, built-in default.
"""

from __future__ import annotations

import configparser
import sys
from pathlib import Path

import click
import numpy as np

from . import classify as clf
from .graph import read_edge_list
from .llna import (DEFAULT_TRANSIENT, RuleParseError, evolve, parse_rule, render_patterns,
                   sample_rules, sd_tep, write_matrix_text, write_pgm)
from .netgen import load_manifest
from .pipeline import (DEFAULT_BINS, DEFAULT_TIMESTEPS, evolution_seed, extract_features,
                       read_feature_csv, read_feature_meta, read_index, resolve_threads,
                       write_dataset, write_feature_csv)
from .seeding import derive_seed, make_rng

DEFAULTS = {
    "seed": 0,
    "threads": None,
    "rule": "B135678-S03456",
    "timesteps": DEFAULT_TIMESTEPS,
    "transient": DEFAULT_TRANSIENT,
    "bins": ",".join(map(str, DEFAULT_BINS)),
    "classifier": "svm",
    "folds": 10,
    "repetitions": 10,
    "c": 1.0,
    "k": 1,
}
COMMAND_DEFAULTS = {
    "render": {"rule": "B1357-S02468"},
    "rule-search": {"folds": 5, "repetitions": 2, "per_class": 10, "sample_size": 20},
}
CASTS = {"seed": int, "threads": int, "timesteps": int, "transient": int, "folds": int,
         "repetitions": int, "c": float, "k": int, "per_class": int, "sample_size": int}


class Settings:
    def __init__(self, command: str, config: configparser.ConfigParser | None, flags: dict):
        self.command, self.config, self.flags = command, config, flags

    def __getitem__(self, key: str):
        if self.flags.get(key) is not None:
            return self.flags[key]
        if self.config is not None:
            for section in (self.command, "global"):
                if self.config.has_option(section, key):
                    raw = self.config.get(section, key)
                    return CASTS.get(key, str)(raw)
        value = COMMAND_DEFAULTS.get(self.command, {}).get(key, DEFAULTS.get(key))
        if key == "threads":
            return resolve_threads(value)
        return value

    def bins(self) -> tuple[int, ...]:
        raw = self["bins"]
        try:
            bins = tuple(int(x) for x in str(raw).replace(" ", "").split(",") if x)
        except ValueError:
            raise click.BadParameter(f"bins must be a comma list of integers, got {raw!r}")
        if not bins or min(bins) < 2:
            raise click.BadParameter("every bin count must be >= 2")
        return bins

    def rule(self):
        try:
            return parse_rule(self["rule"])
        except RuleParseError as exc:
            raise click.BadParameter(str(exc), param_hint="--rule")

    def check_time(self):
        T, tau = self["timesteps"], self["transient"]
        if not T > tau >= 0:
            raise click.BadParameter(f"need timesteps > transient >= 0 (got {T}, {tau})")
        return T, tau


def _settings(ctx: click.Context, **flags) -> Settings:
    return Settings(ctx.info_name, ctx.obj.get("config") if ctx.obj else None, flags)


def _progress(label: str):
    def report(done, total, *_):
        if done == total or done % max(1, total // 10) == 0:
            click.echo(f"{label}: {done}/{total}", err=True)
    return report


seed_opt = click.option("--seed", type=int, help="Master seed (default 0).")
threads_opt = click.option("--threads", type=int,
                           help="Worker processes (default $NETAUTOMA_THREADS or 1).")
rule_opt = click.option("--rule", help="Life-Like rule, e.g. B135678-S03456.")
timesteps_opt = click.option("--timesteps", type=int, help="Evolution steps T (default 350).")
transient_opt = click.option("--transient", type=int, help="Rows discarded before features (default 20).")
bins_opt = click.option("--bins", help="Comma list of histogram bin counts (default 40,100).")
classifier_opt = click.option("--classifier", type=click.Choice(["svm", "knn"]))
folds_opt = click.option("--folds", type=int, help="Cross-validation folds (default 10).")
reps_opt = click.option("--repetitions", type=int, help="Cross-validation repetitions (default 10).")


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              help="INI file with [global] and per-command sections.")
@click.pass_context
def main(ctx, config_path):
    """Life-Like network automata feature extraction and network classification."""
    ctx.ensure_object(dict)
    if config_path:
        cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        cp.read(config_path, encoding="utf-8")
        ctx.obj["config"] = cp


@main.command()
@click.argument("manifest", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def generate(manifest, out_dir):
    """Generate the dataset described by MANIFEST into per-class edge-list folders."""
    try:
        spec = load_manifest(manifest)
        paths = write_dataset(spec, out_dir)
    except (ValueError, OSError) as exc:
        raise click.ClickException(str(exc))
    for p in paths:
        click.echo(f"wrote {p}")


def _extract(index, out_csv, s: Settings):
    rule = s.rule()
    T, tau = s.check_time()
    bins = s.bins()
    entries = read_index(index)
    X = extract_features([e.load for e in entries], rule, T, tau, bins, seed=s["seed"],
                         threads=s["threads"], progress=_progress("extract"))
    meta = {"rule": rule.name, "timesteps": T, "transient": tau, "bins": list(bins),
            "seed": s["seed"], "index": str(index)}
    write_feature_csv(out_csv, [e.label for e in entries], X, meta)
    return X


@main.command()
@click.argument("index", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_csv", required=True, type=click.Path(dir_okay=False))
@rule_opt
@timesteps_opt
@transient_opt
@bins_opt
@seed_opt
@threads_opt
@click.pass_context
def extract(ctx, index, out_csv, **flags):
    """Evolve every network in INDEX and write its Omega features to a CSV."""
    s = _settings(ctx, **flags)
    try:
        X = _extract(index, out_csv, s)
    except (ValueError, OSError) as exc:
        raise click.ClickException(str(exc))
    click.echo(f"wrote {out_csv}: {X.shape[0]} rows x {X.shape[1]} features")


def _classify(csv_path, s: Settings, ledger, database):
    labels, X = read_feature_csv(csv_path)
    report = clf.cross_validate(X, labels, s["folds"], s["repetitions"], s["classifier"],
                                seed=s["seed"], C=s["c"], k=s["k"], n_jobs=s["threads"])
    meta = read_feature_meta(csv_path)
    if "rule" in meta:
        report.extra["rule"] = meta["rule"]
    if "bins" in meta:
        report.extra["bins"] = ",".join(map(str, meta["bins"]))
    if ledger is None:
        ledger = Path(csv_path).parent / "results_ledger.csv"
    clf.append_ledger(ledger, report, database=database or Path(csv_path).stem,
                      rule=meta.get("rule", ""),
                      bins=",".join(map(str, meta.get("bins", []))))
    return report


@main.command("classify")
@click.argument("feature_csv", type=click.Path(exists=True, dir_okay=False))
@classifier_opt
@folds_opt
@reps_opt
@click.option("--C", "c", type=float, help="SVM regularization (default 1.0).")
@click.option("--k", type=int, help="Neighbours for knn (default 1).")
@seed_opt
@threads_opt
@click.option("--ledger", type=click.Path(dir_okay=False),
              help="Results CSV to append to (default results_ledger.csv beside the input).")
@click.option("--database", help="Database name recorded in the ledger.")
@click.pass_context
def classify_cmd(ctx, feature_csv, ledger, database, **flags):
    """Repeated stratified cross-validation on FEATURE_CSV."""
    s = _settings(ctx, **flags)
    try:
        report = _classify(feature_csv, s, ledger, database)
    except (ValueError, OSError) as exc:
        raise click.ClickException(str(exc))
    click.echo(report.to_text())


@main.command()
@click.argument("network", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "prefix", required=True,
              help="Output prefix; writes <prefix>_tep.pgm, _dtep.pgm, _sdtep.pgm.")
@rule_opt
@timesteps_opt
@transient_opt
@seed_opt
@click.option("--order-entropy/--no-order-entropy", default=True,
              help="Sort columns by ascending TEP column entropy (default on).")
@click.option("--text", is_flag=True, help="Also write plain-text matrix dumps.")
@click.pass_context
def render(ctx, network, prefix, order_entropy, text, **flags):
    """Render the state, density and signed-density patterns of NETWORK as graymaps."""
    s = _settings(ctx, **flags)
    rule = s.rule()
    T, tau = s.check_time()
    try:
        net = read_edge_list(network)
        rec = evolve(net, rule, T, evolution_seed(s["seed"], 0), transient=tau)
        for kind, img in render_patterns(rec, order_entropy).items():
            path = f"{prefix}_{kind}.pgm"
            Path(path).parent.mkdir(parents=True, exist_ok=True)
            write_pgm(img, path)
            click.echo(f"wrote {path} ({img.shape[1]}x{img.shape[0]})")
        if text:
            for kind, m in (("tep", rec.tep), ("dtep", rec.dtep), ("sdtep", sd_tep(rec))):
                write_matrix_text(m, f"{prefix}_{kind}.txt")
    except (ValueError, OSError) as exc:
        raise click.ClickException(str(exc))


def _subset(entries, per_class: int, seed: int):
    rng = make_rng(derive_seed(seed, "rule-search-subset"))
    by_label: dict = {}
    for e in entries:
        by_label.setdefault(e.label, []).append(e)
    chosen = []
    for label in sorted(by_label):
        group = by_label[label]
        pick = np.sort(rng.permutation(len(group))[:per_class])
        chosen.extend(group[i] for i in pick)
    return chosen


@main.command("rule-search")
@click.argument("index", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_csv", required=True, type=click.Path(dir_okay=False))
@click.option("--sample-size", type=int, help="Rules drawn uniformly from the rule space (default 20).")
@click.option("--rules", "rule_list", help="Explicit comma list of rules; overrides sampling.")
@click.option("--per-class", type=int, help="Networks per class in the search subset (default 10).")
@timesteps_opt
@transient_opt
@bins_opt
@classifier_opt
@folds_opt
@reps_opt
@seed_opt
@threads_opt
@click.pass_context
def rule_search_cmd(ctx, index, out_csv, rule_list, **flags):
    """Rank Life-Like rules by cross-validated accuracy on a subset of INDEX."""
    s = _settings(ctx, **flags)
    T, tau = s.check_time()
    try:
        if rule_list:
            rules = [parse_rule(r) for r in rule_list.split(",") if r.strip()]
        else:
            rules = sample_rules(s["sample_size"], derive_seed(s["seed"], "rule-sample"))
        subset = _subset(read_index(index), s["per_class"], s["seed"])
        scores = clf.rule_search(
            [e.load() for e in subset], [e.label for e in subset], rules, T, tau, s.bins(),
            s["folds"], s["repetitions"], s["classifier"], seed=s["seed"],
            threads=s["threads"], progress=_progress("rule-search"))
        clf.write_rule_ranking(out_csv, scores)
    except (ValueError, OSError) as exc:
        raise click.ClickException(str(exc))
    best = scores[0]
    click.echo(f"wrote {out_csv}: {len(scores)} rules; best {best.rule.name} "
               f"{best.mean_accuracy:.2f} +- {best.std_accuracy:.2f} %")


@main.command()
@click.argument("manifest", type=click.Path(exists=True, dir_okay=False))
@click.option("--workdir", required=True, type=click.Path(file_okay=False))
@rule_opt
@timesteps_opt
@transient_opt
@bins_opt
@classifier_opt
@folds_opt
@reps_opt
@seed_opt
@threads_opt
@click.pass_context
def pipeline(ctx, manifest, workdir, **flags):
    """generate -> extract -> classify for MANIFEST and each of its noise levels."""
    s = _settings(ctx, **flags)
    s.rule()
    s.check_time()
    work = Path(workdir)
    try:
        spec = load_manifest(manifest)
        indexes = write_dataset(spec, work / "dataset")
        for index in indexes:
            name = index.stem.replace("index", spec.name, 1)
            csv_path = work / f"{name}.csv"
            _extract(index, csv_path, s)
            click.echo(f"== {name}")
            click.echo(_classify(csv_path, s, work / "results_ledger.csv", name).to_text())
    except (ValueError, OSError) as exc:
        raise click.ClickException(str(exc))


if __name__ == "__main__":
    sys.exit(main())
