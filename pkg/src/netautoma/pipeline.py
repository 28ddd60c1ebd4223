"""Dataset-level plumbing: evolve many networks, write and read feature files."""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass
from os import PathLike
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .features import canonical_bins, omega
from .graph import Network, read_edge_list, write_edge_list
from .llna import DEFAULT_TRANSIENT, Rule, evolve
from .netgen import DatasetSpec, Sample, iter_dataset, noise_seed, perturb
from .seeding import derive_seed

DEFAULT_TIMESTEPS = 350
DEFAULT_BINS = (40, 100)
THREADS_ENV = "NETAUTOMA_THREADS"


def resolve_threads(threads: int | None) -> int:
    if threads is None:
        threads = int(os.environ.get(THREADS_ENV, "1") or 1)
    if threads < 1:
        raise ValueError("thread count must be >= 1")
    return threads


def evolution_seed(master: int, sample_index: int) -> int:
    return derive_seed(master, "evolve", sample_index)


def network_features(net: Network, rule: Rule, T: int, tau: int, bins: Sequence[int],
                     seed: int) -> np.ndarray:
    return omega(evolve(net, rule, T, seed, transient=tau), bins).values


def _load_and_featurize(source, rule, T, tau, bins, seed):
    net = source() if callable(source) else source
    return network_features(net, rule, T, tau, bins, seed)


def extract_features(networks: Sequence[Network | Callable[[], Network]], rule: Rule,
                     T: int = DEFAULT_TIMESTEPS, tau: int = DEFAULT_TRANSIENT,
                     bins: Iterable[int] = DEFAULT_BINS, seed: int = 0,
                     threads: int = 1, progress: Callable[[int, int], None] | None = None
                     ) -> np.ndarray:
    """Omega feature matrix, one row per network, in input order.

    Sample ``i`` is evolved from the initial condition seeded by
    ``evolution_seed(seed, i)``, so rows never depend on ``threads``.
    ``networks`` may hold zero-argument loaders instead of networks.
    """
    bins = canonical_bins(bins)
    if not 0 <= tau < T + 1:
        raise ValueError("transient must lie in 0..T")
    jobs = [(src, evolution_seed(seed, i)) for i, src in enumerate(networks)]
    if threads > 1 and len(jobs) > 1:
        from joblib import Parallel, delayed
        rows = Parallel(n_jobs=threads)(
            delayed(_load_and_featurize)(src, rule, T, tau, bins, s) for src, s in jobs)
    else:
        rows = []
        for done, (src, s) in enumerate(jobs, start=1):
            rows.append(_load_and_featurize(src, rule, T, tau, bins, s))
            if progress is not None:
                progress(done, len(jobs))
    if not rows:
        return np.empty((0, 6 * sum(bins)))
    return np.vstack(rows)


def write_feature_csv(path: str | PathLike, labels: Sequence, X: np.ndarray,
                      meta: dict | None = None) -> None:
    """``label,f0,f1,...`` with 17 significant digits; optional JSON sidecar."""
    X = np.asarray(X, dtype=np.float64)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label", *(f"f{i}" for i in range(X.shape[1]))])
        for lab, row in zip(labels, X):
            w.writerow([lab, *(format(v, ".17g") for v in row)])
    if meta is not None:
        with open(f"{path}.json", "w", encoding="utf-8", newline="\n") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")


def read_feature_csv(path: str | PathLike) -> tuple[np.ndarray, np.ndarray]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "label":
            raise ValueError(f"{path}: header must start with 'label'")
        labels, rows = [], []
        for lineno, rec in enumerate(reader, start=2):
            if len(rec) != len(header):
                raise ValueError(f"{path}:{lineno}: expected {len(header)} fields, got {len(rec)}")
            labels.append(rec[0])
            try:
                rows.append([float(v) for v in rec[1:]])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    return np.array(labels), np.array(rows, dtype=np.float64).reshape(len(rows), len(header) - 1)


def read_feature_meta(path: str | PathLike) -> dict:
    side = Path(f"{path}.json")
    if not side.exists():
        return {}
    return json.loads(side.read_text(encoding="utf-8"))


INDEX_FIELDS = ("sample", "label", "class_index", "seed", "model", "n", "k_avg",
                "sigma", "nodes", "edges", "path")


@dataclass(frozen=True)
class IndexEntry:
    sample: int
    label: str
    path: Path
    nodes: int
    seed: int

    def load(self) -> Network:
        return read_edge_list(self.path, node_count=self.nodes)


def _index_name(sigma: float | None) -> str:
    return "index.csv" if sigma is None else f"index_sigma{sigma:g}.csv"


def write_dataset(spec: DatasetSpec, out_dir: str | PathLike) -> list[Path]:
    """Generate ``spec`` into ``out_dir``: one directory per class plus index files.

    Originals go to ``<label>/`` and are listed in ``index.csv``; every noise
    level ``s`` gets ``noise_<s>/<label>/`` and ``index_sigma<s>.csv``.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    variants: list[float | None] = [None, *spec.noise_sigmas]
    rows: dict = {v: [] for v in variants}
    for i, s in enumerate(iter_dataset(spec)):
        for sigma in variants:
            if sigma is None:
                net, base = s.network, out
            else:
                net = perturb(s.network, sigma, noise_seed(s.seed, sigma))
                base = out / f"noise_{sigma:g}"
            rel = Path(base.relative_to(out)) / s.label / f"{s.label}_{s.sample_index:04d}.edges"
            (out / rel).parent.mkdir(parents=True, exist_ok=True)
            write_edge_list(net, out / rel)
            rows[sigma].append([i, s.label, s.class_index, s.seed, s.spec.model, s.spec.n,
                                format(s.spec.k_avg, "g"), "" if sigma is None else format(sigma, "g"),
                                net.node_count, net.edge_count, rel.as_posix()])
    paths = []
    for sigma, recs in rows.items():
        p = out / _index_name(sigma)
        with open(p, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(INDEX_FIELDS)
            w.writerows(recs)
        paths.append(p)
    return paths


def read_index(path: str | PathLike) -> list[IndexEntry]:
    """Entries of a dataset index; relative edge-list paths resolve against its directory.

    Only ``label`` and ``path`` columns are required, so hand-written indexes
    over user-supplied edge lists work too.
    """
    path = Path(path)
    entries = []
    with open(path, encoding="utf-8", newline="") as fh:
        for i, rec in enumerate(csv.DictReader(fh)):
            if not rec.get("label") or not rec.get("path"):
                raise ValueError(f"{path}: row {i + 2} needs label and path")
            p = Path(rec["path"])
            entries.append(IndexEntry(
                sample=int(rec.get("sample") or i),
                label=rec["label"],
                path=p if p.is_absolute() else path.parent / p,
                nodes=int(rec["nodes"]) if rec.get("nodes") else None,
                seed=int(rec["seed"]) if rec.get("seed") else 0,
            ))
    return entries


def samples_in_memory(samples: Sequence[Sample]) -> tuple[list[Network], list[str]]:
    return [s.network for s in samples], [s.label for s in samples]
