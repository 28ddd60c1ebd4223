"""Synthetic network models, edge-noise perturbation and labeled datasets.

All generators are pure functions of their arguments: the same parameters and
seed always give the same Network.  Fractional edge counts round half-up.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from os import PathLike
from typing import Iterator

import numpy as np

from .graph import Network, from_edges
from .seeding import derive_seed, make_rng, round_half_up

MODELS = ("random", "small_world", "scale_free", "geographic", "mendes")
WAXMAN_ALPHA = 0.03
WS_REWIRE = 0.1


def _pair_from_index(idx: np.ndarray, n: int) -> np.ndarray:
    """Decode row-major indices of the strict upper triangle into (u, v)."""
    idx = np.asarray(idx, dtype=np.int64)
    # number of pairs preceding row u is u*(2n-u-1)/2
    u = np.floor((2 * n - 1 - np.sqrt((2 * n - 1) ** 2 - 8 * idx.astype(float))) / 2)
    u = u.astype(np.int64)
    start = u * (2 * n - u - 1) // 2
    # guard float error at row boundaries
    low = idx < start
    u[low] -= 1
    start = u * (2 * n - u - 1) // 2
    high = idx >= start + (n - 1 - u)
    u[high] += 1
    start = u * (2 * n - u - 1) // 2
    v = idx - start + u + 1
    return np.column_stack([u, v])


def gen_erdos_renyi(n: int, k_avg: float, seed: int) -> Network:
    """G(n, M) random graph with ``M = round(n * k_avg / 2)`` edges."""
    m = round_half_up(n * k_avg / 2)
    max_m = n * (n - 1) // 2
    if m > max_m or m < 0:
        raise ValueError(f"{m} edges requested but only {max_m} pairs exist")
    rng = make_rng(seed)
    chosen = rng.choice(max_m, size=m, replace=False)
    return from_edges(n, _pair_from_index(np.sort(chosen), n))


def gen_watts_strogatz(n: int, k_avg: int, p_rewire: float = 0.1, seed: int = 0) -> Network:
    """Ring lattice with ``k_avg`` neighbours per node and random rewiring.

    Every lattice edge ``(u, u + j)`` is visited once, in order, and with
    probability ``p_rewire`` its far end is moved to a uniform random node that
    is neither ``u`` nor already adjacent to ``u``.
    """
    if k_avg % 2 or k_avg < 2:
        raise ValueError("small-world k_avg must be even and >= 2")
    if k_avg >= n:
        raise ValueError("k_avg must be below n")
    if not 0.0 <= p_rewire <= 1.0:
        raise ValueError("p_rewire must lie in [0, 1]")
    rng = make_rng(seed)
    adj = [set() for _ in range(n)]
    lattice = []
    for j in range(1, k_avg // 2 + 1):
        for u in range(n):
            v = (u + j) % n
            adj[u].add(v)
            adj[v].add(u)
            lattice.append((u, v))
    for u, v in lattice:
        if rng.random() >= p_rewire:
            continue
        if len(adj[u]) >= n - 1:
            continue
        while True:
            w = int(rng.integers(n))
            if w != u and w not in adj[u]:
                break
        adj[u].discard(v)
        adj[v].discard(u)
        adj[u].add(w)
        adj[w].add(u)
    edges = [(u, v) for u in range(n) for v in adj[u] if u < v]
    return from_edges(n, edges)


def gen_barabasi_albert(n: int, k_avg: float, alpha: float = 1.0, seed: int = 0) -> Network:
    """Growth with preferential attachment proportional to ``degree ** alpha``.

    Starts from a clique on ``m + 1`` nodes, ``m = round(k_avg / 2)``; every
    arriving node links to ``m`` distinct existing nodes.  ``alpha = 1`` is the
    linear Barabási-Albert model, ``alpha = 0`` uniform attachment.
    """
    m = round_half_up(k_avg / 2)
    if m < 1:
        raise ValueError("k_avg must give at least one edge per arriving node")
    if m + 1 > n:
        raise ValueError("n too small for the seed clique")
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    rng = make_rng(seed)
    core = m + 1
    edges = [(u, v) for u in range(core) for v in range(u + 1, core)]
    deg = np.zeros(n, dtype=np.float64)
    deg[:core] = m
    for new in range(core, n):
        w = deg[:new] ** alpha
        targets = rng.choice(new, size=m, replace=False, p=w / w.sum())
        targets.sort()
        for t in targets:
            edges.append((int(t), new))
        deg[targets] += 1
        deg[new] = m
    return from_edges(n, edges)


def _waxman_expected_edges(beta: float, weights: np.ndarray) -> float:
    return float(np.minimum(1.0, beta * weights).sum())


def gen_waxman(n: int, k_avg: float, seed: int, alpha_w: float = WAXMAN_ALPHA,
               beta: float | None = None) -> Network:
    """Waxman geographic graph on uniform points in the unit square.

    Pairs connect with probability ``min(1, beta * exp(-d / (alpha_w * d_max)))``
    where ``d_max`` is the largest realized pairwise distance.  Unless given,
    ``beta`` is found by bisection so the expected edge count equals
    ``n * k_avg / 2`` within 2 %.
    """
    if alpha_w <= 0:
        raise ValueError("alpha_w must be positive")
    rng = make_rng(seed)
    pos = rng.random((n, 2))
    iu, ju = np.triu_indices(n, 1)
    d = np.hypot(*(pos[iu] - pos[ju]).T)
    d_max = d.max() if len(d) else 1.0
    weights = np.exp(-d / (alpha_w * d_max))
    if beta is None:
        target = n * k_avg / 2
        if target > len(d):
            raise ValueError("k_avg too large for the node count")
        # E(beta) <= beta * sum(w) bounds beta from below; beta = 1/min(w) links every pair.
        # Bisect geometrically: the bracket can span tens of orders of magnitude.
        lo, hi = target / weights.sum(), 1.0 / weights.min()
        for _ in range(60):
            mid = np.sqrt(lo * hi)
            if _waxman_expected_edges(mid, weights) < target:
                lo = mid
            else:
                hi = mid
        beta = np.sqrt(lo * hi)
        if abs(_waxman_expected_edges(beta, weights) - target) > 0.02 * target:
            raise ValueError("Waxman calibration did not reach the target edge count")
    p = np.minimum(1.0, beta * weights)
    keep = rng.random(len(d)) < p
    return from_edges(n, np.column_stack([iu[keep], ju[keep]]))


def gen_dorogovtsev_mendes(n: int, seed: int) -> Network:
    """Start from a triangle; each new node joins both ends of a uniform random edge."""
    if n < 3:
        raise ValueError("Dorogovtsev-Mendes needs n >= 3")
    rng = make_rng(seed)
    edges = [(0, 1), (0, 2), (1, 2)]
    for new in range(3, n):
        u, v = edges[int(rng.integers(len(edges)))]
        edges.append((u, new))
        edges.append((v, new))
    return from_edges(n, edges)


def perturb(net: Network, sigma: float, seed: int) -> Network:
    """Remove and add ``round(sigma * M / 2)`` edges each; M is preserved.

    Added edges are drawn from the non-edges of the input graph, so nothing
    removed is added back.
    """
    if not 0.0 < sigma <= 1.0:
        raise ValueError("sigma must lie in (0, 1]")
    n, m = net.node_count, net.edge_count
    a = round_half_up(sigma * m / 2)
    if a == 0:
        return net
    non_edges = n * (n - 1) // 2 - m
    if a > non_edges:
        raise ValueError(f"cannot add {a} edges: only {non_edges} non-edges")
    rng = make_rng(seed)
    edges = net.edges()
    removed = rng.choice(m, size=a, replace=False)
    keep = np.ones(m, dtype=bool)
    keep[removed] = False
    existing = set((edges[:, 0] * n + edges[:, 1]).tolist())
    added: list[int] = []
    seen: set[int] = set()
    if non_edges <= 4 * a:
        # dense enough that rejection sampling would stall
        iu, ju = np.triu_indices(n, 1)
        free = (iu * n + ju)[net.to_dense()[iu, ju] == 0]
        added = rng.choice(free, size=a, replace=False).tolist()
    else:
        while len(added) < a:
            u, v = rng.integers(n, size=2)
            if u == v:
                continue
            code = int(min(u, v) * n + max(u, v))
            if code in existing or code in seen:
                continue
            seen.add(code)
            added.append(code)
    new_edges = np.array([[c // n, c % n] for c in added], dtype=np.int64).reshape(-1, 2)
    return from_edges(n, np.concatenate([edges[keep], new_edges]))


@dataclass(frozen=True)
class GeneratorSpec:
    """One network model with its size parameters."""

    model: str
    n: int
    k_avg: float
    model_params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}; choose from {MODELS}")
        if self.n < 4 and self.model != "mendes":
            raise ValueError("n must be at least 4")
        if self.model != "mendes" and not 0 < self.k_avg < self.n:
            raise ValueError("k_avg must lie in (0, n)")

    def build(self, seed: int) -> Network:
        p = self.model_params
        if self.model == "random":
            return gen_erdos_renyi(self.n, self.k_avg, seed)
        if self.model == "small_world":
            return gen_watts_strogatz(self.n, int(self.k_avg), p.get("p_rewire", WS_REWIRE), seed)
        if self.model == "scale_free":
            return gen_barabasi_albert(self.n, self.k_avg, p.get("alpha", 1.0), seed)
        if self.model == "geographic":
            return gen_waxman(self.n, self.k_avg, seed, alpha_w=p.get("alpha_w", WAXMAN_ALPHA),
                              beta=p.get("beta"))
        return gen_dorogovtsev_mendes(self.n, seed)


@dataclass(frozen=True)
class ClassSpec:
    """A class label with its generator grid (every ``n`` x ``k_avg`` cell)."""

    label: str
    model: str
    n: tuple[int, ...]
    k_avg: tuple[float, ...]
    samples: int
    model_params: dict = field(default_factory=dict)

    def cells(self) -> list[GeneratorSpec]:
        return [GeneratorSpec(self.model, n, k, dict(self.model_params))
                for n in self.n for k in self.k_avg]


@dataclass(frozen=True)
class DatasetSpec:
    name: str
    classes: tuple[ClassSpec, ...]
    seed: int = 0
    noise_sigmas: tuple[float, ...] = ()

    def __post_init__(self):
        if len(self.classes) < 2:
            raise ValueError("a dataset needs at least two classes")
        labels = [c.label for c in self.classes]
        if len(set(labels)) != len(labels):
            raise ValueError("class labels must be unique")
        for c in self.classes:
            if c.samples < 1:
                raise ValueError(f"class {c.label!r}: samples must be >= 1")
        for s in self.noise_sigmas:
            if not 0 < s <= 1:
                raise ValueError("noise sigma must lie in (0, 1]")


@dataclass(frozen=True)
class Sample:
    label: str
    class_index: int
    sample_index: int
    seed: int
    spec: GeneratorSpec
    network: Network


def sample_seed(master: int, class_index: int, sample_index: int) -> int:
    return derive_seed(master, "sample", class_index, sample_index)


def noise_seed(sample_seed_: int, sigma: float) -> int:
    return derive_seed(sample_seed_, "perturb", f"{sigma:.6g}")


def iter_dataset(spec: DatasetSpec) -> Iterator[Sample]:
    """Yield samples class by class; within a class, cell by cell."""
    for ci, cls in enumerate(spec.classes):
        si = 0
        for cell in cls.cells():
            for _ in range(cls.samples):
                seed = sample_seed(spec.seed, ci, si)
                yield Sample(cls.label, ci, si, seed, cell, cell.build(seed))
                si += 1


def gen_dataset(spec: DatasetSpec) -> list[Sample]:
    return list(iter_dataset(spec))


def perturb_dataset(samples: list[Sample], sigma: float) -> list[Sample]:
    return [Sample(s.label, s.class_index, s.sample_index, s.seed, s.spec,
                   perturb(s.network, sigma, noise_seed(s.seed, sigma)))
            for s in samples]


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.replace(",", " ").split())


def load_manifest(path: str | PathLike) -> DatasetSpec:
    """Read a dataset manifest (INI).

    ::

        [dataset]
        name = four-models
        seed = 7
        noise = 0.1, 0.3        ; optional

        [class random]
        model = random
        n = 500
        k_avg = 4, 8
        samples = 25
        ; model parameters: p_rewire, alpha, alpha_w, beta
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    with open(path, encoding="utf-8") as fh:
        cp.read_file(fh)
    return manifest_from_config(cp)


def manifest_from_config(cp: configparser.ConfigParser) -> DatasetSpec:
    if not cp.has_section("dataset"):
        raise ValueError("manifest lacks a [dataset] section")
    ds = cp["dataset"]
    classes = []
    for name in cp.sections():
        if not name.startswith("class "):
            continue
        sec = cp[name]
        label = name[len("class "):].strip()
        params = {key: float(sec[key]) for key in ("p_rewire", "alpha", "alpha_w", "beta")
                  if key in sec}
        try:
            classes.append(ClassSpec(
                label=label,
                model=sec["model"].strip(),
                n=tuple(int(x) for x in _floats(sec["n"])),
                k_avg=_floats(sec.get("k_avg", "4")),
                samples=sec.getint("samples"),
                model_params=params,
            ))
        except KeyError as exc:
            raise ValueError(f"[{name}] missing key {exc}") from None
    return DatasetSpec(
        name=ds.get("name", "dataset"),
        classes=tuple(classes),
        seed=ds.getint("seed", 0),
        noise_sigmas=_floats(ds.get("noise", "")),
    )
