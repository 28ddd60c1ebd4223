"""Life-Like network automata.

A cell's neighbourhood is its set of graph neighbours.  The fraction of alive
neighbours ``rho`` is quantized into nine levels, ``level = floor(9 * rho)``
with ``rho = 1`` assigned to level 8, and a B/S rule decides birth (dead
cells) and survival (alive cells) per level.

Evolving an automaton produces two aligned ``(T + 1) x N`` matrices: the
binary state pattern (TEP) and the alive-neighbour density pattern (D-TEP).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from os import PathLike

import numpy as np
from scipy import sparse

from .graph import Network
from .seeding import make_rng

LEVELS = 9
RULE_SPACE_SIZE = 1 << (2 * LEVELS)
DEFAULT_TRANSIENT = 20

_RULE_RE = re.compile(r"^\s*[Bb](\d*)\s*[/-]\s*[Ss](\d*)\s*$")


class RuleParseError(ValueError):
    pass


@dataclass(frozen=True)
class Rule:
    """A B/S rule as two sets of density levels in ``0..8``."""

    born: frozenset[int]
    survive: frozenset[int]

    def __post_init__(self):
        for lv in self.born | self.survive:
            if not 0 <= lv < LEVELS:
                raise ValueError(f"density level {lv} outside 0..8")

    @property
    def name(self) -> str:
        b = "".join(str(x) for x in sorted(self.born))
        s = "".join(str(x) for x in sorted(self.survive))
        return f"B{b}-S{s}"

    def __str__(self) -> str:
        return self.name

    @property
    def born_table(self) -> np.ndarray:
        t = np.zeros(LEVELS, dtype=np.uint8)
        t[list(self.born)] = 1
        return t

    @property
    def survive_table(self) -> np.ndarray:
        t = np.zeros(LEVELS, dtype=np.uint8)
        t[list(self.survive)] = 1
        return t

    @property
    def index(self) -> int:
        """Position in the 18-bit rule space: born levels in bits 0-8, survive in 9-17."""
        return (sum(1 << x for x in self.born)
                | sum(1 << (LEVELS + y) for y in self.survive))

    @classmethod
    def from_index(cls, index: int) -> "Rule":
        if not 0 <= index < RULE_SPACE_SIZE:
            raise ValueError("rule index outside the 18-bit space")
        born = frozenset(x for x in range(LEVELS) if index >> x & 1)
        survive = frozenset(y for y in range(LEVELS) if index >> (LEVELS + y) & 1)
        return cls(born, survive)


def parse_rule(text: str) -> Rule:
    """Parse ``B3/S23`` or ``B135678-S03456``; empty digit groups are allowed."""
    m = _RULE_RE.match(text)
    if m is None:
        raise RuleParseError(f"malformed rule {text!r}; expected e.g. B3/S23")
    groups = []
    for digits in m.groups():
        levels = [int(c) for c in digits]
        if any(lv >= LEVELS for lv in levels):
            raise RuleParseError(f"rule {text!r}: density level above 8")
        if len(set(levels)) != len(levels):
            raise RuleParseError(f"rule {text!r}: repeated level")
        groups.append(frozenset(levels))
    return Rule(*groups)


def sample_rules(count: int, seed: int) -> list[Rule]:
    """``count`` distinct rules drawn uniformly from the full rule space."""
    rng = make_rng(seed)
    idx = rng.choice(RULE_SPACE_SIZE, size=count, replace=False)
    return [Rule.from_index(int(i)) for i in idx]


def adjacency_matrix(net: Network) -> sparse.csr_array:
    data = np.ones(len(net.indices), dtype=np.int32)
    return sparse.csr_array((data, net.indices, net.indptr),
                            shape=(net.node_count, net.node_count))


def _alive_counts(adj: sparse.csr_array, state: np.ndarray) -> np.ndarray:
    return adj @ state.astype(np.int32)


def density_levels(counts: np.ndarray, degrees: np.ndarray) -> np.ndarray:
    """Integer density level ``min(floor(9 * count / k), 8)``; level 0 when k = 0."""
    k = np.maximum(degrees, 1)
    return np.minimum(LEVELS * counts // k, LEVELS - 1)


def _density_from_counts(counts: np.ndarray, degrees: np.ndarray) -> np.ndarray:
    return np.where(degrees > 0, counts / np.maximum(degrees, 1), 0.0)


def density(net: Network, state: np.ndarray) -> np.ndarray:
    """Fraction of alive neighbours of every node (0 for isolated nodes)."""
    state = np.asarray(state)
    if state.shape != (net.node_count,):
        raise ValueError("state length must equal the node count")
    counts = _alive_counts(adjacency_matrix(net), state)
    return _density_from_counts(counts, net.degrees)


_LEVEL_EPS = 1e-9


def density_level(rho: float) -> int:
    """Level of a single density value.

    ``rho`` is usually a ratio of small integers; the epsilon keeps values such
    as ``9 * (1/3)`` from rounding down below an exact level boundary.
    """
    if not 0.0 <= rho <= 1.0:
        raise ValueError("density must lie in [0, 1]")
    return min(int(np.floor(LEVELS * rho + _LEVEL_EPS)), LEVELS - 1)


def transition(state: int, rho: float, rule: Rule) -> int:
    """Next state of a single cell with alive-neighbour density ``rho``."""
    levels = rule.survive if state else rule.born
    return int(density_level(rho) in levels)


def init_state(n: int, seed: int) -> np.ndarray:
    """Independent fair bits, one per cell."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return make_rng(seed).integers(0, 2, size=n, dtype=np.uint8)


@dataclass(frozen=True, eq=False)
class EvolutionRecord:
    """State (``tep``) and density (``dtep``) patterns of one run.

    Row ``t`` of ``dtep`` holds the densities observed in state row ``t``,
    i.e. the values that produced row ``t + 1``.  ``degrees`` is carried so
    features can be computed from the record alone.
    """

    tep: np.ndarray
    dtep: np.ndarray
    rule: Rule
    seed: int
    degrees: np.ndarray
    transient: int = DEFAULT_TRANSIENT
    meta: dict = field(default_factory=dict)

    @property
    def timesteps(self) -> int:
        return self.tep.shape[0] - 1


def evolve(net: Network, rule: Rule, T: int, seed: int,
           transient: int = DEFAULT_TRANSIENT,
           initial: np.ndarray | None = None) -> EvolutionRecord:
    """Run the automaton for ``T`` synchronous steps from a seeded random start.

    ``initial`` overrides the random initial condition.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    if transient < 0:
        raise ValueError("transient must be >= 0")
    n = net.node_count
    deg = net.degrees
    adj = adjacency_matrix(net)
    born, survive = rule.born_table, rule.survive_table
    state = init_state(n, seed) if initial is None else np.asarray(initial, dtype=np.uint8).copy()
    if state.shape != (n,):
        raise ValueError("initial state length must equal the node count")
    tep = np.empty((T + 1, n), dtype=np.uint8)
    dtep = np.empty((T + 1, n), dtype=np.float64)
    tep[0] = state
    for t in range(T + 1):
        counts = _alive_counts(adj, tep[t])
        dtep[t] = _density_from_counts(counts, deg)
        if t == T:
            break
        lv = density_levels(counts, deg)
        tep[t + 1] = np.where(tep[t] == 1, survive[lv], born[lv])
    tep.setflags(write=False)
    dtep.setflags(write=False)
    return EvolutionRecord(tep, dtep, rule, int(seed), deg.copy(), transient)


def sd_tep(record: EvolutionRecord) -> np.ndarray:
    """Density signed by state: ``+rho`` where alive, ``-rho`` where dead."""
    return record.dtep * (2.0 * record.tep - 1.0)


def discard_transient(matrix: np.ndarray, tau: int) -> np.ndarray:
    if not 0 <= tau < matrix.shape[0]:
        raise ValueError(f"transient {tau} leaves no rows of {matrix.shape[0]}")
    return matrix[tau:]


def column_entropy(tep: np.ndarray) -> np.ndarray:
    """Binary Shannon entropy (bits) of each column's alive fraction."""
    p = np.asarray(tep, dtype=np.float64).mean(axis=0)
    out = np.zeros_like(p)
    mid = (p > 0) & (p < 1)
    q = p[mid]
    out[mid] = -q * np.log2(q) - (1 - q) * np.log2(1 - q)
    return out


def entropy_order(tep: np.ndarray) -> np.ndarray:
    """Column permutation by ascending entropy; ties keep node order."""
    return np.argsort(column_entropy(tep), kind="stable")


def write_matrix_text(matrix: np.ndarray, path: str | PathLike) -> None:
    """Plain-text dump: a ``rows cols`` header, then one row per line."""
    m = np.asarray(matrix)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{m.shape[0]} {m.shape[1]}\n")
        integral = np.issubdtype(m.dtype, np.integer)
        for row in m:
            if integral:
                fh.write(" ".join(str(int(v)) for v in row))
            else:
                fh.write(" ".join(repr(float(v)) for v in row))
            fh.write("\n")


def read_matrix_text(path: str | PathLike) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        rows, cols = (int(x) for x in fh.readline().split())
        data = np.loadtxt(fh, ndmin=2) if rows else np.empty((0, cols))
    if data.shape != (rows, cols):
        raise ValueError(f"header says {rows}x{cols}, body is {data.shape}")
    return data


def to_gray(matrix: np.ndarray, signed: bool = False) -> np.ndarray:
    """Map [0, 1] (or [-1, 1] when ``signed``) to 8-bit gray levels."""
    v = np.asarray(matrix, dtype=np.float64)
    if signed:
        v = (v + 1.0) / 2.0
    return np.floor(np.clip(v, 0.0, 1.0) * 255 + 0.5).astype(np.uint8)


def write_pgm(gray: np.ndarray, path: str | PathLike) -> None:
    """Binary PGM (P5, maxval 255); rows are timesteps, columns nodes."""
    g = np.ascontiguousarray(gray, dtype=np.uint8)
    h, w = g.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(g.tobytes())


def read_pgm(path: str | PathLike) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        start = pos
        while not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos].decode("ascii"))
    if tokens[0] != "P5":
        raise ValueError("not a binary PGM")
    w, h = int(tokens[1]), int(tokens[2])
    pixels = np.frombuffer(data[pos + 1:pos + 1 + w * h], dtype=np.uint8)
    return pixels.reshape(h, w)


def render_patterns(record: EvolutionRecord, order_entropy: bool = True) -> dict[str, np.ndarray]:
    """Gray images of the TEP, D-TEP and SD-TEP, columns optionally entropy-sorted."""
    images = {
        "tep": to_gray(record.tep),
        "dtep": to_gray(record.dtep),
        "sdtep": to_gray(sd_tep(record), signed=True),
    }
    if order_entropy:
        order = entropy_order(record.tep)
        images = {k: v[:, order] for k, v in images.items()}
    return images
