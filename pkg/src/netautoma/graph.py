"""Undirected simple graphs in compressed adjacency form."""

from __future__ import annotations

from dataclasses import dataclass, field
from os import PathLike
from typing import Hashable, Iterable, Sequence

import numpy as np


class GraphValidationError(ValueError):
    """A graph violates the simple-undirected invariants."""


class EdgeListParseError(ValueError):
    """A malformed record in an edge-list file."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Network:
    """Immutable undirected simple graph.

    Neighbors of node ``i`` are ``indices[indptr[i]:indptr[i + 1]]``, sorted
    ascending.  ``labels`` maps dense node ids back to the identifiers found in
    the source file, when there was one.
    """

    indptr: np.ndarray
    indices: np.ndarray
    labels: tuple | None = field(default=None, repr=False)

    @property
    def node_count(self) -> int:
        return len(self.indptr) - 1

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def edge_count(self) -> int:
        return len(self.indices) // 2

    def neighbors(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def edges(self) -> np.ndarray:
        """(M, 2) array of edges ``(u, v)`` with ``u < v``, lexicographically sorted."""
        rows = np.repeat(np.arange(self.node_count), self.degrees)
        keep = rows < self.indices
        return np.column_stack([rows[keep], self.indices[keep]])

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(u), int(v)) for u, v in self.edges()}

    def to_dense(self) -> np.ndarray:
        a = np.zeros((self.node_count, self.node_count), dtype=np.int8)
        rows = np.repeat(np.arange(self.node_count), self.degrees)
        a[rows, self.indices] = 1
        return a

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Network):
            return NotImplemented
        return (np.array_equal(self.indptr, other.indptr)
                and np.array_equal(self.indices, other.indices))

    def __hash__(self) -> int:
        return hash((self.indptr.tobytes(), self.indices.tobytes()))

    def validate(self) -> None:
        """Raise GraphValidationError unless all invariants hold."""
        n = self.node_count
        if n < 1:
            raise GraphValidationError("network has no nodes")
        if self.indptr[0] != 0 or self.indptr[-1] != len(self.indices):
            raise GraphValidationError("indptr does not span indices")
        deg = self.degrees
        if np.any(deg < 0):
            raise GraphValidationError("indptr is not monotone")
        if len(self.indices) and (self.indices.min() < 0 or self.indices.max() >= n):
            raise GraphValidationError("neighbor id out of range")
        rows = np.repeat(np.arange(n), deg)
        if np.any(rows == self.indices):
            raise GraphValidationError("self-loop present")
        for i in range(n):
            nb = self.neighbors(i)
            if np.any(np.diff(nb) <= 0):
                raise GraphValidationError(f"node {i}: neighbors unsorted or duplicated")
        fwd = rows * n + self.indices
        back = self.indices * n + rows
        if not np.array_equal(np.sort(fwd), np.sort(back)):
            raise GraphValidationError("adjacency is not symmetric")
        if int(deg.sum()) != 2 * self.edge_count or len(self.indices) % 2:
            raise GraphValidationError("degree sum is not twice the edge count")


def from_edges(n: int, edges: Iterable[tuple[int, int]] | np.ndarray,
               labels: tuple | None = None) -> Network:
    """Build a Network on nodes ``0..n-1`` from integer pairs.

    Duplicate pairs (in either orientation) are collapsed; self-loops raise.
    """
    e = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges,
                   dtype=np.int64).reshape(-1, 2)
    if n < 1:
        raise GraphValidationError("network must have at least one node")
    if len(e):
        if e.min() < 0 or e.max() >= n:
            raise GraphValidationError("edge endpoint outside 0..n-1")
        loops = e[:, 0] == e[:, 1]
        if loops.any():
            u = int(e[loops][0, 0])
            raise GraphValidationError(f"self-loop on node {u}")
        lo = np.minimum(e[:, 0], e[:, 1])
        hi = np.maximum(e[:, 0], e[:, 1])
        key = np.unique(lo * n + hi)
        lo, hi = key // n, key % n
        src = np.concatenate([lo, hi])
        dst = np.concatenate([hi, lo])
    else:
        src = dst = np.empty(0, dtype=np.int64)
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
    return Network(_frozen(indptr), _frozen(dst.astype(np.int64)), labels)


def from_edge_list(records: Sequence[tuple[Hashable, Hashable]],
                   node_count: int | None = None) -> Network:
    """Build a Network from node-identifier pairs.

    Without ``node_count`` identifiers are remapped to ``0..N-1`` in order of
    first appearance and the original identifiers are kept in ``labels``.
    With ``node_count`` the identifiers must be integers in
    ``0..node_count-1`` and are used as-is, which preserves isolated nodes.
    """
    if node_count is not None:
        try:
            pairs = [(int(u), int(v)) for u, v in records]
        except (TypeError, ValueError) as exc:
            raise EdgeListParseError(f"non-integer node id with fixed node count: {exc}")
        return from_edges(node_count, pairs)
    ids: dict = {}
    pairs = []
    for u, v in records:
        if u == v:
            raise GraphValidationError(f"self-loop on node {u!r}")
        pairs.append((ids.setdefault(u, len(ids)), ids.setdefault(v, len(ids))))
    if not ids:
        raise GraphValidationError("edge list is empty")
    return from_edges(len(ids), pairs, labels=tuple(ids))


def parse_edge_lines(lines: Iterable[str]) -> list[tuple[str, str]]:
    """Parse edge-list text: two tokens per line, ``#`` comments, blank lines."""
    records = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise EdgeListParseError(f"expected 2 node tokens, got {len(parts)}", lineno)
        if parts[0] == parts[1]:
            raise GraphValidationError(f"line {lineno}: self-loop on node {parts[0]!r}")
        records.append((parts[0], parts[1]))
    return records


def read_edge_list(path: str | PathLike, node_count: int | None = None) -> Network:
    with open(path, encoding="utf-8") as fh:
        records = parse_edge_lines(fh)
    return from_edge_list(records, node_count=node_count)


def write_edge_list(net: Network, path: str | PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# nodes {net.node_count} edges {net.edge_count}\n")
        for u, v in net.edges():
            fh.write(f"{u} {v}\n")


def mean_degree(net: Network) -> float:
    return 2.0 * net.edge_count / net.node_count
