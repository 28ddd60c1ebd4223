"""Histogram features of density time-evolution patterns.

Bins partition the domain into ``L`` half-open intervals ``[b/L, (b+1)/L)``
with the last one closed.  Signed matrices (SD-TEP, values in [-1, 1]) are
mapped to [0, 1] by ``(v + 1) / 2`` before binning.  Every histogram is
normalized to sum to one.

Feature layout is fixed: for each bin count (ascending) the global,
degree-mean and temporal-mean histograms; D-TEP block before SD-TEP block.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Literal

import numpy as np

from .llna import EvolutionRecord, discard_transient, sd_tep

Domain = Literal["unit", "signed"]

MIN_BINS, MAX_BINS = 2, 4096
# Entries are ratios of small integers; this keeps exact bin boundaries
# from being lost to rounding in v * L.
_BIN_EPS = 1e-9


def _to_unit(values: np.ndarray, domain: Domain) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    if domain == "unit":
        lo = 0.0
    elif domain == "signed":
        lo = -1.0
    else:
        raise ValueError(f"unknown domain {domain!r}")
    if v.size and (v.min() < lo or v.max() > 1.0 or np.isnan(v).any()):
        raise ValueError(f"values outside the {domain} domain [{lo:g}, 1]")
    return v if domain == "unit" else (v + 1.0) / 2.0


def bin_indices(values: np.ndarray, L: int, domain: Domain = "unit") -> np.ndarray:
    """Vectorized bin index of every entry."""
    if not MIN_BINS <= L <= MAX_BINS:
        raise ValueError(f"bin count {L} outside [{MIN_BINS}, {MAX_BINS}]")
    u = _to_unit(values, domain)
    return np.minimum(np.floor(u * L + _BIN_EPS).astype(np.int64), L - 1)


def bin_index(v: float, L: int, domain: Domain = "unit") -> int:
    return int(bin_indices(np.array([v]), L, domain)[0])


def _check_matrix(matrix: np.ndarray) -> np.ndarray:
    m = np.asarray(matrix)
    if m.ndim != 2 or m.size == 0:
        raise ValueError("feature extraction needs a non-empty 2-D matrix")
    return m


def global_histogram(matrix: np.ndarray, L: int, domain: Domain = "unit") -> np.ndarray:
    m = _check_matrix(matrix)
    counts = np.bincount(bin_indices(m, L, domain).ravel(), minlength=L)
    return counts / m.size


def degree_histogram_mean(matrix: np.ndarray, degrees: np.ndarray, L: int,
                          domain: Domain = "unit", weighted: bool = False) -> np.ndarray:
    """Mean of the per-degree normalized histograms.

    Each distinct degree present in ``degrees`` contributes one histogram built
    from the columns of that degree.  By default every degree class counts
    once; ``weighted=True`` weights classes by their node count instead (which
    reproduces the global histogram).
    """
    m = _check_matrix(matrix)
    degrees = np.asarray(degrees)
    if degrees.shape != (m.shape[1],):
        raise ValueError("need one degree per matrix column")
    classes, col_class = np.unique(degrees, return_inverse=True)
    b = bin_indices(m, L, domain)
    codes = (col_class[np.newaxis, :] * L + b).ravel()
    per_class = np.bincount(codes, minlength=len(classes) * L).reshape(len(classes), L)
    totals = per_class.sum(axis=1, keepdims=True)
    hists = per_class / totals
    if weighted:
        w = totals[:, 0] / totals.sum()
        return w @ hists
    return hists.mean(axis=0)


def temporal_histogram_mean(matrix: np.ndarray, L: int, domain: Domain = "unit") -> np.ndarray:
    """Mean over rows of each row's normalized histogram."""
    m = _check_matrix(matrix)
    rows, cols = m.shape
    b = bin_indices(m, L, domain)
    codes = (np.arange(rows)[:, np.newaxis] * L + b).ravel()
    per_row = np.bincount(codes, minlength=rows * L).reshape(rows, L)
    return (per_row / cols).mean(axis=0)


@dataclass(frozen=True, eq=False)
class FeatureVector:
    values: np.ndarray
    descriptor: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.values)


def upsilon(matrix: np.ndarray, degrees: np.ndarray, L: int,
            domain: Domain = "unit", weighted_degree: bool = False) -> FeatureVector:
    """``[global, degree-mean, temporal-mean]`` for one bin count; length ``3L``."""
    values = np.concatenate([
        global_histogram(matrix, L, domain),
        degree_histogram_mean(matrix, degrees, L, domain, weighted=weighted_degree),
        temporal_histogram_mean(matrix, L, domain),
    ])
    return FeatureVector(values, {"domain": domain, "bins": (L,),
                                  "parts": ("global", "degree", "temporal")})


def canonical_bins(bin_sizes: Iterable[int]) -> tuple[int, ...]:
    bins = tuple(sorted({int(L) for L in bin_sizes}))
    if not bins:
        raise ValueError("at least one bin count is required")
    for L in bins:
        if not MIN_BINS <= L <= MAX_BINS:
            raise ValueError(f"bin count {L} outside [{MIN_BINS}, {MAX_BINS}]")
    return bins


def theta(matrix: np.ndarray, degrees: np.ndarray, bin_sizes: Iterable[int],
          domain: Domain = "unit", weighted_degree: bool = False) -> FeatureVector:
    """Upsilon vectors for every bin count, ascending; length ``3 * sum(L)``."""
    bins = canonical_bins(bin_sizes)
    parts = [upsilon(matrix, degrees, L, domain, weighted_degree).values for L in bins]
    return FeatureVector(np.concatenate(parts),
                         {"domain": domain, "bins": bins,
                          "parts": ("global", "degree", "temporal")})


def omega(record: EvolutionRecord, bin_sizes: Iterable[int] = (40, 100),
          weighted_degree: bool = False) -> FeatureVector:
    """D-TEP theta followed by SD-TEP theta, after dropping the transient rows.

    Length ``6 * sum(bin_sizes)``.
    """
    bins = canonical_bins(bin_sizes)
    tau = record.transient
    d = discard_transient(record.dtep, tau)
    sd = discard_transient(sd_tep(record), tau)
    values = np.concatenate([
        theta(d, record.degrees, bins, "unit", weighted_degree).values,
        theta(sd, record.degrees, bins, "signed", weighted_degree).values,
    ])
    return FeatureVector(values, {"source": ("D-TEP", "SD-TEP"), "bins": bins,
                                  "parts": ("global", "degree", "temporal"),
                                  "rule": record.rule.name, "transient": tau})


def omega_length(bin_sizes: Iterable[int]) -> int:
    return 6 * sum(canonical_bins(bin_sizes))


def binary_pattern_codes(tep: np.ndarray, D: int) -> np.ndarray:
    """Decimal value of every length-``D`` vertical window, earliest row most significant.

    Returns an array of shape ``(rows - D + 1, cols)``.
    """
    m = _check_matrix(tep).astype(np.int64)
    if not 1 <= D <= 16:
        raise ValueError("window size must lie in 1..16")
    if D > m.shape[0]:
        raise ValueError(f"window {D} longer than the {m.shape[0]} available rows")
    windows = m.shape[0] - D + 1
    codes = np.zeros((windows, m.shape[1]), dtype=np.int64)
    for j in range(D):
        codes = (codes << 1) | m[j:j + windows]
    return codes


def binary_pattern_histogram(tep: np.ndarray, D: int) -> np.ndarray:
    """Normalized histogram (``2**D`` bins) of sliding-window binary patterns."""
    codes = binary_pattern_codes(tep, D)
    return np.bincount(codes.ravel(), minlength=1 << D) / codes.size


def binary_pattern_degree_histogram(tep: np.ndarray, degrees: np.ndarray, D: int) -> np.ndarray:
    """Mean over degree classes of the per-class binary-pattern histograms."""
    codes = binary_pattern_codes(tep, D)
    classes, col_class = np.unique(np.asarray(degrees), return_inverse=True)
    size = 1 << D
    per_class = np.bincount((col_class[np.newaxis, :] * size + codes).ravel(),
                            minlength=len(classes) * size).reshape(len(classes), size)
    return (per_class / per_class.sum(axis=1, keepdims=True)).mean(axis=0)


def binary_pattern_features(record: EvolutionRecord, D: int = 3) -> FeatureVector:
    """Binary-pattern baseline: global and degree-mean pattern histograms of the TEP."""
    tep = discard_transient(record.tep, record.transient)
    values = np.concatenate([binary_pattern_histogram(tep, D),
                             binary_pattern_degree_histogram(tep, record.degrees, D)])
    return FeatureVector(values, {"source": ("TEP",), "window": D,
                                  "parts": ("global", "degree"), "rule": record.rule.name})
