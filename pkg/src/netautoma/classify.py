"""Classifiers and the repeated stratified cross-validation protocol."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field
from os import PathLike
from typing import Sequence

import numpy as np

from .llna import Rule
from .seeding import derive_seed, make_rng

_TAU = 1e-12


class Standardizer:
    """Per-feature z-scoring fit on training rows only.

    Features that are constant on the training rows map to 0 everywhere.
    """

    def fit(self, X: np.ndarray) -> "Standardizer":
        X = np.asarray(X, dtype=np.float64)
        if X.shape[0] == 0:
            raise ValueError("cannot fit on zero rows")
        self.mean_ = X.mean(axis=0)
        std = X.std(axis=0)
        self.constant_ = std <= 1e-12 * np.maximum(1.0, np.abs(self.mean_))
        self.scale_ = np.where(self.constant_, 1.0, std)
        return self

    def transform(self, X: np.ndarray) -> np.ndarray:
        Z = (np.asarray(X, dtype=np.float64) - self.mean_) / self.scale_
        Z[:, self.constant_] = 0.0
        return Z


def standardize(train_rows: np.ndarray, apply_rows: np.ndarray):
    """Return ``(train_z, apply_z, transform)`` with the transform fit on ``train_rows``."""
    t = Standardizer().fit(train_rows)
    return t.transform(train_rows), t.transform(apply_rows), t


def smo_solve(K: np.ndarray, y: np.ndarray, C: float = 1.0, tol: float = 1e-3,
              max_iter: int = 100_000) -> tuple[np.ndarray, float, int]:
    """Solve the soft-margin SVM dual by sequential minimal optimization.

    Working pairs are chosen by maximal violation for ``i`` and the
    second-order gain for ``j``; iteration stops once the maximal KKT
    violation drops below ``tol``.

    Parameters
    ----------
    K : (n, n) kernel (Gram) matrix.
    y : labels in {-1, +1}.

    Returns
    -------
    alpha, rho, iterations
        Decision function is ``sum(alpha * y * K(x_i, x)) - rho``.
    """
    y = np.asarray(y, dtype=np.float64)
    n = len(y)
    Q = K * np.outer(y, y)
    QD = np.diag(K).copy()
    alpha = np.zeros(n)
    G = -np.ones(n)
    it = 0
    while it < max_iter:
        score = -y * G
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        if not up.any() or not low.any():
            break
        i = int(np.flatnonzero(up)[np.argmax(score[up])])
        g_max = score[i]
        g_min = score[low].min()
        if g_max - g_min < tol:
            break
        cand = low & (score < g_max)
        b = g_max - score[cand]
        a = QD[i] + QD[cand] - 2.0 * y[i] * y[cand] * Q[i, cand]
        a = np.where(a > 0, a, _TAU)
        j = int(np.flatnonzero(cand)[np.argmin(-(b * b) / a)])

        ai_old, aj_old = alpha[i], alpha[j]
        if y[i] != y[j]:
            quad = QD[i] + QD[j] + 2.0 * Q[i, j]
            delta = (-G[i] - G[j]) / max(quad, _TAU)
            diff = ai_old - aj_old
            ai, aj = ai_old + delta, aj_old + delta
            if diff > 0:
                if aj < 0:
                    aj, ai = 0.0, diff
            elif ai < 0:
                ai, aj = 0.0, -diff
            if diff > 0:
                if ai > C:
                    ai, aj = C, C - diff
            elif aj > C:
                aj, ai = C, C + diff
        else:
            quad = QD[i] + QD[j] - 2.0 * Q[i, j]
            delta = (G[i] - G[j]) / max(quad, _TAU)
            total = ai_old + aj_old
            ai, aj = ai_old - delta, aj_old + delta
            if total > C:
                if ai > C:
                    ai, aj = C, total - C
            elif aj < 0:
                aj, ai = 0.0, total
            if total > C:
                if aj > C:
                    aj, ai = C, total - C
            elif ai < 0:
                ai, aj = 0.0, total
        alpha[i], alpha[j] = ai, aj
        G += Q[:, i] * (ai - ai_old) + Q[:, j] * (aj - aj_old)
        it += 1

    yG = y * G
    free = (alpha > 0) & (alpha < C)
    if free.any():
        rho = float(yG[free].mean())
    else:
        at_upper = alpha >= C
        ub_mask = (at_upper & (y < 0)) | (~at_upper & (y > 0))
        lb_mask = (at_upper & (y > 0)) | (~at_upper & (y < 0))
        ub = yG[ub_mask].min() if ub_mask.any() else np.inf
        lb = yG[lb_mask].max() if lb_mask.any() else -np.inf
        rho = float((ub + lb) / 2) if np.isfinite(ub + lb) else 0.0
    return alpha, rho, it


@dataclass
class BinaryLinearSVM:
    w: np.ndarray
    rho: float
    n_support: int
    iterations: int

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X) @ self.w - self.rho


def train_binary_svm(X: np.ndarray, y: np.ndarray, C: float = 1.0, tol: float = 1e-3,
                     max_iter: int = 100_000) -> BinaryLinearSVM:
    X = np.asarray(X, dtype=np.float64)
    alpha, rho, it = smo_solve(X @ X.T, y, C, tol, max_iter)
    return BinaryLinearSVM((alpha * y) @ X, rho, int((alpha > 0).sum()), it)


class LinearSVM:
    """One-vs-one linear soft-margin SVM.

    Prediction is by majority vote over the pairwise machines; ties go to the
    class that sorts first.
    """

    def __init__(self, C: float = 1.0, tol: float = 1e-3, max_iter: int = 100_000):
        if C <= 0:
            raise ValueError("C must be positive")
        self.C, self.tol, self.max_iter = C, tol, max_iter

    def fit(self, X: np.ndarray, y: Sequence) -> "LinearSVM":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y)
        self.classes_ = np.unique(y)
        if len(self.classes_) < 2:
            raise ValueError("SVM training needs at least two classes")
        self.machines_ = {}
        for a in range(len(self.classes_)):
            for b in range(a + 1, len(self.classes_)):
                mask = (y == self.classes_[a]) | (y == self.classes_[b])
                yy = np.where(y[mask] == self.classes_[a], 1.0, -1.0)
                self.machines_[a, b] = train_binary_svm(X[mask], yy, self.C, self.tol,
                                                        self.max_iter)
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        votes = np.zeros((len(X), len(self.classes_)), dtype=np.int64)
        for (a, b), m in self.machines_.items():
            pos = m.decision_function(X) > 0
            votes[pos, a] += 1
            votes[~pos, b] += 1
        return self.classes_[np.argmax(votes, axis=1)]


def train_linear_svm(rows: np.ndarray, labels: Sequence, C: float = 1.0) -> LinearSVM:
    return LinearSVM(C=C).fit(rows, labels)


def knn_predict(train: np.ndarray, labels: Sequence, query: np.ndarray, k: int = 1):
    """Euclidean k-nearest-neighbour vote for one query row.

    Distance ties go to the lower training index; vote ties go to the label
    whose first member appears earliest in that ordering.
    """
    train = np.asarray(train, dtype=np.float64)
    labels = np.asarray(labels)
    if len(train) == 0:
        raise ValueError("empty training set")
    if not 1 <= k <= len(train):
        raise ValueError("k must lie in 1..len(train)")
    d = ((train - np.asarray(query, dtype=np.float64)) ** 2).sum(axis=1)
    nearest = labels[np.argsort(d, kind="stable")[:k]]
    counts: dict = {}
    for lab in nearest:
        counts[lab] = counts.get(lab, 0) + 1
    best = max(counts.values())
    return next(lab for lab in nearest if counts[lab] == best)


class KNNClassifier:
    def __init__(self, k: int = 1):
        self.k = k

    def fit(self, X: np.ndarray, y: Sequence) -> "KNNClassifier":
        self.X_ = np.asarray(X, dtype=np.float64)
        self.y_ = np.asarray(y)
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.array([knn_predict(self.X_, self.y_, q, self.k) for q in np.asarray(X)])


def make_classifier(name: str, C: float = 1.0, k: int = 1):
    if name == "svm":
        return LinearSVM(C=C)
    if name == "knn":
        return KNNClassifier(k=k)
    raise ValueError(f"unknown classifier {name!r}; use 'svm' or 'knn'")


def stratified_folds(labels: np.ndarray, folds: int, rng: np.random.Generator) -> np.ndarray:
    """Fold id per sample: each class is shuffled and dealt round-robin.

    The deal continues across classes so fold sizes differ by at most one.
    """
    labels = np.asarray(labels)
    out = np.empty(len(labels), dtype=np.int64)
    offset = 0
    for c in np.unique(labels):
        idx = rng.permutation(np.flatnonzero(labels == c))
        out[idx] = (offset + np.arange(len(idx))) % folds
        offset += len(idx)
    return out


@dataclass
class ClassificationReport:
    mean_accuracy: float
    std_accuracy: float
    per_repetition: tuple[float, ...]
    confusion: np.ndarray
    classes: tuple
    folds: int
    repetitions: int
    classifier: str
    seed: int
    extra: dict = field(default_factory=dict)

    def to_text(self) -> str:
        lines = [
            f"classifier   : {self.classifier}",
            f"protocol     : {self.folds}-fold stratified CV x {self.repetitions} repetitions",
            f"seed         : {self.seed}",
            f"accuracy     : {self.mean_accuracy:.2f} +- {self.std_accuracy:.2f} %",
        ]
        for key, value in self.extra.items():
            lines.append(f"{key:<13}: {value}")
        width = max(len(str(c)) for c in self.classes)
        lines.append("confusion (rows = true, cols = predicted, summed over repetitions):")
        lines.append(" " * (width + 1) + " ".join(f"{str(c):>{width}}" for c in self.classes))
        for c, row in zip(self.classes, self.confusion):
            lines.append(f"{str(c):>{width}} " + " ".join(f"{v:>{width}d}" for v in row))
        return "\n".join(lines)


LEDGER_FIELDS = ("database", "rule", "bins", "classifier", "mean", "std", "repetitions", "seed")


def append_ledger(path: str | PathLike, report: ClassificationReport, database: str = "",
                  rule: str = "", bins: str = "") -> None:
    """Append one result row to a CSV ledger, writing the header for a new file."""
    new = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if new:
            w.writerow(LEDGER_FIELDS)
        w.writerow([database, rule, bins, report.classifier, f"{report.mean_accuracy:.4f}",
                    f"{report.std_accuracy:.4f}", report.repetitions, report.seed])


def _run_repetition(X, y, folds, rep_seed, classifier, C, k):
    rng = make_rng(rep_seed)
    fold_of = stratified_folds(y, folds, rng)
    classes = np.unique(y)
    pos = {c: i for i, c in enumerate(classes)}
    confusion = np.zeros((len(classes), len(classes)), dtype=np.int64)
    accs = []
    for f in range(folds):
        test = fold_of == f
        Xtr, Xte, _ = standardize(X[~test], X[test])
        model = make_classifier(classifier, C=C, k=k).fit(Xtr, y[~test])
        pred = model.predict(Xte)
        accs.append(float(np.mean(pred == y[test])))
        for t, p in zip(y[test], pred):
            confusion[pos[t], pos[p]] += 1
    return float(np.mean(accs)), confusion


def cross_validate(X: np.ndarray, y: Sequence, folds: int = 10, repetitions: int = 10,
                   classifier: str = "svm", seed: int = 0, C: float = 1.0, k: int = 1,
                   n_jobs: int = 1) -> ClassificationReport:
    """Repeated stratified k-fold cross-validation.

    Each repetition reshuffles the folds with a seed derived from ``seed`` and
    the repetition index, standardizes on the training part of every fold,
    and scores the mean fold accuracy.  The report gives mean and population
    standard deviation over repetitions, in percent.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.shape[0] != len(y):
        raise ValueError("row and label counts differ")
    classes, counts = np.unique(y, return_counts=True)
    if len(classes) < 2:
        raise ValueError("need at least two classes")
    if folds < 2:
        raise ValueError("need at least two folds")
    if counts.min() < folds:
        small = classes[np.argmin(counts)]
        raise ValueError(f"class {small!r} has {counts.min()} samples, fewer than {folds} folds")
    make_classifier(classifier)
    seeds = [derive_seed(seed, "cv-repetition", r) for r in range(repetitions)]
    if n_jobs != 1:
        from joblib import Parallel, delayed
        results = Parallel(n_jobs=n_jobs)(
            delayed(_run_repetition)(X, y, folds, s, classifier, C, k) for s in seeds)
    else:
        results = [_run_repetition(X, y, folds, s, classifier, C, k) for s in seeds]
    accs = np.array([r[0] for r in results]) * 100.0
    confusion = sum(r[1] for r in results)
    return ClassificationReport(
        mean_accuracy=float(accs.mean()),
        std_accuracy=float(accs.std()),
        per_repetition=tuple(float(a) for a in accs),
        confusion=confusion,
        classes=tuple(classes.tolist()),
        folds=folds,
        repetitions=repetitions,
        classifier=classifier,
        seed=seed,
    )


@dataclass(frozen=True)
class RuleScore:
    rule: Rule
    mean_accuracy: float
    std_accuracy: float


def rule_search(networks: Sequence, labels: Sequence, rules: Sequence[Rule],
                T: int = 350, tau: int = 20, bins: Sequence[int] = (40, 100),
                folds: int = 5, repetitions: int = 2, classifier: str = "svm",
                seed: int = 0, threads: int = 1,
                progress=None) -> list[RuleScore]:
    """Score every rule by cross-validated accuracy of its Omega features.

    All rules see the same initial conditions (seeded per sample from
    ``seed``) and the same fold splits.  Returns scores sorted by decreasing
    mean accuracy, ties by rule name.
    """
    from .pipeline import extract_features

    labels = np.asarray(labels)
    scores = []
    for i, rule in enumerate(rules):
        X = extract_features(networks, rule, T, tau, bins, seed=seed, threads=threads)
        rep = cross_validate(X, labels, folds, repetitions, classifier, seed=seed)
        scores.append(RuleScore(rule, rep.mean_accuracy, rep.std_accuracy))
        if progress is not None:
            progress(i + 1, len(rules), scores[-1])
    return sorted(scores, key=lambda s: (-s.mean_accuracy, s.rule.name))


def write_rule_ranking(path: str | PathLike, scores: Sequence[RuleScore]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rank", "rule", "mean", "std"])
        for rank, s in enumerate(scores, start=1):
            w.writerow([rank, s.rule.name, f"{s.mean_accuracy:.4f}", f"{s.std_accuracy:.4f}"])
