"""Coefficients as classifiers: thresholds, ranking, ensembles, significance.

Every detail coefficient doubles as a one-feature classifier
s * sign(d - b) with sign(0) fixed to +1. Thresholds come either from the
window solve's own bias (psvm_bias) or from an exhaustive midpoint scan
maximising training accuracy (optimal_threshold). Ranking and selection use
training accuracy only; test error is reported, never selected on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional

import numpy as np

from .core import (
    REGULARISED,
    ConfigError,
    DataError,
    SignalDataset,
    TransformConfig,
    make_rng,
    validate_labels,
)
from . import transform as tf
from . import solver

PSVM_BIAS = "psvm_bias"
OPTIMAL_THRESHOLD = "optimal_threshold"
MODES = (PSVM_BIAS, OPTIMAL_THRESHOLD)

RED, BLUE, GREEN = "red", "blue", "green"  # +1 side, -1 side, unclassified


@dataclass
class LocalClassifier:
    """One detail coefficient acting as a thresholded classifier."""

    level: int
    k: int
    weights: np.ndarray
    b: float
    s: int
    mode: str
    train_accuracy: float
    support: tuple  # 1-based original-sample indices of the analysis vector
    test_accuracy: Optional[float] = None
    p_value: Optional[float] = None

    @property
    def name(self) -> str:
        return f"d{self.level}_{self.k}"


def predict_values(classifier: LocalClassifier, values: np.ndarray) -> np.ndarray:
    """s * sign(d - b) with sign(0) -> +1."""
    return classifier.s * np.where(np.asarray(values, dtype=float) >= classifier.b, 1.0, -1.0)


def classifier_values(table: tf.CoefficientTable, classifier: LocalClassifier) -> np.ndarray:
    return table.detail(classifier.level)[:, classifier.k - 1]


def _prepare_scan(values: np.ndarray):
    """Sorted order, candidate split counts, and candidate thresholds.

    Split count c means: the c smallest values fall below the threshold.
    Candidates are the minimum value itself (c = 0, everything predicted on
    the >= side) plus the midpoints between distinct consecutive values.
    """
    order = np.argsort(values, kind="stable")
    v = values[order]
    boundaries = np.flatnonzero(v[1:] > v[:-1]) + 1
    splits = np.concatenate([[0], boundaries])
    cands = np.empty(splits.size)
    cands[0] = v[0]
    if boundaries.size:
        cands[1:] = 0.5 * (v[boundaries - 1] + v[boundaries])
    return order, splits, cands


def fit_threshold(values: np.ndarray, labels: np.ndarray):
    """Best (b, s, correct_count) over all thresholds and both orientations.

    Ties in accuracy prefer the smallest |b|, then the smaller b, and +1
    orientation over -1. Counts are exact integers so downstream comparisons
    never hinge on float rounding.
    """
    values = np.asarray(values, dtype=float)
    y = np.asarray(labels, dtype=float)
    order, splits, cands = _prepare_scan(values)
    ys = y[order]
    pos = np.cumsum(ys > 0)
    P = int(pos[-1])
    l = ys.size
    pos_at = np.zeros(splits.size, dtype=int)
    if splits.size > 1:
        pos_at[1:] = pos[splits[1:] - 1]
    plus = P + splits - 2 * pos_at  # correct count with s = +1
    minus = l - plus

    def pick(counts):
        best = int(counts.max())
        at = np.flatnonzero(counts == best)
        sub = np.lexsort((cands[at], np.abs(cands[at])))
        return best, float(cands[at[sub[0]]])

    best_p, b_p = pick(plus)
    best_m, b_m = pick(minus)
    if best_p >= best_m:
        return b_p, 1, best_p
    return b_m, -1, best_m


def _fixed_threshold(values: np.ndarray, labels: np.ndarray, b: float):
    """Best orientation for a fixed threshold; returns (s, correct_count)."""
    pred = np.where(values >= b, 1.0, -1.0)
    correct = int(np.sum(pred == labels))
    if correct >= labels.size - correct:
        return 1, correct
    return -1, labels.size - correct


def make_local_classifiers(
    coefficients: tf.CoefficientTable,
    fitted: tf.FittedTransform,
    mode: str = OPTIMAL_THRESHOLD,
):
    """One classifier per detail coefficient of the table (coarse columns are
    exported features but have no trained predictor to classify with)."""
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
    if coefficients.labels is None:
        raise DataError("coefficient table carries no binary labels")
    y = coefficients.labels
    l = y.size
    analysis = tf.apply(fitted, np.eye(fitted.signal_length)).merged.T
    out = []
    for level in range(1, fitted.effective_levels + 1):
        D = coefficients.detail(level)
        for k in range(1, D.shape[1] + 1):
            values = D[:, k - 1]
            rec = fitted.levels[level - 1][k - 1]
            if mode == PSVM_BIAS:
                b = rec.gamma
                s, correct = _fixed_threshold(values, y, b)
            else:
                b, s, correct = fit_threshold(values, y)
            row = analysis[fitted.column_index(level, k)]
            support = tuple(
                (np.flatnonzero(np.abs(row) > tf.SUPPORT_ATOL) + 1).tolist()
            )
            out.append(
                LocalClassifier(
                    level=level,
                    k=k,
                    weights=rec.weights,
                    b=float(b),
                    s=int(s),
                    mode=mode,
                    train_accuracy=correct / l,
                    support=support,
                )
            )
    return out


def rank_classifiers(classifiers, criterion: str = "train_accuracy"):
    """Stable descending sort; ties broken by (level asc, position asc)."""
    if criterion != "train_accuracy":
        raise ConfigError(f"unknown ranking criterion {criterion!r}")
    return sorted(classifiers, key=lambda c: (-c.train_accuracy, c.level, c.k))


def evaluate_classifiers(classifiers, table: tf.CoefficientTable, labels=None):
    """Attach test accuracy from a coefficient table; returns the same list."""
    y = labels if labels is not None else table.labels
    if y is None:
        raise DataError("need labels to evaluate classifiers")
    for c in classifiers:
        pred = predict_values(c, classifier_values(table, c))
        c.test_accuracy = float(np.mean(pred == y))
    return classifiers


@dataclass(frozen=True)
class EnsembleReport:
    members: tuple  # LocalClassifier, ranked order
    votes: np.ndarray  # n x t of +/-1
    outcome: np.ndarray  # +1 / -1 / 0 (unclassified)
    misclassification: Optional[float]  # None when no labels supplied
    n_unclassified: int


def vote(members, table: tf.CoefficientTable, labels=None) -> EnsembleReport:
    """Majority vote of the members on every example of the table.

    Exact vote ties fall back to the larger summed |d - b| margin side; a tie
    there too leaves the example unclassified, which counts as an error in
    the misclassification ratio.
    """
    members = list(members)
    if not members:
        raise ConfigError("ensemble needs at least one member")
    V = np.empty((table.n_examples, len(members)))
    margins = np.empty_like(V)
    for j, c in enumerate(members):
        values = classifier_values(table, c)
        V[:, j] = predict_values(c, values)
        margins[:, j] = np.abs(values - c.b)
    sums = V.sum(axis=1)
    outcome = np.sign(sums)
    tied = outcome == 0
    if np.any(tied):
        m_plus = np.where(V > 0, margins, 0.0).sum(axis=1)
        m_minus = np.where(V < 0, margins, 0.0).sum(axis=1)
        outcome[tied & (m_plus > m_minus)] = 1.0
        outcome[tied & (m_plus < m_minus)] = -1.0
    ratio = None
    if labels is None and table.labels is not None:
        labels = table.labels
    if labels is not None:
        labels = np.asarray(labels, dtype=float)
        ratio = float(np.mean(outcome != labels))
    return EnsembleReport(
        members=tuple(members),
        votes=V,
        outcome=outcome,
        misclassification=ratio,
        n_unclassified=int(np.sum(outcome == 0)),
    )


def vote_profile(report: EnsembleReport):
    """Per example: mean vote in [-1, 1] and its colour group by sign/zero."""
    values = report.votes.mean(axis=1)
    groups = [RED if v > 0 else BLUE if v < 0 else GREEN for v in values]
    return list(zip(values.tolist(), groups))


@dataclass(frozen=True)
class MulticlassReport:
    classes: tuple
    pair_reports: dict  # (lo, hi) -> EnsembleReport on the pair's test subset
    pair_errors: dict  # (lo, hi) -> float or None
    predictions: np.ndarray  # winning class id per test example
    classified: np.ndarray  # False where no duel produced a vote
    overall_error: Optional[float]


def _aggregate_duels(classes, duel_outcomes, n_examples, true_ids):
    """Count pairwise wins; most wins predicts, ties -> smallest class id.

    An example every duel left unclassified gets no winner at all and counts
    as an error (keeps the 2-class case identical to the binary pipeline).
    """
    classes = list(classes)
    wins = np.zeros((n_examples, len(classes)), dtype=int)
    col = {c: i for i, c in enumerate(classes)}
    for (lo, hi), outcome in duel_outcomes.items():
        wins[outcome < 0, col[lo]] += 1
        wins[outcome > 0, col[hi]] += 1
    classified = wins.max(axis=1) > 0
    predictions = np.asarray(classes, dtype=int)[np.argmax(wins, axis=1)]
    overall = None
    if true_ids is not None:
        overall = float(np.mean(~classified | (predictions != true_ids)))
    return predictions, classified, overall


def one_against_one(
    train: SignalDataset,
    test: SignalDataset,
    config: TransformConfig,
    top_t: int,
    mode: str = OPTIMAL_THRESHOLD,
    threads: int = 1,
) -> MulticlassReport:
    """One binary transform+ensemble per class pair, pairwise-majority overall.

    Each pair gets its own fitted transform, classifier ranking, and top-t
    ensemble (selection happens per pairwise problem). Pair reports score the
    ensemble on the test rows of those two classes; the overall prediction
    lets every pair vote on every test example.
    """
    if train.class_ids is None or test.class_ids is None:
        raise DataError("one_against_one needs class_ids on both datasets")
    classes = [int(c) for c in np.unique(train.class_ids)]
    if len(classes) < 2:
        raise DataError("need at least two classes")
    missing = set(int(c) for c in np.unique(test.class_ids)) - set(classes)
    if missing:
        raise DataError(f"test classes {sorted(missing)} absent from training")
    if top_t < 1:
        raise ConfigError("top_t must be >= 1")

    pair_reports = {}
    pair_errors = {}
    duel_outcomes = {}
    for lo, hi in combinations(classes, 2):
        tr = train.restrict_pair(lo, hi)
        fitted, coeffs = tf.fit(tr, config, threads=threads)
        members = rank_classifiers(make_local_classifiers(coeffs, fitted, mode))[:top_t]

        full = tf.apply(fitted, test.signals)
        duel_outcomes[(lo, hi)] = vote(members, full).outcome

        mask = np.isin(test.class_ids, (lo, hi))
        if np.any(mask):
            sub = tf.apply(
                fitted,
                test.signals[mask],
                labels=np.where(test.class_ids[mask] == lo, -1.0, 1.0),
            )
            report = vote(members, sub)
            pair_reports[(lo, hi)] = report
            pair_errors[(lo, hi)] = report.misclassification
        else:
            pair_errors[(lo, hi)] = None

    predictions, classified, overall = _aggregate_duels(
        classes, duel_outcomes, test.n_examples, test.class_ids
    )
    return MulticlassReport(
        classes=tuple(classes),
        pair_reports=pair_reports,
        pair_errors=pair_errors,
        predictions=predictions,
        classified=classified,
        overall_error=overall,
    )


def fit_raw_psvm(signals: np.ndarray, labels: np.ndarray, nu: float):
    """Plain proximal-SVM fit on raw sample vectors; returns (w, gamma)."""
    problem = solver.PredictProblem(
        A=np.asarray(signals, dtype=float),
        labels=labels,
        nu=nu,
        variant=REGULARISED,
    )
    sol = solver.solve_regularised(problem)
    return sol.w, sol.gamma


def psvm_predict(w: np.ndarray, gamma: float, signals: np.ndarray) -> np.ndarray:
    return np.where(np.asarray(signals, dtype=float) @ w - gamma >= 0, 1.0, -1.0)


def one_against_one_raw_psvm(
    train: SignalDataset, test: SignalDataset, nu: float
) -> MulticlassReport:
    """Baseline: pairwise proximal SVMs on the raw samples, same duel rules."""
    if train.class_ids is None or test.class_ids is None:
        raise DataError("one_against_one needs class_ids on both datasets")
    classes = [int(c) for c in np.unique(train.class_ids)]
    if len(classes) < 2:
        raise DataError("need at least two classes")
    duel_outcomes = {}
    pair_errors = {}
    for lo, hi in combinations(classes, 2):
        tr = train.restrict_pair(lo, hi)
        w, gamma = fit_raw_psvm(tr.signals, tr.labels, nu)
        duel_outcomes[(lo, hi)] = psvm_predict(w, gamma, test.signals)
        mask = np.isin(test.class_ids, (lo, hi))
        if np.any(mask):
            y = np.where(test.class_ids[mask] == lo, -1.0, 1.0)
            pred = psvm_predict(w, gamma, test.signals[mask])
            pair_errors[(lo, hi)] = float(np.mean(pred != y))
        else:
            pair_errors[(lo, hi)] = None
    predictions, classified, overall = _aggregate_duels(
        classes, duel_outcomes, test.n_examples, test.class_ids
    )
    return MulticlassReport(
        classes=tuple(classes),
        pair_reports={},
        pair_errors=pair_errors,
        predictions=predictions,
        classified=classified,
        overall_error=overall,
    )


def _null_best_counts(values: np.ndarray, labels: np.ndarray, perms: np.ndarray):
    """Best scan correct-count per permuted labelling (vectorised over rows)."""
    order, splits, _ = _prepare_scan(values)
    ys = labels[perms[:, order]]
    pos = np.cumsum(ys > 0, axis=1)
    P = pos[:, -1:]
    l = values.size
    pos_at = np.zeros((perms.shape[0], splits.size), dtype=int)
    if splits.size > 1:
        pos_at[:, 1:] = pos[:, splits[1:] - 1]
    plus = P + splits[None, :] - 2 * pos_at
    return np.maximum(plus.max(axis=1), l - plus.min(axis=1))


def _null_fixed_counts(values: np.ndarray, labels: np.ndarray, perms: np.ndarray, b: float):
    """Fixed-threshold correct-count per permuted labelling, orientation free.

    Mirrors the psvm_bias selection functional: the bias stays put, only the
    orientation is re-picked on each permuted labelling.
    """
    pred = np.where(values >= b, 1.0, -1.0)
    correct = np.sum(pred[None, :] == labels[perms], axis=1)
    return np.maximum(correct, values.size - correct)


def permutation_test(
    classifier: LocalClassifier,
    coefficients,
    labels: np.ndarray,
    B: int,
    seed: int,
) -> float:
    """p = (1 + #{permutations with accuracy >= observed}) / (B + 1).

    The null mirrors the classifier's own selection so p-values are never
    anti-conservative: in optimal_threshold mode the threshold and orientation
    are re-fit from scratch under every permuted labelling (full re-selection
    under the null); in psvm_bias mode the bias stays fixed and only the
    orientation is re-picked, matching how the classifier was built. Each
    permutation draws from its own child stream make_rng(seed, replicate), so
    the result is independent of any scheduling.
    """
    if B < 100:
        raise ConfigError(f"need at least 100 permutations, got {B}")
    if isinstance(coefficients, tf.CoefficientTable):
        values = classifier_values(coefficients, classifier)
    else:
        values = np.asarray(coefficients, dtype=float)
    y = validate_labels(labels, values.size)
    l = y.size
    perms = np.empty((B, l), dtype=int)
    for b in range(B):
        perms[b] = make_rng(seed, b).permutation(l)
    if classifier.mode == PSVM_BIAS:
        pred = np.where(values >= classifier.b, 1.0, -1.0)
        correct = int(np.sum(pred == y))
        obs = max(correct, l - correct)
        best = _null_fixed_counts(values, y, perms, classifier.b)
    else:
        _, _, obs = fit_threshold(values, y)
        best = _null_best_counts(values, y, perms)
    return float((1 + int(np.sum(best >= obs))) / (B + 1))


def select_significant(classifiers, min_accuracy: float = 0.75, alpha: float = 0.1):
    """Keep classifiers with training accuracy >= min_accuracy AND p <= alpha.

    Classifiers without a p_value cannot be certified and are dropped.
    """
    return [
        c
        for c in classifiers
        if c.train_accuracy >= min_accuracy
        and c.p_value is not None
        and c.p_value <= alpha
    ]


def support_histogram(classifiers, signal_length: int):
    """Per-level coverage counts: how many classifiers' supports hit each sample."""
    counts = {}
    for c in classifiers:
        arr = counts.setdefault(c.level, np.zeros(signal_length, dtype=int))
        for i in c.support:
            arr[i - 1] += 1
    return dict(sorted(counts.items()))
