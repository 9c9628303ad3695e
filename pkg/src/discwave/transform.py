"""Multi-level split/update/predict pipeline over trained window predictors.

A fitted transform is a linear map from length-N signals to N coefficients:
the final coarse approximation followed by the per-level detail columns,
merged coarsest-first as (c_M | d_M | ... | d_1). Fitting trains one window
predictor per even position per level; applying uses the frozen weights only,
so train-set coefficients from fit and apply are bit-identical. For the
nonregularised variant the map is invertible and `reconstruct` undoes it
exactly; `base_vectors` materialises the analysis/synthesis vector pairs.
"""

from __future__ import annotations

import json
import re
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .core import (
    NONREGULARISED,
    REGULARISED,
    ConfigError,
    DataError,
    IndexWindow,
    NumericalError,
    SignalDataset,
    TransformConfig,
    index_window,
    interleave,
    split,
)
from . import solver

SUPPORT_ATOL = 1e-10
INVERTIBILITY_ATOL = 1e-12


@dataclass(frozen=True)
class LevelPredictor:
    """Frozen predictor for one even position at one level (1-based fields)."""

    k: int
    indices: tuple
    weights: np.ndarray
    gamma: float

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))
        object.__setattr__(self, "gamma", float(self.gamma))

    def zero_based(self) -> np.ndarray:
        return np.asarray(self.indices, dtype=int) - 1


@dataclass(frozen=True)
class FittedTransform:
    config: TransformConfig
    signal_length: int
    levels: tuple  # levels[m-1] = tuple of LevelPredictor ordered by k

    def __post_init__(self):
        N = int(self.signal_length)
        L = self.config.window
        w_len = L + 1 if self.config.variant == REGULARISED else L
        for m, recs in enumerate(self.levels, start=1):
            expect = N // (2 ** m)
            if len(recs) != expect:
                raise ConfigError(
                    f"level {m} must hold {expect} predictors, got {len(recs)}"
                )
            for j, rec in enumerate(recs, start=1):
                if rec.k != j or len(rec.indices) != L or rec.weights.shape != (w_len,):
                    raise ConfigError(f"malformed predictor at level {m}, k={j}")
        object.__setattr__(self, "signal_length", N)
        object.__setattr__(self, "levels", tuple(tuple(recs) for recs in self.levels))

    @property
    def effective_levels(self) -> int:
        return len(self.levels)

    def column_layout(self):
        """Merged-column metadata: list of (name, kind, level, position), 1-based."""
        M = self.effective_levels
        out = []
        for j in range(1, self.signal_length // (2 ** M) + 1):
            out.append((f"c{M}_{j}", "coarse", M, j))
        for m in range(M, 0, -1):
            for j in range(1, self.signal_length // (2 ** m) + 1):
                out.append((f"d{m}_{j}", "detail", m, j))
        return out

    def column_index(self, level: int, k: int) -> int:
        """0-based merged column of detail coefficient (level, k)."""
        M = self.effective_levels
        if not 1 <= level <= M:
            raise ConfigError(f"level must lie in 1..{M}, got {level}")
        if not 1 <= k <= self.signal_length // (2 ** level):
            raise ConfigError(f"position {k} out of range at level {level}")
        off = self.signal_length // (2 ** M)
        for m in range(M, level, -1):
            off += self.signal_length // (2 ** m)
        return off + k - 1


@dataclass(frozen=True)
class CoefficientTable:
    """Per-example coefficients: final coarse block plus all detail blocks."""

    coarse: np.ndarray
    details: tuple  # details[m-1] = l x N/2^m matrix for level m
    merged: np.ndarray
    labels: Optional[np.ndarray] = None
    class_ids: Optional[np.ndarray] = None

    @property
    def n_examples(self) -> int:
        return self.merged.shape[0]

    @property
    def n_levels(self) -> int:
        return len(self.details)

    def detail(self, level: int) -> np.ndarray:
        if not 1 <= level <= len(self.details):
            raise ConfigError(f"level must lie in 1..{len(self.details)}, got {level}")
        return self.details[level - 1]

    def column_names(self):
        M = len(self.details)
        names = [f"c{M}_{j}" for j in range(1, self.coarse.shape[1] + 1)]
        for m in range(M, 0, -1):
            names += [f"d{m}_{j}" for j in range(1, self.details[m - 1].shape[1] + 1)]
        return names


@dataclass(frozen=True)
class BaseVectors:
    """Analysis rows extract coefficients; synthesis columns rebuild signals."""

    analysis: np.ndarray
    synthesis: np.ndarray
    affine_offsets: np.ndarray  # zero for the raw transform; kept for classifier use
    analysis_supports: tuple  # per coefficient: 1-based sample indices, |entry| > 1e-10
    synthesis_supports: tuple


def _detail_columns(A_e, C, records, variant) -> np.ndarray:
    D = np.empty((A_e.shape[0], len(records)))
    for j, rec in enumerate(records):
        cwin = C[:, rec.zero_based()]
        if variant == REGULARISED:
            D[:, j] = rec.weights[0] * A_e[:, j] - cwin @ rec.weights[1:]
        else:
            D[:, j] = A_e[:, j] - cwin @ rec.weights
    return D


def _solve_one(A_e_col, C, y, window: IndexWindow, config: TransformConfig) -> LevelPredictor:
    A_k = np.column_stack([A_e_col, -C[:, window.as_zero_based()]])
    B = None
    if config.constraint_degree > 0:
        B = solver.vandermonde_constraints(window, config.constraint_degree)
    problem = solver.PredictProblem(
        A=A_k, labels=y, nu=config.nu, variant=config.variant, B=B
    )
    sol = solver.solve(problem)
    return LevelPredictor(
        k=window.k, indices=window.indices, weights=sol.w, gamma=sol.gamma
    )


def fit(train: SignalDataset, config: TransformConfig, threads: int = 1, progress=None):
    """Train all window predictors; returns (FittedTransform, CoefficientTable).

    Levels run sequentially (each consumes the previous coarse signal); the
    per-position solves within a level are independent and run on up to
    `threads` workers, assembled by position so scheduling cannot affect the
    result. Stops early with a warning once the window no longer fits the
    coarse signal, recording the effective number of levels. `progress`, if
    given, is called as progress(level, n_positions, seconds) after each level.
    """
    y = train.require_labels()
    N = train.signal_length
    if config.window > N // 2:
        raise ConfigError(
            f"window {config.window} does not fit level 1 (coarse length {N // 2})"
        )
    levels = []
    A = train.signals
    for m in range(1, config.levels + 1):
        half = A.shape[1] // 2
        if half < config.window:
            warnings.warn(
                f"stopping at {m - 1} levels: window {config.window} does not fit "
                f"coarse length {half}; requested {config.levels}",
                stacklevel=2,
            )
            break
        t0 = time.perf_counter()
        A_o, A_e = split(A)
        C = 0.5 * (A_o + A_e)

        def solve_k(k, _Ae=A_e, _C=C, _m=m):
            window = index_window(k, _C.shape[1], config.window)
            try:
                return _solve_one(_Ae[:, k - 1], _C, y, window, config)
            except (ConfigError, DataError, NumericalError) as exc:
                raise type(exc)(f"level {_m}, position k={k}: {exc}") from exc

        ks = range(1, half + 1)
        if threads and int(threads) > 1:
            with ThreadPoolExecutor(max_workers=int(threads)) as pool:
                records = list(pool.map(solve_k, ks))
        else:
            records = [solve_k(k) for k in ks]
        levels.append(tuple(records))
        A = C
        if progress is not None:
            progress(m, half, time.perf_counter() - t0)
    transform = FittedTransform(config=config, signal_length=N, levels=tuple(levels))
    table = apply(transform, train.signals, labels=train.labels, class_ids=train.class_ids)
    return transform, table


def apply(
    transform: FittedTransform,
    signals: np.ndarray,
    labels: Optional[np.ndarray] = None,
    class_ids: Optional[np.ndarray] = None,
) -> CoefficientTable:
    """Run the frozen transform over rows of `signals` (no re-fitting)."""
    A = np.asarray(signals, dtype=float)
    if A.ndim != 2 or A.shape[1] != transform.signal_length:
        raise DataError(
            f"signals must be 2-D with {transform.signal_length} columns, got {A.shape}"
        )
    variant = transform.config.variant
    details = []
    for records in transform.levels:
        A_o, A_e = split(A)
        C = 0.5 * (A_o + A_e)
        details.append(_detail_columns(A_e, C, records, variant))
        A = C
    merged = np.hstack([A] + details[::-1])
    return CoefficientTable(
        coarse=A,
        details=tuple(details),
        merged=merged,
        labels=labels,
        class_ids=class_ids,
    )


def _split_merged(transform: FittedTransform, merged: np.ndarray):
    N, M = transform.signal_length, transform.effective_levels
    widths = [N // (2 ** M)] + [N // (2 ** m) for m in range(M, 0, -1)]
    bounds = np.cumsum([0] + widths)
    if merged.shape[1] != bounds[-1]:
        raise DataError(
            f"merged width {merged.shape[1]} does not match transform ({bounds[-1]})"
        )
    blocks = [merged[:, bounds[i] : bounds[i + 1]] for i in range(len(widths))]
    coarse = blocks[0]
    details = blocks[1:][::-1]  # reorder to details[m-1] = level m
    return coarse, details


def reconstruct(
    transform: FittedTransform,
    coefficients: Union[CoefficientTable, np.ndarray],
) -> np.ndarray:
    """Invert the transform: coefficients back to signals, top level first.

    Nonregularised predictors invert directly (even = detail + prediction);
    regularised ones divide by the target's own weight, which must be
    nonnegligible for the map to be invertible.
    """
    if isinstance(coefficients, CoefficientTable):
        merged = coefficients.merged
    else:
        merged = np.asarray(coefficients, dtype=float)
        if merged.ndim != 2:
            raise DataError(f"coefficients must be 2-D, got shape {merged.shape}")
    variant = transform.config.variant
    C, details = _split_merged(transform, merged)
    C = np.array(C, dtype=float)
    for m in range(transform.effective_levels, 0, -1):
        D = details[m - 1]
        records = transform.levels[m - 1]
        A_e = np.empty_like(D)
        for j, rec in enumerate(records):
            cwin = C[:, rec.zero_based()]
            if variant == REGULARISED:
                if abs(rec.weights[0]) < INVERTIBILITY_ATOL:
                    raise NumericalError(
                        f"level {m}, position k={rec.k}: target weight "
                        f"{rec.weights[0]:.3e} is too small to invert"
                    )
                A_e[:, j] = (D[:, j] + cwin @ rec.weights[1:]) / rec.weights[0]
            else:
                A_e[:, j] = D[:, j] + cwin @ rec.weights
        A_o = 2.0 * C - A_e
        C = interleave(A_o, A_e)
    return C


def base_vectors(transform: FittedTransform) -> BaseVectors:
    """Materialise analysis rows and synthesis columns of the linear map."""
    N = transform.signal_length
    eye = np.eye(N)
    analysis = apply(transform, eye).merged.T
    synthesis = reconstruct(transform, eye).T
    a_sup = tuple(
        tuple((np.flatnonzero(np.abs(row) > SUPPORT_ATOL) + 1).tolist())
        for row in analysis
    )
    s_sup = tuple(
        tuple((np.flatnonzero(np.abs(col) > SUPPORT_ATOL) + 1).tolist())
        for col in synthesis.T
    )
    return BaseVectors(
        analysis=analysis,
        synthesis=synthesis,
        affine_offsets=np.zeros(N),
        analysis_supports=a_sup,
        synthesis_supports=s_sup,
    )


def constraint_residual(transform: FittedTransform) -> Optional[float]:
    """Max |B w - e1| over all predictors, or None when unconstrained."""
    p = transform.config.constraint_degree
    if p < 1:
        return None
    worst = 0.0
    for records in transform.levels:
        for rec in records:
            window = IndexWindow(k=rec.k, indices=rec.indices)
            B = solver.vandermonde_constraints(window, p)
            e1 = np.zeros(p)
            e1[0] = 1.0
            worst = max(worst, float(np.max(np.abs(B @ rec.weights - e1))))
    return worst


_FLOAT_TOKEN = "~f17g~"


def _tokenize_floats(obj):
    """Recursively replace floats with marked 17-significant-digit strings."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not np.isfinite(x):
            raise NumericalError("non-finite value in JSON payload")
        return f"{_FLOAT_TOKEN}{x:.17g}"
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (list, tuple)):
        return [_tokenize_floats(x) for x in obj]
    if isinstance(obj, np.ndarray):
        return [_tokenize_floats(x) for x in obj.tolist()]
    if isinstance(obj, dict):
        return {k: _tokenize_floats(v) for k, v in obj.items()}
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps_json(obj) -> str:
    """json.dumps with floats rendered at 17 significant digits (lossless)."""
    text = json.dumps(_tokenize_floats(obj), indent=2)
    return re.sub(r'"' + _FLOAT_TOKEN + r'([^"]*)"', r"\1", text) + "\n"


def save_model(transform: FittedTransform, path) -> None:
    """Model JSON: signal_length, config, effective_levels, per-level records."""
    doc = {
        "signal_length": transform.signal_length,
        "config": transform.config.to_dict(),
        "effective_levels": transform.effective_levels,
        "levels": [
            [
                {
                    "k": rec.k,
                    "indices": list(rec.indices),
                    "weights": rec.weights,
                    "gamma": rec.gamma,
                }
                for rec in records
            ]
            for records in transform.levels
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_json(doc))


def load_model(path) -> FittedTransform:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: not valid JSON ({exc})") from exc
    try:
        config = TransformConfig.from_dict(doc["config"])
        levels = tuple(
            tuple(
                LevelPredictor(
                    k=rec["k"],
                    indices=rec["indices"],
                    weights=rec["weights"],
                    gamma=rec["gamma"],
                )
                for rec in records
            )
            for records in doc["levels"]
        )
        transform = FittedTransform(
            config=config,
            signal_length=doc["signal_length"],
            levels=levels,
        )
        if transform.effective_levels != int(doc["effective_levels"]):
            raise DataError(
                f"{path}: effective_levels {doc['effective_levels']} does not "
                f"match {transform.effective_levels} stored levels"
            )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, (DataError, ConfigError)):
            raise
        raise DataError(f"{path}: malformed model file ({exc})") from exc
    return transform


def save_features(table: CoefficientTable, path, header: bool = True) -> None:
    """Merged-coefficient CSV: named columns plus a trailing label column."""
    names = table.column_names()
    ids = table.class_ids
    if ids is None and table.labels is not None:
        ids = table.labels.astype(int)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if header:
            cols = names + (["label"] if ids is not None else [])
            fh.write(",".join(cols) + "\n")
        for i in range(table.merged.shape[0]):
            row = [repr(float(x)) for x in table.merged[i]]
            if ids is not None:
                row.append(str(int(ids[i])))
            fh.write(",".join(row) + "\n")


def load_features(path, header: bool = True, labeled: bool = True):
    """Read a feature CSV back: (column_names, merged matrix, label ids or None)."""
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip() != ""]
    if not lines:
        raise DataError(f"{path}: empty file")
    names = None
    start = 0
    if header:
        names = lines[0].split(",")
        start = 1
    width = None
    labels = []
    for r, line in enumerate(lines[start:], start=start + 1):
        cells = line.split(",")
        if width is None:
            width = len(cells)
        elif len(cells) != width:
            raise DataError(f"{path}: row {r} has {len(cells)} cells, expected {width}")
        try:
            values = [float(c) for c in cells]
        except ValueError as exc:
            bad = next(i for i, c in enumerate(cells, 1) if not _is_float(c))
            raise DataError(f"{path}: row {r}, column {bad}: not numeric") from exc
        if labeled:
            labels.append(int(values[-1]))
            values = values[:-1]
        rows.append(values)
    merged = np.asarray(rows, dtype=float)
    if names is not None and labeled:
        names = names[:-1]
    ids = np.asarray(labels, dtype=int) if labeled else None
    return names, merged, ids


def _is_float(cell: str) -> bool:
    try:
        float(cell)
        return True
    except ValueError:
        return False
