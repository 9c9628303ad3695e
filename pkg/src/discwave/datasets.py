"""Synthetic benchmark generators and dataset CSV I/O.

Both generators emit three classes with exactly per_class_count examples each
(rows grouped by class, ids 1..3) and are byte-reproducible from their seed:
generation is single-threaded and the per-signal draw order is fixed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .core import ConfigError, DataError, SignalDataset, is_power_of_two, make_rng

WAVEFORM_LENGTH = 32
SHAPE_LENGTH = 128
SHAPE_KINDS = ("cylinder", "bell", "funnel")


@dataclass(frozen=True)
class WaveformSpec:
    per_class_count: int
    seed: int
    length: int = WAVEFORM_LENGTH

    def __post_init__(self):
        if self.per_class_count < 1:
            raise ConfigError("per_class_count must be >= 1")
        if self.length != WAVEFORM_LENGTH:
            raise ConfigError(f"waveform signals are fixed at {WAVEFORM_LENGTH} samples")


@dataclass(frozen=True)
class ShapeSpec:
    per_class_count: int
    seed: int
    length: int = SHAPE_LENGTH

    def __post_init__(self):
        if self.per_class_count < 1:
            raise ConfigError("per_class_count must be >= 1")
        if self.length != SHAPE_LENGTH:
            raise ConfigError(f"shape-cbf signals are fixed at {SHAPE_LENGTH} samples")


def h1(i):
    """Triangle bump peaking at sample 7 (1-based): max(6 - |i - 7|, 0)."""
    return np.maximum(6.0 - np.abs(np.asarray(i, dtype=float) - 7.0), 0.0)


def h2(i):
    return h1(np.asarray(i, dtype=float) - 8.0)


def h3(i):
    return h1(np.asarray(i, dtype=float) - 4.0)


def waveform_mixture(class_id: int, u: float) -> np.ndarray:
    """Noise-free class mean for mixing weight u: convex mix of two bumps."""
    i = np.arange(1, WAVEFORM_LENGTH + 1, dtype=float)
    if class_id == 1:
        return u * h1(i) + (1.0 - u) * h2(i)
    if class_id == 2:
        return u * h1(i) + (1.0 - u) * h3(i)
    if class_id == 3:
        return u * h2(i) + (1.0 - u) * h3(i)
    raise ConfigError(f"waveform class_id must be 1, 2 or 3, got {class_id}")


def generate_waveform(spec: WaveformSpec) -> SignalDataset:
    """Three-class bump-mixture dataset, 32 samples per signal.

    Per signal the draw order is: mixing weight u ~ Uniform(0,1), then the 32
    i.i.d. standard-normal noise samples. Rows are grouped by class (1, 2, 3).
    """
    rng = make_rng(spec.seed)
    n = spec.per_class_count
    signals = np.empty((3 * n, WAVEFORM_LENGTH))
    class_ids = np.repeat([1, 2, 3], n)
    for row, cid in enumerate(class_ids):
        u = rng.uniform()
        eps = rng.standard_normal(WAVEFORM_LENGTH)
        signals[row] = waveform_mixture(int(cid), u) + eps
    return SignalDataset(signals=signals, class_ids=class_ids)


def shape_envelope(kind: str, a: int, b: int, eta: float, length: int = SHAPE_LENGTH) -> np.ndarray:
    """Noise-free cylinder/bell/funnel shape active on samples a..b inclusive."""
    if kind not in SHAPE_KINDS:
        raise ConfigError(f"kind must be one of {SHAPE_KINDS}, got {kind!r}")
    t = np.arange(1, length + 1, dtype=float)
    active = ((t >= a) & (t <= b)).astype(float)
    height = 6.0 + eta
    if kind == "cylinder":
        return height * active
    if kind == "bell":
        return height * active * (t - a) / float(b - a)
    return height * active * (b - t) / float(b - a)


def generate_shape(spec: ShapeSpec) -> SignalDataset:
    """Three-class cylinder/bell/funnel dataset, 128 samples per signal.

    Per signal the draw order is: onset a ~ Uniform{16..32}, width
    b - a ~ Uniform{32..96}, height perturbation eta ~ N(0,1), then the 128
    i.i.d. standard-normal noise samples. Rows are grouped by class
    (1=cylinder, 2=bell, 3=funnel).
    """
    rng = make_rng(spec.seed)
    n = spec.per_class_count
    signals = np.empty((3 * n, SHAPE_LENGTH))
    class_ids = np.repeat([1, 2, 3], n)
    for row, cid in enumerate(class_ids):
        a = int(rng.integers(16, 33))
        width = int(rng.integers(32, 97))
        eta = float(rng.standard_normal())
        eps = rng.standard_normal(SHAPE_LENGTH)
        kind = SHAPE_KINDS[int(cid) - 1]
        signals[row] = shape_envelope(kind, a, a + width, eta) + eps
    return SignalDataset(signals=signals, class_ids=class_ids)


def save_csv(dataset: SignalDataset, path, header: bool = True) -> None:
    """One row per signal: N sample columns, then one integer label column.

    Sample values are written with shortest round-trip precision, so
    load_csv(save_csv(d)) reproduces the values bit-for-bit.
    """
    ids = dataset.class_ids
    if ids is None and dataset.labels is not None:
        ids = dataset.labels.astype(int)
    n = dataset.signal_length
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if header:
            cols = [f"s{j}" for j in range(1, n + 1)]
            if ids is not None:
                cols.append("label")
            fh.write(",".join(cols) + "\n")
        for i in range(dataset.n_examples):
            row = [repr(float(x)) for x in dataset.signals[i]]
            if ids is not None:
                row.append(str(int(ids[i])))
            fh.write(",".join(row) + "\n")


def load_csv(path, header: bool = True, labeled: bool = True) -> SignalDataset:
    """Read a dataset CSV written by save_csv (or compatible).

    The last column is the integer class id when `labeled`. Raises DataError
    with 1-based row/column diagnostics on ragged rows, non-numeric cells, a
    missing label column, or a non-power-of-two signal width.
    """
    with open(path, "r", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        lines = [row for row in reader if row and any(c.strip() != "" for c in row)]
    if not lines:
        raise DataError(f"{path}: empty file")
    start = 1 if header else 0
    if start and len(lines) == 1:
        raise DataError(f"{path}: header only, no data rows")
    width = len(lines[start])
    if labeled and width < 2:
        raise DataError(f"{path}: expected sample columns plus a label column")
    n_samples = width - 1 if labeled else width
    if not is_power_of_two(n_samples) or n_samples < 2:
        raise DataError(
            f"{path}: signal width {n_samples} is not a power of two >= 2"
        )
    signals = np.empty((len(lines) - start, n_samples))
    ids = np.empty(len(lines) - start, dtype=int) if labeled else None
    for r, cells in enumerate(lines[start:], start=start + 1):
        if len(cells) != width:
            raise DataError(f"{path}: row {r} has {len(cells)} cells, expected {width}")
        for c, cell in enumerate(cells[:n_samples], start=1):
            try:
                signals[r - start - 1, c - 1] = float(cell)
            except ValueError as exc:
                raise DataError(f"{path}: row {r}, column {c}: {cell!r} is not numeric") from exc
        if labeled:
            cell = cells[-1]
            try:
                value = float(cell)
            except ValueError as exc:
                raise DataError(
                    f"{path}: row {r}, column {width}: label {cell!r} is not numeric"
                ) from exc
            if value != int(value):
                raise DataError(
                    f"{path}: row {r}, column {width}: label {cell!r} is not an integer"
                )
            ids[r - start - 1] = int(value)
    if not np.all(np.isfinite(signals)):
        raise DataError(f"{path}: non-finite sample values")
    return SignalDataset(signals=signals, class_ids=ids)
