"""Datasets: CSV ingestion, standardization and the Gaussian linear simulator."""

from __future__ import annotations

import csv
import json
import logging
import math
import os
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .errors import ConfigError, DataError

logger = logging.getLogger(__name__)


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """Regressor matrix ``x`` (n x p) with response ``y`` (n,).

    Arrays are copied and made read-only on construction, so instances can
    be shared freely.
    """

    x: np.ndarray
    y: np.ndarray
    column_names: Tuple[str, ...] = ()

    def __post_init__(self):
        x = _frozen(self.x)
        y = _frozen(self.y)
        if x.ndim == 1:
            x = _frozen(x.reshape(-1, 1))
        if x.ndim != 2 or y.ndim != 1:
            raise DataError(f"expected 2-d x and 1-d y, got shapes {x.shape} and {y.shape}")
        n, p = x.shape
        if y.shape[0] != n:
            raise DataError(f"x has {n} rows but y has {y.shape[0]} entries")
        if n < 2:
            raise DataError(f"need at least 2 observations, got {n}")
        if p < 1:
            raise DataError("need at least 1 predictor column")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise DataError("data contains NaN or infinite values")
        names = tuple(self.column_names) if self.column_names else tuple(f"x{j + 1}" for j in range(p))
        if len(names) != p:
            raise DataError(f"{len(names)} column names for {p} columns")
        if len(set(names)) != p:
            raise DataError("column names must be unique")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "column_names", names)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    def subset_rows(self, rows) -> "Dataset":
        rows = np.asarray(rows)
        return Dataset(self.x[rows], self.y[rows], self.column_names)

    def subset_columns(self, cols) -> "Dataset":
        cols = list(cols)
        return Dataset(self.x[:, cols], self.y, [self.column_names[j] for j in cols])


@dataclass(frozen=True)
class Standardization:
    """Column centering/scaling parameters.

    ``sds[j] == 0`` marks a dropped (zero variance) column; its constant
    value is kept in ``means[j]`` so the transform stays invertible.
    """

    means: np.ndarray
    sds: np.ndarray
    y_mean: float
    column_names: Tuple[str, ...] = ()

    @property
    def kept(self) -> np.ndarray:
        return np.flatnonzero(self.sds > 0)

    @property
    def dropped(self) -> List[int]:
        return np.flatnonzero(self.sds == 0).tolist()

    @property
    def p(self) -> int:
        return len(self.means)

    def transform_x(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        k = self.kept
        return (x[:, k] - self.means[k]) / self.sds[k]

    def inverse(self, d: Dataset) -> Dataset:
        """Map a standardized dataset back to original coordinates."""
        n = d.n
        x = np.empty((n, self.p))
        k = self.kept
        x[:, k] = d.x * self.sds[k] + self.means[k]
        for j in self.dropped:
            x[:, j] = self.means[j]
        names = self.column_names or tuple(f"x{j + 1}" for j in range(self.p))
        return Dataset(x, d.y + self.y_mean, names)

    def to_dict(self) -> dict:
        return {
            "means": self.means.tolist(),
            "sds": self.sds.tolist(),
            "y_mean": self.y_mean,
            "dropped": self.dropped,
            "column_names": list(self.column_names),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "Standardization":
        return cls(
            means=np.asarray(obj["means"], dtype=np.float64),
            sds=np.asarray(obj["sds"], dtype=np.float64),
            y_mean=float(obj["y_mean"]),
            column_names=tuple(obj.get("column_names", ())),
        )


def standardize(d: Dataset) -> Tuple[Dataset, Standardization]:
    """Center and scale every column to empirical mean 0 and variance 1.

    Variances use the 1/n convention so that each retained column satisfies
    ``mean(x_j**2) == 1``. The response is centered only. Zero-variance
    columns are dropped and reported through the returned Standardization.
    """
    x = d.x
    means = x.mean(axis=0)
    sds = x.std(axis=0)
    # a constant column can come out with sd ~ 1e-16 from rounding
    scale = np.maximum(np.abs(means), 1.0)
    degenerate = sds <= 1e-12 * scale
    sds = np.where(degenerate, 0.0, sds)
    if degenerate.all():
        raise DataError("no usable predictors: every column has zero variance")
    for j in np.flatnonzero(degenerate):
        logger.warning("dropping constant column %r (index %d)", d.column_names[j], j)
    y_mean = float(d.y.mean())
    st = Standardization(_frozen(means), _frozen(sds), y_mean, d.column_names)
    kept = st.kept
    xs = (x[:, kept] - means[kept]) / sds[kept]
    names = [d.column_names[j] for j in kept]
    return Dataset(xs, d.y - y_mean, names), st


def load_csv(path, target: str) -> Dataset:
    """Read a headered, comma-separated numeric file.

    The ``target`` column becomes ``y``; all other columns, in file order,
    become ``x``.
    """
    if not os.path.isfile(path):
        raise DataError(f"file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if target not in header:
            raise DataError(f"{path}: target column {target!r} not in header {header}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(f"{path}: row {lineno} has {len(row)} fields, expected {len(header)}")
            values = []
            for name, cell in zip(header, row):
                try:
                    values.append(float(cell))
                except ValueError:
                    raise DataError(
                        f"{path}: row {lineno}, column {name!r}: cannot parse {cell!r} as a number"
                    ) from None
            rows.append(values)
    if not rows:
        raise DataError(f"{path}: no data rows")
    arr = np.asarray(rows, dtype=np.float64)
    t = header.index(target)
    cols = [j for j in range(len(header)) if j != t]
    return Dataset(arr[:, cols], arr[:, t], [header[j] for j in cols])


def write_csv(d: Dataset, path, target: str = "y") -> None:
    """Write ``d`` with predictors first and the response last.

    Floats are written with ``repr`` so a reload is exact.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(d.column_names) + [target])
        for xi, yi in zip(d.x, d.y):
            w.writerow([repr(float(v)) for v in xi] + [repr(float(yi))])


@dataclass(frozen=True)
class SyntheticSpec:
    n: int = 100
    p: int = 50
    s0: int = 10
    snr: float = 2.0
    seed: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise ConfigError(f"n must be >= 2, got {self.n}")
        if self.p < 1:
            raise ConfigError(f"p must be >= 1, got {self.p}")
        if not 0 <= self.s0 <= self.p:
            raise ConfigError(f"s0 must lie in [0, p={self.p}], got {self.s0}")
        if not (self.snr > 0 and math.isfinite(self.snr)):
            raise ConfigError(f"snr must be a positive number, got {self.snr}")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")


@dataclass(frozen=True)
class SimulationTruth:
    seed: int
    support: Tuple[int, ...]
    beta: np.ndarray
    noise_sd: float

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "s0_indices": list(self.support),
            "true_beta": self.beta.tolist(),
            "noise_sd": self.noise_sd,
        }


def simulate_gaussian_linear(spec: SyntheticSpec) -> Tuple[Dataset, np.ndarray, np.ndarray]:
    """Draw ``y = X beta + eps`` with i.i.d. N(0, 1) regressors.

    The ``s0`` active coefficients sit on indices drawn without replacement
    and take values uniform on [-2, -0.5] U [0.5, 2]. The noise standard
    deviation is set from the population signal variance ``||beta||^2`` so
    that Var(X beta) / Var(eps) equals ``spec.snr``. With ``s0 == 0`` the
    noise has unit variance.

    Returns the dataset, the true coefficients and the sorted support.
    """
    rng = np.random.default_rng(spec.seed)
    x = rng.standard_normal((spec.n, spec.p))
    beta = np.zeros(spec.p)
    support = np.sort(rng.choice(spec.p, size=spec.s0, replace=False))
    if spec.s0:
        mags = rng.uniform(0.5, 2.0, size=spec.s0)
        signs = rng.choice([-1.0, 1.0], size=spec.s0)
        beta[support] = signs * mags
    noise_sd = noise_sd_for(beta, spec.snr)
    y = x @ beta + noise_sd * rng.standard_normal(spec.n)
    return Dataset(x, y), beta, support


def noise_sd_for(beta, snr: float) -> float:
    signal_var = float(np.dot(beta, beta))
    return math.sqrt(signal_var / snr) if signal_var > 0 else 1.0


def write_simulation(spec: SyntheticSpec, csv_path) -> Tuple[str, str]:
    """Simulate and write ``<stem>.csv`` plus the ``<stem>.truth.json`` sidecar."""
    d, beta, support = simulate_gaussian_linear(spec)
    write_csv(d, csv_path)
    stem, _ = os.path.splitext(str(csv_path))
    truth_path = stem + ".truth.json"
    truth = SimulationTruth(spec.seed, tuple(int(j) for j in support), beta, noise_sd_for(beta, spec.snr))
    with open(truth_path, "w", encoding="utf-8") as fh:
        json.dump(truth.to_dict(), fh, indent=2)
        fh.write("\n")
    return str(csv_path), truth_path
