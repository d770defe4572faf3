"""Influence-curve based one-step estimators for the linear model.

The influence curve used throughout is the least squares one,

    eta_theta(x, y) = Sigma^{-1} x (y - x' theta),   Sigma = X'X / n,

so a one-step correction is a Newton step on the squared loss. Inputs are
expected on centered, standardized data, where the second-moment matrix is
the covariance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .data import Dataset
from .errors import DataError, DesignError
from .measures import ColumnMeasure


@dataclass(frozen=True)
class InfluenceEvaluation:
    eta: np.ndarray  # (n, p), row i = eta_theta(x_i, y_i)
    sigma_hat: np.ndarray  # (p, p)
    theta_ref: np.ndarray

    def mean(self) -> np.ndarray:
        return self.eta.mean(axis=0)


def _theta(d: Dataset, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=np.float64).ravel()
    if theta.shape[0] != d.p:
        raise DataError(f"theta has length {theta.shape[0]}, design has {d.p} columns")
    return theta


def second_moment(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return x.T @ x / x.shape[0]


def influence_eval(d: Dataset, theta) -> InfluenceEvaluation:
    theta = _theta(d, theta)
    sigma = second_moment(d.x)
    if np.linalg.matrix_rank(sigma) < d.p:
        raise DesignError("design not full rank: X'X/n is singular")
    resid = d.y - d.x @ theta
    eta = np.linalg.solve(sigma, (d.x * resid[:, None]).T).T
    return InfluenceEvaluation(eta, sigma, theta)


def one_step(d: Dataset, theta_start) -> np.ndarray:
    """``theta_start`` plus the average influence curve evaluated at it."""
    ev = influence_eval(d, theta_start)
    return ev.theta_ref + ev.mean()


def k_step(d: Dataset, theta_start, k: int) -> np.ndarray:
    if k < 0:
        raise ValueError(f"k must be non-negative, got {k}")
    theta = _theta(d, theta_start)
    for _ in range(k):
        theta = one_step(d, theta)
    return theta


@dataclass(frozen=True)
class SupportSet:
    indices: tuple

    def __post_init__(self):
        idx = tuple(sorted(int(j) for j in self.indices))
        if not idx:
            raise DataError("support set must be non-empty")
        if len(set(idx)) != len(idx) or idx[0] < 0:
            raise DataError(f"invalid support indices {idx}")
        object.__setattr__(self, "indices", idx)


def reduced_one_step(d: Dataset, support: Union[SupportSet, Sequence[int]], theta_start) -> np.ndarray:
    """One-step estimate of the coefficients on ``support``, zero elsewhere.

    ``theta_start`` is given in full length p and must vanish off the support.
    """
    if not isinstance(support, SupportSet):
        support = SupportSet(tuple(support))
    theta = _theta(d, theta_start)
    idx = list(support.indices)
    if idx[-1] >= d.p:
        raise DataError(f"support index {idx[-1]} out of range for p={d.p}")
    off = np.ones(d.p, dtype=bool)
    off[idx] = False
    if np.any(theta[off] != 0):
        raise DataError("theta_start must be zero outside the support")
    if len(idx) == d.p:
        return one_step(d, theta)
    try:
        sub = one_step(d.subset_columns(idx), theta[idx])
    except DesignError:
        raise DesignError("reduced design not full rank") from None
    out = np.zeros(d.p)
    out[idx] = sub
    return out


def expected_one_step(s1, nu: Union[ColumnMeasure, Sequence[float]]) -> np.ndarray:
    """Componentwise product of a one-step estimate with a column measure.

    Each coefficient is shrunk by its selection mass; an indicator measure
    simply masks the unselected coordinates.
    """
    s1 = np.asarray(s1, dtype=np.float64)
    mass = nu.mass if isinstance(nu, ColumnMeasure) else np.asarray(nu, dtype=np.float64)
    if s1.shape != mass.shape:
        raise DataError(f"length mismatch: estimate has {s1.shape[0]} entries, measure has {mass.shape[0]}")
    return mass * s1


def ols(d: Dataset) -> np.ndarray:
    """Least squares coefficients via the normal equations."""
    return np.linalg.solve(d.x.T @ d.x, d.x.T @ d.y)
