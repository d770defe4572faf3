"""Componentwise boosting fitters for linear models.

Three fitters share one state machine over standardized data:

* :func:`fit_l2boost` -- componentwise least squares boosting, selecting the
  column most correlated with the current residual.
* :func:`fit_generic` -- functional gradient boosting for a differentiable
  loss, fitting the componentwise least squares learner to the negative
  gradient.
* :func:`fit_singboost` -- L2-Boosting in which every M-th iteration is a
  *singular* iteration: all simple least squares updates are evaluated on
  the target loss directly and the best one is taken. The target loss needs
  no gradient.

Every iteration changes one predictor coefficient (plus possibly the
intercept). Column indices in traces and models are 0-based positions in the
original, unstandardized design.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, asdict
from typing import List, Optional

import numpy as np

from . import losses
from .data import Dataset, Standardization, standardize
from .errors import ConfigError, LossError
from .losses import LossSpec

logger = logging.getLogger(__name__)

# early stop once every |<r, g_j>_n| falls below this, relative to the response scale
CORR_TOL = 1e-12


@dataclass(frozen=True)
class BoostConfig:
    kappa: float = 0.1
    m_iter: int = 100
    M: int = 5
    target_loss: LossSpec = field(default_factory=LossSpec)
    ls_mode: bool = True
    seed: int = 0

    def __post_init__(self):
        if not (0 < self.kappa <= 1):
            raise ConfigError(f"kappa must lie in (0, 1], got {self.kappa}")
        if int(self.m_iter) != self.m_iter or self.m_iter < 1:
            raise ConfigError(f"m_iter must be a positive integer, got {self.m_iter}")
        if int(self.M) != self.M or self.M < 1:
            raise ConfigError(f"M must be a positive integer, got {self.M}")
        if self.M > self.m_iter:
            raise ConfigError(f"M={self.M} exceeds m_iter={self.m_iter}")
        if isinstance(self.target_loss, str):
            object.__setattr__(self, "target_loss", losses.parse_loss(self.target_loss))

    def to_dict(self) -> dict:
        return {
            "kappa": self.kappa,
            "m_iter": self.m_iter,
            "M": self.M,
            "target_loss": str(self.target_loss),
            "ls_mode": self.ls_mode,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "BoostConfig":
        return cls(
            kappa=float(obj["kappa"]),
            m_iter=int(obj["m_iter"]),
            M=int(obj["M"]),
            target_loss=losses.parse_loss(obj["target_loss"]),
            ls_mode=bool(obj["ls_mode"]),
            seed=int(obj.get("seed", 0)),
        )


@dataclass
class IterationRecord:
    index: int
    selected_column: Optional[int]  # None: intercept-only update
    coefficient_increment: float
    intercept_increment: float
    training_risk_l2: float
    training_risk_target: float
    is_singular: bool = False
    corr_ratio: Optional[float] = None
    # |<r, g_j>_n| for all p columns before a singular update; None otherwise
    inner_products: Optional[List[float]] = None


@dataclass
class FitTrace:
    """Per-iteration history of one boosting run.

    ``m_iter`` is the number of scheduled iterations. A run that stops early
    records fewer entries; coefficients stay constant afterwards.
    """

    iterations: List[IterationRecord]
    m_iter: int
    p: int
    offset: float
    residuals: np.ndarray
    stopped_at: Optional[int] = None

    @property
    def selected_sequence(self) -> List[Optional[int]]:
        return [rec.selected_column for rec in self.iterations]

    def to_dict(self) -> dict:
        return {
            "m_iter": self.m_iter,
            "p": self.p,
            "offset": self.offset,
            "stopped_at": self.stopped_at,
            "residuals": self.residuals.tolist(),
            "iterations": [asdict(rec) for rec in self.iterations],
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "FitTrace":
        return cls(
            iterations=[IterationRecord(**rec) for rec in obj["iterations"]],
            m_iter=int(obj["m_iter"]),
            p=int(obj["p"]),
            offset=float(obj["offset"]),
            residuals=np.asarray(obj["residuals"], dtype=np.float64),
            stopped_at=obj.get("stopped_at"),
        )


@dataclass
class LinearModel:
    """Fitted linear model.

    ``intercept``/``beta`` are in original coordinates; ``intercept_std``/
    ``beta_std`` are the same model on the standardized scale the fitter
    worked in (response centered, predictors scaled to unit variance).
    """

    intercept: float
    beta: np.ndarray
    intercept_std: float
    beta_std: np.ndarray
    trace: FitTrace
    standardization: Standardization
    config: BoostConfig
    method: str = "l2boost"

    def predict(self, x) -> np.ndarray:
        return self.intercept + np.asarray(x, dtype=np.float64) @ self.beta

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "intercept": self.intercept,
            "beta": self.beta.tolist(),
            "intercept_std": self.intercept_std,
            "beta_std": self.beta_std.tolist(),
            "selected_sequence": self.trace.selected_sequence,
            "config": self.config.to_dict(),
            "standardization": self.standardization.to_dict(),
            "trace": self.trace.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, obj: dict) -> "LinearModel":
        return cls(
            intercept=float(obj["intercept"]),
            beta=np.asarray(obj["beta"], dtype=np.float64),
            intercept_std=float(obj["intercept_std"]),
            beta_std=np.asarray(obj["beta_std"], dtype=np.float64),
            trace=FitTrace.from_dict(obj["trace"]),
            standardization=Standardization.from_dict(obj["standardization"]),
            config=BoostConfig.from_dict(obj["config"]),
            method=obj.get("method", "l2boost"),
        )


class _Booster:
    """Mutable fitting state on standardized data."""

    def __init__(self, d: Dataset, cfg: BoostConfig, offset_loss: LossSpec, m_iter: int):
        self.cfg = cfg
        self.ds, self.st = standardize(d)
        self.x = np.ascontiguousarray(self.ds.x)
        self.y = self.ds.y
        self.n, self.q = self.x.shape
        self.kept = self.st.kept
        self.p = self.st.p
        self.norms = np.einsum("ij,ij->j", self.x, self.x)
        self.scale = math.sqrt(float(np.mean(self.y**2)))
        if self.scale <= 1e-13 * max(1.0, abs(self.st.y_mean)):
            self.scale = 0.0  # constant response up to rounding
        self.offset = losses.offset(offset_loss, self.y)
        self.intercept = self.offset
        self.beta = np.zeros(self.q)
        self.f = np.full(self.n, self.offset)
        self.records: List[IterationRecord] = []
        self.m_iter = m_iter
        self.stopped_at: Optional[int] = None

    def inner_products(self, u):
        """Empirical inner products <u, g_j>_n with unit-norm learners g_j."""
        return (self.x.T @ u) / np.sqrt(self.n * self.norms)

    def _negligible(self, ip):
        return self.scale == 0.0 or float(np.max(np.abs(ip))) < CORR_TOL * self.scale

    def _apply(self, j, b0, bj, singular, corr_ratio=None, ips=None):
        k = self.cfg.kappa
        if j is None:
            self.f = self.f + k * b0
        else:
            self.f = self.f + k * (b0 + bj * self.x[:, j])
            self.beta[j] += k * bj
        self.intercept += k * b0
        r = self.y - self.f
        rec = IterationRecord(
            index=len(self.records) + 1,
            selected_column=None if j is None else int(self.kept[j]),
            coefficient_increment=0.0 if j is None else float(k * bj),
            intercept_increment=float(k * b0),
            training_risk_l2=float(np.mean(0.5 * r * r)),
            training_risk_target=losses.risk(self.cfg.target_loss, self.y, self.f),
            is_singular=singular,
            corr_ratio=corr_ratio,
            inner_products=ips,
        )
        self.records.append(rec)
        return rec

    def _stop(self):
        self.stopped_at = len(self.records)
        logger.info("all correlations vanished; stopping after %d iterations", self.stopped_at)
        return None

    def ls_step(self, u, singular=False):
        """Componentwise least squares fit to pseudo-response ``u``; ties -> lowest index."""
        ip = self.inner_products(u)
        b0 = float(np.mean(u))
        if self._negligible(ip):
            if abs(b0) > CORR_TOL * max(self.scale, 1.0):
                return self._apply(None, b0, 0.0, singular)
            return self._stop()
        j = int(np.argmax(np.abs(ip)))
        bj = float(self.x[:, j] @ u) / self.norms[j]
        return self._apply(j, b0, bj, singular)

    def l2_step(self):
        return self.ls_step(self.y - self.f)

    def singular_step(self, target: LossSpec, ls_mode: bool):
        r = self.y - self.f
        ip = self.inner_products(r)
        if self._negligible(ip):
            return self._stop()
        abs_ip = np.abs(ip)
        full = np.zeros(self.p)
        full[self.kept] = abs_ip
        if ls_mode:
            k = self.cfg.kappa
            b0 = float(np.mean(r))
            b = (self.x.T @ r) / self.norms
            scores = losses.candidate_risks(target, self.y, self.f + k * b0, self.x, k * b)
            j = int(np.argmin(scores))
            bj = float(self.x[:, j] @ r) / self.norms[j]
        else:
            u = losses.neg_gradient(target, self.y, self.f)
            ipu = self.inner_products(u)
            b0 = float(np.mean(u))
            j = int(np.argmax(np.abs(ipu)))
            bj = float(self.x[:, j] @ u) / self.norms[j]
        ratio = float(abs_ip[j] / abs_ip.max())
        return self._apply(j, b0, bj, True, corr_ratio=ratio, ips=full.tolist())

    def finish(self, method: str) -> LinearModel:
        beta_std = np.zeros(self.p)
        beta_std[self.kept] = self.beta
        sds = self.st.sds
        beta = np.zeros(self.p)
        beta[self.kept] = self.beta / sds[self.kept]
        intercept = self.st.y_mean + self.intercept - float(beta[self.kept] @ self.st.means[self.kept])
        trace = FitTrace(
            iterations=self.records,
            m_iter=self.m_iter,
            p=self.p,
            offset=self.offset,
            residuals=self.y - self.f,
            stopped_at=self.stopped_at,
        )
        return LinearModel(intercept, beta, self.intercept, beta_std, trace, self.st, self.cfg, method)


def fit_l2boost(d: Dataset, cfg: Optional[BoostConfig] = None) -> LinearModel:
    """Componentwise L2-Boosting with offset mean(y)."""
    cfg = cfg or BoostConfig()
    b = _Booster(d, cfg, LossSpec(losses.L2), cfg.m_iter)
    for _ in range(cfg.m_iter):
        if b.l2_step() is None:
            break
    return b.finish("l2boost")


def fit_generic(d: Dataset, cfg: BoostConfig) -> LinearModel:
    """Functional gradient boosting for a differentiable ``cfg.target_loss``.

    The offset minimizes the empirical risk over constants; each iteration
    fits the componentwise least squares learner to the negative gradient.
    """
    loss = cfg.target_loss
    if not loss.differentiable:
        raise LossError(
            f"loss {loss.kind!r} has no gradient; gradient-free fitting requires fit_singboost"
        )
    b = _Booster(d, cfg, loss, cfg.m_iter)
    for _ in range(cfg.m_iter):
        if b.ls_step(losses.neg_gradient(loss, b.y, b.f)) is None:
            break
    return b.finish("generic")


def fit_singboost(d: Dataset, cfg: BoostConfig) -> LinearModel:
    """SingBoost: one singular iteration followed by M-1 L2 iterations, repeated.

    ``floor(m_iter / M)`` rounds are run. With ``ls_mode`` the singular
    iteration scores every simple least squares update on the residual by
    the target risk of the updated model and keeps the minimizer; otherwise
    it is one gradient step on the (differentiable) target loss. The offset
    is mean(y).
    """
    target = cfg.target_loss
    if not cfg.ls_mode and not target.differentiable:
        raise LossError(f"ls_mode=False needs a differentiable target loss, got {target.kind!r}")
    runs = cfg.m_iter // cfg.M
    b = _Booster(d, cfg, LossSpec(losses.L2), runs * cfg.M)
    for _ in range(runs):
        if b.singular_step(target, cfg.ls_mode) is None:
            break
        if any(b.l2_step() is None for _ in range(cfg.M - 1)):
            break
    return b.finish("singboost")


@dataclass
class CorrMinReport:
    ratios: List[float]
    iterations: List[int]
    min_ratio: Optional[float]

    def to_dict(self) -> dict:
        return {"iterations": self.iterations, "ratios": self.ratios, "min_ratio": self.min_ratio}


def corr_min_report(trace: FitTrace) -> CorrMinReport:
    """Ratio of the chosen column's |<r, g_j>_n| to the best one, per singular iteration.

    Recomputed from the inner products stored in the trace. The minimum over
    the run is an empirical witness for the constant in the Corr-min
    condition.
    """
    ratios, idx = [], []
    for rec in trace.iterations:
        if not rec.is_singular or rec.inner_products is None:
            continue
        ips = np.asarray(rec.inner_products)
        ratios.append(float(ips[rec.selected_column] / ips.max()))
        idx.append(rec.index)
    return CorrMinReport(ratios, idx, min(ratios) if ratios else None)


def coefficient_paths(model: LinearModel) -> np.ndarray:
    """Coefficients after each iteration, shape (m_iter + 1, p + 1).

    Column 0 is the intercept; row 0 holds the offset only. Values are on
    the standardized scale. Rows past an early stop repeat the final state.
    """
    trace = model.trace
    path = np.zeros((trace.m_iter + 1, trace.p + 1))
    path[0, 0] = trace.offset
    intercept = trace.offset
    beta = np.zeros(trace.p)
    for k, rec in enumerate(trace.iterations, start=1):
        if rec.selected_column is not None:
            beta[rec.selected_column] += rec.coefficient_increment
        intercept += rec.intercept_increment
        path[k, 0] = intercept
        path[k, 1:] = beta
    last = len(trace.iterations)
    path[last + 1 :] = path[last]
    return path


def write_paths_csv(path: np.ndarray, fname) -> None:
    p = path.shape[1] - 1
    header = ["iter", "intercept"] + [f"beta_{j + 1}" for j in range(p)]
    with open(fname, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for k, row in enumerate(path):
            fh.write(",".join([str(k)] + [repr(float(v)) for v in row]) + "\n")


def write_trace_csv(trace: FitTrace, fname) -> None:
    cols = ["index", "selected_column", "coefficient_increment", "intercept_increment",
            "training_risk_l2", "training_risk_target", "is_singular", "corr_ratio"]
    with open(fname, "w", encoding="utf-8") as fh:
        fh.write(",".join(cols) + "\n")
        for rec in trace.iterations:
            row = [getattr(rec, c) for c in cols]
            fh.write(",".join("" if v is None else (repr(v) if isinstance(v, float) else str(v)) for v in row) + "\n")
