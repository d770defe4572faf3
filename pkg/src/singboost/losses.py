"""Loss functions.

Pointwise losses (L2, L1, Huber, check) expose both an empirical risk and a
negative gradient. The hard ranking loss is the fraction of ordered pairs
whose response order and score order disagree; it has no gradient and is
evaluated by sorting plus merge-sort inversion counting.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numba
import numpy as np

from .errors import LossError

L2 = "l2"
L1 = "l1"
HUBER = "huber"
CHECK = "check"
HARDRANK = "hardrank"

KINDS = (L2, L1, HUBER, CHECK, HARDRANK)
DEFAULT_HUBER_DELTA = 1.345
DEFAULT_CHECK_TAU = 0.5


@dataclass(frozen=True)
class LossSpec:
    kind: str = L2
    param: Optional[float] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise LossError(f"unknown loss {self.kind!r}; expected one of {', '.join(KINDS)}")
        if self.kind == HUBER:
            delta = DEFAULT_HUBER_DELTA if self.param is None else float(self.param)
            if not delta > 0:
                raise LossError(f"huber delta must be > 0, got {delta}")
            object.__setattr__(self, "param", delta)
        elif self.kind == CHECK:
            tau = DEFAULT_CHECK_TAU if self.param is None else float(self.param)
            if not 0 < tau < 1:
                raise LossError(f"check tau must lie in (0, 1), got {tau}")
            object.__setattr__(self, "param", tau)
        elif self.param is not None:
            raise LossError(f"loss {self.kind!r} takes no parameter")

    @property
    def differentiable(self) -> bool:
        return self.kind != HARDRANK

    def __str__(self):
        return self.kind if self.param is None else f"{self.kind}:{self.param!r}"


def parse_loss(text: str) -> LossSpec:
    """Parse a CLI loss string such as ``"huber:1.345"`` or ``"hardrank"``."""
    kind, _, arg = text.strip().lower().partition(":")
    if arg:
        try:
            param = float(arg)
        except ValueError:
            raise LossError(f"bad loss parameter in {text!r}") from None
    else:
        param = None
    return LossSpec(kind, param)


def _check_lengths(y, yhat, minimum):
    y = np.asarray(y, dtype=np.float64)
    yhat = np.asarray(yhat, dtype=np.float64)
    if y.shape != yhat.shape or y.ndim != 1:
        raise LossError(f"length mismatch: y has shape {y.shape}, prediction has shape {yhat.shape}")
    if y.shape[0] < minimum:
        raise LossError(f"need at least {minimum} observations, got {y.shape[0]}")
    return y, yhat


def pointwise(loss: LossSpec, residual) -> np.ndarray:
    """Per-observation loss as a function of ``residual = y - f``."""
    r = np.asarray(residual, dtype=np.float64)
    if loss.kind == L2:
        return 0.5 * r * r
    if loss.kind == L1:
        return np.abs(r)
    if loss.kind == HUBER:
        d = loss.param
        a = np.abs(r)
        return np.where(a <= d, 0.5 * r * r, d * (a - 0.5 * d))
    if loss.kind == CHECK:
        return r * (loss.param - (r < 0))
    raise LossError(f"loss {loss.kind!r} is not pointwise")


def risk(loss: LossSpec, y, yhat) -> float:
    """Empirical risk of predictions ``yhat``.

    Pointwise losses average over observations; the hard ranking loss is
    ``#{ordered pairs i != j misranked} / (n (n - 1))``.
    """
    if loss.kind == HARDRANK:
        y, yhat = _check_lengths(y, yhat, 2)
        return hard_rank_loss_fast(y, yhat)
    y, yhat = _check_lengths(y, yhat, 1)
    return float(np.mean(pointwise(loss, y - yhat)))


def neg_gradient(loss: LossSpec, y, f) -> np.ndarray:
    """Negative derivative of the loss in its second argument, per observation.

    Kinks use the zero subgradient for L1 and check loss.
    """
    if not loss.differentiable:
        raise LossError(f"loss has no gradient: {loss.kind!r} is not differentiable; use SingBoost")
    y, f = _check_lengths(y, f, 1)
    r = y - f
    if loss.kind == L2:
        return r
    if loss.kind == L1:
        return np.sign(r)
    if loss.kind == HUBER:
        return np.clip(r, -loss.param, loss.param)
    # check loss
    tau = loss.param
    return np.where(r > 0, tau, np.where(r < 0, tau - 1.0, 0.0))


def offset(loss: LossSpec, y) -> float:
    """Constant minimizing the empirical risk of ``loss`` over ``y``."""
    y = np.asarray(y, dtype=np.float64)
    if loss.kind == L2:
        return float(np.mean(y))
    if loss.kind == L1:
        return float(np.median(y))
    if loss.kind == CHECK:
        return float(np.quantile(y, loss.param, method="inverted_cdf"))
    if loss.kind == HUBER:
        return _huber_location(y, loss.param)
    raise LossError(f"no offset rule for loss {loss.kind!r}")


def _huber_location(y, delta):
    from scipy.optimize import brentq

    lo, hi = float(y.min()), float(y.max())
    if lo == hi:
        return lo
    # mean psi(y - c) is continuous and non-increasing in c, positive at lo, negative at hi
    score = lambda c: float(np.mean(np.clip(y - c, -delta, delta)))
    if score(lo) <= 0:
        return lo
    if score(hi) >= 0:
        return hi
    return brentq(score, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps)


# --- hard ranking loss ---------------------------------------------------


def hard_rank_pairs_naive(y, yhat) -> int:
    """Unordered discordant pairs by direct comparison of all pairs.

    O(n^2) time and memory; this is the reference the fast path is checked
    against.
    """
    y, yhat = _check_lengths(y, yhat, 2)
    dy = np.sign(y[:, None] - y[None, :])
    ds = np.sign(yhat[:, None] - yhat[None, :])
    # each discordant unordered pair appears twice in the full matrix
    return int(np.count_nonzero(dy * ds < 0)) // 2


def hard_rank_loss_naive(y, yhat) -> float:
    n = len(y)
    return 2 * hard_rank_pairs_naive(y, yhat) / (n * (n - 1))


@numba.njit(cache=True)
def _count_inversions(a):
    """Strict inversions ``#{i < j : a[i] > a[j]}`` by bottom-up merge sort."""
    n = a.shape[0]
    src = a.copy()
    dst = np.empty_like(src)
    count = 0
    width = 1
    while width < n:
        for lo in range(0, n, 2 * width):
            mid = min(lo + width, n)
            hi = min(lo + 2 * width, n)
            i = lo
            j = mid
            k = lo
            while i < mid and j < hi:
                # equal keys go left first and are not inversions
                if src[i] <= src[j]:
                    dst[k] = src[i]
                    i += 1
                else:
                    dst[k] = src[j]
                    count += mid - i
                    j += 1
                k += 1
            while i < mid:
                dst[k] = src[i]
                i += 1
                k += 1
            while j < hi:
                dst[k] = src[j]
                j += 1
                k += 1
        src, dst = dst, src
        width *= 2
    return count


@numba.njit(cache=True)
def _discordant(y_rank, yhat):
    # order by (y, yhat) so y-ties are internally sorted and contribute nothing
    by_score = np.argsort(yhat, kind="mergesort")
    by_y = np.argsort(y_rank[by_score], kind="mergesort")
    order = by_score[by_y]
    return _count_inversions(yhat[order])


@numba.njit(cache=True)
def _discordant_candidates(y_rank, base, x, step):
    n, q = x.shape
    out = np.empty(q, dtype=np.int64)
    pred = np.empty(n)
    for j in range(q):
        for i in range(n):
            pred[i] = base[i] + step[j] * x[i, j]
        out[j] = _discordant(y_rank, pred)
    return out


def _dense_rank(y):
    return np.unique(y, return_inverse=True)[1].astype(np.int64)


def hard_rank_pairs(y, yhat) -> int:
    """Unordered discordant pairs in O(n log n)."""
    y, yhat = _check_lengths(y, yhat, 2)
    # lexicographic (y, yhat) order from two stable sorts
    order = np.argsort(yhat, kind="stable")
    order = order[np.argsort(y[order], kind="stable")]
    return int(_count_inversions(yhat[order]))


def hard_rank_loss_fast(y, yhat) -> float:
    n = len(y)
    return 2 * hard_rank_pairs(y, yhat) / (n * (n - 1))


def candidate_risks(loss: LossSpec, y, base, x, step) -> np.ndarray:
    """Risk of each prediction ``base + step[j] * x[:, j]``, for every column j."""
    y = np.asarray(y, dtype=np.float64)
    base = np.asarray(base, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    step = np.asarray(step, dtype=np.float64)
    n = y.shape[0]
    if loss.kind == HARDRANK:
        if n < 2:
            raise LossError("need at least 2 observations for the ranking loss")
        counts = _discordant_candidates(_dense_rank(y), base, np.ascontiguousarray(x), step)
        return 2.0 * counts / (n * (n - 1))
    pred = base[:, None] + x * step[None, :]
    return pointwise(loss, y[:, None] - pred).mean(axis=0)
