"""Column and row measures over predictor/observation indices.

A column measure assigns each predictor a selection mass in [0, 1]. It can
be read off a single boosting trace, averaged over row subsamples (an
induced measure), compared with another measure through its singular part,
and used to drive a rejection sampler that moves from one loss's selection
behaviour to another's.
"""

from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from .data import Dataset
from .errors import MeasureError

logger = logging.getLogger(__name__)

FREQUENCY = "frequency"
INDICATOR = "indicator"


@dataclass(frozen=True, eq=False)
class ColumnMeasure:
    mass: np.ndarray
    origin_loss: str = ""
    mode: str = FREQUENCY

    def __post_init__(self):
        m = np.array(self.mass, dtype=np.float64, copy=True)
        if m.ndim != 1 or m.size == 0:
            raise MeasureError("column measure needs a non-empty 1-d mass vector")
        if np.any(~np.isfinite(m)) or np.any(m < 0) or np.any(m > 1):
            raise MeasureError("column masses must lie in [0, 1]")
        if self.mode not in (FREQUENCY, INDICATOR):
            raise MeasureError(f"unknown measure mode {self.mode!r}")
        m.setflags(write=False)
        object.__setattr__(self, "mass", m)

    def __eq__(self, other):
        if not isinstance(other, ColumnMeasure):
            return NotImplemented
        return (self.origin_loss, self.mode) == (other.origin_loss, other.mode) and np.array_equal(self.mass, other.mass)

    __hash__ = None

    @property
    def p(self) -> int:
        return self.mass.size

    @property
    def support(self) -> List[int]:
        return np.flatnonzero(self.mass > 0).tolist()

    def restrict(self, indices) -> "ColumnMeasure":
        out = np.zeros_like(self.mass)
        idx = list(indices)
        out[idx] = self.mass[idx]
        return ColumnMeasure(out, self.origin_loss, self.mode)

    def to_dict(self) -> dict:
        return {"origin_loss": self.origin_loss, "mode": self.mode, "mass": self.mass.tolist()}

    @classmethod
    def from_dict(cls, obj: dict) -> "ColumnMeasure":
        return cls(np.asarray(obj["mass"], dtype=np.float64), obj.get("origin_loss", ""), obj.get("mode", FREQUENCY))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "ColumnMeasure":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class RowMeasure:
    weight: np.ndarray

    def __post_init__(self):
        w = np.array(self.weight, dtype=np.float64, copy=True)
        if w.ndim != 1 or np.any(~np.isfinite(w)) or np.any(w < 0) or np.any(w > 1):
            raise MeasureError("row weights must be a 1-d vector with entries in [0, 1]")
        if not np.any(w > 0):
            raise MeasureError("row measure is identically zero")
        w.setflags(write=False)
        object.__setattr__(self, "weight", w)

    @classmethod
    def uniform(cls, n: int) -> "RowMeasure":
        return cls(np.ones(n))


def column_measure_from_trace(trace, mode: str = FREQUENCY, origin_loss: str = "") -> ColumnMeasure:
    """Selection frequencies (or selected/not indicators) of a boosting trace.

    Frequencies divide by the scheduled number of iterations, so
    intercept-only or skipped iterations leave mass unassigned.
    """
    counts = np.zeros(trace.p)
    for rec in trace.iterations:
        if rec.selected_column is not None:
            counts[rec.selected_column] += 1
    if mode == FREQUENCY:
        mass = counts / trace.m_iter
    elif mode == INDICATOR:
        mass = (counts > 0).astype(np.float64)
    else:
        raise MeasureError(f"unknown measure mode {mode!r}")
    return ColumnMeasure(mass, origin_loss, mode)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("SINGBOOST_THREADS", "1")))
    except ValueError:
        return 1


def induced_column_measure(
    d: Dataset,
    zeta: RowMeasure,
    b: int,
    fitter: Callable,
    cfg,
    seed: int = 0,
    *,
    mode: str = FREQUENCY,
    subsample_size: Optional[int] = None,
    replace: bool = False,
    seeds: Optional[Sequence[int]] = None,
) -> ColumnMeasure:
    """Average column measure over ``b`` fits on row subsamples.

    Rows are drawn with probabilities proportional to ``zeta``: without
    replacement and of size floor(n/2) by default, or as a bootstrap of size
    n with ``replace=True``. Each subsample ``i`` uses its own generator
    seeded by ``seeds[i]``; when ``seeds`` is omitted they are spawned from
    ``seed``. ``fitter(dataset, cfg)`` must return a model with a ``trace``.
    Fits run on up to ``SINGBOOST_THREADS`` threads.
    """
    if b < 1:
        raise MeasureError(f"number of subsamples must be >= 1, got {b}")
    if zeta.weight.size != d.n:
        raise MeasureError(f"row measure has {zeta.weight.size} weights for {d.n} rows")
    if subsample_size is None:
        subsample_size = d.n if replace else d.n // 2
    if subsample_size < 2:
        raise MeasureError(f"subsample size {subsample_size} is too small to fit (need >= 2)")
    if subsample_size > d.n and not replace:
        raise MeasureError(f"subsample size {subsample_size} exceeds n={d.n}")
    probs = zeta.weight / zeta.weight.sum()
    if not replace and np.count_nonzero(probs) < subsample_size:
        raise MeasureError("row measure has fewer positive weights than the subsample size")
    if seeds is None:
        seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(b)]
    elif len(seeds) != b:
        raise MeasureError(f"got {len(seeds)} seeds for b={b} subsamples")

    def one(s):
        rng = np.random.default_rng(s)
        if not replace and subsample_size == d.n:
            rows = np.arange(d.n)
        else:
            rows = np.sort(rng.choice(d.n, size=subsample_size, replace=replace, p=probs))
        model = fitter(d.subset_rows(rows), cfg)
        return column_measure_from_trace(model.trace, mode).mass

    workers = min(_threads(), b)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            masses = list(pool.map(one, seeds))
    else:
        masses = [one(s) for s in seeds]
    origin = str(getattr(getattr(cfg, "target_loss", ""), "kind", ""))
    # sorting each column first makes the mean bit-identical under any reordering of the subsamples
    mass = np.sort(np.stack(masses), axis=0).mean(axis=0)
    return ColumnMeasure(np.clip(mass, 0.0, 1.0), origin, mode)


# --- domination and singular parts ---------------------------------------


def _pair(a: ColumnMeasure, b: ColumnMeasure):
    if a.p != b.p:
        raise MeasureError(f"measures have different lengths {a.p} and {b.p}")
    return a.mass, b.mass


def dominates(nu: ColumnMeasure, nu_tilde: ColumnMeasure) -> bool:
    """True if ``nu_tilde`` is absolutely continuous w.r.t. ``nu`` (``nu >> nu_tilde``)."""
    a, t = _pair(nu, nu_tilde)
    return not np.any((a == 0) & (t > 0))


def equivalent(a: ColumnMeasure, b: ColumnMeasure) -> bool:
    return dominates(a, b) and dominates(b, a)


def total_variation(a, b) -> Optional[float]:
    """TV distance between the normalized versions of two mass vectors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.sum() <= 0 or b.sum() <= 0:
        return None
    return float(0.5 * np.abs(a / a.sum() - b / b.sum()).sum())


@dataclass(frozen=True)
class SingularPartReport:
    j_sing: Tuple[int, ...]
    j_common: Tuple[int, ...]
    dominated: bool
    lebesgue_parts: Tuple[ColumnMeasure, ColumnMeasure]
    tv_distance: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "j_sing": list(self.j_sing),
            "j_common": list(self.j_common),
            "dominated": self.dominated,
            "tv_distance": self.tv_distance,
            "absolutely_continuous_part": self.lebesgue_parts[0].mass.tolist(),
            "singular_part": self.lebesgue_parts[1].mass.tolist(),
        }


def singular_part(nu_tilde: ColumnMeasure, nu: ColumnMeasure) -> SingularPartReport:
    """Singular part of ``nu_tilde`` with respect to ``nu``.

    ``j_sing`` holds the columns ``nu`` never selects but ``nu_tilde`` does.
    ``lebesgue_parts`` splits ``nu_tilde`` into the part living where ``nu``
    is positive and the part on ``j_sing``; the two sum back to ``nu_tilde``.
    """
    a, t = _pair(nu, nu_tilde)
    sing = (a == 0) & (t > 0)
    common = (a > 0) & (t > 0)
    ac = np.where(a > 0, t, 0.0)
    sp = np.where(a > 0, 0.0, t)
    return SingularPartReport(
        j_sing=tuple(np.flatnonzero(sing).tolist()),
        j_common=tuple(np.flatnonzero(common).tolist()),
        dominated=not sing.any(),
        lebesgue_parts=(
            ColumnMeasure(ac, nu_tilde.origin_loss, nu_tilde.mode),
            ColumnMeasure(sp, nu_tilde.origin_loss, nu_tilde.mode),
        ),
        tv_distance=total_variation(t, a),
    )


# --- rejection sampling from column measures -----------------------------


@dataclass
class RejectState:
    """State of the singular-part-adjusted rejection sampler.

    ``nu_l`` drives the proposals on ``j_c``; ``nu_tilde`` is the target,
    with its ``j_s`` entries floored at ``epsilon_floor``.
    """

    nu_l: ColumnMeasure
    nu_tilde: ColumnMeasure
    j_c: Tuple[int, ...]
    j_s: Tuple[int, ...]
    w_c: float
    w_s: float
    big_w_s: float
    h_bound: float
    active_set: set
    rng_seed: int
    shrink_active: bool = True
    rng: Optional[np.random.Generator] = None
    proposals: int = 0
    rejections: int = 0
    resets: int = 0
    last_branch: str = ""

    def acceptance(self, j: int) -> float:
        """Acceptance probability of a branch-(b) proposal ``j``."""
        if self.h_bound == 0:
            return 0.0
        return float(self._ratio[j] / self.h_bound)

    @property
    def _ratio(self) -> np.ndarray:
        ratio = np.zeros(self.nu_l.p)
        jc = list(self.j_c)
        ratio[jc] = _normalized(self.nu_tilde.mass, jc)[jc] / _normalized(self.nu_l.mass, jc)[jc]
        return ratio


def _normalized(mass, idx):
    out = np.zeros_like(mass)
    total = mass[idx].sum()
    if total > 0:
        out[idx] = mass[idx] / total
    return out


def reject_init(
    nu_l: ColumnMeasure,
    nu_tilde: ColumnMeasure,
    epsilon_floor: float = 1e-3,
    seed: int = 0,
    shrink_active: bool = True,
) -> RejectState:
    """Set up the sampler.

    ``j_c`` is where ``nu_l`` is positive, ``j_s`` its complement, ``w_c =
    |j_c| / p`` the probability of the proposal branch. The bound ``h_bound``
    is the largest ratio ``nu_tilde / nu_l`` over ``j_c`` after both are
    normalized on ``j_c``, hence >= 1 whenever ``nu_tilde`` has mass there.
    """
    if nu_l.p != nu_tilde.p:
        raise MeasureError(f"measures have different lengths {nu_l.p} and {nu_tilde.p}")
    if not np.any(nu_tilde.mass > 0):
        raise MeasureError("target measure nu_tilde is identically zero")
    if not epsilon_floor > 0:
        raise MeasureError("epsilon_floor must be positive")
    p = nu_l.p
    j_c = tuple(np.flatnonzero(nu_l.mass > 0).tolist())
    j_s = tuple(j for j in range(p) if j not in set(j_c))
    tilde = nu_tilde.mass.copy()
    if j_s:
        tilde[list(j_s)] = np.maximum(tilde[list(j_s)], epsilon_floor)
    tilde = np.minimum(tilde, 1.0)
    nu_t = ColumnMeasure(tilde, nu_tilde.origin_loss, nu_tilde.mode)
    w_c = len(j_c) / p
    big_w_s = float(tilde[list(j_s)].sum()) if j_s else 0.0
    jc = list(j_c)
    if jc and tilde[jc].sum() > 0:
        h = float(np.max(_normalized(tilde, jc)[jc] / _normalized(nu_l.mass, jc)[jc]))
    else:
        h = 0.0
    return RejectState(
        nu_l=nu_l,
        nu_tilde=nu_t,
        j_c=j_c,
        j_s=j_s,
        w_c=w_c,
        w_s=1.0 - w_c,
        big_w_s=big_w_s,
        h_bound=h,
        active_set=set(range(p)),
        rng_seed=seed,
        shrink_active=shrink_active,
        rng=np.random.default_rng(seed),
    )


def reject_next(state: RejectState) -> int:
    """Draw the next accepted column.

    Each round first picks the singular branch with probability ``w_s``
    (sampling ``j_s`` by ``nu_tilde``) or the proposal branch (sampling the
    active part of ``j_c`` by ``nu_l`` and accepting with probability
    ``nu_tilde(j) / (H nu_l(j))``). A rejected proposal is removed from the
    active set and the round restarts; any returned column resets the
    active set.
    """
    rng = state.rng
    p = state.nu_l.p
    jc_arr = np.asarray(state.j_c, dtype=np.int64)
    while True:
        if state.j_s and (not state.j_c or rng.random() >= state.w_c):
            js = np.asarray(state.j_s)
            weights = state.nu_tilde.mass[js] / state.big_w_s
            j = int(rng.choice(js, p=weights / weights.sum()))
            state.active_set = set(range(p))
            state.last_branch = "a"
            return j
        active = [j for j in jc_arr.tolist() if j in state.active_set]
        if not active:
            logger.info("active set exhausted without acceptance; resetting")
            state.resets += 1
            state.active_set = set(range(p))
            if state.h_bound == 0 and not state.j_s:
                raise MeasureError("no column can ever be accepted")
            continue
        w = state.nu_l.mass[active]
        j0 = int(rng.choice(active, p=w / w.sum()))
        state.proposals += 1
        if rng.random() <= state.acceptance(j0):
            state.active_set = set(range(p))
            state.last_branch = "b"
            return j0
        state.rejections += 1
        if state.shrink_active:
            state.active_set.discard(j0)


def reject_sample(state: RejectState, draws: int) -> Tuple[np.ndarray, np.ndarray]:
    """``draws`` accepted columns and, per draw, whether it came from the proposal branch."""
    out = np.empty(draws, dtype=np.int64)
    from_b = np.empty(draws, dtype=bool)
    for i in range(draws):
        out[i] = reject_next(state)
        from_b[i] = state.last_branch == "b"
    return out, from_b


def implied_law(state: RejectState, max_jc: int = 16) -> Optional[np.ndarray]:
    """Exact output distribution of :func:`reject_next` from a full active set.

    The sampler is a Markov chain on active sets; every returned column
    resets the chain, so the law follows from first-step analysis. With an
    exhausted active set the chain also returns to the full set, making each
    state's law affine in the full-set law; that fixed point is solved
    directly. Returns None when ``j_c`` is too large to enumerate.
    """
    p = state.nu_l.p
    j_c = state.j_c
    if len(j_c) > max_jc:
        return None
    w_c = state.w_c if state.j_s else 1.0
    w_s = 1.0 - w_c
    sing = np.zeros(p)
    if state.j_s:
        js = list(state.j_s)
        sing[js] = state.nu_tilde.mass[js] / state.nu_tilde.mass[js].sum()
    acc = np.array([state.acceptance(j) if j in j_c else 0.0 for j in range(p)])
    memo: Dict[FrozenSet[int], Tuple[np.ndarray, float]] = {}

    # law(A) = const(A) + coef(A) * law(full set)
    def solve(active: FrozenSet[int]):
        if active in memo:
            return memo[active]
        const = w_s * sing
        if not active:
            # an empty proposal branch resets to the full set
            memo[active] = (const, w_c)
            return memo[active]
        idx = sorted(active)
        q = state.nu_l.mass[idx] / state.nu_l.mass[idx].sum()
        coef = 0.0
        stay = 0.0
        for j, qj in zip(idx, q):
            a = acc[j]
            const[j] += w_c * qj * a
            if a >= 1:
                continue
            if state.shrink_active:
                c2, k2 = solve(active - {j})
                const = const + w_c * qj * (1 - a) * c2
                coef += w_c * qj * (1 - a) * k2
            else:
                stay += w_c * qj * (1 - a)
        if stay >= 1:
            raise MeasureError("no column can ever be accepted")
        memo[active] = (const / (1 - stay), coef / (1 - stay))
        return memo[active]

    try:
        const, coef = solve(frozenset(j_c))
    except MeasureError:
        return None
    if coef >= 1:
        return None
    return const / (1 - coef)
