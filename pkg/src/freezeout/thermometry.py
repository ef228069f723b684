"""Effective-temperature fits, freeze-out inversion and cross-machine statistics.

Inverse temperatures are dimensionless: they multiply energies in encoded
units (integer energy times ``dos.scale``), the same units in which
``B(s) / kT`` is measured.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .degeneracy import DensityOfStates
from .schedule import OutOfRange, Schedule, beta_ideal, invert_b, q_of_s

BETA_MAX = 1e3
FIT_TOL = 1e-12
Q_SMALL = 0.1
N_BOOT = 10_000

# Reference values reported for the two physical machines; used as report constants only.
R_BETA_REF = (1.11, 0.05)
R_BETA_IDEAL_REF = (1.21, 0.02)
PEARSON_BETA_REF = 0.94
R_Q_SMALL_REF = (1.01, 0.06)

OK, LOW, HIGH = "ok", "low", "high"


def _rel_terms(dos: DensityOfStates, beta: float) -> np.ndarray:
    if len(dos.energies) == 0:
        raise ValueError("density of states has no levels")
    dE = (dos.energies - dos.energies[0]).astype(float) * dos.scale
    return dos.log_g - dos.log_g[0] - beta * dE


def predicted_p0(dos: DensityOfStates, beta: float) -> float:
    """Boltzmann ground-level probability ``1 / sum_k (g_k/g_0) exp(-beta (E_k - E_0))``."""
    if beta < 0:
        raise ValueError("beta must be non-negative")
    return float(math.exp(-logsumexp(_rel_terms(dos, beta))))


def predicted_logit(dos: DensityOfStates, beta: float) -> float:
    """``log(p0 / (1 - p0))``, well conditioned when ``p0`` is close to 1."""
    t = _rel_terms(dos, beta)[1:]
    return math.inf if t.size == 0 else -float(logsumexp(t))


def _logit(p: float) -> float:
    if p <= 0:
        return -math.inf
    if p >= 1:
        return math.inf
    return math.log(p) - math.log1p(-p)


@dataclass(frozen=True)
class BetaFit:
    beta: float
    flag: str = OK

    @property
    def ok(self) -> bool:
        return self.flag == OK


def fit_beta_eff(p0_observed: float, dos: DensityOfStates, beta_max: float = BETA_MAX,
                 tol: float = FIT_TOL) -> BetaFit:
    """Inverse temperature whose predicted ground probability matches ``p0_observed``.

    The prediction is monotone in beta, so this is a bisection; comparisons
    are made in logit space to keep precision when ``p0`` approaches 1.
    Observations at or below the beta = 0 value are flagged ``low``; at or
    above the ``beta_max`` value, ``high``.
    """
    if not 0 <= p0_observed <= 1:
        raise ValueError("p0 must lie in [0, 1]")
    if len(dos.energies) == 0:
        raise ValueError("density of states is missing its ground level")
    target = _logit(p0_observed)
    if target <= predicted_logit(dos, 0.0):
        return BetaFit(0.0, LOW)
    if target >= predicted_logit(dos, beta_max):
        return BetaFit(beta_max, HIGH)
    lo, hi = 0.0, beta_max
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if predicted_logit(dos, mid) < target:
            lo = mid
        else:
            hi = mid
    return BetaFit(0.5 * (lo + hi))


@dataclass(frozen=True)
class FreezeOut:
    s_star: float
    q_star: float


def freeze_out(beta_eff: float, sch: Schedule) -> FreezeOut:
    """``s*`` with ``B(s*) = beta_eff * kT`` and ``Q* = A(s*) / B(s*)``.

    Raises ``OutOfRange`` when ``beta_eff`` exceeds the schedule's ideal value,
    i.e. the distribution would have had to freeze after the anneal ended.
    """
    b = beta_eff * sch.kT
    b_end = float(sch.B[-1])
    if b > b_end:
        # tolerate the last-ulp overshoot of a beta computed as B(1)/kT
        if b - b_end > 1e-12 * b_end:
            raise OutOfRange(f"beta_eff={beta_eff} exceeds ideal {beta_ideal(sch)}")
        b = b_end
    s = invert_b(sch, b)
    return FreezeOut(s, q_of_s(sch, s))


def delta_p0(p0: float, n_anneals: int) -> float:
    """Binomial standard error ``sqrt(p0 (1 - p0) / n)``."""
    return math.sqrt(p0 * (1 - p0) / n_anneals)


@dataclass(frozen=True)
class CycleStats:
    delta_p0: float
    Delta_p0: float
    R_fluct: float
    spread_95_5: float
    median_beta: float
    beta_min: float
    beta_max: float
    n_boundary: int
    defined: bool


def cycle_statistics(p0_list, betas, n_anneals: int, fluct: str = "std") -> CycleStats:
    """Fluctuation statistics over programming cycles.

    ``betas`` holds ``BetaFit`` values (or plain floats, taken as unflagged).
    Flagged fits are left out of the beta statistics and counted.
    ``fluct`` picks the observed fluctuation: sample ``std`` or ``range``.
    """
    p0 = np.asarray(p0_list, dtype=float)
    if p0.size < 2:
        raise ValueError("need at least two cycles")
    fits = [b if isinstance(b, BetaFit) else BetaFit(float(b)) for b in betas]
    good = np.array([f.beta for f in fits if f.ok], dtype=float)
    n_bad = len(fits) - good.size

    d = delta_p0(float(np.median(p0)), n_anneals)
    if fluct == "std":
        D = float(np.std(p0, ddof=1))
    elif fluct == "range":
        D = float(p0.max() - p0.min())
    else:
        raise ValueError(f"unknown fluctuation measure {fluct!r}")
    if D == 0:
        R = 0.0
    else:
        R = D / d if d > 0 else math.inf

    if good.size == 0:
        nan = math.nan
        return CycleStats(d, D, R, nan, nan, nan, nan, n_bad, False)
    p5, p95 = np.percentile(good, [5, 95])
    spread = p95 / p5 if p5 > 0 else math.inf
    return CycleStats(d, D, R, float(spread), float(np.median(good)), float(good.min()), float(good.max()),
                      n_bad, True)


@dataclass(frozen=True)
class ThermometryRecord:
    instance_id: str
    machine: str
    N: int
    alpha: str
    p0: tuple[float, ...]
    betas: tuple[float, ...]
    beta_flags: tuple[str, ...]
    median_beta: float
    beta_min: float
    beta_max: float
    s_star: float
    q_star: float
    R_fluct: float
    spread_95_5: float
    flags: str = ""

    @property
    def usable(self) -> bool:
        return not math.isnan(self.median_beta)


def make_record(instance_id: str, machine: str, p0_list, dos: DensityOfStates, sch: Schedule,
                n_anneals: int, alpha: str = "", fluct: str = "std") -> ThermometryRecord:
    """Fit every cycle, summarize, and place the median fit on the schedule."""
    fits = [fit_beta_eff(p, dos) for p in p0_list]
    st = cycle_statistics(p0_list, fits, n_anneals, fluct)
    flags = []
    if st.n_boundary:
        flags.append(f"boundary={st.n_boundary}")
    s_star = q_star = math.nan
    if st.defined:
        try:
            fo = freeze_out(st.median_beta, sch)
            s_star, q_star = fo.s_star, fo.q_star
        except OutOfRange:
            flags.append("beyond_ideal")
    else:
        flags.append("no_fit")
    return ThermometryRecord(
        instance_id=instance_id,
        machine=machine,
        N=dos.n_spins,
        alpha=alpha,
        p0=tuple(float(p) for p in p0_list),
        betas=tuple(f.beta for f in fits),
        beta_flags=tuple(f.flag for f in fits),
        median_beta=st.median_beta,
        beta_min=st.beta_min,
        beta_max=st.beta_max,
        s_star=s_star,
        q_star=q_star,
        R_fluct=st.R_fluct,
        spread_95_5=st.spread_95_5,
        flags=";".join(flags),
    )


# -- cross-machine comparison ---------------------------------------------------


def _boot_idx(n: int, n_boot: int, seed: int) -> np.ndarray:
    return np.random.default_rng(seed).integers(0, n, size=(n_boot, n))


def bootstrap_median_ci(values, n_boot: int = N_BOOT, seed: int = 0, level: float = 0.95):
    """Percentile bootstrap interval for the median."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return (math.nan, math.nan)
    meds = np.median(v[_boot_idx(v.size, n_boot, seed)], axis=1)
    a = 100 * (1 - level) / 2
    lo, hi = np.percentile(meds, [a, 100 - a])
    return float(lo), float(hi)


def _pearson_rows(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    xc = x - x.mean(axis=-1, keepdims=True)
    yc = y - y.mean(axis=-1, keepdims=True)
    den = np.sqrt((xc * xc).sum(axis=-1) * (yc * yc).sum(axis=-1))
    with np.errstate(invalid="ignore", divide="ignore"):
        return (xc * yc).sum(axis=-1) / den


def pearson(x, y) -> float:
    x, y = np.asarray(x, float), np.asarray(y, float)
    if x.size < 2:
        return math.nan
    return float(_pearson_rows(x, y))


def bootstrap_pearson_ci(x, y, n_boot: int = N_BOOT, seed: int = 0, level: float = 0.95):
    x, y = np.asarray(x, float), np.asarray(y, float)
    if x.size < 2:
        return (math.nan, math.nan)
    idx = _boot_idx(x.size, n_boot, seed)
    r = _pearson_rows(x[idx], y[idx])
    r = r[np.isfinite(r)]
    if r.size == 0:
        return (math.nan, math.nan)
    a = 100 * (1 - level) / 2
    lo, hi = np.percentile(r, [a, 100 - a])
    return float(lo), float(hi)


@dataclass(frozen=True)
class ComparisonReport:
    """Paired hot/cold statistics. ``R_Q`` is oriented hot over cold."""

    ids: tuple[str, ...]
    beta_hot: np.ndarray
    beta_cold: np.ndarray
    q_hot: np.ndarray
    q_cold: np.ndarray
    R_beta: float
    R_beta_ci: tuple[float, float]
    R_beta_ideal: float
    R_Q: float
    R_Q_ci: tuple[float, float]
    R_Q_small: float
    R_Q_small_ci: tuple[float, float]
    n_small: int
    pearson_beta: float
    pearson_beta_ci: tuple[float, float]
    pearson_Q: float
    pearson_Q_ci: tuple[float, float]
    n_skipped: int
    refs: dict = field(default_factory=lambda: {
        "R_beta": R_BETA_REF, "R_beta_ideal": R_BETA_IDEAL_REF,
        "pearson_beta": PEARSON_BETA_REF, "R_Q_small": R_Q_SMALL_REF,
    })

    @property
    def n_pairs(self) -> int:
        return len(self.ids)

    def summary_rows(self):
        """``(statistic, value, ci_low, ci_high, n, reference)`` rows."""
        ref = self.refs
        yield "R_beta", self.R_beta, *self.R_beta_ci, self.n_pairs, ref["R_beta"][0]
        yield "R_beta_ideal", self.R_beta_ideal, math.nan, math.nan, self.n_pairs, ref["R_beta_ideal"][0]
        yield "R_Q", self.R_Q, *self.R_Q_ci, int(np.isfinite(self.q_hot / self.q_cold).sum()), math.nan
        yield "R_Q_small", self.R_Q_small, *self.R_Q_small_ci, self.n_small, ref["R_Q_small"][0]
        yield "pearson_beta", self.pearson_beta, *self.pearson_beta_ci, self.n_pairs, ref["pearson_beta"]
        q_ok = np.isfinite(self.q_hot) & np.isfinite(self.q_cold)
        yield "pearson_Q", self.pearson_Q, *self.pearson_Q_ci, int(q_ok.sum()), math.nan


def compare_machines(hot: list[ThermometryRecord], cold: list[ThermometryRecord],
                     q_small_threshold: float = Q_SMALL, beta_ideal_ratio: float = math.nan,
                     n_boot: int = N_BOOT, seed: int = 0) -> ComparisonReport:
    """Pair records by instance id and compute ratio medians, correlations and CIs.

    Unpaired instances and instances without a usable fit on both machines
    are skipped and counted.
    """
    cold_by_id = {r.instance_id: r for r in cold}
    hot_ids = {r.instance_id for r in hot}
    skipped = sum(1 for r in cold if r.instance_id not in hot_ids)
    ids, bh, bc, qh, qc = [], [], [], [], []
    for r in hot:
        c = cold_by_id.get(r.instance_id)
        if c is None or not (r.usable and c.usable):
            skipped += 1
            continue
        ids.append(r.instance_id)
        bh.append(r.median_beta)
        bc.append(c.median_beta)
        qh.append(r.q_star)
        qc.append(c.q_star)
    bh, bc, qh, qc = (np.array(x, dtype=float) for x in (bh, bc, qh, qc))

    rb = bc / bh
    with np.errstate(invalid="ignore", divide="ignore"):
        rq = qh / qc
    q_ok = np.isfinite(rq)
    small = q_ok & (qh < q_small_threshold) & (qc < q_small_threshold)

    def med(x):
        return float(np.median(x)) if x.size else math.nan

    qpair = np.isfinite(qh) & np.isfinite(qc)
    return ComparisonReport(
        ids=tuple(ids),
        beta_hot=bh, beta_cold=bc, q_hot=qh, q_cold=qc,
        R_beta=med(rb),
        R_beta_ci=bootstrap_median_ci(rb, n_boot, seed),
        R_beta_ideal=float(beta_ideal_ratio),
        R_Q=med(rq[q_ok]),
        R_Q_ci=bootstrap_median_ci(rq[q_ok], n_boot, seed + 1),
        R_Q_small=med(rq[small]),
        R_Q_small_ci=bootstrap_median_ci(rq[small], n_boot, seed + 2),
        n_small=int(small.sum()),
        pearson_beta=pearson(bh, bc),
        pearson_beta_ci=bootstrap_pearson_ci(bh, bc, n_boot, seed + 3),
        pearson_Q=pearson(qh[qpair], qc[qpair]),
        pearson_Q_ci=bootstrap_pearson_ci(qh[qpair], qc[qpair], n_boot, seed + 4),
        n_skipped=skipped,
    )
