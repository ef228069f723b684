"""Classical stand-in for annealer hardware.

Each programming cycle draws a fresh control-noise realization, samples
Boltzmann states of the noisy problem at the freeze-out inverse temperature,
and scores them against the clean problem's ground energy.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numba as nb
import numpy as np

from .instance import Instance, NoisyInstance, apply_noise, energies, energy, problem_arrays
from .schedule import Schedule
from .seeds import derive_seed, numba_seed

EXACT_MAX_SPINS = 24
# Largest elimination clique (in spins) for which exact sampling by elimination is attempted.
ELIM_MAX_WIDTH = 20


@dataclass(frozen=True)
class McmcConfig:
    """Metropolis settings. A sweep is ``N`` single-spin update attempts."""

    burn_in_sweeps: int = 1000
    thin_sweeps: int = 1
    samples_per_chain: int = 1000

    def __post_init__(self):
        if self.burn_in_sweeps < 0 or self.thin_sweeps < 1 or self.samples_per_chain < 1:
            raise ValueError("invalid MCMC settings")


@dataclass(frozen=True)
class MachineProfile:
    name: str
    schedule: Schedule
    sigma_j: float = 0.05
    sigma_h: float = 0.03
    s_star_range: tuple[float, float] = (0.6, 1.0)
    s_star_fixed: float | None = None
    log_coeff: float = 0.0
    t0_us: float = 20.0
    anneal_time_us: float = 20.0
    anneals_per_cycle: int = 20_000
    cycles: int = 22
    mcmc: McmcConfig = field(default_factory=McmcConfig)
    method: str = "auto"

    def __post_init__(self):
        lo, hi = self.s_star_range
        if not 0 < lo <= hi <= 1:
            raise ValueError("s* range must lie in (0, 1]")
        if self.anneals_per_cycle < 1 or self.cycles < 1:
            raise ValueError("anneals_per_cycle and cycles must be >= 1")
        if self.sigma_j < 0 or self.sigma_h < 0:
            raise ValueError("noise fractions must be non-negative")
        if self.method not in ("auto", "exact", "eliminate", "mcmc"):
            raise ValueError(f"unknown sampling method {self.method!r}")


@dataclass(frozen=True)
class CycleResult:
    cycle: int
    seed: int
    P0: float
    n_anneals: int
    beta_used: float
    s_star: float
    histogram: dict[int, int]
    method: str


# -- samplers -----------------------------------------------------------------


@nb.njit(cache=True)
def _state_energies(ei, ej, J, h, n):
    """Energy of every state; bit k of the index set means spin k is down."""
    out = np.empty(1 << n, dtype=np.float64)
    s = np.empty(n, dtype=np.float64)
    for idx in range(1 << n):
        for k in range(n):
            s[k] = 1.0 - 2.0 * ((idx >> k) & 1)
        E = 0.0
        for e in range(ei.size):
            E += J[e] * s[ei[e]] * s[ej[e]]
        for k in range(n):
            E += h[k] * s[k]
        out[idx] = E
    return out


def _decode(idx: np.ndarray, n: int) -> np.ndarray:
    bits = (idx[:, None] >> np.arange(n, dtype=np.int64)) & 1
    return (1 - 2 * bits).astype(np.int8)


def _exact_indices(state_E: np.ndarray, beta: float, n: int, rng: np.random.Generator) -> np.ndarray:
    w = np.exp(-beta * (state_E - state_E.min()))
    cdf = np.cumsum(w)
    u = rng.random(n) * cdf[-1]
    return np.minimum(np.searchsorted(cdf, u, side="right"), cdf.size - 1)


@nb.njit(cache=True)
def _metropolis(indptr, idx, w, h, beta, n_chains, per_chain, burn, thin, seed):
    np.random.seed(seed)
    N = h.size
    out = np.empty((n_chains * per_chain, N), dtype=np.int8)
    s = np.empty(N, dtype=np.float64)
    row = 0
    for c in range(n_chains):
        for k in range(N):
            s[k] = 1.0 if np.random.random() < 0.5 else -1.0
        total = burn + thin * per_chain
        for sweep in range(total):
            for _ in range(N):
                k = np.random.randint(N)
                loc = h[k]
                for p in range(indptr[k], indptr[k + 1]):
                    loc += w[p] * s[idx[p]]
                dE = -2.0 * s[k] * loc
                if dE <= 0.0 or np.random.random() < math.exp(-beta * dE):
                    s[k] = -s[k]
            if sweep >= burn and (sweep - burn + 1) % thin == 0:
                for k in range(N):
                    out[row, k] = np.int8(s[k])
                row += 1
    return out[:row]


# -- exact sampling by variable elimination ------------------------------------


def elimination_order(n: int, ei, ej) -> tuple[list[int], int]:
    """Greedy min-degree order and the largest clique it creates (width + 1)."""
    adj = [set() for _ in range(n)]
    for a, b in zip(np.asarray(ei).tolist(), np.asarray(ej).tolist()):
        adj[a].add(b)
        adj[b].add(a)
    alive = set(range(n))
    order, width = [], 0
    while alive:
        v = min(alive, key=lambda u: (len(adj[u]), u))
        nb_v = adj[v]
        width = max(width, len(nb_v) + 1)
        for a in nb_v:
            adj[a] |= nb_v - {a}
            adj[a].discard(v)
        alive.remove(v)
        order.append(v)
    return order, width


class EliminationSampler:
    """Exact Boltzmann sampler for sparse problems of small elimination width.

    Factors are log-weight tables over spin pairs and single spins (axis index
    0 means spin +1). Eliminating a spin sums its combined table out in log
    space; the combined tables are kept as conditionals for ancestral sampling
    in reverse order.
    """

    def __init__(self, n: int, ei, ej, J, h, beta: float, order: list[int] | None = None):
        if order is None:
            order, _ = elimination_order(n, ei, ej)
        self.n = n
        factors: list[tuple[tuple[int, ...], np.ndarray]] = []
        for a, b, w in zip(np.asarray(ei).tolist(), np.asarray(ej).tolist(), np.asarray(J, float).tolist()):
            x = beta * w
            factors.append(((a, b), np.array([[-x, x], [x, -x]])))
        for k, w in enumerate(np.asarray(h, float).tolist()):
            if w:
                factors.append(((k,), np.array([-beta * w, beta * w])))
        by_var: list[list[int]] = [[] for _ in range(n)]
        for f, (vs, _) in enumerate(factors):
            for v in vs:
                by_var[v].append(f)
        dead = set()
        self.steps = []
        self.log_z = 0.0
        for v in order:
            fs = [f for f in by_var[v] if f not in dead]
            scope = sorted({u for f in fs for u in factors[f][0]} - {v})
            U = [v] + scope
            pos = {u: k for k, u in enumerate(U)}
            table = np.zeros((2,) * len(U))
            for f in fs:
                vs, T = factors[f]
                axes = [pos[u] for u in vs]
                T = np.transpose(T, np.argsort(axes))
                shape = [1] * len(U)
                for ax in axes:
                    shape[ax] = 2
                table = table + T.reshape(shape)
                dead.add(f)
            self.steps.append((v, tuple(scope), table))
            msg = np.logaddexp(table[0], table[1])
            if scope:
                factors.append((tuple(scope), msg))
                for u in scope:
                    by_var[u].append(len(factors) - 1)
            else:
                self.log_z += float(msg)

    def sample(self, n_samples: int, rng: np.random.Generator) -> np.ndarray:
        bits = np.zeros((n_samples, self.n), dtype=np.intp)
        for v, scope, table in reversed(self.steps):
            idx = tuple(bits[:, u] for u in scope)
            lp, lm = table[0][idx], table[1][idx]
            p_up = 1.0 / (1.0 + np.exp(lm - lp))
            bits[:, v] = rng.random(n_samples) >= p_up
        return (1 - 2 * bits).astype(np.int8)


def _float_csr(problem: Instance | NoisyInstance):
    ei, ej, J, h = problem_arrays(problem)
    n = problem.n
    rows = np.concatenate([ei, ej])
    cols = np.concatenate([ej, ei])
    vals = np.concatenate([J, J]).astype(float)
    order = np.lexsort((cols, rows))
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, rows + 1, 1)
    return np.cumsum(indptr), cols[order].astype(np.int64), vals[order], np.asarray(h, dtype=float)


def _resolve_method(problem, method: str) -> str:
    n = problem.n
    if method == "auto":
        if n <= EXACT_MAX_SPINS:
            return "exact"
        ei, ej, _, _ = problem_arrays(problem)
        _, width = elimination_order(n, ei, ej)
        return "eliminate" if width <= ELIM_MAX_WIDTH else "mcmc"
    if method == "exact" and n > EXACT_MAX_SPINS:
        raise ValueError(f"exact sampling limited to {EXACT_MAX_SPINS} spins")
    return method


def boltzmann_sample(
    problem: Instance | NoisyInstance,
    beta: float,
    n: int,
    seed: int,
    method: str = "auto",
    mcmc: McmcConfig = McmcConfig(),
) -> np.ndarray:
    """``n`` configurations (int8, shape ``(n, N)``) at inverse temperature ``beta``.

    ``beta`` multiplies encoded energies. Methods: ``exact`` enumerates all
    states (up to 24 spins); ``eliminate`` samples exactly by variable
    elimination; ``mcmc`` runs Metropolis chains (one chain per
    ``mcmc.samples_per_chain`` samples) and is approximate. ``auto`` picks the
    first of these that applies.
    """
    if beta < 0 or n < 1:
        raise ValueError("need beta >= 0 and n >= 1")
    N = problem.n
    method = _resolve_method(problem, method)
    if method in ("exact", "eliminate"):
        ei, ej, J, h = problem_arrays(problem)
        rng = np.random.default_rng(seed)
        if method == "eliminate":
            return EliminationSampler(N, ei, ej, J, h, beta).sample(n, rng)
        state_E = _state_energies(ei, ej, np.asarray(J, float), np.asarray(h, float), N)
        return _decode(_exact_indices(state_E, beta, n, rng), N)
    indptr, idx, w, h = _float_csr(problem)
    per = mcmc.samples_per_chain
    chains = -(-n // per)
    out = _metropolis(indptr, idx, w, h, float(beta), chains, per, mcmc.burn_in_sweeps, mcmc.thin_sweeps,
                      numba_seed(seed))
    return out[:n]


def success_probability(samples, clean: Instance, E0: int) -> float:
    """Fraction of samples whose clean-problem energy equals ``E0``."""
    samples = np.atleast_2d(samples)
    if samples.shape[0] == 0:
        return 0.0
    return float(np.mean(energies(clean, samples) == E0))


# -- freeze-out model ---------------------------------------------------------


def draw_s_star(profile: MachineProfile, master_seed: int, instance_key: int | str) -> float:
    """Per-instance freeze-out point, shared by machines with the same range and seed."""
    if profile.s_star_fixed is not None:
        s0 = profile.s_star_fixed
    else:
        lo, hi = profile.s_star_range
        s0 = float(np.random.default_rng(derive_seed(master_seed, instance_key, "freeze")).uniform(lo, hi))
    s = s0 + profile.log_coeff * math.log(profile.anneal_time_us / profile.t0_us)
    if not 0 < s <= 1:
        clamped = min(max(s, 1e-9), 1.0)
        warnings.warn(f"s*={s:.4f} clamped to {clamped:.4f}", RuntimeWarning, stacklevel=2)
        s = clamped
    return s


def machine_beta(profile: MachineProfile, s_star: float) -> float:
    """``B(s*) / kT``."""
    sch = profile.schedule
    return float(sch.b_of(s_star)) / sch.kT


def run_cycles(
    inst: Instance,
    profile: MachineProfile,
    master_seed: int,
    E0: int | None = None,
    instance_key: int | str | None = None,
) -> list[CycleResult]:
    """Emulate ``profile.cycles`` programming cycles of ``inst``.

    ``E0`` defaults to the planted energy. Seeds depend only on
    ``(master_seed, instance_key, machine name, cycle)``.
    """
    key = inst.seed if instance_key is None else instance_key
    if E0 is None:
        E0 = energy(inst, inst.planted_array)
    s_star = draw_s_star(profile, master_seed, key)
    beta = machine_beta(profile, s_star)
    N = inst.n
    method = _resolve_method(inst, profile.method)
    n_anneals = profile.anneals_per_cycle

    if method == "exact":
        ei, ej, J, h = inst.arrays
        clean_E = np.rint(_state_energies(ei, ej, J.astype(float), h.astype(float), N)).astype(np.int64)

    out = []
    for c in range(profile.cycles):
        cseed = derive_seed(master_seed, key, profile.name, c)
        noisy = apply_noise(inst, profile.sigma_j, profile.sigma_h, derive_seed(cseed, "noise"))
        sample_seed = derive_seed(cseed, "sample")
        if method == "exact":
            if profile.sigma_j == 0 and profile.sigma_h == 0:
                state_E = clean_E * float(inst.scale)
            else:
                nei, nej, nJ, nh = problem_arrays(noisy)
                state_E = _state_energies(nei, nej, nJ, nh, N)
            idx = _exact_indices(state_E, beta, n_anneals, np.random.default_rng(sample_seed))
            E = clean_E[idx]
        else:
            samples = boltzmann_sample(noisy, beta, n_anneals, sample_seed, method, profile.mcmc)
            E = energies(inst, samples)
        levels, counts = np.unique(E, return_counts=True)
        out.append(CycleResult(
            cycle=c,
            seed=cseed,
            P0=float(np.mean(E == E0)),
            n_anneals=n_anneals,
            beta_used=beta,
            s_star=s_star,
            histogram=dict(zip(levels.tolist(), counts.tolist())),
            method=method,
        ))
    return out


RESULTS_HEADER = ("instance_id", "machine", "cycle", "n_anneals", "P0", "beta_used", "seed")


def result_rows(instance_id: str, machine: str, cycles: list[CycleResult]):
    for r in cycles:
        yield (instance_id, machine, r.cycle, r.n_anneals, repr(r.P0), repr(r.beta_used), r.seed)
