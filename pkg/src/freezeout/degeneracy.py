"""Densities of states: exhaustive enumeration, exact low-level counting and
Wang-Landau estimation.

All energies are integer units; ``DensityOfStates.scale`` carries the factor
to encoded units so downstream fits never need the instance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba as nb
import numpy as np
from scipy import stats
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.special import logsumexp

from .instance import Instance, energy
from .seeds import derive_seed, numba_seed
from .topology import csr_adjacency

BRUTE_MAX_SPINS = 28
DEFAULT_CUTOFF = 10**7
LN2 = math.log(2.0)


class TooLarge(ValueError):
    pass


class CutoffExceeded(RuntimeError):
    """More than ``cutoff`` states in the ground or first excited level."""

    def __init__(self, cutoff: int, E0, g0, E1, g1):
        self.cutoff, self.E0, self.g0, self.E1, self.g1 = cutoff, E0, g0, E1, g1
        super().__init__(f"degeneracy above cutoff {cutoff} (E0={E0}, E1={E1})")


@dataclass(frozen=True, eq=False)
class DensityOfStates:
    energies: np.ndarray
    log_g: np.ndarray
    n_spins: int
    provenance: str
    scale: float = 1.0
    ci_half_width: np.ndarray | None = None
    converged: bool = True
    n_runs: int = 1

    def __post_init__(self):
        e = np.asarray(self.energies)
        if e.size and np.any(np.diff(e) <= 0):
            raise ValueError("energies must be strictly increasing")

    @property
    def g(self) -> np.ndarray:
        return np.exp(self.log_g)

    @property
    def E0(self) -> int:
        return int(self.energies[0])

    def level(self, E: int) -> int | None:
        k = int(np.searchsorted(self.energies, E))
        if k < len(self.energies) and self.energies[k] == E:
            return k
        return None

    def log_g_at(self, E: int) -> float | None:
        k = self.level(E)
        return None if k is None else float(self.log_g[k])

    def normalization_error(self) -> float:
        """``|sum g - 2^N| / 2^N``."""
        return abs(math.expm1(float(logsumexp(self.log_g)) - self.n_spins * LN2))

    def to_rows(self):
        ci = self.ci_half_width if self.ci_half_width is not None else [None] * len(self.energies)
        for E, lg, c in zip(self.energies.tolist(), self.log_g.tolist(), ci):
            yield int(E), float(lg), (None if c is None else float(c)), self.provenance


def _normalize(log_g: np.ndarray, n_spins: int) -> np.ndarray:
    return log_g - logsumexp(log_g) + n_spins * LN2


@dataclass(frozen=True)
class LowLevels:
    E0: int
    g0: int
    E1: int | None
    g1: int

    def as_dos(self, n_spins: int, scale: float = 1.0) -> DensityOfStates:
        if self.E1 is None:
            e, lg = [self.E0], [math.log(self.g0)]
        else:
            e, lg = [self.E0, self.E1], [math.log(self.g0), math.log(self.g1)]
        return DensityOfStates(np.array(e, dtype=np.int64), np.array(lg), n_spins, "exact_low", scale)


def _int_csr(inst: Instance):
    keys = inst.edge_keys
    indptr, idx, data = csr_adjacency(inst.topology, {k: inst.couplings[k] for k in keys})
    return indptr, idx, data.astype(np.int64) if data.size else np.zeros(0, np.int64)


# -- brute force --------------------------------------------------------------


@nb.njit(cache=True)
def _gray_histogram(indptr, idx, w, h, off, nbins):
    n = h.size
    s = np.ones(n, dtype=np.int64)
    E = 0
    for i in range(n):
        E += h[i]
        for p in range(indptr[i], indptr[i + 1]):
            if idx[p] > i:
                E += w[p]
    hist = np.zeros(nbins, dtype=np.int64)
    hist[E + off] += 1
    for k in range(1, 1 << n):
        b = 0
        while not (k >> b) & 1:
            b += 1
        loc = h[b]
        for p in range(indptr[b], indptr[b + 1]):
            loc += w[p] * s[idx[p]]
        E -= 2 * s[b] * loc
        s[b] = -s[b]
        hist[E + off] += 1
    return hist


def brute_force_dos(inst: Instance) -> DensityOfStates:
    """Exact degeneracy of every level by Gray-code enumeration."""
    n = inst.n
    if n > BRUTE_MAX_SPINS:
        raise TooLarge(f"{n} spins exceeds brute-force limit {BRUTE_MAX_SPINS}")
    indptr, idx, w = _int_csr(inst)
    _, _, _, h = inst.arrays
    M = inst.max_abs_energy
    hist = _gray_histogram(indptr, idx, w, h, M, 2 * M + 1)
    nz = np.nonzero(hist)[0]
    return DensityOfStates(
        energies=(nz - M).astype(np.int64),
        log_g=np.log(hist[nz].astype(float)),
        n_spins=n,
        provenance="brute",
        scale=float(inst.scale),
    )


def brute_force_counts(inst: Instance) -> dict[int, int]:
    """Integer level counts, for exact comparisons."""
    dos = brute_force_dos(inst)
    return {int(E): int(round(g)) for E, g in zip(dos.energies, dos.g)}


# -- exact two lowest levels --------------------------------------------------

MODE_MIN, MODE_SECOND, MODE_COUNT = 0, 1, 2


@nb.njit(cache=True)
def _pow2_capped(z, cap):
    if z >= 62:
        return cap
    return min(np.int64(1) << z, cap)


@nb.njit(cache=True)
def _clause_min(c, cptr, cverts, csigns, tau, spin):
    """Minimum energy of clause ``c`` over its undecided spins.

    Decided vertices split the cycle into segments; a segment costs one
    violated bond when its end spins disagree with the bond signs between them.
    """
    lo, hi = cptr[c], cptr[c + 1]
    ell = hi - lo
    first = -1
    for q in range(lo, hi):
        if spin[cverts[q]] != 0:
            first = q - lo
            break
    if first < 0:
        return 2 - ell
    viol = 0
    start = cverts[lo + first]
    prev_t = tau[start] * spin[start]
    parity = 1
    for step in range(1, ell + 1):
        q = lo + (first + step) % ell
        # bond from the previous vertex into this one
        parity *= -csigns[lo + (first + step - 1) % ell]
        v = cverts[q]
        if spin[v] != 0:
            t = tau[v] * spin[v]
            if prev_t * t != parity:
                viol += 1
            prev_t = t
            parity = 1
    return -ell + 2 * viol


@nb.njit(cache=True)
def _branch_and_bound(indptr, idx, w, h, pair, cptr, cverts, csigns, tau, vptr, vcl,
                      mode, e0, e1, cutoff, log_spins, log_info):
    """Depth-first search over spins in position order.

    ``MODE_MIN`` returns the minimum energy, pruning against the upper bound
    ``e0``. ``MODE_SECOND`` takes the exact ``e0`` and returns the next level
    ``e1`` (counting ``g0`` on the way). ``MODE_COUNT`` takes both and counts
    ``g0``, ``g1``. Counting stops as soon as either count passes ``cutoff``.
    Clause arrays may be empty, in which case only the field bound is used.
    """
    n = h.size
    big = np.iinfo(np.int64).max
    use_clauses = cptr.size > 1
    n_cl = cptr.size - 1
    fld = h.copy()
    spin = np.zeros(n, dtype=np.int64)
    state = np.zeros(n + 1, dtype=np.int64)
    pe = np.zeros(n + 1, dtype=np.int64)
    S = np.zeros(n + 1, dtype=np.int64)
    S[0] = np.abs(h).sum()
    cmin = np.zeros(max(n_cl, 1), dtype=np.int64)
    CB = 0
    HB = -np.abs(h).sum()
    for c in range(n_cl):
        cmin[c] = _clause_min(c, cptr, cverts, csigns, tau, spin)
        CB += cmin[c]
    if mode != MODE_COUNT:
        e1 = big
    g0 = 0
    g1 = 0
    n_log = 0
    k = 0
    while k >= 0:
        if k == n or pair[k] == 0:
            # remaining spins only see decided neighbours: solve them in closed form
            base = pe[k] - S[k]
            z = 0
            a = big
            c = 0
            for j in range(k, n):
                f = abs(fld[j])
                if f == 0:
                    z += 1
                elif f < a:
                    a = f
                    c = 1
                elif f == a:
                    c += 1
            m = _pow2_capped(z, cutoff + 1)
            if mode == MODE_MIN:
                e0 = min(e0, base)
            else:
                if base == e0:
                    g0 += m
                    if a != big:
                        if mode == MODE_SECOND:
                            e1 = min(e1, base + 2 * a)
                        elif base + 2 * a == e1:
                            g1 += min(c * m, cutoff + 1)
                elif mode == MODE_SECOND:
                    e1 = min(e1, base)
                elif base == e1:
                    g1 += m
                if g0 > cutoff or g1 > cutoff:
                    break
            k -= 1
            continue
        st = state[k]
        if st > 0:
            # undo the current value of spin k
            s = spin[k]
            for p in range(indptr[k], indptr[k + 1]):
                if idx[p] > k:
                    fld[idx[p]] -= w[p] * s
            spin[k] = 0
            HB += -abs(h[k]) - h[k] * s
            if use_clauses:
                for q in range(vptr[k], vptr[k + 1]):
                    c = vcl[q]
                    new = _clause_min(c, cptr, cverts, csigns, tau, spin)
                    CB += new - cmin[c]
                    cmin[c] = new
            if st == 2:
                state[k] = 0
                k -= 1
                continue
        s = 1 if st == 0 else -1
        state[k] = st + 1
        spin[k] = s
        HB += h[k] * s + abs(h[k])
        dS = 0
        for p in range(indptr[k], indptr[k + 1]):
            j = idx[p]
            if j > k:
                old = abs(fld[j])
                fld[j] += w[p] * s
                dS += abs(fld[j]) - old
        pe[k + 1] = pe[k] + s * fld[k]
        S[k + 1] = S[k] - abs(fld[k]) + dS
        bound = pe[k + 1] - S[k + 1] + pair[k + 1]
        if use_clauses:
            for q in range(vptr[k], vptr[k + 1]):
                c = vcl[q]
                new = _clause_min(c, cptr, cverts, csigns, tau, spin)
                CB += new - cmin[c]
                cmin[c] = new
            bound = max(bound, CB + HB)
        if mode == MODE_MIN:
            if bound >= e0:
                continue
        elif mode == MODE_SECOND:
            if bound >= e1:
                continue
        elif bound > e1:
            if n_log < log_info.shape[0]:
                log_info[n_log, 0] = k + 1
                log_info[n_log, 1] = bound
                log_info[n_log, 2] = e1
                for j in range(k + 1):
                    log_spins[n_log, j] = spin[j]
                n_log += 1
            continue
        k += 1
    return e0, g0, e1, g1, n_log


def _search_arrays(inst: Instance, members: np.ndarray, clauses: list[int] | None):
    """Arrays for the search restricted to ``members`` (sorted node positions).

    ``clauses`` lists the clause indices lying inside ``members``; ``None``
    disables the clause bound.
    """
    indptr, idx, w = _int_csr(inst)
    h = inst.arrays[3]
    local = {int(p): k for k, p in enumerate(members)}
    ptr, cols, vals = [0], [], []
    for p in members:
        for q in range(indptr[p], indptr[p + 1]):
            cols.append(local[int(idx[q])])
            vals.append(int(w[q]))
        ptr.append(len(cols))
    ptr = np.array(ptr, dtype=np.int64)
    cols = np.array(cols, dtype=np.int64)
    vals = np.array(vals, dtype=np.int64)
    m = len(members)
    acc = np.zeros(m + 1, dtype=np.int64)
    for k in range(m):
        for q in range(ptr[k], ptr[k + 1]):
            if cols[q] > k:
                acc[k] -= abs(vals[q])
    pair = np.cumsum(acc[::-1])[::-1].copy()

    if clauses is None:
        empty = np.zeros(0, np.int64)
        cptr, cverts, csigns, vcl = np.zeros(1, np.int64), empty, empty, empty
        tau, vptr = np.zeros(m, np.int64), np.zeros(m + 1, np.int64)
    else:
        pos = inst.topology.position
        tau = inst.planted_array.astype(np.int64)[members]
        cptr, cverts, csigns = [0], [], []
        per_vertex: list[list[int]] = [[] for _ in range(m)]
        for c_local, c in enumerate(clauses):
            loop = inst.clauses[c]
            for v, sg in zip(loop.vertices, loop.signs):
                cverts.append(local[pos[v]])
                csigns.append(sg)
                per_vertex[local[pos[v]]].append(c_local)
            cptr.append(len(cverts))
        vptr = np.cumsum([0] + [len(x) for x in per_vertex]).astype(np.int64)
        vcl = np.array([c for x in per_vertex for c in x], dtype=np.int64)
        cptr = np.array(cptr, dtype=np.int64)
        cverts = np.array(cverts, dtype=np.int64)
        csigns = np.array(csigns, dtype=np.int64)
    return ptr, cols, vals, h[members].copy(), pair, cptr, cverts, csigns, tau, vptr, vcl


def _clauses_consistent(inst: Instance) -> bool:
    """True when the clause list, in the current gauge, sums to the couplings."""
    if inst.planted is None or not inst.clauses:
        return False
    p = dict(zip(inst.topology.nodes, inst.planted))
    J: dict[tuple[int, int], int] = {}
    for loop in inst.clauses:
        for (a, b), sg in loop.edges():
            J[(a, b)] = J.get((a, b), 0) + p[a] * p[b] * sg
    return {e: v for e, v in J.items() if v} == inst.couplings


def _search(arrs, cutoff: int, upper: int | None = None, prune_log: int = 0):
    n = arrs[3].size
    big = np.iinfo(np.int64).max
    no_log = (np.zeros((0, n), np.int64), np.zeros((0, 3), np.int64))
    # the first pass only has to prove optimality, so start just above a known state
    start = big if upper is None else upper + 1
    e0, *_ = _branch_and_bound(*arrs, MODE_MIN, start, 0, cutoff, *no_log)
    _, g0, e1, _, _ = _branch_and_bound(*arrs, MODE_SECOND, e0, 0, cutoff, *no_log)
    log_spins = np.zeros((prune_log, n), dtype=np.int64)
    log_info = np.zeros((prune_log, 3), dtype=np.int64)
    g1, n_log = 0, 0
    if g0 <= cutoff and e1 != big:
        _, g0, _, g1, n_log = _branch_and_bound(*arrs, MODE_COUNT, e0, e1, cutoff, log_spins, log_info)
    return int(e0), int(g0), (None if e1 == big else int(e1)), int(g1), (log_spins[:n_log], log_info[:n_log])


def count_low_levels(
    inst: Instance,
    cutoff: int = DEFAULT_CUTOFF,
    prune_log: int = 0,
    decompose: bool = True,
    clause_bound: bool = True,
):
    """Exact ``(E0, g0, E1, g1)`` by depth-first branch and bound.

    Spins are assigned in node (cell-major) order. A partial assignment is
    bounded below by its decided energy, minus ``|local field|`` of every
    undecided spin (field plus couplings to decided spins), minus ``|J|`` of
    every coupling between two undecided spins. For generated instances the
    Hamiltonian is also a sum of loop clauses, and the sum of each clause's
    minimum over its undecided spins is a second bound; the larger is used.
    Branches whose bound exceeds the second-lowest energy are pruned. Once no
    two undecided spins interact, the tail is independent and its two lowest
    levels are counted in closed form.

    Three passes run per connected component: ground energy (seeded with the
    planted energy when known), next level, then the two counts, so counting
    can stop as soon as a count passes ``cutoff``. Components combine with
    energies adding and counts multiplying.

    ``prune_log > 0`` requires ``decompose=False`` and also returns up to that
    many prune events as ``(spins, info)`` with ``info`` rows
    ``(depth, bound, threshold)``.
    """
    if cutoff < 1:
        raise ValueError("cutoff must be >= 1")
    if prune_log and decompose:
        raise ValueError("prune logging needs decompose=False")
    cutoff = int(cutoff)
    cap = cutoff + 1
    n = inst.n
    use_clauses = clause_bound and _clauses_consistent(inst)
    pos = inst.topology.position

    if not decompose:
        members = np.arange(n)
        arrs = _search_arrays(inst, members, list(range(len(inst.clauses))) if use_clauses else None)
        upper = None if inst.planted is None else energy(inst, inst.planted_array)
        e0, g0, e1, g1, log = _search(arrs, cutoff, upper, prune_log)
        if g0 > cutoff or g1 > cutoff:
            raise CutoffExceeded(cutoff, e0, g0, e1, g1)
        out = LowLevels(e0, g0, e1, g1)
        return (out, log) if prune_log else out

    # components of couplings plus clause edges, so no clause is split
    ei, ej, J, h = inst.arrays
    rows, cols = [ei], [ej]
    if use_clauses:
        ce = np.array([(pos[a], pos[b]) for loop in inst.clauses for (a, b), _ in loop.edges()], dtype=np.int64)
        rows.append(ce[:, 0])
        cols.append(ce[:, 1])
    r, c = np.concatenate(rows), np.concatenate(cols)
    graph = csr_matrix((np.ones(r.size), (r, c)), shape=(n, n))
    n_comp, labels = connected_components(graph, directed=False)

    uppers = [None] * n_comp
    if inst.planted is not None:
        p = inst.planted_array.astype(np.int64)
        per = np.zeros(n_comp, dtype=np.int64)
        np.add.at(per, labels[ei], J * p[ei] * p[ej])
        np.add.at(per, labels, h * p)
        uppers = per.tolist()
    comp_clauses: list[list[int]] = [[] for _ in range(n_comp)]
    if use_clauses:
        for k, loop in enumerate(inst.clauses):
            comp_clauses[labels[pos[loop.vertices[0]]]].append(k)

    E0, G0 = 0, 1
    parts = []
    for comp in range(n_comp):
        members = np.nonzero(labels == comp)[0]
        arrs = _search_arrays(inst, members, comp_clauses[comp] if use_clauses else None)
        e0, g0, e1, g1, _ = _search(arrs, cutoff, uppers[comp])
        if g0 > cutoff:
            raise CutoffExceeded(cutoff, None, g0, None, None)
        E0 += e0
        G0 = min(G0 * g0, cap)
        parts.append((e0, g0, e1, g1))
    gaps = [e1 - e0 for e0, _, e1, _ in parts if e1 is not None]
    E1, G1 = None, 0
    if gaps:
        gap = min(gaps)
        E1 = E0 + gap
        for comp, (e0, g0, e1, g1) in enumerate(parts):
            if e1 is not None and e1 - e0 == gap:
                term = g1
                for other, (_, g0b, _, _) in enumerate(parts):
                    if other != comp:
                        term = min(term * g0b, cap)
                G1 = min(G1 + term, cap)
    if G0 > cutoff or G1 > cutoff:
        raise CutoffExceeded(cutoff, E0, G0, E1, G1)
    return LowLevels(E0, G0, E1, G1)


# -- Wang-Landau --------------------------------------------------------------


@dataclass(frozen=True)
class WlConfig:
    flatness: float = 0.8
    f_initial: float = 1.0
    f_final: float = 1e-8
    flatness_check_interval: int = 10_000
    max_steps: int = 10**9
    runs: int = 20
    # "lowest": lowest visited level vs. histogram mean; "min": every level
    criterion: str = "lowest"

    def __post_init__(self):
        if not 0 < self.flatness < 1:
            raise ValueError("flatness must lie in (0, 1)")
        if not self.f_final < self.f_initial:
            raise ValueError("f_final must be below f_initial")
        if self.criterion not in ("lowest", "min"):
            raise ValueError(f"unknown flatness criterion {self.criterion!r}")
        if self.flatness_check_interval < 1 or self.max_steps < 1 or self.runs < 1:
            raise ValueError("interval, max_steps and runs must be positive")


@nb.njit(cache=True)
def _wl_walk(indptr, idx, w, h, s, E, off, log_g, hist, visited, lnf, steps):
    n = s.size
    for _ in range(steps):
        i = np.random.randint(n)
        loc = h[i]
        for p in range(indptr[i], indptr[i + 1]):
            loc += w[p] * s[idx[p]]
        En = E - 2 * s[i] * loc
        d = log_g[E + off] - log_g[En + off]
        if d >= 0.0 or np.random.random() < np.exp(d):
            s[i] = -s[i]
            E = En
        b = E + off
        log_g[b] += lnf
        hist[b] += 1
        visited[b] = True
    return E


@nb.njit(cache=True)
def _energy_int(indptr, idx, w, h, s):
    E = 0
    for i in range(s.size):
        E += h[i] * s[i]
        for p in range(indptr[i], indptr[i + 1]):
            if idx[p] > i:
                E += w[p] * s[i] * s[idx[p]]
    return E


@nb.njit(cache=True)
def _wl_run(indptr, idx, w, h, off, nbins, flat, lnf0, lnf_final, interval, max_steps, seed, min_criterion):
    np.random.seed(seed)
    n = h.size
    s = np.empty(n, dtype=np.int64)
    for i in range(n):
        s[i] = 1 if np.random.random() < 0.5 else -1
    E = _energy_int(indptr, idx, w, h, s)
    log_g = np.zeros(nbins)
    hist = np.zeros(nbins, dtype=np.int64)
    visited = np.zeros(nbins, dtype=np.bool_)
    lnf = lnf0
    steps = 0
    while lnf > lnf_final and steps < max_steps:
        chunk = min(interval, max_steps - steps)
        E = _wl_walk(indptr, idx, w, h, s, E, off, log_g, hist, visited, lnf, chunk)
        steps += chunk
        lowest = -1
        total = 0.0
        count = 0
        hmin = np.iinfo(np.int64).max
        for b in range(nbins):
            if visited[b]:
                if lowest < 0:
                    lowest = b
                total += hist[b]
                count += 1
                hmin = min(hmin, hist[b])
        ref = hmin if min_criterion else hist[lowest]
        if ref >= flat * total / count:
            lnf *= 0.5
            hist[:] = 0
    return log_g, visited, lnf, steps


def wang_landau_run(inst: Instance, cfg: WlConfig = WlConfig(), seed: int = 0) -> DensityOfStates:
    """One flat-histogram walk; levels keyed by exact integer energy."""
    indptr, idx, w = _int_csr(inst)
    _, _, _, h = inst.arrays
    M = inst.max_abs_energy
    log_g, visited, lnf, _ = _wl_run(
        indptr, idx, w, h, M, 2 * M + 1,
        cfg.flatness, cfg.f_initial, cfg.f_final,
        cfg.flatness_check_interval, cfg.max_steps,
        numba_seed(seed), cfg.criterion == "min",
    )
    nz = np.nonzero(visited)[0]
    return DensityOfStates(
        energies=(nz - M).astype(np.int64),
        log_g=_normalize(log_g[nz], inst.n),
        n_spins=inst.n,
        provenance="wang_landau",
        scale=float(inst.scale),
        converged=bool(lnf <= cfg.f_final),
    )


def wl_flat_walk(inst: Instance, log_g_init: dict[int, float], steps: int, seed: int = 0) -> dict[int, int]:
    """Visit histogram of a walk with frozen weights ``log_g_init`` (modification factor 0)."""
    indptr, idx, w = _int_csr(inst)
    _, _, _, h = inst.arrays
    M = inst.max_abs_energy
    log_g = np.full(2 * M + 1, 0.0)
    for E, v in log_g_init.items():
        log_g[E + M] = v
    hist = np.zeros(2 * M + 1, dtype=np.int64)
    visited = np.zeros(2 * M + 1, dtype=np.bool_)
    _seed_numba(numba_seed(seed))
    s = np.where(np.random.default_rng(seed).random(inst.n) < 0.5, 1, -1).astype(np.int64)
    E = _energy_int(indptr, idx, w, h, s)
    _wl_walk(indptr, idx, w, h, s, E, M, log_g, hist, visited, 0.0, steps)
    return {int(b - M): int(hist[b]) for b in np.nonzero(visited)[0]}


@nb.njit(cache=True)
def _seed_numba(seed):
    np.random.seed(seed)


def combine_runs(runs: list[DensityOfStates]) -> DensityOfStates:
    """Average log-degeneracies per level across runs that visited it.

    CI half-widths are Student-t 95% intervals on the run-to-run spread.
    """
    if not runs:
        raise ValueError("no runs to combine")
    energies = np.unique(np.concatenate([r.energies for r in runs]))
    mean = np.empty(energies.size)
    half = np.empty(energies.size)
    for k, E in enumerate(energies):
        vals = np.array([v for v in (r.log_g_at(E) for r in runs) if v is not None])
        mean[k] = vals.mean()
        if vals.size > 1:
            half[k] = stats.t.ppf(0.975, vals.size - 1) * vals.std(ddof=1) / math.sqrt(vals.size)
        else:
            half[k] = np.inf
    first = runs[0]
    return DensityOfStates(
        energies=energies.astype(np.int64),
        log_g=_normalize(mean, first.n_spins),
        n_spins=first.n_spins,
        provenance="wang_landau",
        scale=first.scale,
        ci_half_width=half,
        converged=all(r.converged for r in runs),
        n_runs=len(runs),
    )


def wang_landau_ensemble(inst: Instance, cfg: WlConfig = WlConfig(), master_seed: int = 0) -> DensityOfStates:
    """``cfg.runs`` independent walks combined with :func:`combine_runs`."""
    if cfg.runs < 2:
        raise ValueError("an ensemble needs at least two runs")
    runs = [wang_landau_run(inst, cfg, derive_seed(master_seed, "wl", r)) for r in range(cfg.runs)]
    return combine_runs(runs)


@dataclass(frozen=True)
class Validation:
    accepted: bool
    reason: str
    ratio0: float | None = None
    ratio1: float | None = None

    def __bool__(self) -> bool:
        return self.accepted


def validate_dos(wl: DensityOfStates, exact: LowLevels, tol_frac: float = 0.05) -> Validation:
    """Accept a sampled DOS only if both low levels are within ``tol_frac`` of exact."""
    lg0 = wl.log_g_at(exact.E0)
    lg1 = wl.log_g_at(exact.E1) if exact.E1 is not None else None
    if lg0 is None or (exact.E1 is not None and lg1 is None):
        return Validation(False, "under-sampled")
    r0 = math.exp(lg0) / exact.g0
    r1 = math.exp(lg1) / exact.g1 if lg1 is not None else 1.0
    ok = abs(r0 - 1) <= tol_frac and abs(r1 - 1) <= tol_frac
    return Validation(ok, "ok" if ok else "outside-tolerance", r0, r1)
