"""Planted-solution Ising instances on Chimera graphs.

Energies are kept in integer units throughout; ``Instance.scale`` converts
them to the encoded units (couplings in [-1, 1]) a hardware schedule acts on.
Configurations are ``int8`` arrays of +/-1 ordered like ``topology.nodes``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path

import numpy as np

from .topology import Topology, build_chimera, neighbors

FORMAT = "freezeout-instance/1"
DEFAULT_J_MAX = 3
DEFAULT_MAX_LOOP_LEN = 16
# j_max per clause density; every density currently shares the same value.
J_MAX_TABLE: dict[Fraction, int] = {}


class InstanceError(ValueError):
    pass


class GenerationError(RuntimeError):
    pass


def j_max_for(alpha) -> int:
    return J_MAX_TABLE.get(as_fraction(alpha), DEFAULT_J_MAX)


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


@dataclass(frozen=True)
class Loop:
    vertices: tuple[int, ...]
    # signs[k] belongs to edge (vertices[k], vertices[k+1 mod n]), planted gauge
    signs: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.vertices)

    def edges(self):
        n = len(self.vertices)
        for k in range(n):
            a, b = self.vertices[k], self.vertices[(k + 1) % n]
            yield (min(a, b), max(a, b)), self.signs[k]


@dataclass(frozen=True)
class Instance:
    topology: Topology
    couplings: dict[tuple[int, int], int]
    fields: dict[int, int] = field(default_factory=dict)
    scale: Fraction = Fraction(1)
    planted: tuple[int, ...] | None = None
    clauses: tuple[Loop, ...] = ()
    seed: int = 0
    alpha: Fraction = Fraction(0)
    j_max: int = 1

    def __post_init__(self):
        t = self.topology
        edge_set = set(t.edges)
        for key, J in self.couplings.items():
            if key not in edge_set:
                raise InstanceError(f"coupling {key} is not an edge of the topology")
        for i in self.fields:
            if i not in t.position:
                raise InstanceError(f"field on non-live site {i}")
        big = max([abs(v) for v in self.couplings.values()] + [abs(v) for v in self.fields.values()] + [0])
        if big * self.scale > 1:
            raise InstanceError(f"max |J| * scale = {big * self.scale} exceeds 1")
        if self.planted is not None and len(self.planted) != t.n_nodes:
            raise InstanceError("planted configuration size mismatch")

    @property
    def n(self) -> int:
        return self.topology.n_nodes

    @cached_property
    def edge_keys(self) -> tuple[tuple[int, int], ...]:
        return tuple(sorted(self.couplings))

    @cached_property
    def arrays(self):
        """``(ei, ej, J, h)`` with edge endpoints as node positions, int64."""
        pos = self.topology.position
        keys = self.edge_keys
        ei = np.array([pos[i] for i, _ in keys], dtype=np.int64)
        ej = np.array([pos[j] for _, j in keys], dtype=np.int64)
        J = np.array([self.couplings[k] for k in keys], dtype=np.int64)
        h = np.zeros(self.n, dtype=np.int64)
        for i, v in self.fields.items():
            h[pos[i]] = v
        return ei, ej, J, h

    @property
    def max_abs_energy(self) -> int:
        return int(sum(abs(v) for v in self.couplings.values()) + sum(abs(v) for v in self.fields.values()))

    @property
    def planted_array(self) -> np.ndarray:
        if self.planted is None:
            raise InstanceError("instance has no planted configuration")
        return np.array(self.planted, dtype=np.int8)

    def planted_energy_identity(self) -> int:
        """Sum over clauses of ``2 - len``: the planted energy by construction."""
        return sum(2 - len(c) for c in self.clauses)


def make_instance(
    topology: Topology,
    couplings: dict[tuple[int, int], int],
    fields: dict[int, int] | None = None,
    scale=1,
    **kw,
) -> Instance:
    """Hand-built instance; coupling keys are normalized to ``(min, max)``."""
    cp = {(min(i, j), max(i, j)): int(v) for (i, j), v in couplings.items() if v != 0}
    fs = {int(i): int(v) for i, v in (fields or {}).items() if v != 0}
    return Instance(topology=topology, couplings=cp, fields=fs, scale=as_fraction(scale), **kw)


def _check_config(inst: Instance, config) -> np.ndarray:
    s = np.asarray(config)
    if s.shape[-1] != inst.n:
        raise InstanceError(f"configuration has {s.shape[-1]} spins, instance has {inst.n}")
    return s


def energy(inst: Instance, config) -> int:
    """Ising energy in integer units."""
    s = _check_config(inst, config).astype(np.int64)
    if s.ndim != 1:
        raise InstanceError("energy() takes a single configuration; use energies()")
    ei, ej, J, h = inst.arrays
    return int(np.dot(J, s[ei] * s[ej]) + np.dot(h, s))


def energies(inst: Instance, configs) -> np.ndarray:
    """Integer energies of a batch of configurations, shape ``(m, n)``."""
    s = _check_config(inst, configs).astype(np.int64)
    ei, ej, J, h = inst.arrays
    return (s[:, ei] * s[:, ej]) @ J + s @ h


# -- generation ---------------------------------------------------------------


def _random_cycle(topology: Topology, adj, rng: np.random.Generator, max_len: int, tries: int):
    nodes = topology.nodes
    for _ in range(tries):
        cur = nodes[rng.integers(len(nodes))]
        path = [cur]
        where = {cur: 0}
        prev = None
        while True:
            opts = [v for v in adj[cur] if v != prev]
            if not opts:
                break
            nxt = opts[rng.integers(len(opts))]
            if nxt in where:
                cycle = path[where[nxt]:]
                if len(cycle) <= max_len:
                    return cycle
                break
            where[nxt] = len(path)
            path.append(nxt)
            prev, cur = cur, nxt
    return None


def generate_planted(
    topology: Topology,
    alpha,
    j_max: int | None = None,
    seed: int = 0,
    max_loop_len: int = DEFAULT_MAX_LOOP_LEN,
    retry_budget: int | None = None,
) -> Instance:
    """Frustrated-loop instance with a planted ground state.

    Each clause is a cycle found by a non-backtracking random walk, with all
    couplings ferromagnetic (-1) except one antiferromagnetic (+1) edge, so
    the all-up state leaves exactly one bond per clause unsatisfied. Clauses
    that would push any ``|J|`` above ``j_max`` are redrawn. The result is
    spin-reversal gauged to hide the planted state.
    """
    alpha = as_fraction(alpha)
    if alpha <= 0:
        raise InstanceError("alpha must be positive")
    j_max = j_max_for(alpha) if j_max is None else int(j_max)
    if j_max < 1:
        raise InstanceError("j_max must be >= 1")
    if max_loop_len < 4:
        raise InstanceError("max_loop_len below the Chimera girth (4)")
    n_clauses = math.ceil(alpha * topology.n_nodes)
    if n_clauses == 0:
        raise InstanceError("alpha yields zero clauses")
    budget = retry_budget if retry_budget is not None else 200 * n_clauses + 1000

    rng = np.random.default_rng(seed)
    adj = {i: neighbors(topology, i) for i in topology.nodes}
    J: dict[tuple[int, int], int] = {}
    clauses = []
    attempts = 0
    while len(clauses) < n_clauses:
        attempts += 1
        if attempts > budget:
            raise GenerationError(
                f"retry budget {budget} exhausted after {len(clauses)}/{n_clauses} clauses"
            )
        cycle = _random_cycle(topology, adj, rng, max_loop_len, tries=100)
        if cycle is None:
            continue
        signs = [-1] * len(cycle)
        signs[rng.integers(len(cycle))] = 1
        loop = Loop(tuple(int(v) for v in cycle), tuple(signs))
        if any(abs(J.get(e, 0) + s) > j_max for e, s in loop.edges()):
            continue
        for e, s in loop.edges():
            J[e] = J.get(e, 0) + s
        clauses.append(loop)

    base = make_instance(
        topology,
        J,
        scale=Fraction(1, j_max),
        planted=(1,) * topology.n_nodes,
        clauses=tuple(clauses),
        seed=int(seed),
        alpha=alpha,
        j_max=j_max,
    )
    return gauge_randomize(base, int(rng.integers(2**63)))


def gauge_transform(inst: Instance, eps) -> Instance:
    """Apply the spin-reversal gauge ``eps`` (+/-1 per node position)."""
    eps = np.asarray(eps, dtype=np.int64)
    if eps.shape != (inst.n,):
        raise InstanceError("gauge vector size mismatch")
    pos = inst.topology.position
    J = {(i, j): int(eps[pos[i]] * eps[pos[j]] * v) for (i, j), v in inst.couplings.items()}
    h = {i: int(eps[pos[i]] * v) for i, v in inst.fields.items()}
    planted = None
    if inst.planted is not None:
        planted = tuple(int(e * p) for e, p in zip(eps, inst.planted))
    return Instance(
        topology=inst.topology,
        couplings=J,
        fields=h,
        scale=inst.scale,
        planted=planted,
        clauses=inst.clauses,
        seed=inst.seed,
        alpha=inst.alpha,
        j_max=inst.j_max,
    )


def gauge_randomize(inst: Instance, seed: int) -> Instance:
    eps = np.random.default_rng(seed).choice(np.array([-1, 1]), size=inst.n)
    return gauge_transform(inst, eps)


# -- control noise ------------------------------------------------------------


@dataclass(frozen=True)
class NoisyInstance:
    """One programming-cycle realization of an instance under control errors.

    ``j_enc``/``h_enc`` are real encoded values aligned with
    ``base.edge_keys`` and node positions; ``dj``/``dh`` are the raw draws.
    """

    base: Instance
    j_enc: np.ndarray
    h_enc: np.ndarray
    dj: np.ndarray
    dh: np.ndarray
    seed: int
    sigma_j_frac: float
    sigma_h_frac: float

    @property
    def n(self) -> int:
        return self.base.n

    def to_dict(self) -> dict:
        return {
            "instance_seed": self.base.seed,
            "seed": self.seed,
            "sigma_j_frac": self.sigma_j_frac,
            "sigma_h_frac": self.sigma_h_frac,
            "edges": [f"{i} {j} {v!r}" for (i, j), v in zip(self.base.edge_keys, self.j_enc.tolist())],
            "fields": [f"{i} {v!r}" for i, v in zip(self.base.topology.nodes, self.h_enc.tolist()) if v != 0],
        }


def encoded(inst: Instance) -> tuple[np.ndarray, np.ndarray]:
    """Encoded (scaled) couplings and fields as floats."""
    _, _, J, h = inst.arrays
    sc = float(inst.scale)
    return J * sc, h * sc


def apply_noise(inst: Instance, sigma_j_frac: float = 0.05, sigma_h_frac: float = 0.03, seed: int = 0) -> NoisyInstance:
    """Gaussian control errors with widths relative to the largest encoded value."""
    if sigma_j_frac < 0 or sigma_h_frac < 0:
        raise InstanceError("noise fractions must be non-negative")
    j, h = encoded(inst)
    rng = np.random.default_rng(seed)
    sj = sigma_j_frac * (np.abs(j).max() if j.size else 0.0)
    sh = sigma_h_frac * (np.abs(h).max() if h.size else 0.0)
    dj = rng.normal(0.0, 1.0, size=j.shape) * sj
    dh = rng.normal(0.0, 1.0, size=h.shape) * sh
    return NoisyInstance(inst, j + dj, h + dh, dj, dh, int(seed), float(sigma_j_frac), float(sigma_h_frac))


def problem_arrays(problem: Instance | NoisyInstance):
    """``(ei, ej, J, h)`` in encoded float units for either instance kind."""
    if isinstance(problem, NoisyInstance):
        ei, ej, _, _ = problem.base.arrays
        return ei, ej, problem.j_enc, problem.h_enc
    ei, ej, _, _ = problem.arrays
    J, h = encoded(problem)
    return ei, ej, J, h


# -- serialization ------------------------------------------------------------


def to_dict(inst: Instance, meta: dict | None = None) -> dict:
    t = inst.topology
    doc = {
        "format": FORMAT,
        "L": t.L,
        "broken": sorted(t.broken),
        "alpha": str(inst.alpha),
        "j_max": inst.j_max,
        "scale": str(inst.scale),
        "seed": inst.seed,
        "n_spins": t.n_nodes,
        "edges": [f"{i} {j} {inst.couplings[(i, j)]}" for i, j in inst.edge_keys],
        "fields": [f"{i} {inst.fields[i]}" for i in sorted(inst.fields)],
        "planted": None if inst.planted is None else "".join("+" if v > 0 else "-" for v in inst.planted),
        "clauses": [{"vertices": list(c.vertices), "signs": list(c.signs)} for c in inst.clauses],
    }
    if meta:
        doc["meta"] = meta
    return doc


def from_dict(doc: dict) -> Instance:
    if doc.get("format") != FORMAT:
        raise InstanceError(f"unknown instance format {doc.get('format')!r}")
    t = build_chimera(int(doc["L"]), doc["broken"])
    couplings = {}
    for rec in doc["edges"]:
        i, j, v = (int(x) for x in rec.split())
        couplings[(i, j)] = v
    fields = {}
    for rec in doc["fields"]:
        i, v = (int(x) for x in rec.split())
        fields[i] = v
    planted = None
    if doc.get("planted") is not None:
        planted = tuple(1 if ch == "+" else -1 for ch in doc["planted"])
    clauses = tuple(Loop(tuple(c["vertices"]), tuple(c["signs"])) for c in doc["clauses"])
    return Instance(
        topology=t,
        couplings=couplings,
        fields=fields,
        scale=Fraction(doc["scale"]),
        planted=planted,
        clauses=clauses,
        seed=int(doc["seed"]),
        alpha=Fraction(doc["alpha"]),
        j_max=int(doc["j_max"]),
    )


def dumps(inst: Instance, meta: dict | None = None) -> str:
    return json.dumps(to_dict(inst, meta), indent=1) + "\n"


def save_instance(inst: Instance, path: str | Path, meta: dict | None = None) -> None:
    Path(path).write_text(dumps(inst, meta))


def load_instance(path: str | Path) -> Instance:
    return from_dict(json.loads(Path(path).read_text()))
