"""Annealing schedules A(s), B(s) in GHz and the temperature bookkeeping around them.

Energies in GHz convert to dimensionless inverse temperatures through
``KAPPA = k_B / h`` (GHz per kelvin), so ``beta = B / (KAPPA * T)``.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.interpolate import PchipInterpolator

KAPPA = 20.836619  # GHz / K
T_HOT_MK = 16.0
T_COLD_MK = 13.2
# Reference ideal betas quoted for the real machines; not reachable with synthetic curves.
BETA_IDEAL_REF_HOT = 9.7
BETA_IDEAL_REF_COLD = 11.7
INVERT_TOL = 1e-12


class ScheduleError(ValueError):
    pass


class MonotonicityError(ScheduleError):
    pass


class OutOfRange(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Schedule:
    s: np.ndarray
    A: np.ndarray
    B: np.ndarray
    temperature_mK: float
    name: str = ""
    linear: bool = False
    _a: object = field(init=False, repr=False)
    _b: object = field(init=False, repr=False)

    def __post_init__(self):
        s, A, B = (np.asarray(x, dtype=float) for x in (self.s, self.A, self.B))
        if not (s.ndim == A.ndim == B.ndim == 1 and s.size == A.size == B.size):
            raise ScheduleError("s, A, B must be 1-d arrays of equal length")
        if s.size < 2:
            raise ScheduleError("need at least two samples")
        if np.any(np.diff(s) <= 0):
            raise MonotonicityError("s must be strictly increasing")
        if s[0] != 0.0 or s[-1] != 1.0:
            raise ScheduleError("samples must cover s=0 and s=1")
        if np.any(np.diff(B) <= 0):
            raise MonotonicityError("B(s) must be strictly increasing")
        if B[0] < 0 or np.any(B[1:] <= 0):
            raise MonotonicityError("B(s) must be positive for s > 0")
        if np.any(np.diff(A) > 0):
            raise MonotonicityError("A(s) must be non-increasing")
        if np.any(A < 0):
            raise ScheduleError("A(s) must be non-negative")
        if not self.temperature_mK > 0:
            raise ScheduleError("temperature must be positive")
        for name, val in (("s", s), ("A", A), ("B", B)):
            object.__setattr__(self, name, val)
        if self.linear:
            a = lambda x, A=A: np.interp(x, s, A)  # noqa: E731
            b = lambda x, B=B: np.interp(x, s, B)  # noqa: E731
        else:
            a, b = PchipInterpolator(s, A), PchipInterpolator(s, B)
        object.__setattr__(self, "_a", a)
        object.__setattr__(self, "_b", b)

    @property
    def kT(self) -> float:
        """Thermal energy in GHz."""
        return KAPPA * self.temperature_mK * 1e-3

    def a_of(self, s):
        return self._eval(self._a, s)

    def b_of(self, s):
        return self._eval(self._b, s)

    @staticmethod
    def _eval(fn, s):
        x = np.asarray(s, dtype=float)
        if np.any((x < 0) | (x > 1)):
            raise OutOfRange("s outside [0, 1]")
        out = fn(x)
        return float(out) if np.ndim(out) == 0 else np.asarray(out)

    def with_temperature(self, temperature_mK: float, name: str | None = None) -> "Schedule":
        return Schedule(self.s, self.A, self.B, temperature_mK, self.name if name is None else name, self.linear)


def _parse_meta(line: str) -> dict[str, str]:
    out = {}
    for tok in line.lstrip("#").split():
        if "=" in tok:
            k, v = tok.split("=", 1)
            out[k] = v
    return out


def parse_schedule(text: str, temperature_mK: float | None = None, name: str | None = None,
                   linear: bool = False) -> Schedule:
    meta: dict[str, str] = {}
    body = []
    for line in text.splitlines():
        if line.startswith("#"):
            meta.update(_parse_meta(line))
        elif line.strip():
            body.append(line)
    rows = list(csv.reader(io.StringIO("\n".join(body))))
    if not rows or [c.strip() for c in rows[0]] != ["s", "A_GHz", "B_GHz"]:
        raise ScheduleError("expected header s,A_GHz,B_GHz")
    try:
        data = np.array([[float(c) for c in r] for r in rows[1:]], dtype=float)
    except ValueError as e:
        raise ScheduleError(f"malformed row: {e}") from None
    if data.ndim != 2 or data.shape[1] != 3:
        raise ScheduleError("every row needs three columns")
    if temperature_mK is None:
        if "temperature_mK" not in meta:
            raise ScheduleError("no temperature given and no temperature_mK metadata line")
        temperature_mK = float(meta["temperature_mK"])
    if name is None:
        name = meta.get("name", "")
    return Schedule(data[:, 0], data[:, 1], data[:, 2], float(temperature_mK), name, linear)


def load_schedule(path: str | Path, temperature_mK: float | None = None, name: str | None = None,
                  linear: bool = False) -> Schedule:
    """Read a schedule CSV (``s,A_GHz,B_GHz``) with optional ``# temperature_mK=.. name=..`` line."""
    return parse_schedule(Path(path).read_text(), temperature_mK, name, linear)


def bundled_schedule(temperature_mK: float = T_HOT_MK, name: str | None = None) -> Schedule:
    """Synthetic DW2-like schedule shipped with the package."""
    ref = resources.files("freezeout") / "data" / "dw2_like_schedule.csv"
    return parse_schedule(ref.read_text(), temperature_mK, name)


def save_schedule(sch: Schedule, path: str | Path) -> None:
    lines = [f"# temperature_mK={sch.temperature_mK} name={sch.name or 'unnamed'}", "s,A_GHz,B_GHz"]
    lines += [f"{s!r},{a!r},{b!r}" for s, a, b in zip(sch.s.tolist(), sch.A.tolist(), sch.B.tolist())]
    Path(path).write_text("\n".join(lines) + "\n")


def q_of_s(sch: Schedule, s):
    """Quantum-fluctuation scale ``A(s) / B(s)``."""
    b = np.asarray(sch.b_of(s))
    if np.any(b <= 0):
        raise OutOfRange("Q(s) undefined where B(s) = 0")
    q = np.asarray(sch.a_of(s)) / b
    return float(q) if q.ndim == 0 else q


def beta_ideal(sch: Schedule) -> float:
    """``B(1) / kT``: the inverse temperature if sampling froze at the end of the anneal."""
    return float(sch.B[-1]) / sch.kT


def invert_b(sch: Schedule, b_target: float, tol: float = INVERT_TOL) -> float:
    """The ``s`` with ``B(s) = b_target``, by bisection on the interpolant."""
    lo_b, hi_b = float(sch.B[0]), float(sch.B[-1])
    if not lo_b <= b_target <= hi_b:
        raise OutOfRange(f"B target {b_target} outside [{lo_b}, {hi_b}]")
    if b_target == hi_b:
        return 1.0
    if b_target == lo_b:
        return 0.0
    # bracket inside the tabulated cell first, then bisect the interpolant
    k = int(np.searchsorted(sch.B, b_target))
    lo, hi = float(sch.s[k - 1]), float(sch.s[k])
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if sch.b_of(mid) < b_target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
