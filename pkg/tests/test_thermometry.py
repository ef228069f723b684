import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_dos
from freezeout.degeneracy import DensityOfStates, brute_force_dos
from freezeout.schedule import KAPPA, OutOfRange, Schedule, beta_ideal, bundled_schedule
from freezeout.thermometry import (
    HIGH,
    LOW,
    PEARSON_BETA_REF,
    R_BETA_REF,
    R_Q_SMALL_REF,
    BetaFit,
    ThermometryRecord,
    bootstrap_median_ci,
    compare_machines,
    cycle_statistics,
    delta_p0,
    fit_beta_eff,
    freeze_out,
    make_record,
    predicted_p0,
)

PAIR = DensityOfStates(np.array([-1, 1]), np.log([2.0, 2.0]), 2, "brute")
GRID = np.linspace(0, 1, 101)
LINEAR = Schedule(GRID, 2 * (1 - GRID), 4 * GRID, 16.0)


def test_predicted_p0_examples():
    assert predicted_p0(PAIR, 0.0) == pytest.approx(0.5)
    assert predicted_p0(PAIR, math.log(3) / 2) == pytest.approx(0.75, abs=1e-15)
    assert predicted_p0(PAIR, 500.0) == 1.0


def test_predicted_p0_single_level():
    dos = DensityOfStates(np.array([0]), np.array([3.0]), 2, "brute")
    assert predicted_p0(dos, 1.0) == 1.0


def test_predicted_p0_increasing_scan():
    rng = np.random.default_rng(0)
    betas = np.linspace(0, 20, 400)
    for _ in range(50):
        dos = random_dos(rng)
        p = np.array([predicted_p0(dos, b) for b in betas])
        assert np.all(np.diff(p) > 0)


def test_fit_examples():
    fit = fit_beta_eff(0.75, PAIR)
    assert fit.flag == "ok" and fit.beta == pytest.approx(0.5493061443340549, abs=1e-10)
    assert fit_beta_eff(0.5, PAIR) == BetaFit(0.0, LOW)
    assert fit_beta_eff(0.3, PAIR).flag == LOW
    assert fit_beta_eff(1.0, PAIR).flag == HIGH


def test_fit_argument_checks():
    with pytest.raises(ValueError):
        fit_beta_eff(1.5, PAIR)
    with pytest.raises(ValueError):
        fit_beta_eff(0.5, DensityOfStates(np.array([], dtype=np.int64), np.array([]), 0, "brute"))


@settings(max_examples=300, deadline=None)
@given(seed=st.integers(0, 2**32), beta=st.floats(0.1, 20.0))
def test_fit_roundtrip_property(seed, beta):
    dos = random_dos(np.random.default_rng(seed))
    fit = fit_beta_eff(predicted_p0(dos, beta), dos)
    assert fit.ok and abs(fit.beta - beta) <= 1e-8


def test_freeze_out_linear_example():
    # kT at 16 mK is 0.33339 GHz, so beta = 6 lands at B = 2.0003 GHz
    fo = freeze_out(6.0, LINEAR)
    assert fo.s_star == pytest.approx(6 * KAPPA * 0.016 / 4, abs=1e-11)
    assert round(fo.s_star, 4) == 0.5001
    assert fo.q_star == pytest.approx(2 * (1 - fo.s_star) / (4 * fo.s_star), rel=1e-9)


def test_freeze_out_endpoint_and_beyond():
    sch = bundled_schedule()
    fo = freeze_out(beta_ideal(sch), sch)
    assert fo.s_star == 1.0 and fo.q_star == pytest.approx(sch.A[-1] / sch.B[-1], abs=1e-15)
    with pytest.raises(OutOfRange):
        freeze_out(beta_ideal(sch) * 1.001, sch)


@settings(max_examples=200, deadline=None)
@given(frac=st.floats(0.02, 1.0))
def test_freeze_out_roundtrip_property(frac):
    sch = bundled_schedule()
    beta = frac * beta_ideal(sch)
    fo = freeze_out(beta, sch)
    assert abs(sch.b_of(fo.s_star) - beta * sch.kT) <= 1e-9


def test_delta_p0_example():
    assert delta_p0(0.5, 20_000) == pytest.approx(3.5355e-3, abs=1e-7)


def test_cycle_statistics_basics():
    p0 = [0.5, 0.52, 0.48, 0.51]
    betas = [1.0, 1.1, 0.9, 1.05]
    st_ = cycle_statistics(p0, betas, 20_000)
    assert st_.delta_p0 == pytest.approx(delta_p0(np.median(p0), 20_000))
    assert st_.Delta_p0 == pytest.approx(np.std(p0, ddof=1))
    assert st_.R_fluct == pytest.approx(st_.Delta_p0 / st_.delta_p0)
    p5, p95 = np.percentile(betas, [5, 95])
    assert st_.spread_95_5 == pytest.approx(p95 / p5)
    assert (st_.median_beta, st_.beta_min, st_.beta_max) == (pytest.approx(1.025), 0.9, 1.1)
    assert cycle_statistics(p0, betas, 20_000, fluct="range").Delta_p0 == pytest.approx(0.04)


def test_cycle_statistics_identical_cycles():
    st_ = cycle_statistics([0.3] * 5, [2.0] * 5, 1000)
    assert st_.Delta_p0 == 0 and st_.R_fluct == 0 and st_.spread_95_5 == 1.0


def test_cycle_statistics_boundary_handling():
    fits = [BetaFit(1.0), BetaFit(1000.0, HIGH), BetaFit(2.0)]
    st_ = cycle_statistics([0.5, 1.0, 0.6], fits, 100)
    assert st_.n_boundary == 1 and st_.beta_max == 2.0
    undefined = cycle_statistics([1.0, 1.0], [BetaFit(1000.0, HIGH)] * 2, 100)
    assert not undefined.defined and math.isnan(undefined.median_beta)
    with pytest.raises(ValueError):
        cycle_statistics([0.5], [1.0], 100)


def rec(iid, beta, q, machine="hot", N=8):
    return ThermometryRecord(iid, machine, N, "1/2", (), (), (), beta, beta, beta, 0.5, q, 1.0, 1.0)


def test_compare_identical_lists():
    hot = [rec(str(k), 1.0 + k, 0.05 * (k + 1)) for k in range(10)]
    rep = compare_machines(hot, hot, n_boot=500)
    assert rep.R_beta == 1.0 and rep.pearson_beta == pytest.approx(1.0)
    assert rep.R_Q == 1.0 and rep.n_pairs == 10 and rep.n_skipped == 0


def test_compare_constructed_ratio():
    hot = [rec(str(k), 1.0 + 0.3 * k, 0.2) for k in range(12)]
    cold = [rec(str(k), 1.2 * (1.0 + 0.3 * k), 0.1, "cold") for k in range(12)]
    rep = compare_machines(hot, cold, n_boot=500)
    assert rep.R_beta == pytest.approx(1.2, rel=1e-14)
    assert rep.R_beta_ci == (pytest.approx(1.2), pytest.approx(1.2))
    assert rep.R_Q == pytest.approx(2.0)
    assert rep.n_small == 0 and math.isnan(rep.R_Q_small)


def test_compare_small_q_subset_and_skips():
    hot = [rec("a", 1.0, 0.05), rec("b", 2.0, 0.5), rec("c", 3.0, 0.08), rec("x", 1.0, 0.1)]
    cold = [rec("a", 1.1, 0.04, "cold"), rec("b", 2.2, 0.3, "cold"), rec("c", 3.3, 0.09, "cold"),
            rec("y", 1.0, 0.1, "cold")]
    rep = compare_machines(hot, cold, n_boot=200)
    assert rep.n_pairs == 3 and rep.n_skipped == 2
    assert rep.n_small == 2
    assert rep.R_Q_small == pytest.approx(np.median([0.05 / 0.04, 0.08 / 0.09]))


def test_reference_constants():
    assert R_BETA_REF == (1.11, 0.05) and PEARSON_BETA_REF == 0.94 and R_Q_SMALL_REF == (1.01, 0.06)


def test_bootstrap_deterministic_and_brackets_median():
    v = np.random.default_rng(1).normal(1, 0.1, 200)
    lo, hi = bootstrap_median_ci(v, 2000, seed=4)
    assert (lo, hi) == bootstrap_median_ci(v, 2000, seed=4)
    assert lo < np.median(v) < hi


def test_make_record_from_brute_dos():
    from conftest import small_planted
    from freezeout.emulator import MachineProfile, run_cycles

    inst = small_planted(17, max_spins=16)
    sch = bundled_schedule()
    cycles = run_cycles(inst, MachineProfile("hot", sch, sigma_j=0, sigma_h=0, s_star_fixed=0.7), 2)
    r = make_record("i", "hot", [c.P0 for c in cycles], brute_force_dos(inst), sch, 20_000)
    assert abs(r.median_beta - cycles[0].beta_used) < 0.1
    assert abs(r.s_star - 0.7) < 0.01 and r.q_star > 0
    assert len(r.betas) == 22 and r.flags == ""
