import math

import numpy as np
import pytest
from scipy.special import logsumexp

from freezeout.degeneracy import brute_force_dos
from freezeout.emulator import (
    EliminationSampler,
    MachineProfile,
    McmcConfig,
    boltzmann_sample,
    draw_s_star,
    elimination_order,
    machine_beta,
    run_cycles,
    success_probability,
)
from freezeout.instance import apply_noise, energies, energy, generate_planted, problem_arrays
from freezeout.schedule import bundled_schedule
from freezeout.thermometry import delta_p0, predicted_p0
from freezeout.topology import intersected_chimera

from conftest import small_planted

LN3_2 = math.log(3) / 2


def level_probs(inst, beta):
    dos = brute_force_dos(inst)
    logw = dos.log_g - beta * dos.energies * dos.scale
    return dos.energies, np.exp(logw - logsumexp(logw))


def test_huge_beta_returns_ground_states():
    inst = small_planted(1, max_spins=12)
    E = energies(inst, boltzmann_sample(inst, 1e3, 2000, seed=0))
    assert np.all(E == energy(inst, inst.planted_array))


def test_zero_beta_is_uniform():
    inst = small_planted(2, max_spins=14)
    dos = brute_force_dos(inst)
    p = dos.g[0] / 2**inst.n
    n = 50_000
    got = success_probability(boltzmann_sample(inst, 0.0, n, seed=1), inst, dos.E0)
    assert abs(got - p) <= 3 * math.sqrt(p * (1 - p) / n)


@pytest.mark.parametrize("method", ["exact", "eliminate", "mcmc"])
def test_ferro_pair_closed_form(ferro_pair, method):
    n = 20_000
    got = success_probability(boltzmann_sample(ferro_pair, LN3_2, n, seed=2, method=method), ferro_pair, -1)
    assert abs(got - 0.75) <= 3 * delta_p0(0.75, n)


@pytest.mark.parametrize("method", ["exact", "eliminate"])
def test_level_frequencies(method):
    inst = small_planted(3, max_spins=16)
    beta = 2.0
    levels, p = level_probs(inst, beta)
    n = 100_000
    E = energies(inst, boltzmann_sample(inst, beta, n, seed=4, method=method))
    for lvl, pk in zip(levels, p):
        freq = np.mean(E == lvl)
        assert abs(freq - pk) <= 4 * math.sqrt(pk * (1 - pk) / n) + 1e-12


def test_elimination_partition_function():
    inst = small_planted(5, max_spins=16)
    noisy = apply_noise(inst, 0.05, 0.03, seed=1)
    ei, ej, J, h = problem_arrays(noisy)
    beta = 3.0
    es = EliminationSampler(inst.n, ei, ej, J, h, beta)
    # brute-force partition function of the noisy problem
    states = 1 - 2 * ((np.arange(2**inst.n)[:, None] >> np.arange(inst.n)) & 1)
    E = (states[:, ei] * states[:, ej]) @ J + states @ h
    assert es.log_z == pytest.approx(logsumexp(-beta * E), rel=1e-12)


def test_elimination_width_small_on_chimera():
    inst = generate_planted(intersected_chimera(3), 0.5, 3, seed=1)
    _, width = elimination_order(inst.n, *inst.arrays[:2])
    assert width <= 4 * 3 + 1


def test_success_probability_examples():
    inst = small_planted(6, max_spins=10)
    E0 = energy(inst, inst.planted_array)
    ground = np.tile(inst.planted_array, (5, 1))
    assert success_probability(ground, inst, E0) == 1.0
    assert success_probability(-ground[:0], inst, E0) == 0.0
    rng = np.random.default_rng(0)
    batch = rng.choice([-1, 1], size=(10, inst.n)).astype(np.int8)
    batch[:3] = inst.planted_array
    hand = sum(energy(inst, s) == E0 for s in batch)
    assert success_probability(batch, inst, E0) == hand / 10


def test_profile_defaults():
    prof = MachineProfile("hot", bundled_schedule())
    assert (prof.cycles, prof.anneals_per_cycle, prof.anneal_time_us) == (22, 20_000, 20.0)
    assert (prof.sigma_j, prof.sigma_h, prof.log_coeff) == (0.05, 0.03, 0.0)
    assert prof.mcmc == McmcConfig(1000, 1, 1000)


@pytest.mark.parametrize("kw", [dict(anneals_per_cycle=0), dict(s_star_range=(0.0, 1.0)), dict(method="x")])
def test_profile_validation(kw):
    with pytest.raises(ValueError):
        MachineProfile("hot", bundled_schedule(), **kw)


def test_zero_noise_cycles_match_analytic():
    inst = small_planted(17, max_spins=16)
    # pinned freeze-out keeps P0 away from 1, where the normal error model fails
    prof = MachineProfile("hot", bundled_schedule(), sigma_j=0, sigma_h=0, s_star_fixed=0.6)
    cycles = run_cycles(inst, prof, master_seed=3)
    assert len(cycles) == 22
    beta = cycles[0].beta_used
    p = predicted_p0(brute_force_dos(inst), beta)
    assert 0.05 < p < 0.95
    for c in cycles:
        assert c.n_anneals == 20_000 and sum(c.histogram.values()) == 20_000
        assert abs(c.P0 - p) <= 3 * delta_p0(p, 20_000)
        assert c.method == "exact"


def test_beta_from_shared_freeze_out():
    inst = small_planted(8)
    hot = MachineProfile("hot", bundled_schedule(16.0))
    cold = MachineProfile("cold", bundled_schedule(13.2))
    s_hot, s_cold = draw_s_star(hot, 5, inst.seed), draw_s_star(cold, 5, inst.seed)
    assert s_hot == s_cold and 0.6 <= s_hot <= 1.0
    assert machine_beta(cold, s_cold) / machine_beta(hot, s_hot) == pytest.approx(16.0 / 13.2, rel=1e-12)


def test_log_anneal_time_raises_success():
    sch = bundled_schedule()
    short, long_ = [], []
    for k in range(20):
        inst = small_planted(200 + k, max_spins=14)
        kw = dict(log_coeff=0.05, cycles=2, anneals_per_cycle=2000, sigma_j=0, sigma_h=0, s_star_range=(0.6, 0.9))
        a = run_cycles(inst, MachineProfile("hot", sch, anneal_time_us=20.0, **kw), 1)
        b = run_cycles(inst, MachineProfile("hot", sch, anneal_time_us=40.0, **kw), 1)
        assert b[0].s_star > a[0].s_star and b[0].beta_used > a[0].beta_used
        short.append(np.mean([c.P0 for c in a]))
        long_.append(np.mean([c.P0 for c in b]))
    assert np.median(long_) >= np.median(short)


def test_s_star_clamped_with_warning():
    prof = MachineProfile("hot", bundled_schedule(), s_star_fixed=0.99, log_coeff=0.1, anneal_time_us=40.0)
    with pytest.warns(RuntimeWarning):
        assert draw_s_star(prof, 0, 1) == 1.0


def test_cycles_deterministic():
    inst = small_planted(9)
    prof = MachineProfile("hot", bundled_schedule(), cycles=3, anneals_per_cycle=500)
    assert run_cycles(inst, prof, 11) == run_cycles(inst, prof, 11)
    assert run_cycles(inst, prof, 11) != run_cycles(inst, prof, 12)


def test_eliminate_path_for_larger_instances():
    inst = generate_planted(intersected_chimera(2), 0.5, 3, seed=3)
    prof = MachineProfile("hot", bundled_schedule(), cycles=2, anneals_per_cycle=1000)
    cycles = run_cycles(inst, prof, 1)
    assert cycles[0].method == "eliminate"
    assert all(0 <= c.P0 <= 1 for c in cycles)


def test_mcmc_determinism_and_shape(ferro_pair):
    cfg = McmcConfig(burn_in_sweeps=10, thin_sweeps=2, samples_per_chain=7)
    a = boltzmann_sample(ferro_pair, 1.0, 20, seed=3, method="mcmc", mcmc=cfg)
    assert a.shape == (20, 2) and a.dtype == np.int8
    assert np.array_equal(a, boltzmann_sample(ferro_pair, 1.0, 20, seed=3, method="mcmc", mcmc=cfg))


def test_sampler_argument_checks(ferro_pair):
    with pytest.raises(ValueError):
        boltzmann_sample(ferro_pair, -1.0, 10, 0)
    with pytest.raises(ValueError):
        boltzmann_sample(ferro_pair, 1.0, 0, 0)
