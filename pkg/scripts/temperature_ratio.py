"""Recovered cold/hot effective-temperature ratio for two emulated machines.

Both machines share the bundled B curve and per-instance freeze-out points
and differ only in temperature, so the fitted ratio should sit at the ideal
ratio of inverse temperatures whatever the control-noise level.
"""
import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))
from conftest import small_planted  # noqa: E402
from freezeout.degeneracy import brute_force_dos  # noqa: E402
from freezeout.emulator import MachineProfile, run_cycles  # noqa: E402
from freezeout.schedule import T_COLD_MK, T_HOT_MK, beta_ideal, bundled_schedule  # noqa: E402
from freezeout.thermometry import compare_machines, make_record  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--instances", type=int, default=100)
    ap.add_argument("--sigmas", type=float, nargs="+", default=[0.0, 0.05])
    ap.add_argument("--seed", type=int, default=70)
    args = ap.parse_args()

    hot, cold = bundled_schedule(T_HOT_MK, "hot"), bundled_schedule(T_COLD_MK, "cold")
    ideal = beta_ideal(cold) / beta_ideal(hot)
    insts = [small_planted(args.seed * 1000 + k, max_spins=20) for k in range(args.instances)]
    dos = [brute_force_dos(i) for i in insts]
    for sigma in args.sigmas:
        recs = {"hot": [], "cold": []}
        for sch in (hot, cold):
            prof = MachineProfile(sch.name, sch, sigma_j=sigma, sigma_h=0.6 * sigma, method="exact")
            for k, (inst, d) in enumerate(zip(insts, dos)):
                cyc = run_cycles(inst, prof, args.seed, instance_key=f"tr{k}")
                recs[sch.name].append(make_record(f"tr{k}", sch.name, [c.P0 for c in cyc], d, sch,
                                                  prof.anneals_per_cycle))
        rep = compare_machines(recs["hot"], recs["cold"], beta_ideal_ratio=ideal, seed=args.seed)
        lo, hi = rep.R_beta_ci
        print(f"sigma={sigma:g}: R_beta {rep.R_beta:.4f} CI [{lo:.4f}, {hi:.4f}] ideal {ideal:.4f} "
              f"pearson {rep.pearson_beta:.3f} pairs {rep.n_pairs}")


if __name__ == "__main__":
    main()
