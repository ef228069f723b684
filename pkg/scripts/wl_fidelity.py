"""Wang-Landau acceptance rate against exact low levels, per flatness criterion.

Prints how many of the sampled 12-16 spin instances pass the 5% rule and the
RMS log-degeneracy error of the ensemble at the two lowest levels.
"""
import argparse
import math
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))
from conftest import small_planted  # noqa: E402
from freezeout.degeneracy import WlConfig, count_low_levels, validate_dos, wang_landau_ensemble  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--instances", type=int, default=100)
    ap.add_argument("--runs", type=int, default=20)
    ap.add_argument("--criteria", nargs="+", default=["lowest", "min"])
    ap.add_argument("--seed", type=int, default=30)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    insts = []
    while len(insts) < args.instances:
        inst = small_planted(int(rng.integers(2**31)), max_spins=16)
        if inst.n >= 12:
            insts.append(inst)
    exact = [count_low_levels(i) for i in insts]
    for crit in args.criteria:
        cfg = WlConfig(runs=args.runs, criterion=crit)
        ok, err = 0, []
        for k, (inst, ll) in enumerate(zip(insts, exact)):
            dos = wang_landau_ensemble(inst, cfg, k)
            ok += validate_dos(dos, ll, 0.05).accepted
            err.append((dos.log_g_at(ll.E0) - math.log(ll.g0), dos.log_g_at(ll.E1) - math.log(ll.g1)))
        rms = np.sqrt(np.mean(np.square(err), axis=0))
        print(f"{crit:<7} accepted {ok}/{len(insts)}  rms log-g error E0 {rms[0]:.4f} E1 {rms[1]:.4f}")


if __name__ == "__main__":
    main()
