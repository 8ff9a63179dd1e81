"""Halving-dt study of the drift of I_2..I_kmax over many seeds.

For each seed prints the drifts and the observed order log2(d(dt)/d(dt/2))
for every pair; the finest pair is the reported order.
"""

import argparse

from kplaws import lawgen, sim


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--modes", type=int, default=8)
    ap.add_argument("--k-max", type=int, default=5)
    ap.add_argument("--dt0", type=float, default=0.005)
    ap.add_argument("--halvings", type=int, default=3)
    ap.add_argument("--horizon", type=float, default=1.0)
    ap.add_argument("--seeds", type=int, nargs="*", default=list(range(12)))
    ap.add_argument("--precision", choices=sorted(sim.PRECISIONS), default="extended")
    ap.add_argument("--band", type=float, nargs=2, default=(3.7, 4.3))
    args = ap.parse_args()

    system = sim.ModeSystem.default(args.modes)
    invs = {f"I_{k}": lawgen.gen_invariant(k) for k in range(2, args.k_max + 1)}
    lo, hi = args.band
    n_ok = 0
    for seed in args.seeds:
        init = sim.initial_data(system, seed=seed)
        study = sim.convergence_study(system, init, args.horizon, args.dt0, invs, args.halvings, args.precision)
        finest = {name: o[-1] for name, o in study["orders"].items()}
        ok = all(lo <= o <= hi for o in finest.values())
        n_ok += ok
        print(f"seed {seed}: " + "  ".join(f"{n} {o:.3f}" for n, o in finest.items()) + ("" if ok else "  <- outside band"))
        for name, d in study["drifts"].items():
            print(f"    {name} drifts " + " ".join(f"{x:.2e}" for x in d))
    print(f"{n_ok}/{len(args.seeds)} seeds inside [{lo}, {hi}]")


if __name__ == "__main__":
    main()
