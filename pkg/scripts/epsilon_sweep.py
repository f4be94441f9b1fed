"""Held-out firsts for several margins epsilon (both schemes)."""

import argparse
import csv
import sys

from _common import train_eval
from kbpot.synthgen import desk_scale_config, generate


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--epsilons", type=float, nargs="+", default=[0.005, 0.01, 0.02, 0.05])
    args = ap.parse_args(argv)

    ens = generate(desk_scale_config(args.seed))
    w = csv.writer(sys.stdout)
    w.writerow(["scheme", "epsilon", "n_firsts", "average_rank", "objective"])
    for scheme in ("LPKP1", "LPKP2"):
        for eps in args.epsilons:
            s, rep, _ = train_eval(ens[:20], ens[20:], scheme=scheme, epsilon=eps, decoys_per_protein=40)
            w.writerow([scheme, eps, s.n_firsts, f"{s.average_rank:.2f}", f"{rep.objective_value:.3g}"])
            sys.stdout.flush()


if __name__ == "__main__":
    main()
