"""Held-out firsts as a function of decoys per training protein.

    python scripts/decoy_sweep.py --seeds 0 1 2 --counts 5 10 15 20 25 35 40
"""

import argparse
import csv
import sys

from _common import train_eval
from kbpot.synthgen import desk_scale_config, generate


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, nargs="+", default=[0])
    ap.add_argument("--counts", type=int, nargs="+", default=[5, 10, 20, 40])
    ap.add_argument("--scheme", default="LPKP1")
    ap.add_argument("--out", help="CSV path (default stdout)")
    args = ap.parse_args(argv)

    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(fh)
    w.writerow(["seed", "decoys_per_protein", "n_firsts", "average_rank", "objective", "seconds"])
    for seed in args.seeds:
        ens = generate(desk_scale_config(seed))
        for k in args.counts:
            s, rep, secs = train_eval(ens[:20], ens[20:], scheme=args.scheme, decoys_per_protein=k)
            w.writerow([seed, k, s.n_firsts, f"{s.average_rank:.2f}", f"{rep.objective_value:.3g}", f"{secs:.1f}"])
            fh.flush()


if __name__ == "__main__":
    main()
