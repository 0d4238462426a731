"""Mean matched Jarodzka cost of the four baselines on synthetic datasets.

    python scripts/baseline_table.py --seeds 0 1 2 3 4 --k 3
"""
import argparse

import numpy as np

from scanpath_gan.experiments import BASELINE_KINDS, baseline_costs
from scanpath_gan.synthetic import SyntheticSpec


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    p.add_argument("--k", type=int, default=None, help="scanpaths per image (default: observers per image)")
    p.add_argument("--images", type=int, default=200)
    args = p.parse_args()

    rows = []
    print("seed  " + "  ".join(f"{k:>11}" for k in BASELINE_KINDS))
    for s in args.seeds:
        c = baseline_costs(s, args.k, SyntheticSpec(n_images=args.images, seed=s))
        rows.append([c[k] for k in BASELINE_KINDS])
        print(f"{s:>4}  " + "  ".join(f"{v:>11.4f}" for v in rows[-1]))
    print("mean  " + "  ".join(f"{v:>11.4f}" for v in np.mean(rows, axis=0)))


if __name__ == "__main__":
    main()
