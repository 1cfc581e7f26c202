"""How often DeepZ's lower bound is at least IBP's, on random instances.

Reports the rate under three filters (verified by either domain, by DeepZ,
by both), since the answer depends on which instances count.

    python scripts/dominance_rate.py --count 40000
"""

import argparse

import numpy as np

from proofkit.instances import random_instance
from proofkit.verifier import verify


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--count", type=int, default=10000, help="random instances to draw")
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    tallies = {"either": [0, 0], "deepz": [0, 0], "both": [0, 0]}
    for _ in range(args.count):
        inst = random_instance(rng)
        z = verify(inst.net, inst.region, inst.prop, "deepz")
        b = verify(inst.net, inst.region, inst.prop, "ibp")
        win = z.lambda_ >= b.lambda_ - 1e-12
        for key, cond in (("either", z.verified or b.verified), ("deepz", z.verified),
                          ("both", z.verified and b.verified)):
            if cond:
                tallies[key][0] += win
                tallies[key][1] += 1
    for key, (w, t) in tallies.items():
        se = np.sqrt(w / t * (1 - w / t) / t) if t else float("nan")
        print(f"verified by {key:6s}: {w}/{t} = {100 * w / max(t, 1):.2f}% (se {100 * se:.2f}%)")


if __name__ == "__main__":
    main()
