"""Distribution of |SuPFEx kept set| / |exhaustive minimum| on small nets.

Bias-only proofs (empty kept set) are counted separately: the exhaustive
search looks for the smallest nonempty set, so no ratio is defined there.

    python scripts/oracle_gap_report.py --count 500 --max-width 12
"""

import argparse
from collections import Counter
from fractions import Fraction

import numpy as np

from proofkit.instances import InstanceConfig, verified_instance
from proofkit.oracle import exhaustive_min_sufficient
from proofkit.supfex import supfex_extract


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--count", type=int, default=200)
    ap.add_argument("--max-width", type=int, default=10)
    ap.add_argument("--domain", choices=("ibp", "deepz"), default="deepz")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    cfg = InstanceConfig(width=(2, args.max_width))
    ratios, bias_only = Counter(), 0
    for _ in range(args.count):
        inst = verified_instance(rng, args.domain, cfg)
        out = supfex_extract(inst.net, inst.region, inst.prop, args.domain)
        if not out.kept:
            bias_only += 1
            continue
        best = exhaustive_min_sufficient(inst.net, inst.region, inst.prop, args.domain)
        ratios[Fraction(len(out.kept), len(best))] += 1
    n = sum(ratios.values())
    print(f"{n} instances with a ratio, {bias_only} bias-only")
    for r, k in sorted(ratios.items()):
        print(f"{float(r):6.3f} ({r})  {k:5d}  {100 * k / n:5.1f}%")


if __name__ == "__main__":
    main()
