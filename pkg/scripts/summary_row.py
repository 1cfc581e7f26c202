"""Summary row (proved count, bound and kept sizes) for one network, dataset and epsilon.

Defaults to the bundled mini-MNIST network. For a converted pretrained
network pass --network/--dataset; the columns are the same.

    python scripts/summary_row.py --epsilon 0.02 --count 200
"""

import argparse
import json
import tempfile
from importlib.resources import files
from pathlib import Path

from proofkit.cli import main as cli

DATA = files("proofkit") / "data"


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--network", default=str(DATA / "mini_mnist.json"))
    ap.add_argument("--dataset", default=str(DATA / "mini_mnist_test.csv"))
    ap.add_argument("--epsilon", type=float, default=0.02)
    ap.add_argument("--count", type=int, default=500)
    ap.add_argument("--domain", default="deepz")
    ap.add_argument("--out-dir")
    args = ap.parse_args()

    out = Path(args.out_dir or tempfile.mkdtemp(prefix="summary-"))
    code = cli(["batch", "--network", args.network, "--dataset", args.dataset, "--epsilon",
                str(args.epsilon), "--count", str(args.count), "--domain", args.domain,
                "--out-dir", str(out)])
    if code:
        raise SystemExit(code)
    s = json.loads((out / "report.json").read_text())["summary"]
    cols = ["eps", "proved", "features", "thm2 mean", "thm2 median", "supfex mean",
            "supfex median", "<=5", "<=10"]
    row = [args.epsilon, s["proved_count"], s["feature_count_full"], s["thm2_mean"], s["thm2_median"],
           s["supfex_mean"], s["supfex_median"], s["proofs_le5"], s["proofs_le10"]]
    print("| " + " | ".join(cols) + " |")
    print("|" + "---|" * len(cols))
    print("| " + " | ".join(f"{v:.2f}" if isinstance(v, float) else str(v) for v in row) + " |")
    print(f"report: {out / 'report.json'}")


if __name__ == "__main__":
    main()
