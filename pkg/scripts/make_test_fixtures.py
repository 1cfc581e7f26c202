"""Regenerate tests/data: a tiny network, a few images and golden CLI records.

Every golden supfex record is checked against the exhaustive oracle before
it is written, so the goldens are not just snapshots of whatever the code did.
"""

import json
import sys
from pathlib import Path

import numpy as np

from proofkit.cli import main
from proofkit.datasets import save_dataset_csv
from proofkit.model import forward, network_to_document, random_network
from proofkit.oracle import exhaustive_min_sufficient
from proofkit.verifier import DecisionEvaluator, analyze, build_region, robustness_property

OUT = Path(__file__).resolve().parent.parent / "tests" / "data"
EPS = 0.05


def run(*argv):
    path = OUT / "_tmp.json"
    code = main(list(argv) + ["--output", str(path)])
    assert code == 0, argv
    doc = json.loads(path.read_text())
    path.unlink()
    return doc


def main_():
    OUT.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(2027)
    net = random_network(rng, [6, 10, 8, 3], name="tiny-6-10-8-3")
    images = rng.uniform(0, 1, (8, 6))
    labels = np.array([int(np.argmax(forward(net, x))) for x in images])
    labels[-1] = (labels[-1] + 1) % 3  # one misclassified image for batch tests
    (OUT / "tiny_net.json").write_text(json.dumps(network_to_document(net), indent=1))
    save_dataset_csv(OUT / "tiny_images.csv", images, labels)

    goldens = []
    for i in range(len(images) - 1):
        common = ["--network", str(OUT / "tiny_net.json"), "--dataset", str(OUT / "tiny_images.csv"),
                  "--index", str(i), "--epsilon", str(EPS)]
        ver = run("verify", *common)["record"]
        sup = run("supfex", *common)
        rec = sup["record"]
        region = build_region(images[i], EPS)
        prop = robustness_property(3, int(labels[i]))
        if rec["verified"]:
            ev = DecisionEvaluator(analyze(net, region), net, prop)
            assert ev.sufficient(rec["kept_indices"])
            best = exhaustive_min_sufficient(net, region, prop)
            assert not rec["kept_indices"] or len(best) <= len(rec["kept_indices"])
        goldens.append({"index": i, "verify": ver, "supfex": rec, "kept_features": sup["kept_features"]})
    (OUT / "golden_records.json").write_text(json.dumps(goldens, indent=1, sort_keys=True))
    print(f"wrote {len(goldens)} golden records to {OUT}", file=sys.stderr)


if __name__ == "__main__":
    main_()
