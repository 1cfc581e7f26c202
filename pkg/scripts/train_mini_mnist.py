"""Train the bundled mini-MNIST network once and write it in the tool's format.

Uses scikit-learn's 8x8 digits (shipped with the library, no download).
Writes src/proofkit/data/mini_mnist.json and mini_mnist_test.csv.

    python scripts/train_mini_mnist.py
"""

import argparse
import json
from pathlib import Path

import numpy as np
from sklearn.datasets import load_digits
from sklearn.model_selection import train_test_split
from sklearn.neural_network import MLPClassifier

from proofkit.datasets import save_dataset_csv

DATA = Path(__file__).resolve().parents[1] / "src" / "proofkit" / "data"


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--hidden", type=int, default=12)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--test-size", type=int, default=200)
    args = ap.parse_args()

    digits = load_digits()
    x = digits.data / 16.0
    y = digits.target
    x_tr, x_te, y_tr, y_te = train_test_split(
        x, y, test_size=args.test_size, random_state=args.seed, stratify=y
    )
    clf = MLPClassifier(
        hidden_layer_sizes=(args.hidden,), activation="relu", alpha=1e-3,
        max_iter=2000, random_state=args.seed,
    )
    clf.fit(x_tr, y_tr)
    print(f"train acc {clf.score(x_tr, y_tr):.4f}  test acc {clf.score(x_te, y_te):.4f}")

    layers = []
    for k, (w, b) in enumerate(zip(clf.coefs_, clf.intercepts_)):
        last = k == len(clf.coefs_) - 1
        layers.append({
            "type": "dense",
            "weights": w.T.tolist(),
            "bias": b.tolist(),
            "activation": "none" if last else "relu",
        })
    doc = {"name": f"mini-mnist-64-{args.hidden}-10", "input_shape": [8, 8], "layers": layers}
    n_params = sum(np.size(w) + np.size(b) for w, b in zip(clf.coefs_, clf.intercepts_))
    print(f"{n_params} parameters")
    DATA.mkdir(parents=True, exist_ok=True)
    (DATA / "mini_mnist.json").write_text(json.dumps(doc))
    save_dataset_csv(DATA / "mini_mnist_test.csv", x_te, y_te)


if __name__ == "__main__":
    main()
