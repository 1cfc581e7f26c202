"""Acceptance criteria, one check per criterion.

Each check returns (passed, detail) and prints a ``PASS``/``FAIL`` line.
Run under pytest, or directly: ``python tests/test_acceptance.py``.
"""

import itertools
import json
import math
import statistics
import subprocess
import sys
import tempfile
import time
from importlib.resources import files
from pathlib import Path

import numpy as np
import pytest

from proofkit.domains import Zonotope, min_linear
from proofkit.instances import InstanceConfig, random_instance, verified_instance
from proofkit.model import forward_trace, gradient_wrt_input, penultimate, random_network
from proofkit.oracle import exact_priority, exhaustive_min_sufficient, sampling_soundness
from proofkit.supfex import (
    call_budget,
    compute_delta,
    compute_priorities,
    delta_set,
    supfex_extract,
    theorem2_bound,
    zero_features,
)
from proofkit.verifier import DecisionEvaluator, analyze, build_region, verify

MINI_NET = files("proofkit") / "data" / "mini_mnist.json"
MINI_DATA = files("proofkit") / "data" / "mini_mnist_test.csv"
ORACLE_SCALE = InstanceConfig(width=(2, 10))


def report(number, passed, detail):
    line = f"{'PASS' if passed else 'FAIL'} criterion {number:2d}: {detail}"
    print(line, flush=True)
    return passed, detail


def c1_soundness():
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    worst = {"ibp": 0.0, "deepz": 0.0}
    violations = 0
    for _ in range(100):
        layers = int(rng.integers(2, 5))
        widths = [int(rng.integers(2, 33)) for _ in range(layers + 1)]
        net = random_network(rng, widths)
        for _ in range(10):
            eps = float(10 ** rng.uniform(-3, -0.5))
            region = build_region(rng.uniform(0, 1, widths[0]), eps)
            seed = int(rng.integers(2**31))
            for dom in worst:
                excess = sampling_soundness(net, region, dom, count=1000, seed=seed)
                worst[dom] = max(worst[dom], excess)
                violations += excess > 1e-9
    dt = time.perf_counter() - t0
    ok = violations == 0 and dt < 60.0
    return report(1, ok, f"soundness: {violations} violations over 2000 runs x 1000 samples, "
                         f"max excess ibp={worst['ibp']:.1e} deepz={worst['deepz']:.1e}, {dt:.1f}s")


def c2_min_linear():
    rng = np.random.default_rng(102)
    worst = 0.0
    for _ in range(500):
        d, g = int(rng.integers(1, 8)), int(rng.integers(0, 13))
        z = Zonotope(rng.normal(size=d), rng.normal(size=(d, g)))
        a, c = rng.normal(size=d), float(rng.normal())
        signs = np.array(list(itertools.product((-1.0, 1.0), repeat=g)))
        brute = float((a @ z.center + c + signs @ (z.generators.T @ a)).min()) if g else a @ z.center + c
        worst = max(worst, abs(min_linear(z, a, c) - brute))
    return report(2, worst <= 1e-9, f"min_linear vs 2^g enumeration on 500 zonotopes: max error {worst:.1e}")


def c3_c4_c7(rng_seed=103, count=200):
    rng = np.random.default_rng(rng_seed)
    sufficient = within = budget = 0
    for k in range(count):
        domain = ("deepz", "ibp")[k % 2]
        inst = verified_instance(rng, domain)
        out = supfex_extract(inst.net, inst.region, inst.prop, domain)
        ev = DecisionEvaluator(analyze(inst.net, inst.region, domain), inst.net, inst.prop)
        sufficient += ev.sufficient(out.kept)
        fs = out.features
        # independent recomputation of the bound, compared with the library's
        p_max = fs.priorities.max()
        slack = math.floor(out.lambda_full / p_max) if p_max > 0 else 0
        bound = max(len(fs) - len(zero_features(fs)) - slack, 0)
        within += out.bound_thm2 == theorem2_bound(fs, out.lambda_full) == bound and len(out.kept) <= bound
        budget += out.verifier_calls <= call_budget(out.width)
    return sufficient, within, budget, count


_SUPFEX_STATS = {}


def _supfex_stats():
    if not _SUPFEX_STATS:
        _SUPFEX_STATS["v"] = c3_c4_c7()
    return _SUPFEX_STATS["v"]


def c3_kept_set_sufficient():
    s, _, _, n = _supfex_stats()
    return report(3, s == n, f"kept set re-verifies as sufficient in {s}/{n} instances")


def c4_size_bound():
    _, w, _, n = _supfex_stats()
    return report(4, w == n, f"|kept| <= d - |Z| - floor(lambda/P_max) in {w}/{n} instances")


def c5_delta_bounds():
    rng = np.random.default_rng(105)
    bad1 = bad2 = antecedent = 0
    for _ in range(1000):
        dom = ("deepz", "ibp")[int(rng.integers(2))]
        inst = verified_instance(rng, dom)
        a = analyze(inst.net, inst.region, dom)
        fs = compute_priorities(a, inst.net, inst.prop)
        ev = DecisionEvaluator(a, inst.net, inst.prop)
        d = ev.width
        s = {i for i in range(d) if rng.random() < rng.uniform(0.2, 0.9)}
        delta = delta_set(a, inst.net, inst.prop, s)
        outside = sum(fs[i].priority for i in range(d) if i not in s)
        bad1 += delta > outside + 1e-9
        lam = ev.lam(range(d))
        if delta <= lam:
            antecedent += 1
            bad2 += not ev.sufficient(s)
    ok = bad1 == 0 and bad2 == 0
    return report(5, ok, f"delta <= sum of pruned P_ub: {bad1}/1000 counterexamples; "
                         f"delta <= lambda implies sufficient: {bad2}/{antecedent} counterexamples")


def c6_priority_chain():
    rng = np.random.default_rng(106)
    bad_exact = bad_delta = probes = 0
    for k in range(200):
        domain = ("deepz", "ibp")[k % 2]
        inst = verified_instance(rng, domain, ORACLE_SCALE)
        a = analyze(inst.net, inst.region, domain)
        fs = compute_priorities(a, inst.net, inst.prop)
        d = len(fs)
        for i in range(d):
            probes += 1
            bad_exact += exact_priority(inst.net, inst.region, inst.prop, domain, i) > fs[i].priority + 1e-9
            s = {j for j in range(d) if rng.random() < 0.6} | {i}
            bad_delta += compute_delta(a, inst.net, inst.prop, s, i) > fs[i].priority + 1e-9
    ok = bad_exact == 0 and bad_delta == 0
    return report(6, ok, f"exact_priority <= P_ub: {bad_exact} and delta <= P_ub: {bad_delta} "
                         f"counterexamples over {probes} features")


def c7_call_budget():
    _, _, b, n = _supfex_stats()
    # oracle-scale widths hit small-d edge cases of the budget formula
    rng = np.random.default_rng(107)
    extra = 0
    for d in range(1, 40):
        net = random_network(rng, [4, 6, d, 3])
        inst = random_instance(rng, net=net)
        out = supfex_extract(inst.net, inst.region, inst.prop)
        extra += out.verifier_calls <= call_budget(d)
    return report(7, b == n and extra == 39,
                  f"verifier_calls within 2*ceil(log2 d)+2 on {b}/{n} runs and {extra}/39 width sweeps")


def c8_oracle_gap():
    rng = np.random.default_rng(108)
    ratios, bias_only = [], 0
    for k in range(200):
        domain = ("deepz", "ibp")[k % 2]
        inst = verified_instance(rng, domain, ORACLE_SCALE)
        out = supfex_extract(inst.net, inst.region, inst.prop, domain)
        if not out.kept:
            bias_only += 1
            continue
        best = exhaustive_min_sufficient(inst.net, inst.region, inst.prop, domain)
        ratios.append(len(out.kept) / len(best))
    finite = bool(ratios) and all(math.isfinite(r) and r >= 1.0 for r in ratios)
    exact = sum(r == 1.0 for r in ratios)
    detail = (f"|kept|/|minimum| over {len(ratios)} instances ({bias_only} bias-only skipped): "
              f"mean {statistics.fmean(ratios):.3f}, median {statistics.median(ratios):.3f}, "
              f"max {max(ratios):.3f}, optimal in {exact}") if ratios else "no comparable instances"
    return report(8, finite, detail)


def c9_gradients():
    rng = np.random.default_rng(109)
    probes = skipped = 0
    worst = 0.0
    h = 1e-5
    while probes < 1000:
        widths = [int(rng.integers(2, 12)) for _ in range(int(rng.integers(3, 5)))]
        net = random_network(rng, widths)
        x = rng.uniform(0.1, 0.9, widths[0])
        neuron = int(rng.integers(net.penultimate_width))
        pattern = _relu_pattern(net, x)
        fd = np.empty(net.input_dim)
        kink = False
        for k in range(net.input_dim):
            e = np.zeros(net.input_dim)
            e[k] = h
            if _relu_pattern(net, x + e) != pattern or _relu_pattern(net, x - e) != pattern:
                kink = True
                break
            fd[k] = (penultimate(net, x + e)[neuron] - penultimate(net, x - e)[neuron]) / (2 * h)
        if kink:
            skipped += 1
            continue
        g = gradient_wrt_input(net, x, neuron)
        scale = max(np.max(np.abs(fd)), 1e-8)
        worst = max(worst, float(np.max(np.abs(g - fd)) / scale))
        probes += 1
    return report(9, worst <= 1e-5, f"gradient vs central differences on {probes} probes "
                                    f"({skipped} near kinks skipped): max relative error {worst:.1e}")


def _relu_pattern(net, x):
    return tuple(bool(v) for pre, _ in forward_trace(net, x)[:-1] for v in (pre > 0))


def _cli(*argv):
    return subprocess.run([sys.executable, "-m", "proofkit.cli", *argv], capture_output=True, check=True)


def c10_determinism():
    base = ["--network", str(MINI_NET), "--dataset", str(MINI_DATA), "--index", "2", "--epsilon", "0.01"]
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        outs = []
        for run in ("a", "b"):
            _cli("supfex", *base, "--output", str(tmp / f"{run}.json"))
            _cli("gradmap", *base, "--ranks", "0..3", "--out-dir", str(tmp / run))
            outs.append({p.name: p.read_bytes() for p in sorted((tmp / run).iterdir())}
                        | {"supfex": (tmp / f"{run}.json").read_bytes()})
        same = outs[0] == outs[1] and len(outs[0]) == 5
    return report(10, same, f"supfex JSON and {len(outs[0]) - 1} gradient PGMs byte-identical across two runs")


SUMMARY_COLUMNS = ("images", "misclassified", "analyzed", "proved_count", "feature_count_full",
                  "thm2_mean", "thm2_median", "supfex_mean", "supfex_median", "proofs_le5",
                  "proofs_le10", "histogram")


def c11_summary_report():
    with tempfile.TemporaryDirectory() as tmp:
        _cli("batch", "--network", str(MINI_NET), "--dataset", str(MINI_DATA), "--epsilon", "0.02",
             "--count", "200", "--out-dir", tmp)
        s = json.loads((Path(tmp) / "report.json").read_text())["summary"]
    populated = all(s.get(k) not in (None, {}) for k in SUMMARY_COLUMNS)
    ok = populated and s["supfex_mean"] < s["thm2_mean"]
    return report(11, ok, f"mini-MNIST eps=0.02: proved {s['proved_count']}/{s['analyzed']}, "
                          f"supfex mean {s['supfex_mean']:.2f} (median {s['supfex_median']}) vs "
                          f"thm2 mean {s['thm2_mean']:.2f} (median {s['thm2_median']}), "
                          f"{s['feature_count_full']} features")


def c12_dominance():
    rng = np.random.default_rng(112)
    wins = total = 0
    while total < 1000:
        inst = random_instance(rng)
        z = verify(inst.net, inst.region, inst.prop, "deepz")
        b = verify(inst.net, inst.region, inst.prop, "ibp")
        if not (z.verified or b.verified):
            continue
        total += 1
        wins += z.lambda_ >= b.lambda_ - 1e-12
    return report(12, wins >= 990, f"DeepZ lambda >= IBP lambda on {wins}/{total} verified instances "
                                   f"({100 * wins / total:.1f}%, need 99%)")


CRITERIA = [c1_soundness, c2_min_linear, c3_kept_set_sufficient, c4_size_bound, c5_delta_bounds, c6_priority_chain,
            c7_call_budget, c8_oracle_gap, c9_gradients, c10_determinism, c11_summary_report, c12_dominance]


@pytest.mark.parametrize("check", CRITERIA, ids=lambda f: f.__name__)
def test_acceptance(check, capsys):
    with capsys.disabled():
        print()
        passed, detail = check()
    assert passed, detail


if __name__ == "__main__":
    results = [check()[0] for check in CRITERIA]
    print(f"{sum(results)}/{len(results)} criteria passed")
    sys.exit(0 if all(results) else 1)
