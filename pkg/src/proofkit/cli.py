"""Command-line entry point: verify, supfex, gradmap, batch, compare, converters.

Exit codes: 0 analysis completed (verified or not), 1 usage error,
2 file or parse error.
"""

from __future__ import annotations

import argparse
import json
import os
import statistics
import sys
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .compare import ProofAgreement, aggregate_agreement, compare_verifiers
from .datasets import DatasetError, convert_idx, load_dataset, parse_eran
from .interpret import DEFAULT_SAMPLES, gradient_map, render_map, write_pgm
from .model import Network, NetworkFormatError, forward, load_network, network_to_document
from .supfex import supfex_extract
from .verifier import build_region, robustness_property, verify

EXIT_OK, EXIT_USAGE, EXIT_IO = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class PropertyRecord:
    image_index: int
    label: int
    epsilon: float
    domain: str
    verified: bool
    lambda_: float
    feature_count_full: int
    feature_count_thm2: int | None = None
    feature_count_supfex: int | None = None
    verifier_calls: int = 0
    kept_indices: list[int] = field(default_factory=list)
    bias_sufficient: bool = False
    zero_count: int | None = None

    def as_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lambda_")
        return d


@dataclass
class BatchSummary:
    images: int = 0
    misclassified: int = 0
    analyzed: int = 0
    proved_count: int = 0
    feature_count_full: int | None = None
    thm2_mean: float | None = None
    thm2_median: float | None = None
    supfex_mean: float | None = None
    supfex_median: float | None = None
    proofs_le5: int = 0
    proofs_le10: int = 0
    histogram: dict = field(default_factory=dict)


def summarize(records: list[PropertyRecord], images: int, misclassified: int) -> BatchSummary:
    proved = [r for r in records if r.verified]
    s = BatchSummary(images=images, misclassified=misclassified, analyzed=len(records),
                     proved_count=len(proved))
    if records:
        s.feature_count_full = records[0].feature_count_full
    if proved:
        thm2 = [r.feature_count_thm2 for r in proved]
        kept = [r.feature_count_supfex for r in proved]
        s.thm2_mean = statistics.fmean(thm2)
        s.thm2_median = statistics.median(thm2)
        s.supfex_mean = statistics.fmean(kept)
        s.supfex_median = statistics.median(kept)
        s.proofs_le5 = sum(k <= 5 for k in kept)
        s.proofs_le10 = sum(k <= 10 for k in kept)
        s.histogram = {str(k): v for k, v in sorted(Counter(kept).items())}
    return s


def histogram_csv(summary: BatchSummary) -> str:
    lines = ["size,count"]
    counts = {int(k): v for k, v in summary.histogram.items()}
    if counts:
        for size in range(max(counts) + 1):
            lines.append(f"{size},{counts.get(size, 0)}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# helpers
# --------------------------------------------------------------------------


def _load_net(path) -> Network:
    try:
        return load_network(path)
    except OSError as exc:
        raise FileNotFoundError(f"cannot read network {path}: {exc.strerror}") from None


def _select_image(args, net: Network) -> tuple[np.ndarray, int, int]:
    """(image, label, index) from --dataset/--index or --image/--label."""
    if args.dataset:
        ds = load_dataset(args.dataset)
        if not 0 <= args.index < len(ds):
            raise UsageError(f"--index {args.index} outside dataset of {len(ds)} images")
        x, label, idx = ds.images[args.index], int(ds.labels[args.index]), args.index
    elif args.image:
        x = np.loadtxt(args.image, delimiter=",", dtype=np.float64, ndmin=1).ravel()
        if args.label is None:
            raise UsageError("--label is required with --image")
        label, idx = args.label, 0
    else:
        raise UsageError("give either --dataset or --image")
    if args.label is not None:
        label = args.label
    if x.shape[0] != net.input_dim:
        raise DatasetError(f"image has {x.shape[0]} pixels, network expects {net.input_dim}")
    if not 0 <= label < net.num_classes:
        raise UsageError(f"label {label} outside [0, {net.num_classes})")
    return x, label, idx


def _region(x, eps):
    try:
        return build_region(x, eps)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# flags that say where output goes or how fast, not what is computed
_UNRECORDED = ("func", "command", "output", "out_dir", "jobs")


def _header(command: str, args, net: Network) -> dict:
    flags = {k: v for k, v in sorted(vars(args).items()) if k not in _UNRECORDED}
    return {"tool": "proofkit", "version": __version__, "command": command,
            "network": net.name, "flags": flags}


def _emit(doc: dict, out) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True, allow_nan=True) + "\n"
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _feature_details(outcome) -> list[dict]:
    return [
        {"rank": r, "neuron": f.neuron, "lo": f.lo, "hi": f.hi, "priority": f.priority}
        for r, f in enumerate(outcome.kept_features())
    ]


def supfex_record(net: Network, x, label: int, idx: int, eps: float, domain: str):
    outcome = supfex_extract(net, build_region(x, eps), robustness_property(net.num_classes, label), domain)
    rec = PropertyRecord(
        image_index=idx, label=label, epsilon=eps, domain=domain,
        verified=outcome.verified, lambda_=outcome.lambda_full,
        feature_count_full=outcome.width, verifier_calls=outcome.verifier_calls,
    )
    if outcome.verified:
        rec.feature_count_thm2 = outcome.bound_thm2
        rec.feature_count_supfex = len(outcome.kept)
        rec.kept_indices = list(outcome.kept)
        rec.bias_sufficient = outcome.bias_sufficient
        rec.zero_count = outcome.zero_count
    return rec, outcome


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def cmd_verify(args) -> int:
    net = _load_net(args.network)
    x, label, idx = _select_image(args, net)
    region = _region(x, args.epsilon)
    res = verify(net, region, robustness_property(net.num_classes, label), args.domain)
    rec = PropertyRecord(idx, label, args.epsilon, args.domain, res.verified, res.lambda_,
                         net.penultimate_width, verifier_calls=1)
    doc = _header("verify", args, net)
    doc["record"] = rec.as_dict()
    doc["record"]["predicted"] = int(np.argmax(forward(net, x)))
    doc["record"]["per_row_lambda"] = res.per_row_lambda.tolist()
    _emit(doc, args.output)
    return EXIT_OK


def cmd_supfex(args) -> int:
    net = _load_net(args.network)
    x, label, idx = _select_image(args, net)
    _region(x, args.epsilon)
    rec, outcome = supfex_record(net, x, label, idx, args.epsilon, args.domain)
    doc = _header("supfex", args, net)
    doc["record"] = rec.as_dict()
    doc["kept_features"] = _feature_details(outcome)
    _emit(doc, args.output)
    return EXIT_OK


def _parse_ranks(text: str) -> list[int]:
    ranks = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            a, b = part.split("..", 1)
            ranks.extend(range(int(a), int(b) + 1))
        elif part:
            ranks.append(int(part))
    if not ranks or min(ranks) < 0:
        raise UsageError(f"bad --ranks {text!r}")
    return ranks


def _image_shape(args, net: Network) -> tuple[int, int, int]:
    """(channels, height, width) for rendering."""
    if args.shape:
        dims = [int(v) for v in args.shape.lower().replace("x", ",").split(",")]
    else:
        dims = list(net.input_shape)
    if len(dims) == 2:
        dims = [1] + dims
    elif len(dims) == 1:
        dims = [1, 1, dims[0]]
    if len(dims) != 3 or int(np.prod(dims)) != net.input_dim:
        raise UsageError(f"shape {dims} does not cover {net.input_dim} inputs")
    return tuple(dims)


def cmd_gradmap(args) -> int:
    net = _load_net(args.network)
    x, label, idx = _select_image(args, net)
    region = _region(x, args.epsilon)
    ranks = _parse_ranks(args.ranks if args.ranks is not None else str(args.feature_rank))
    channels, height, width = _image_shape(args, net)
    outcome = supfex_extract(net, region, robustness_property(net.num_classes, label), args.domain)
    if not outcome.verified:
        print("property not verified; no proof features to render", file=sys.stderr)
        return EXIT_OK
    if max(ranks) >= len(outcome.kept):
        avail = f"0..{len(outcome.kept) - 1}" if outcome.kept else "none"
        raise UsageError(f"rank {max(ranks)} unavailable; kept feature ranks: {avail}")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for rank in ranks:
        neuron = outcome.kept[rank]
        gm = gradient_map(net, region, neuron, args.samples, args.seed)
        stem = f"img{idx}_rank{rank}_n{neuron}"
        if args.per_channel and channels > 1:
            for c, lev in enumerate(render_map(gm, width, height, args.clip, per_channel=True)):
                write_pgm(out_dir / f"{stem}_c{c}.pgm", lev)
                print(out_dir / f"{stem}_c{c}.pgm")
        else:
            write_pgm(out_dir / f"{stem}.pgm", render_map(gm, width, height, args.clip))
            print(out_dir / f"{stem}.pgm")
    return EXIT_OK


# worker state for the process pool
_WORKER: dict = {}


def _init_worker(net_doc, eps, domain):
    from .model import network_from_document
    _WORKER.update(net=network_from_document(net_doc), eps=eps, domain=domain)


def _batch_task(item):
    idx, x, label = item
    rec, _ = supfex_record(_WORKER["net"], x, label, idx, _WORKER["eps"], _WORKER["domain"])
    return rec


def _compare_task(item):
    idx, x, label = item
    net = _WORKER["net"]
    res = compare_verifiers(net, build_region(x, _WORKER["eps"]), robustness_property(net.num_classes, label))
    return idx, res


def _select_items(args, net: Network):
    ds = load_dataset(args.dataset)
    if len(ds) and ds.dim != net.input_dim:
        raise DatasetError(f"dataset images have {ds.dim} pixels, network expects {net.input_dim}")
    if args.count < 0:
        raise UsageError("--count must be >= 0")
    order = np.arange(len(ds))
    if args.random_pick:
        order = np.random.default_rng(args.seed).permutation(len(ds))
    order = order[: args.count]
    items, misclassified = [], 0
    for i in order:
        x, y = ds.images[i], int(ds.labels[i])
        if y >= net.num_classes:
            raise DatasetError(f"label {y} at index {i} outside [0, {net.num_classes})")
        if not np.all(np.isfinite(x)):
            raise DatasetError(f"image {i} is not finite")
        # robustness is undefined for misclassified inputs
        if int(np.argmax(forward(net, x))) != y:
            misclassified += 1
            continue
        items.append((int(i), x, y))
    return items, len(order), misclassified


def _run_pool(task, items, args, net: Network, domain: str):
    jobs = args.jobs or os.cpu_count() or 1
    init = (network_to_document(net), args.epsilon, domain)
    if jobs <= 1 or len(items) <= 1:
        _init_worker(*init)
        return [task(it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker, initargs=init) as pool:
        return list(pool.map(task, items, chunksize=max(1, len(items) // (4 * jobs))))


def cmd_batch(args) -> int:
    net = _load_net(args.network)
    if args.epsilon < 0:
        raise UsageError("--epsilon must be >= 0")
    items, total, misclassified = _select_items(args, net)
    records = _run_pool(_batch_task, items, args, net, args.domain)
    summary = summarize(records, total, misclassified)
    out_dir = Path(args.out_dir)
    (out_dir / "records").mkdir(parents=True, exist_ok=True)
    head = _header("batch", args, net)
    for rec in records:
        _emit(dict(head, record=rec.as_dict()), out_dir / "records" / f"{rec.image_index:05d}.json")
    _emit(dict(head, records=[r.as_dict() for r in records], summary=asdict(summary)),
          out_dir / "report.json")
    (out_dir / "histogram.csv").write_text(histogram_csv(summary))
    print(json.dumps(asdict(summary), indent=2, sort_keys=True))
    return EXIT_OK


def cmd_compare(args) -> int:
    net = _load_net(args.network)
    if args.epsilon < 0:
        raise UsageError("--epsilon must be >= 0")
    items, total, misclassified = _select_items(args, net)
    results = _run_pool(_compare_task, items, args, net, "both")
    rows = []
    for idx, res in results:
        row = {"image_index": idx}
        if isinstance(res, ProofAgreement):
            row.update(skipped=False, **asdict(res))
            row["sizes"] = list(res.sizes)
        else:
            row.update(skipped=True, **asdict(res))
        rows.append(row)
    summary = aggregate_agreement([r for _, r in results]).as_dict()
    summary.update(images=total, misclassified=misclassified)
    doc = dict(_header("compare", args, net), records=rows, summary=summary)
    _emit(doc, args.output)
    if args.output not in (None, "-"):
        print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_convert_data(args) -> int:
    n = convert_idx(args.images, args.labels, args.out, args.limit)
    print(f"wrote {n} images to {args.out}")
    return EXIT_OK


def cmd_convert_net(args) -> int:
    shape = [int(v) for v in args.input_shape.split(",")] if args.input_shape else None
    net = parse_eran(Path(args.input).read_text(), shape, args.name or Path(args.input).stem)
    Path(args.out).write_text(json.dumps(network_to_document(net)))
    print(f"wrote {net.name}: dims {net.dims}, {net.num_parameters} parameters")
    return EXIT_OK


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------


def _single_image_flags(p):
    p.add_argument("--network", required=True, help="network file (JSON)")
    p.add_argument("--dataset", help="dataset file; pick the image with --index")
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--image", help="CSV file holding one flattened image")
    p.add_argument("--label", type=int, help="true label (overrides the dataset label)")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--domain", choices=("ibp", "deepz"), default="deepz")


def _dataset_flags(p):
    p.add_argument("--network", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--count", type=int, default=500)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--jobs", type=int, default=None, help="worker processes (default: cores)")
    p.add_argument("--seed", type=int, default=0, help="seed for --random-pick")
    p.add_argument("--random-pick", action="store_true", help="pick --count images at random")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="proofkit", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"proofkit {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("verify", help="verify one local robustness property")
    _single_image_flags(p)
    p.add_argument("--output", "-o", default="-")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("supfex", help="extract a small sufficient proof feature set")
    _single_image_flags(p)
    p.add_argument("--output", "-o", default="-")
    p.set_defaults(func=cmd_supfex)

    p = sub.add_parser("gradmap", help="render gradient maps of kept proof features")
    _single_image_flags(p)
    p.add_argument("--feature-rank", type=int, default=0, help="rank among kept features (0 = top)")
    p.add_argument("--ranks", help="several ranks, e.g. '0..3' or '0,2'")
    p.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--clip", type=float, default=3.0, help="clip at mean +/- CLIP std")
    p.add_argument("--shape", help="HxW or C,H,W (default: network input_shape)")
    p.add_argument("--per-channel", action="store_true")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_gradmap)

    p = sub.add_parser("batch", help="SuPFEx over a dataset with a summary report")
    _dataset_flags(p)
    p.add_argument("--domain", choices=("ibp", "deepz"), default="deepz")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("compare", help="IBP vs DeepZ proof feature agreement")
    _dataset_flags(p)
    p.add_argument("--output", "-o", default="-")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("convert-data", help="IDX image/label dumps to dataset CSV")
    p.add_argument("--images", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--limit", type=int)
    p.set_defaults(func=cmd_convert_data)

    p = sub.add_parser("convert-net", help="dense ERAN text network to the JSON format")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--input-shape", help="comma-separated, e.g. 1,28,28")
    p.add_argument("--name")
    p.set_defaults(func=cmd_convert_net)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"proofkit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, NetworkFormatError, DatasetError, ValueError) as exc:
        print(f"proofkit: error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
