"""Command-line entry point: generate, train, predict, eval, bench.

Exit codes: 0 ok, 1 usage, 2 data error, 3 numeric failure.
The default output directory for `generate` can be set with ENES_OUT_DIR.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

from . import __version__
from .baselines import PcConfig, pc_algorithm, pearson_baseline
from .bench import BenchError, load_spec, run_benchmark, write_results
from .datagen import (
    KINDS,
    build_triplet_dataset,
    default_edge_prob,
    graph_and_data,
    load_observations_csv,
    write_observations_csv,
)
from .graph import DirectedGraph
from .metrics import evaluate
from .model import init_params, load_params, predict_graph, save_params
from .optim import AnnealSchedule, TrainConfig, format_log_csv, train
from .records import RecordError, atomic_write_text

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
MANIFEST = "manifest.json"

log = logging.getLogger("enes")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str, n: int) -> tuple[float, ...]:
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected {n} comma-separated numbers, got {text!r}") from None
    if len(vals) != n:
        raise argparse.ArgumentTypeError(f"expected {n} comma-separated numbers, got {text!r}")
    return vals


def _check_writable_dir(path: Path):
    try:
        path.mkdir(parents=True, exist_ok=True)
        with tempfile.TemporaryFile(dir=path):
            pass
    except OSError as exc:
        raise OSError(f"output directory {path} is not writable: {exc}") from exc


def _check_writable_file(path: Path):
    _check_writable_dir(path.parent if str(path.parent) else Path("."))


def cmd_generate(args) -> int:
    out_dir = Path(args.out_dir or os.environ.get("ENES_OUT_DIR", "enes_out"))
    _check_writable_dir(out_dir)
    overrides = {}
    if args.noise_std is not None:
        overrides["noise_std"] = args.noise_std
    if args.weight_range is not None:
        if args.kind == "mm":
            raise UsageError("--weight-range applies to SEM data only")
        overrides["weight_range"] = args.weight_range
    p = default_edge_prob(args.d) if args.edge_prob is None else args.edge_prob
    entries, outputs = [], []
    for n in range(args.graphs):
        seed = args.seed + n
        g, obs = graph_and_data(args.kind, args.d, p, args.samples, seed, **dict(overrides))
        stem = f"graph_{n:03d}"
        entries.append({"seed": seed, "observations": f"{stem}.csv", "truth": f"{stem}.json"})
        outputs.append((stem, g, obs))
    for stem, g, obs in outputs:
        write_observations_csv(obs, out_dir / f"{stem}.csv")
        atomic_write_text(out_dir / f"{stem}.json", g.to_json() + "\n")
    manifest = {
        "kind": args.kind,
        "d": args.d,
        "edge_prob": p,
        "samples": args.samples,
        "seed": args.seed,
        "overrides": {k: list(v) if isinstance(v, tuple) else v for k, v in overrides.items()},
        "graphs": entries,
    }
    atomic_write_text(out_dir / MANIFEST, json.dumps(manifest, indent=2) + "\n")
    print(f"wrote {args.graphs} graph{'' if args.graphs == 1 else 's'} to {out_dir}")
    return EXIT_OK


def _load_manifest_pairs(data_dir: Path):
    mpath = data_dir / MANIFEST
    if not mpath.is_file():
        raise FileNotFoundError(f"no {MANIFEST} in {data_dir}")
    manifest = json.loads(mpath.read_text())
    pairs = []
    for entry in manifest.get("graphs", []):
        obs = load_observations_csv(data_dir / entry["observations"])
        obs.source = manifest.get("kind", "external")
        g = DirectedGraph.from_json((data_dir / entry["truth"]).read_text())
        pairs.append((g, obs))
    return pairs


def cmd_train(args) -> int:
    out = Path(args.out)
    log_path = Path(args.log) if args.log else out.with_name(out.name + ".log.csv")
    _check_writable_file(out)
    _check_writable_file(log_path)
    pairs = []
    for data_dir in args.data_dir:
        pairs.extend(_load_manifest_pairs(Path(data_dir)))
    if not pairs:
        raise ValueError(f"no graphs found in {', '.join(args.data_dir)}")
    dataset = build_triplet_dataset(
        pairs,
        per_class_cap="auto" if args.per_class_cap is None else args.per_class_cap,
        mirror_augment=args.mirror,
        seed=args.seed,
        max_triplets_per_graph=args.triplet_cap,
    )
    if args.save_dataset:
        dataset.save(args.save_dataset)
    cfg = TrainConfig(
        lr=args.lr,
        epochs=args.epochs,
        batch_size=args.batch_size,
        seed=args.seed,
        grad_clip=args.grad_clip,
        anneal=AnnealSchedule(args.t0, args.alpha, args.floor),
        weights=args.weights,
        cosine_sign=args.cosine_sign,
        checkpoint_every=args.checkpoint_every,
        checkpoint_path=str(out) if args.checkpoint_every else None,
    )
    params = init_params(args.seed, args.hidden, args.expert_hidden, args.weights)
    log.info("training on %d triplets, %d parameters", len(dataset), params.n_parameters)
    trained, history = train(params, dataset, cfg)
    save_params(trained, out)
    atomic_write_text(log_path, format_log_csv(history))
    print(f"wrote {out} and {log_path} ({len(dataset)} triplets, {cfg.epochs} epochs)")
    return EXIT_OK


def _emit(text: str, out: str | None):
    if out:
        _check_writable_file(Path(out))
        atomic_write_text(out, text)
    else:
        sys.stdout.write(text)


def cmd_predict(args) -> int:
    obs = load_observations_csv(args.data, args.delimiter, not args.no_header)
    if args.method == "enes":
        if not args.model:
            raise UsageError("--model is required for method enes")
        params = load_params(args.model)
        graph = predict_graph(params, obs, args.triplet_cap, args.threshold, args.seed)
    elif args.method == "pearson":
        graph = pearson_baseline(obs, args.pearson_threshold)
    else:
        graph = pc_algorithm(obs, PcConfig(args.alpha, args.max_cond_size))
    _emit(graph.to_json() + "\n", args.out)
    return EXIT_OK


def _read_graph(path) -> DirectedGraph:
    return DirectedGraph.from_json(Path(path).read_text())


def cmd_eval(args) -> int:
    pred = _read_graph(args.pred)
    truth = _read_graph(args.truth)
    if pred.d != truth.d:
        raise ValueError(f"dimension mismatch: {args.pred} has d={pred.d}, {args.truth} has d={truth.d}")
    meta = {"method": args.method, "dataset": args.dataset, "seed": args.seed}
    report = evaluate(pred, truth, **meta)
    text = report.to_json() + "\n"
    print(
        f"TP {report.tp:g}  precision {report.precision:.4f}  recall {report.recall:.4f}  "
        f"F1 {report.f1:.4f}  SHD {report.shd:g}  accuracy {report.accuracy:.4f}"
    )
    if args.out:
        _check_writable_file(Path(args.out))
        atomic_write_text(args.out, text)
    return EXIT_OK


def cmd_bench(args) -> int:
    spec = load_spec(args.spec)
    if args.model:
        spec.model = Path(args.model)
    _check_writable_file(Path(args.out))
    result = run_benchmark(spec, jobs=args.jobs)
    print(result.render())
    write_results(result, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="enes", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"enes {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write synthetic observations, truth graphs and a manifest")
    g.add_argument("--kind", choices=KINDS, required=True)
    g.add_argument("--d", type=int, required=True)
    g.add_argument("--edge-prob", type=float)
    g.add_argument("--samples", type=int, default=1000)
    g.add_argument("--graphs", type=int, default=1)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--noise-std", type=float)
    g.add_argument("--weight-range", type=lambda s: _floats(s, 2))
    g.add_argument("--out-dir")
    g.set_defaults(func=cmd_generate)

    t = sub.add_parser("train", help="train Enes on generated data")
    t.add_argument("--data-dir", action="append", required=True)
    t.add_argument("--epochs", type=int, default=200)
    t.add_argument("--lr", type=float, default=1e-3)
    t.add_argument("--batch-size", type=int, default=64)
    t.add_argument("--t0", type=float, default=1e-2)
    t.add_argument("--alpha", type=float, default=0.95)
    t.add_argument("--floor", type=float, default=1e-6)
    t.add_argument("--grad-clip", type=float, default=5.0)
    t.add_argument("--weights", type=lambda s: _floats(s, 3), default=(1.0, 1.0, 1.0))
    t.add_argument("--cosine-sign", type=float, choices=(1.0, -1.0), default=1.0)
    t.add_argument("--hidden", type=int, default=64)
    t.add_argument("--expert-hidden", type=int, default=32)
    t.add_argument("--per-class-cap", type=int, help="class-0 cap (default: twice the median of other classes)")
    t.add_argument("--triplet-cap", type=int)
    t.add_argument("--mirror", action=argparse.BooleanOptionalAction, default=True)
    t.add_argument("--checkpoint-every", type=int, default=0)
    t.add_argument("--save-dataset")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", required=True)
    t.add_argument("--log")
    t.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict a graph from an observation CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--method", choices=("enes", "pearson", "pc"), default="enes")
    p.add_argument("--model")
    p.add_argument("--threshold", type=float, default=0.35)
    p.add_argument("--triplet-cap", type=int)
    p.add_argument("--pearson-threshold", type=float, default=0.3)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--max-cond-size", type=int, default=3)
    p.add_argument("--delimiter", default=",")
    p.add_argument("--no-header", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_predict)

    e = sub.add_parser("eval", help="score a predicted graph against the truth")
    e.add_argument("--pred", required=True)
    e.add_argument("--truth", required=True)
    e.add_argument("--method", default="")
    e.add_argument("--dataset", default="")
    e.add_argument("--seed", type=int)
    e.add_argument("--out")
    e.set_defaults(func=cmd_eval)

    b = sub.add_parser("bench", help="run a benchmark spec and write the results CSV")
    b.add_argument("--spec", required=True)
    b.add_argument("--out", required=True)
    b.add_argument("--model")
    b.add_argument("--jobs", type=int, default=1)
    b.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"enes: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FloatingPointError as exc:
        print(f"enes: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, ValueError, RecordError, BenchError, KeyError) as exc:
        print(f"enes: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
