"""Benchmark protocol: train on synthetic graphs, score Enes / Pearson / PC per dataset.

A bench spec is a JSON object:

    {
      "methods": ["enes", "pearson", "pc"],
      "runs": 10,
      "datasets": [
        {"tag": "sachs", "kind": "external", "observations": "sachs.csv", "truth": "sachs.json"},
        {"tag": "mm-11", "kind": "mm", "d": 11, "samples": 1000, "seeds": [1000, 1001]}
      ],
      "model": "enes.params",            # or a "training" block (below)
      "training": {
        "corpus": [{"kind": "mm", "d": 11, "samples": 1000, "seeds": [0, 1, 2]}],
        "mirror_augment": true, "per_class_cap": "auto", "max_triplets_per_graph": null,
        "lr": 0.1, "epochs": 30, "batch_size": 64, "seed": 0, "grad_clip": 5.0,
        "t0": 1e-5, "alpha": 0.95, "floor": 1e-9, "weights": [1, 1, 1], "cosine_sign": 1
      },
      "enes_threshold": 0.35, "triplet_cap": null,
      "pearson_threshold": 0.3,
      "pc": {"alpha": 0.05, "max_cond_size": 3}
    }

Synthetic dataset entries accept "edge_prob" (default: expected-edge table),
"seeds" (default: 1000 .. 1000 + runs - 1) and config overrides under "config".
Relative paths resolve against the spec file's directory.
"""

from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .baselines import PcConfig, pc_algorithm, pearson_baseline
from .datagen import (
    KINDS,
    build_triplet_dataset,
    default_edge_prob,
    graph_and_data,
    load_observations_csv,
)
from .graph import DirectedGraph
from .metrics import MetricReport, evaluate, mean_report
from .model import EnesParams, init_params, load_params, predict_graph
from .optim import AnnealSchedule, TrainConfig, train
from .records import atomic_write_text

METHODS = ("enes", "pearson", "pc")
CSV_COLUMNS = ("method", "dataset", "d", "runs", "accuracy", "precision", "recall", "f1", "shd")
EVAL_SEED_BASE = 1000


class BenchError(ValueError):
    pass


@dataclass
class DatasetSpec:
    tag: str
    kind: str
    d: int | None = None
    edge_prob: float | None = None
    samples: int = 1000
    seeds: list[int] = field(default_factory=list)
    config: dict = field(default_factory=dict)
    observations: Path | None = None
    truth: Path | None = None
    delimiter: str = ","
    has_header: bool = True


@dataclass
class BenchSpec:
    methods: list[str]
    datasets: list[DatasetSpec]
    runs: int = 10
    model: Path | None = None
    training: dict | None = None
    enes_threshold: float = 0.35
    triplet_cap: int | None = None
    pearson_threshold: float = 0.3
    pc: PcConfig = field(default_factory=PcConfig)

    def training_seeds(self) -> set[int]:
        if not self.training:
            return set()
        return {int(s) for entry in self.training.get("corpus", []) for s in entry.get("seeds", [])}

    def validate(self):
        if not self.methods:
            raise BenchError("bench spec names no methods")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise BenchError(f"unknown methods {sorted(unknown)}")
        if not self.datasets:
            raise BenchError("bench spec names no datasets")
        for ds in self.datasets:
            if ds.kind == "external":
                if ds.observations is None or ds.truth is None:
                    raise BenchError(f"dataset {ds.tag!r}: external data needs both observations and truth")
                for path in (ds.observations, ds.truth):
                    if not path.is_file():
                        raise BenchError(f"dataset {ds.tag!r}: missing file {path}")
            elif ds.kind in KINDS:
                if not ds.d or ds.d < 2:
                    raise BenchError(f"dataset {ds.tag!r}: synthetic data needs d >= 2")
            else:
                raise BenchError(f"dataset {ds.tag!r}: unknown kind {ds.kind!r}")
        if "enes" in self.methods:
            if self.model is None and not self.training:
                raise BenchError("method 'enes' needs a trained model file or a training block")
            if self.model is not None and not self.model.is_file():
                raise BenchError(f"model file not found: {self.model}")
            if self.model is None and not self.training.get("corpus"):
                raise BenchError("training block has an empty corpus")
        leaked = self.training_seeds() & {s for ds in self.datasets for s in ds.seeds}
        if leaked:
            raise BenchError(f"training and evaluation graph seeds overlap: {sorted(leaked)}")


def _path(base: Path, value) -> Path | None:
    if value is None:
        return None
    p = Path(value)
    return p if p.is_absolute() else base / p


def spec_from_dict(obj: dict, base_dir=".") -> BenchSpec:
    base = Path(base_dir)
    runs = int(obj.get("runs", 10))
    datasets = []
    for raw in obj.get("datasets", []):
        kind = raw.get("kind")
        seeds = [int(s) for s in raw.get("seeds", [])]
        if kind != "external" and not seeds:
            seeds = list(range(EVAL_SEED_BASE, EVAL_SEED_BASE + runs))
        datasets.append(
            DatasetSpec(
                tag=raw.get("tag", f"{kind}-{raw.get('d')}"),
                kind=kind,
                d=raw.get("d"),
                edge_prob=raw.get("edge_prob"),
                samples=int(raw.get("samples", 1000)),
                seeds=seeds,
                config=dict(raw.get("config", {})),
                observations=_path(base, raw.get("observations")),
                truth=_path(base, raw.get("truth")),
                delimiter=raw.get("delimiter", ","),
                has_header=bool(raw.get("has_header", True)),
            )
        )
    pc = obj.get("pc", {})
    spec = BenchSpec(
        methods=list(obj.get("methods", [])),
        datasets=datasets,
        runs=runs,
        model=_path(base, obj.get("model")),
        training=obj.get("training"),
        enes_threshold=float(obj.get("enes_threshold", 0.35)),
        triplet_cap=obj.get("triplet_cap"),
        pearson_threshold=float(obj.get("pearson_threshold", 0.3)),
        pc=PcConfig(float(pc.get("alpha", 0.05)), int(pc.get("max_cond_size", 3))),
    )
    spec.validate()
    return spec


def load_spec(path) -> BenchSpec:
    path = Path(path)
    try:
        obj = json.loads(path.read_text())
    except (OSError, ValueError) as exc:
        raise BenchError(f"cannot read bench spec {path}: {exc}") from exc
    return spec_from_dict(obj, path.parent)


def train_config_from(block: dict) -> TrainConfig:
    return TrainConfig(
        lr=float(block.get("lr", 0.1)),
        epochs=int(block.get("epochs", 30)),
        batch_size=int(block.get("batch_size", 64)),
        seed=int(block.get("seed", 0)),
        grad_clip=block.get("grad_clip", 5.0),
        anneal=AnnealSchedule(
            float(block.get("t0", 1e-5)), float(block.get("alpha", 0.95)), float(block.get("floor", 1e-9))
        ),
        weights=tuple(float(w) for w in block.get("weights", (1.0, 1.0, 1.0))),
        cosine_sign=float(block.get("cosine_sign", 1.0)),
    )


def build_corpus(block: dict):
    pairs = []
    for entry in block["corpus"]:
        d = int(entry["d"])
        p = entry.get("edge_prob")
        p = default_edge_prob(d) if p is None else float(p)
        for seed in entry["seeds"]:
            pairs.append(graph_and_data(entry["kind"], d, p, int(entry.get("samples", 1000)), int(seed), **entry.get("config", {})))
    return build_triplet_dataset(
        pairs,
        per_class_cap=block.get("per_class_cap", "auto"),
        mirror_augment=bool(block.get("mirror_augment", True)),
        seed=int(block.get("seed", 0)),
        max_triplets_per_graph=block.get("max_triplets_per_graph"),
    )


def train_from_block(block: dict) -> tuple[EnesParams, list[dict]]:
    dataset = build_corpus(block)
    params = init_params(int(block.get("seed", 0)), int(block.get("hidden", 64)), int(block.get("expert_hidden", 32)))
    return train(params, dataset, train_config_from(block))


def _instances(ds: DatasetSpec):
    """Yield (graph, observations, seed) for every evaluation run of a dataset."""
    if ds.kind == "external":
        obs = load_observations_csv(ds.observations, ds.delimiter, ds.has_header)
        truth = DirectedGraph.from_json(ds.truth.read_text())
        if truth.d != obs.d:
            raise BenchError(f"dataset {ds.tag!r}: truth has d={truth.d} but {ds.observations} has {obs.d} columns")
        yield truth, obs, 0
        return
    p = default_edge_prob(ds.d) if ds.edge_prob is None else ds.edge_prob
    for seed in ds.seeds:
        g, obs = graph_and_data(ds.kind, ds.d, p, ds.samples, seed, **ds.config)
        yield g, obs, seed


@dataclass
class BenchResult:
    rows: list[dict]
    reports: dict[tuple[str, str], MetricReport]
    seconds: dict[tuple[str, str], float]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in self.rows:
            w.writerow([row[c] if isinstance(row[c], (str, int)) else repr(row[c]) for c in CSV_COLUMNS])
        return buf.getvalue()

    def render(self) -> str:
        head = f"{'method':<8} {'dataset':<12} {'d':>3} {'runs':>4} {'acc':>7} {'prec':>7} {'rec':>7} {'f1':>7} {'shd':>7} {'sec':>6}"
        lines = [head, "-" * len(head)]
        for row in self.rows:
            key = (row["method"], row["dataset"])
            lines.append(
                f"{row['method']:<8} {row['dataset']:<12} {row['d']:>3} {row['runs']:>4} "
                f"{row['accuracy']:>7.4f} {row['precision']:>7.4f} {row['recall']:>7.4f} "
                f"{row['f1']:>7.4f} {row['shd']:>7.2f} {self.seconds[key]:>6.1f}"
            )
        return "\n".join(lines)


def read_results_csv(text: str) -> list[dict]:
    rows = []
    for raw in csv.DictReader(io.StringIO(text)):
        row = {"method": raw["method"], "dataset": raw["dataset"], "d": int(raw["d"]), "runs": int(raw["runs"])}
        row.update({c: float(raw[c]) for c in CSV_COLUMNS[4:]})
        rows.append(row)
    return rows


def _predict(method: str, spec: BenchSpec, params, obs, seed):
    if method == "pearson":
        return pearson_baseline(obs, spec.pearson_threshold)
    if method == "pc":
        return pc_algorithm(obs, spec.pc)
    return predict_graph(params, obs, spec.triplet_cap, spec.enes_threshold, seed)


def run_benchmark(spec: BenchSpec, params: EnesParams | None = None, jobs: int = 1) -> BenchResult:
    """Mean metric report per (method, dataset) cell, in spec order."""
    spec.validate()
    if "enes" in spec.methods and params is None:
        params = load_params(spec.model) if spec.model is not None else train_from_block(spec.training)[0]

    def cell(method, ds):
        start = time.perf_counter()
        reports = [
            evaluate(_predict(method, spec, params, obs, seed), g) for g, obs, seed in _instances(ds)
        ]
        rep = mean_report(reports, method=method, dataset=ds.tag)
        return rep, len(reports), time.perf_counter() - start

    cells = [(m, ds) for ds in spec.datasets for m in spec.methods]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(lambda c: cell(*c), cells))
    else:
        outcomes = [cell(*c) for c in cells]
    rows, reports, seconds = [], {}, {}
    for (method, ds), (rep, n, secs) in zip(cells, outcomes):
        key = (method, ds.tag)
        reports[key] = rep
        seconds[key] = secs
        rows.append(
            {
                "method": method,
                "dataset": ds.tag,
                "d": rep.d,
                "runs": n,
                "accuracy": rep.accuracy,
                "precision": rep.precision,
                "recall": rep.recall,
                "f1": rep.f1,
                "shd": rep.shd,
            }
        )
    return BenchResult(rows, reports, seconds)


def write_results(result: BenchResult, path):
    atomic_write_text(path, result.to_csv())
