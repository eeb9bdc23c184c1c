"""Synthetic observations (SEM, Michaelis-Menten) and labelled triplet datasets."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import features as F
from .graph import (
    N_CLASSES,
    DirectedGraph,
    TripletIndex,
    enumerate_triplets,
    mirror_class,
)
from .records import atomic_write_text, read_record, write_record

NONLINEARITIES = {
    "tanh": np.tanh,
    "sine": np.sin,
    "square": np.square,
}


@dataclass
class ObservationMatrix:
    """d x T observations, one row per variable."""

    data: np.ndarray
    names: list[str] = field(default_factory=list)
    source: str = "external"

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.ndim != 2:
            raise ValueError(f"observations must be 2-D, got shape {self.data.shape}")
        if not np.isfinite(self.data).all():
            raise ValueError("observations contain NaN or Inf")
        if not self.names:
            self.names = [f"x{i}" for i in range(self.d)]
        elif len(self.names) != self.d:
            raise ValueError(f"{len(self.names)} names for {self.d} variables")

    @property
    def d(self) -> int:
        return self.data.shape[0]

    @property
    def T(self) -> int:
        return self.data.shape[1]

    def standardized(self) -> "ObservationMatrix":
        return ObservationMatrix(F.standardize_rows(self.data), list(self.names), self.source)

    def block(self, i: int, j: int, k: int) -> np.ndarray:
        return self.data[[i, j, k]]


@dataclass
class SemConfig:
    kind: str = "linear"
    weight_range: tuple[float, float] = (0.5, 2.0)
    noise_std: float = 1.0
    nonlinearities: tuple[str, ...] = ("tanh", "sine", "square")

    def validate(self):
        if self.kind not in ("linear", "nonlinear"):
            raise ValueError(f"unknown SEM kind {self.kind!r}")
        lo, hi = self.weight_range
        if not 0.5 <= lo <= hi:
            raise ValueError("edge weight magnitudes must satisfy 0.5 <= low <= high")
        if self.noise_std <= 0:
            raise ValueError("noise_std must be positive")
        unknown = set(self.nonlinearities) - set(NONLINEARITIES)
        if unknown or not self.nonlinearities:
            raise ValueError(f"bad nonlinearity pool {self.nonlinearities}")


@dataclass
class MmConfig:
    v_max: float = 1.0
    k_m: float = 1.0
    decay: float = 0.5
    dt: float = 0.05
    burn_in: int = 200
    noise_std: float = 0.05

    def validate(self):
        if min(self.v_max, self.k_m, self.decay, self.dt) <= 0:
            raise ValueError("Michaelis-Menten rates and dt must be positive")
        if self.noise_std < 0 or self.burn_in < 0:
            raise ValueError("noise_std and burn_in must be non-negative")
        if self.dt * self.decay >= 1:
            raise ValueError(f"unstable Euler step: dt*decay = {self.dt * self.decay} >= 1")


def _check_dag(g: DirectedGraph, T: int) -> list[int]:
    order = g.topological_order()
    if order is None:
        raise ValueError("SEM requires a DAG")
    if T < 8:
        raise ValueError("need at least 8 samples")
    return order


def sample_sem(g: DirectedGraph, cfg: SemConfig, T: int, seed) -> ObservationMatrix:
    """Draw T samples from a random-weight SEM on g.

    Nonlinear mode feeds standardized parent values into the per-node input
    functions so repeated squaring cannot overflow along deep paths.
    """
    cfg.validate()
    order = _check_dag(g, T)
    d = g.d
    rng = np.random.default_rng(seed)
    lo, hi = cfg.weight_range
    W = rng.uniform(lo, hi, (d, d)) * rng.choice([-1.0, 1.0], (d, d)) * g.adj
    pool = [NONLINEARITIES[name] for name in cfg.nonlinearities]
    outer = rng.integers(len(pool), size=d)
    inner = rng.integers(len(pool), size=d)
    x = rng.standard_normal((d, T)) * cfg.noise_std
    for j in order:
        pa = g.parents(j)
        if len(pa) == 0:
            continue
        if cfg.kind == "linear":
            x[j] += W[pa, j] @ x[pa]
        else:
            z = F.standardize_rows(x[pa])
            g_z = np.vstack([pool[inner[i]](row) for i, row in zip(pa, z)])
            x[j] += pool[outer[j]](W[pa, j] @ g_z)
    return ObservationMatrix(x, list(g.names), f"sem-{cfg.kind}")


def mm_rate(x, cfg: MmConfig):
    """Saturating production contributed by a parent at level x."""
    return cfg.v_max * x / (cfg.k_m + x)


def simulate_mm(g: DirectedGraph, cfg: MmConfig, T: int, seed, clamp: dict[int, float] | None = None) -> ObservationMatrix:
    """Euler-Maruyama integration of saturating production with linear decay.

    dx_j = (sum_{i in pa(j)} v_max x_i / (k_m + x_i) - decay x_j) dt + noise_std dW,
    clipped at zero. `clamp` pins chosen nodes to fixed values throughout.
    """
    cfg.validate()
    _check_dag(g, T)
    d = g.d
    rng = np.random.default_rng(seed)
    adj = g.adj.astype(float)
    x = np.zeros(d)
    pinned = np.zeros(d, dtype=bool)
    pin_vals = np.zeros(d)
    for node, val in (clamp or {}).items():
        pinned[node] = True
        pin_vals[node] = val
    x[pinned] = pin_vals[pinned]
    out = np.empty((d, T))
    scale = cfg.noise_std * np.sqrt(cfg.dt)
    for step in range(cfg.burn_in + T):
        prod = mm_rate(x, cfg) @ adj
        x = x + cfg.dt * (prod - cfg.decay * x)
        if scale > 0:
            x = x + scale * rng.standard_normal(d)
        np.maximum(x, 0.0, out=x)
        x[pinned] = pin_vals[pinned]
        if step >= cfg.burn_in:
            out[:, step - cfg.burn_in] = x
    return ObservationMatrix(out, list(g.names), "mm")


@dataclass
class TripletDataset:
    """Labelled triplets over one or more standardized observation sources.

    `order` rows are (a, j, b): canonical triplets have a < b, mirrored copies
    have the outer nodes swapped. Blocks are views into the sources.
    """

    sources: list[ObservationMatrix]
    graphs: list[DirectedGraph]
    source_ids: np.ndarray
    order: np.ndarray
    labels: np.ndarray
    corrs: np.ndarray
    _features: np.ndarray | None = field(default=None, repr=False)

    def __len__(self):
        return len(self.labels)

    @property
    def provenance(self) -> list[str]:
        return [s.source for s in self.sources]

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=N_CLASSES)

    def block(self, n: int) -> np.ndarray:
        return self.sources[self.source_ids[n]].data[self.order[n]]

    def features(self) -> np.ndarray:
        if self._features is None:
            feats = np.empty((len(self), F.FEATURE_DIM))
            for sid, src in enumerate(self.sources):
                rows = np.flatnonzero(self.source_ids == sid)
                if len(rows):
                    tables = F.node_tables(src.data)
                    feats[rows] = F.features_from_tables(tables, self.order[rows])
            self._features = feats
        return self._features

    def save(self, path):
        arrays = {
            "source_ids": self.source_ids.astype(np.int64),
            "order": self.order.astype(np.int64),
            "labels": self.labels.astype(np.int64),
            "corrs": self.corrs,
        }
        for n, (src, g) in enumerate(zip(self.sources, self.graphs)):
            arrays[f"data{n}"] = src.data
            arrays[f"adj{n}"] = g.adj
        meta = {
            "n_sources": len(self.sources),
            "names": [s.names for s in self.sources],
            "provenance": self.provenance,
        }
        write_record(path, "triplet-dataset", meta, arrays)

    @classmethod
    def load(cls, path) -> "TripletDataset":
        meta, arrays = read_record(path, "triplet-dataset")
        n = meta["n_sources"]
        sources = [
            ObservationMatrix(arrays[f"data{s}"], meta["names"][s], meta["provenance"][s]) for s in range(n)
        ]
        graphs = [DirectedGraph(arrays[f"adj{s}"], meta["names"][s]) for s in range(n)]
        return cls(sources, graphs, arrays["source_ids"], arrays["order"], arrays["labels"], arrays["corrs"])


def _ordered_labels(adj: np.ndarray, tri: np.ndarray) -> np.ndarray:
    a, j, b = tri.T
    adj = adj.astype(int)
    r1 = adj[a, j] + 2 * adj[j, a]
    r2 = adj[j, b] + 2 * adj[b, j]
    if np.any(r1 == 3) or np.any(r2 == 3):
        raise ValueError("graph has a bidirected pair; motif labels undefined")
    return 3 * r1 + r2


def build_triplet_dataset(
    graphs,
    per_class_cap: int | str | None = "auto",
    mirror_augment: bool = False,
    seed=0,
    max_triplets_per_graph: int | None = None,
) -> TripletDataset:
    """Label every (or a capped sample of) triplet for each (graph, observations) pair.

    Class 0 is downsampled to `per_class_cap`. "auto" caps it at twice the
    median count of the other classes present; None keeps every triplet.
    """
    graphs = list(graphs)
    if not graphs:
        raise ValueError("no graphs given")
    rng = np.random.default_rng(seed)
    sources, gs = [], []
    sids, orders, labels, corrs = [], [], [], []
    for sid, (g, obs) in enumerate(graphs):
        if obs.d != g.d:
            raise ValueError(f"graph {sid} has d={g.d} but observations have d={obs.d}")
        z = obs.standardized()
        sources.append(z)
        gs.append(g)
        r = z.data @ z.data.T / z.T
        trip = np.array(enumerate_triplets(g.d, max_triplets_per_graph, rng.integers(2**32)), dtype=int)
        variants = [trip]
        if mirror_augment:
            variants.append(trip[:, [2, 1, 0]])
        for tri in variants:
            a, j, b = tri.T
            orders.append(tri)
            labels.append(_ordered_labels(g.adj, tri))
            corrs.append(np.column_stack([r[a, j], r[j, b], r[a, b]]))
            sids.append(np.full(len(tri), sid))
    order = np.vstack(orders)
    lab = np.concatenate(labels)
    corr = np.vstack(corrs)
    sid_arr = np.concatenate(sids)

    counts = np.bincount(lab, minlength=N_CLASSES)
    cap = per_class_cap
    if cap == "auto":
        others = counts[1:][counts[1:] > 0]
        cap = int(2 * np.median(others)) if len(others) else None
    keep = np.ones(len(lab), dtype=bool)
    zero_rows = np.flatnonzero(lab == 0)
    if cap is not None and len(zero_rows) > cap:
        dropped = rng.choice(zero_rows, size=len(zero_rows) - cap, replace=False)
        keep[dropped] = False
    return TripletDataset(sources, gs, sid_arr[keep], order[keep], lab[keep], np.clip(corr[keep], -1.0, 1.0))


def is_mirrored(dataset: TripletDataset) -> np.ndarray:
    return dataset.order[:, 0] > dataset.order[:, 2]


def check_labels(dataset: TripletDataset) -> bool:
    """Re-derive every label from the source graph."""
    from .graph import motif_label

    for n in range(len(dataset)):
        a, j, b = (int(v) for v in dataset.order[n])
        g = dataset.graphs[dataset.source_ids[n]]
        if a < b:
            expected = motif_label(g, TripletIndex.make(a, j, b))
        else:
            expected = mirror_class(motif_label(g, TripletIndex.make(b, j, a)))
        if expected != dataset.labels[n]:
            return False
    return True


def load_observations_csv(path, delimiter: str = ",", has_header: bool = True) -> ObservationMatrix:
    """Read a samples-by-variables CSV into a variables-by-samples matrix."""
    text = Path(path).read_text()
    rows = list(csv.reader(io.StringIO(text), delimiter=delimiter))
    while rows and not any(cell.strip() for cell in rows[-1]):
        rows.pop()
    names: list[str] = []
    start = 0
    if has_header:
        if not rows:
            raise ValueError(f"{path}: missing header row")
        names = [c.strip() for c in rows[0]]
        start = 1
    body = rows[start:]
    if not body:
        raise ValueError(f"{path}: no data rows")
    width = len(names) if names else len(body[0])
    values = np.empty((len(body), width))
    for r, row in enumerate(body, start=start + 1):
        if len(row) != width:
            raise ValueError(f"{path}: row {r} has {len(row)} columns, expected {width}")
        for c, cell in enumerate(row, start=1):
            try:
                values[r - start - 1, c - 1] = float(cell)
            except ValueError:
                raise ValueError(f"{path}: row {r}, column {c}: non-numeric value {cell!r}") from None
    return ObservationMatrix(values.T, names)


def write_observations_csv(obs: ObservationMatrix, path):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(obs.names)
    for row in obs.data.T:
        w.writerow([repr(float(v)) for v in row])
    atomic_write_text(path, buf.getvalue())


KINDS = ("sem-linear", "sem-nonlinear", "mm")

# expected edge counts for the benchmark graph sizes
EXPECTED_EDGES = {11: 17, 25: 30, 50: 60}


def default_edge_prob(d: int) -> float:
    pairs = d * (d - 1) / 2
    if pairs == 0:
        return 0.0
    return min(1.0, EXPECTED_EDGES.get(d, 1.2 * d) / pairs)


def generate(kind: str, g: DirectedGraph, T: int, seed, **overrides) -> ObservationMatrix:
    """Observations of `kind` on g; keyword overrides go to the matching config."""
    if kind == "mm":
        return simulate_mm(g, MmConfig(**overrides), T, seed)
    if kind in ("sem-linear", "sem-nonlinear"):
        if "weight_range" in overrides:
            overrides["weight_range"] = tuple(overrides["weight_range"])
        return sample_sem(g, SemConfig(kind=kind[4:], **overrides), T, seed)
    raise ValueError(f"unknown data kind {kind!r}; expected one of {KINDS}")


def graph_and_data(kind: str, d: int, edge_prob: float, T: int, graph_seed: int, **overrides):
    """Graph drawn from graph_seed; observations from an independent stream of the same seed."""
    from .graph import sample_random_dag

    g = sample_random_dag(d, edge_prob, graph_seed)
    return g, generate(kind, g, T, [graph_seed, 1], **overrides)
