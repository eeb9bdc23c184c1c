"""Two-expert gated motif classifier.

features -> shared tanh encoder -> {nonlinear expert A, linear expert B, gate w}
logits = w * A + (1 - w) * B, probabilities = softmax(logits)
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .features import FEATURE_DIM, features_from_tables, node_tables
from .graph import N_CLASSES, DirectedGraph, VoteBoard, aggregate_votes, enumerate_triplets
from .records import RecordError, read_record, write_record

PARAMS_VERSION = 1

PARAM_NAMES = (
    "enc_w1", "enc_b1", "enc_w2", "enc_b2",
    "a_w1", "a_b1", "a_w2", "a_b2",
    "b_w", "b_b",
    "gate_w", "gate_b",
)  # fmt: skip


def param_shapes(feature_dim=FEATURE_DIM, hidden=64, expert_hidden=32, n_classes=N_CLASSES) -> dict[str, tuple]:
    return {
        "enc_w1": (feature_dim, hidden),
        "enc_b1": (1, hidden),
        "enc_w2": (hidden, hidden),
        "enc_b2": (1, hidden),
        "a_w1": (hidden, expert_hidden),
        "a_b1": (1, expert_hidden),
        "a_w2": (expert_hidden, n_classes),
        "a_b2": (1, n_classes),
        "b_w": (hidden, n_classes),
        "b_b": (1, n_classes),
        "gate_w": (hidden, 1),
        "gate_b": (1, 1),
    }


@dataclass
class EnesParams:
    weights: dict[str, np.ndarray]
    hidden: int = 64
    expert_hidden: int = 32
    penalty: tuple[float, float, float] = (1.0, 1.0, 1.0)
    seed: int = 0
    feature_dim: int = FEATURE_DIM
    n_classes: int = N_CLASSES

    def __post_init__(self):
        a, b, c = self.penalty
        if min(a, b, c) < 0:
            raise ValueError("penalty weights must be non-negative")
        self.penalty = (float(a), float(b), float(c))
        expected = self.shapes()
        for name in PARAM_NAMES:
            if name not in self.weights:
                raise ValueError(f"missing parameter block {name!r}")
            if self.weights[name].shape != expected[name]:
                raise ValueError(
                    f"architecture mismatch: {name} has shape {self.weights[name].shape}, expected {expected[name]}"
                )

    def shapes(self):
        return param_shapes(self.feature_dim, self.hidden, self.expert_hidden, self.n_classes)

    @property
    def n_parameters(self) -> int:
        return sum(w.size for w in self.weights.values())

    def copy(self, weights=None) -> "EnesParams":
        ws = weights if weights is not None else self.weights
        return EnesParams(
            {k: np.array(v, dtype=float) for k, v in ws.items()},
            self.hidden,
            self.expert_hidden,
            self.penalty,
            self.seed,
            self.feature_dim,
            self.n_classes,
        )


def init_params(seed=0, hidden=64, expert_hidden=32, penalty=(1.0, 1.0, 1.0), zero_heads=False) -> EnesParams:
    """Glorot-uniform weights, zero biases. `zero_heads` zeroes the expert output layers."""
    rng = np.random.default_rng(seed)
    weights = {}
    for name, shape in param_shapes(FEATURE_DIM, hidden, expert_hidden).items():
        if "_b" in name:
            weights[name] = np.zeros(shape)
        else:
            lim = np.sqrt(6.0 / (shape[0] + shape[1]))
            weights[name] = rng.uniform(-lim, lim, shape)
    if zero_heads:
        for name in ("a_w2", "a_b2", "b_w", "b_b"):
            weights[name] = np.zeros_like(weights[name])
    return EnesParams(weights, hidden, expert_hidden, tuple(penalty), int(seed) if np.isscalar(seed) else 0)


def forward_nodes(tape: ad.Tape, params: EnesParams, feats: np.ndarray) -> dict[str, ad.Node]:
    """Record the forward pass on `tape`; parameter leaves are named after their blocks."""
    p = {name: tape.param(params.weights[name], name) for name in PARAM_NAMES}
    x = tape.const(np.atleast_2d(feats))
    h = ad.tanh(x @ p["enc_w1"] + p["enc_b1"])
    h = ad.tanh(h @ p["enc_w2"] + p["enc_b2"])
    expert_a = ad.tanh(h @ p["a_w1"] + p["a_b1"]) @ p["a_w2"] + p["a_b2"]
    expert_b = h @ p["b_w"] + p["b_b"]
    gate = ad.sigmoid(h @ p["gate_w"] + p["gate_b"])
    w = gate @ tape.const(np.ones((1, params.n_classes)))
    fused = w * expert_a + (1.0 - w) * expert_b
    return {
        "hidden": h,
        "expert_a": expert_a,
        "expert_b": expert_b,
        "gate": gate,
        "fused": fused,
        "probs": ad.softmax_rows(fused),
    }


@dataclass
class TripletPrediction:
    probs: np.ndarray
    gate_w: np.ndarray
    expert_a_logits: np.ndarray
    expert_b_logits: np.ndarray
    fused_logits: np.ndarray = field(repr=False, default=None)

    def argmax(self) -> np.ndarray:
        # np.argmax already returns the lowest index on ties
        return np.argmax(self.probs, axis=1)


def forward(params: EnesParams, feats: np.ndarray) -> TripletPrediction:
    out = forward_nodes(ad.Tape(), params, feats)
    return TripletPrediction(
        out["probs"].value,
        out["gate"].value[:, 0],
        out["expert_a"].value,
        out["expert_b"].value,
        out["fused"].value,
    )


def predict_probs(params: EnesParams, feats: np.ndarray, batch: int = 4096) -> np.ndarray:
    feats = np.atleast_2d(feats)
    return np.vstack([forward(params, feats[s : s + batch]).probs for s in range(0, len(feats), batch)])


def accuracy(params: EnesParams, feats: np.ndarray, labels: np.ndarray) -> float:
    return float(np.mean(np.argmax(predict_probs(params, feats), axis=1) == labels))


def graph_from_probs(d, triplets, probs, threshold=0.35, names=None) -> DirectedGraph:
    board = VoteBoard(d)
    board.add_triplets(triplets, probs)
    return aggregate_votes(board, threshold, names)


def predict_graph(params: EnesParams, obs, triplet_cap: int | None = None, threshold: float = 0.35, seed=0) -> DirectedGraph:
    if obs.d < 3:
        raise ValueError("graph too small for triplets")
    triplets = enumerate_triplets(obs.d, triplet_cap, seed)
    feats = features_from_tables(node_tables(obs.data), np.asarray(triplets))
    return graph_from_probs(obs.d, triplets, predict_probs(params, feats), threshold, obs.names)


def save_params(params: EnesParams, path):
    meta = {
        "params_version": PARAMS_VERSION,
        "dims": {
            "feature_dim": params.feature_dim,
            "hidden": params.hidden,
            "expert_hidden": params.expert_hidden,
            "n_classes": params.n_classes,
        },
        "penalty": list(params.penalty),
        "seed": params.seed,
    }
    write_record(path, "enes-params", meta, {name: params.weights[name] for name in PARAM_NAMES})


def load_params(path, hidden: int | None = None, expert_hidden: int | None = None) -> EnesParams:
    """Read a parameter file; optional widths must match the stored architecture."""
    meta, arrays = read_record(path, "enes-params")
    if meta.get("params_version") != PARAMS_VERSION:
        raise RecordError(f"unsupported parameter version {meta.get('params_version')}")
    dims = meta["dims"]
    if (hidden is not None and hidden != dims["hidden"]) or (
        expert_hidden is not None and expert_hidden != dims["expert_hidden"]
    ):
        raise RecordError(
            f"architecture mismatch: file has hidden={dims['hidden']}, expert_hidden={dims['expert_hidden']}"
        )
    if dims["feature_dim"] != FEATURE_DIM or dims["n_classes"] != N_CLASSES:
        raise RecordError("architecture mismatch: feature or class dimension differs")
    try:
        return EnesParams(
            arrays,
            dims["hidden"],
            dims["expert_hidden"],
            tuple(meta["penalty"]),
            meta["seed"],
        )
    except ValueError as exc:
        raise RecordError(str(exc)) from exc
