"""Cross-entropy plus the Pearson-faithfulness, 2-cycle and expert-cosine penalties.

All functions take batched tape nodes (one row per triplet) and return the
batch mean as a 1x1 node.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .graph import BACKWARD, FORWARD, N_CLASSES, NONE, SLOT1, SLOT2

PROB_FLOOR = 1e-12
COS_EPS = 1e-12

# columns: slot (i,j), slot (j,k)
EDGE_MASS = np.column_stack([1.0 - SLOT1[:, NONE], 1.0 - SLOT2[:, NONE]])
FORWARD_MASS = np.column_stack([SLOT1[:, FORWARD], SLOT2[:, FORWARD]])
BACKWARD_MASS = np.column_stack([SLOT1[:, BACKWARD], SLOT2[:, BACKWARD]])


@dataclass
class LossBreakdown:
    total: float
    ce: float
    pearson_pen: float
    adjacency_pen: float
    cosine_pen: float
    weights: tuple[float, float, float]

    def as_row(self) -> dict[str, float]:
        return {
            "total": self.total,
            "ce": self.ce,
            "pearson": self.pearson_pen,
            "adjacency": self.adjacency_pen,
            "cosine": self.cosine_pen,
        }


def _row_sum(x: ad.Node) -> ad.Node:
    return x @ x.tape.const(np.ones((x.shape[1], 1)))


def cross_entropy(probs: ad.Node, labels) -> ad.Node:
    labels = np.asarray(labels, dtype=int).reshape(-1)
    onehot = np.zeros((len(labels), N_CLASSES))
    onehot[np.arange(len(labels)), labels] = 1.0
    picked = _row_sum(ad.log(ad.clamp_min(probs, PROB_FLOOR)) * probs.tape.const(onehot))
    return -ad.mean(picked)


def pearson_penalty(probs: ad.Node, r_ij, r_jk) -> ad.Node:
    """P(slot has an edge) * (1 - |r|), summed over both slots."""
    unfaithful = np.column_stack([1.0 - np.abs(np.ravel(r_ij)), 1.0 - np.abs(np.ravel(r_jk))])
    t = probs.tape
    return ad.mean(_row_sum((probs @ t.const(EDGE_MASS)) * t.const(unfaithful)))


def adjacency_penalty(probs: ad.Node) -> ad.Node:
    """trace(W @ W) of the soft 3x3 triplet adjacency: 2 * sum over slots of P(a->b) P(b->a)."""
    t = probs.tape
    fwd = probs @ t.const(FORWARD_MASS)
    bwd = probs @ t.const(BACKWARD_MASS)
    return ad.mean(_row_sum(fwd * bwd)) * 2.0


def cosine_penalty(expert_a: ad.Node, expert_b: ad.Node) -> ad.Node:
    dots = _row_sum(expert_a * expert_b)
    norms = ad.sqrt(_row_sum(ad.square(expert_a))) * ad.sqrt(_row_sum(ad.square(expert_b)))
    return ad.mean(dots / (norms + COS_EPS))


def soft_adjacency(probs: np.ndarray) -> np.ndarray:
    """Explicit 3x3 soft adjacency over (i, j, k) for one probability vector."""
    p = np.ravel(probs)
    W = np.zeros((3, 3))
    W[0, 1] = p @ SLOT1[:, FORWARD]
    W[1, 0] = p @ SLOT1[:, BACKWARD]
    W[1, 2] = p @ SLOT2[:, FORWARD]
    W[2, 1] = p @ SLOT2[:, BACKWARD]
    return W


def fused_loss(out: dict[str, ad.Node], labels, corrs, weights=(1.0, 1.0, 1.0), cosine_sign: float = 1.0):
    """Total objective node and its scalar breakdown.

    `out` holds the "probs", "expert_a" and "expert_b" nodes of a forward pass;
    `corrs` rows are (r_ij, r_jk, r_ik).
    """
    labels = np.asarray(labels, dtype=int).reshape(-1)
    if len(labels) == 0:
        raise ValueError("empty batch")
    corrs = np.asarray(corrs, dtype=float).reshape(-1, 3)
    a, b, c = (float(w) for w in weights)
    probs = out["probs"]
    ce = cross_entropy(probs, labels)
    pear = pearson_penalty(probs, corrs[:, 0], corrs[:, 1])
    adj = adjacency_penalty(probs)
    cos = cosine_penalty(out["expert_a"], out["expert_b"]) * float(cosine_sign)
    total = ce + pear * a + adj * b + cos * c
    parts = [float(n.value[0, 0]) for n in (ce, pear, adj, cos)]
    breakdown = LossBreakdown(
        ce=parts[0],
        pearson_pen=parts[1],
        adjacency_pen=parts[2],
        cosine_pen=parts[3],
        total=parts[0] + a * parts[1] + b * parts[2] + c * parts[3],
        weights=(a, b, c),
    )
    return total, breakdown


def loss_breakdown(pred, labels, corrs, weights=(1.0, 1.0, 1.0), cosine_sign: float = 1.0) -> LossBreakdown:
    """Loss components for an already computed TripletPrediction."""
    tape = ad.Tape()
    out = {
        "probs": tape.const(pred.probs),
        "expert_a": tape.const(pred.expert_a_logits),
        "expert_b": tape.const(pred.expert_b_logits),
    }
    return fused_loss(out, labels, corrs, weights, cosine_sign)[1]
