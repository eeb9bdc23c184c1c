"""Langevin-noise SGD under a geometric annealing schedule, and the training loop."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .loss import fused_loss
from .model import PARAM_NAMES, EnesParams, forward_nodes, save_params

log = logging.getLogger(__name__)

LOG_COLUMNS = ("epoch", "total", "ce", "pearson", "adjacency", "cosine", "temperature")


@dataclass
class AnnealSchedule:
    t0: float = 1e-2
    alpha: float = 0.95
    floor: float = 1e-6

    def __post_init__(self):
        if self.t0 < 0 or self.floor < 0:
            raise ValueError("temperatures must be non-negative")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")


def temperature_at(schedule: AnnealSchedule, epoch: int) -> float:
    if epoch < 0:
        raise ValueError("epoch must be >= 0")
    if schedule.t0 == 0:
        return 0.0
    return max(schedule.t0 * schedule.alpha**epoch, schedule.floor)


@dataclass
class TrainConfig:
    lr: float = 1e-3
    epochs: int = 200
    batch_size: int = 64
    seed: int = 0
    grad_clip: float | None = 5.0
    anneal: AnnealSchedule = field(default_factory=AnnealSchedule)
    weights: tuple[float, float, float] = (1.0, 1.0, 1.0)
    cosine_sign: float = 1.0
    checkpoint_every: int = 0
    checkpoint_path: str | None = None

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


def clip_gradients(grads: dict[str, np.ndarray], max_norm: float | None) -> dict[str, np.ndarray]:
    """Scale all blocks together so their joint L2 norm is at most max_norm."""
    for name, g in grads.items():
        if not np.isfinite(g).all():
            raise FloatingPointError(f"non-finite gradient in parameter block {name!r}")
    if max_norm is None:
        return grads
    total = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if total <= max_norm:
        return grads
    scale = max_norm / total
    return {name: g * scale for name, g in grads.items()}


def langevin_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    lr: float,
    temperature: float,
    rng: np.random.Generator,
    grad_clip: float | None = None,
) -> dict[str, np.ndarray]:
    """theta - lr * g + sqrt(2 lr T) * N(0, I); no noise is drawn when T == 0."""
    grads = clip_gradients(grads, grad_clip)
    scale = np.sqrt(2.0 * lr * temperature) if temperature > 0 else 0.0
    out = {}
    for name, theta in params.items():
        step = theta - lr * grads[name]
        if scale > 0:
            step = step + scale * rng.standard_normal(theta.shape)
        out[name] = step
    return out


def loss_and_grads(params: EnesParams, feats, labels, corrs, weights=None, cosine_sign=1.0, check_finite=False):
    tape = ad.Tape(check_finite=check_finite)
    out = forward_nodes(tape, params, feats)
    total, breakdown = fused_loss(out, labels, corrs, weights or params.penalty, cosine_sign)
    return total, breakdown, ad.backward(tape, total)


def train(params: EnesParams, dataset, cfg: TrainConfig) -> tuple[EnesParams, list[dict]]:
    """Minibatch Langevin training on a TripletDataset; returns new params and the per-epoch log."""
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    if np.count_nonzero(dataset.class_counts()) < 2:
        warnings.warn("training set holds a single motif class", RuntimeWarning, stacklevel=2)
    feats = dataset.features()
    labels = np.asarray(dataset.labels)
    corrs = np.asarray(dataset.corrs)
    n = len(labels)
    rng = np.random.default_rng(cfg.seed)
    weights = {k: v.copy() for k, v in params.weights.items()}
    current = params.copy(weights)
    current.penalty = tuple(float(w) for w in cfg.weights)
    history = []
    for epoch in range(cfg.epochs):
        temp = temperature_at(cfg.anneal, epoch)
        perm = rng.permutation(n)
        sums = np.zeros(5)
        for start in range(0, n, cfg.batch_size):
            idx = perm[start : start + cfg.batch_size]
            _, br, grads = loss_and_grads(current, feats[idx], labels[idx], corrs[idx], cfg.weights, cfg.cosine_sign)
            sums += len(idx) * np.array([br.total, br.ce, br.pearson_pen, br.adjacency_pen, br.cosine_pen])
            current.weights = langevin_step(current.weights, grads, cfg.lr, temp, rng, cfg.grad_clip)
        means = sums / n
        history.append(dict(zip(LOG_COLUMNS, [epoch, *means.tolist(), temp])))
        log.debug("epoch %d total %.5f ce %.5f T %.2e", epoch, means[0], means[1], temp)
        if cfg.checkpoint_every and cfg.checkpoint_path and (epoch + 1) % cfg.checkpoint_every == 0:
            save_params(current, cfg.checkpoint_path)
    current.weights = {name: current.weights[name] for name in PARAM_NAMES}
    return current, history


def format_log_csv(history: list[dict]) -> str:
    lines = [",".join(LOG_COLUMNS)]
    for row in history:
        lines.append(",".join([str(row["epoch"])] + [repr(float(row[c])) for c in LOG_COLUMNS[1:]]))
    return "\n".join(lines) + "\n"
