"""TP / precision / recall / F1 / SHD / accuracy between directed graphs."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .graph import DirectedGraph

IDENTITY_TOL = 1e-12


def accuracy_from_shd(shd: float, d: int) -> float:
    return (d * d - shd) / (d * d)


def _ratio(num: float, den: float) -> float:
    return num / den if den else 0.0


@dataclass
class MetricReport:
    d: int
    tp: float
    predicted_positives: float
    true_positives_total: float
    precision: float
    recall: float
    f1: float
    shd: float
    accuracy: float
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        expected = accuracy_from_shd(self.shd, self.d)
        if abs(self.accuracy - expected) > IDENTITY_TOL:
            raise ValueError(f"accuracy {self.accuracy} violates (d^2 - SHD)/d^2 = {expected}")

    def to_dict(self) -> dict:
        out = asdict(self)
        out.update(out.pop("meta"))
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


NUMERIC_FIELDS = [f.name for f in fields(MetricReport) if f.name not in ("d", "meta")]


def evaluate(pred: DirectedGraph, truth: DirectedGraph, **meta) -> MetricReport:
    if pred.d != truth.d:
        raise ValueError(f"dimension mismatch: prediction d={pred.d}, truth d={truth.d}")
    P = pred.adj.astype(bool)
    W = truth.adj.astype(bool)
    d = truth.d
    tp = int(np.sum(P & W))
    n_pred = int(P.sum())
    n_true = int(W.sum())
    prec = _ratio(tp, n_pred)
    rec = _ratio(tp, n_true)
    f1 = _ratio(2 * prec * rec, prec + rec)
    diff = P != W
    shd = int(np.sum(np.triu(diff | diff.T, k=1)))
    return MetricReport(d, tp, n_pred, n_true, prec, rec, f1, shd, accuracy_from_shd(shd, d), dict(meta))


def mean_report(reports, **meta) -> MetricReport:
    reports = list(reports)
    if not reports:
        raise ValueError("no reports to average")
    d = reports[0].d
    if any(r.d != d for r in reports):
        raise ValueError("reports have different dimensions")
    means = {name: float(np.mean([getattr(r, name) for r in reports])) for name in NUMERIC_FIELDS}
    # the mean of accuracies equals accuracy of the mean SHD up to rounding; store the exact identity
    means["accuracy"] = accuracy_from_shd(means["shd"], d)
    return MetricReport(d=d, meta=dict(meta), **means)
