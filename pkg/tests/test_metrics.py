import numpy as np
import pytest

from enes.graph import DirectedGraph
from enes.metrics import MetricReport, accuracy_from_shd, evaluate, mean_report

OFF_DIAG = [(a, b) for a in range(3) for b in range(3) if a != b]


def all_three_node_graphs():
    for mask in range(64):
        adj = np.zeros((3, 3), dtype=np.int8)
        for bit, (a, b) in enumerate(OFF_DIAG):
            if mask >> bit & 1:
                adj[a, b] = 1
        yield DirectedGraph(adj)


def brute_force(pred, truth):
    d = truth.d
    tp = npred = ntrue = 0
    for a in range(d):
        for b in range(d):
            p, t = pred.adj[a][b], truth.adj[a][b]
            tp += p and t
            npred += p
            ntrue += t
    prec = tp / npred if npred else 0.0
    rec = tp / ntrue if ntrue else 0.0
    f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
    shd = 0
    for a in range(d):
        for b in range(a + 1, d):
            if (pred.adj[a][b], pred.adj[b][a]) != (truth.adj[a][b], truth.adj[b][a]):
                shd += 1
    return dict(tp=tp, predicted_positives=npred, true_positives_total=ntrue,
                precision=prec, recall=rec, f1=f1, shd=shd, accuracy=(d * d - shd) / (d * d))


def test_matches_brute_force_on_all_pairs():
    graphs = list(all_three_node_graphs())
    for pred in graphs:
        for truth in graphs:
            got = evaluate(pred, truth)
            want = brute_force(pred, truth)
            for key, value in want.items():
                assert getattr(got, key) == value, (pred.adj, truth.adj, key)


def test_examples():
    truth = DirectedGraph.from_edges(3, [(0, 1), (1, 2)])
    perfect = evaluate(truth, truth)
    assert (perfect.precision, perfect.recall, perfect.f1, perfect.shd, perfect.accuracy) == (1, 1, 1, 0, 1)
    # a reversed edge counts once
    rev = evaluate(DirectedGraph.from_edges(3, [(1, 0), (1, 2)]), truth)
    assert rev.shd == 1 and rev.tp == 1
    empty = evaluate(DirectedGraph.empty(3), truth)
    assert empty.precision == 0.0 and empty.f1 == 0.0 and empty.shd == 2
    assert empty.accuracy == pytest.approx(7 / 9)


def test_shd_symmetric():
    graphs = list(all_three_node_graphs())
    rng = np.random.default_rng(0)
    for _ in range(300):
        a, b = graphs[rng.integers(64)], graphs[rng.integers(64)]
        assert evaluate(a, b).shd == evaluate(b, a).shd


def test_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension mismatch"):
        evaluate(DirectedGraph.empty(3), DirectedGraph.empty(4))


def test_identity_enforced():
    with pytest.raises(ValueError):
        MetricReport(3, 0, 0, 0, 0.0, 0.0, 0.0, 2, 0.5)


def test_mean_report():
    truth = DirectedGraph.from_edges(4, [(0, 1), (2, 3)])
    reports = [
        evaluate(truth, truth),
        evaluate(DirectedGraph.empty(4), truth),
        evaluate(DirectedGraph.from_edges(4, [(1, 0)]), truth),
    ]
    m = mean_report(reports, method="x")
    assert m.shd == pytest.approx(np.mean([r.shd for r in reports]))
    assert m.precision == pytest.approx(np.mean([r.precision for r in reports]))
    assert m.accuracy == accuracy_from_shd(m.shd, 4)
    assert m.to_dict()["method"] == "x"
    with pytest.raises(ValueError):
        mean_report([])
    with pytest.raises(ValueError):
        mean_report([reports[0], evaluate(DirectedGraph.empty(3), DirectedGraph.empty(3))])


def test_report_json_round_trip():
    import json

    truth = DirectedGraph.from_edges(3, [(0, 1)])
    r = evaluate(truth, truth, method="enes", seed=4)
    obj = json.loads(r.to_json())
    assert obj["seed"] == 4 and obj["shd"] == 0 and obj["accuracy"] == 1.0
