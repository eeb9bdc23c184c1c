"""Deterministic per-triplet dependence statistics fed to the shared encoder.

Per pair (i,j), (j,k), (i,k): Pearson r of raw values, of ranks, of absolute
values, of squared values, and the sign-agreement rate minus 0.5. Per node:
skewness and excess kurtosis. 21 numbers, all invariant to reordering samples.
"""

from __future__ import annotations

import numpy as np
from scipy.stats import rankdata

FEATURE_DIM = 21
MIN_SAMPLES = 8
PAIRS = ((0, 1), (1, 2), (0, 2))


def standardize_rows(x: np.ndarray) -> np.ndarray:
    """Z-score each row; zero-variance rows become all zeros."""
    x = np.asarray(x, dtype=float)
    mu = x.mean(axis=1, keepdims=True)
    sd = x.std(axis=1, keepdims=True)
    out = np.zeros_like(x)
    ok = sd[:, 0] > 1e-12 * np.maximum(1.0, np.abs(mu[:, 0]))
    out[ok] = (x[ok] - mu[ok]) / sd[ok]
    return out


def _corr_matrix(x: np.ndarray) -> np.ndarray:
    z = standardize_rows(x)
    return z @ z.T / z.shape[1]


def node_tables(x: np.ndarray) -> dict[str, np.ndarray]:
    """All pairwise statistics for a d x T matrix, computed once."""
    x = np.asarray(x, dtype=float)
    if x.shape[1] < MIN_SAMPLES:
        raise ValueError("too few samples")
    z = standardize_rows(x)
    live = np.any(z != 0.0, axis=1)
    ranks = np.vstack([rankdata(row) for row in z]) if len(z) else z
    sgn = np.sign(z)
    T = z.shape[1]
    agree = ((sgn[:, None, :] == sgn[None, :, :]).sum(axis=2) / T) - 0.5
    mask = np.outer(live, live)
    tables = {
        "raw": _corr_matrix(z),
        "rank": _corr_matrix(ranks),
        "abs": _corr_matrix(np.abs(z)),
        "sq": _corr_matrix(z**2),
        "sign": agree,
    }
    for key in tables:
        tables[key] = np.where(mask, np.clip(tables[key], -1.0, 1.0), 0.0)
    tables["skew"] = (z**3).mean(axis=1)
    tables["kurt"] = np.where(live, (z**4).mean(axis=1) - 3.0, 0.0)
    return tables


STAT_KEYS = ("raw", "rank", "abs", "sq", "sign")


def features_from_tables(tables: dict[str, np.ndarray], order: np.ndarray) -> np.ndarray:
    """Feature rows for an (N, 3) array of ordered node triples."""
    order = np.asarray(order, dtype=int).reshape(-1, 3)
    cols = []
    for p, q in PAIRS:
        a, b = order[:, p], order[:, q]
        cols.extend(tables[key][a, b] for key in STAT_KEYS)
    cols.extend(tables["skew"][order[:, n]] for n in range(3))
    cols.extend(tables["kurt"][order[:, n]] for n in range(3))
    return np.column_stack(cols)


def featurize(block: np.ndarray) -> np.ndarray:
    """Features of a single 3 x T block (rows i, j, k)."""
    block = np.asarray(block, dtype=float)
    if block.ndim != 2 or block.shape[0] != 3:
        raise ValueError(f"expected a 3 x T block, got shape {block.shape}")
    return features_from_tables(node_tables(block), np.array([[0, 1, 2]]))[0]


def mirror_features(feats: np.ndarray) -> np.ndarray:
    """Features of the same block with rows i and k swapped."""
    f = np.atleast_2d(feats)
    s = len(STAT_KEYS)
    return np.hstack([f[:, s : 2 * s], f[:, :s], f[:, 2 * s : 3 * s], f[:, [17, 16, 15]], f[:, [20, 19, 18]]])
