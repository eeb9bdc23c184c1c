"""Pearson-threshold and PC (Fisher-z) baselines.

Both return directed graphs; undirected claims become edges in both directions
so that the directed metrics can score them.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Callable

import numpy as np
from scipy.stats import norm

from .features import standardize_rows
from .graph import DirectedGraph

R_MAX = 1.0 - 1e-12


def correlation_matrix(data: np.ndarray) -> np.ndarray:
    z = standardize_rows(data)
    return np.clip(z @ z.T / z.shape[1], -1.0, 1.0)


def pearson_baseline(obs, threshold: float = 0.3) -> DirectedGraph:
    if obs.d < 2 or obs.T < 8:
        raise ValueError("pearson baseline needs d >= 2 and T >= 8")
    r = np.abs(correlation_matrix(obs.data))
    adj = r > threshold
    np.fill_diagonal(adj, False)
    return DirectedGraph(adj.astype(np.int8), list(obs.names))


@dataclass
class CiTestResult:
    pair: tuple[int, int]
    cond: tuple[int, ...]
    r: float
    z: float
    statistic: float
    independent: bool
    singular: bool = False


@dataclass
class PcConfig:
    alpha: float = 0.05
    max_cond_size: int = 3
    orient_rules: bool = True

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")


def partial_correlation(corr: np.ndarray, a: int, b: int, cond) -> tuple[float, bool]:
    """Partial correlation of a and b given cond from the inverse correlation submatrix.

    Returns (r, singular); a singular submatrix gives (nan, True).
    """
    idx = [a, b, *cond]
    sub = corr[np.ix_(idx, idx)]
    if np.linalg.cond(sub) > 1e12:
        return float("nan"), True
    prec = np.linalg.inv(sub)
    denom = np.sqrt(prec[0, 0] * prec[1, 1])
    if not np.isfinite(denom) or denom <= 0:
        return float("nan"), True
    return float(-prec[0, 1] / denom), False


def fisher_z_from_corr(corr: np.ndarray, n: int, a: int, b: int, cond=(), alpha: float = 0.05) -> CiTestResult:
    cond = tuple(int(c) for c in cond)
    dof = n - len(cond) - 3
    if dof < 1:
        raise ValueError(f"too few samples ({n}) for a conditioning set of size {len(cond)}")
    r, singular = partial_correlation(corr, a, b, cond)
    if singular:
        return CiTestResult((a, b), cond, r, float("inf"), float("inf"), False, True)
    r = float(np.clip(r, -R_MAX, R_MAX))
    z = 0.5 * np.log((1.0 + r) / (1.0 - r))
    stat = np.sqrt(dof) * abs(z)
    return CiTestResult((a, b), cond, r, float(z), float(stat), bool(stat <= norm.ppf(1.0 - alpha / 2.0)))


def fisher_z_test(obs, a: int, b: int, cond=(), alpha: float = 0.05) -> CiTestResult:
    return fisher_z_from_corr(correlation_matrix(obs.data), obs.T, a, b, cond, alpha)


CiTest = Callable[[int, int, tuple], bool]


def pc_skeleton(d: int, indep: CiTest, max_cond_size: int):
    """Order-independent (level-synchronous) skeleton search with separating sets."""
    adj = ~np.eye(d, dtype=bool)
    sepset: dict[frozenset, tuple] = {}
    level = 0
    while level <= max_cond_size:
        frozen = [np.flatnonzero(adj[v]) for v in range(d)]
        if all(len(nb) - 1 < level for nb in frozen):
            break
        removals = []
        for a, b in combinations(range(d), 2):
            if not adj[a, b]:
                continue
            found = None
            for x, y in ((a, b), (b, a)):
                pool = [v for v in frozen[x] if v != y]
                for cond in combinations(pool, level):
                    if indep(x, y, cond):
                        found = cond
                        break
                if found is not None:
                    break
            if found is not None:
                removals.append((a, b, found))
        for a, b, cond in removals:
            adj[a, b] = adj[b, a] = False
            sepset[frozenset((a, b))] = cond
        level += 1
    return adj, sepset


def _adjacent(G, a, b):
    return G[a, b] or G[b, a]


def _undirected(G, a, b):
    return G[a, b] and G[b, a]


def _orient(G, a, b) -> bool:
    """Make a - b into a -> b; returns True when something changed."""
    if _undirected(G, a, b):
        G[b, a] = False
        return True
    return False


def meek_closure(G: np.ndarray) -> np.ndarray:
    """Apply Meek rules R1-R3 until nothing changes. G[a,b] & G[b,a] means undirected."""
    d = len(G)
    changed = True
    while changed:
        changed = False
        for a in range(d):
            for b in range(d):
                if a == b or not _undirected(G, a, b):
                    continue
                # R1: c -> a - b, c and b non-adjacent
                if any(G[c, a] and not G[a, c] and not _adjacent(G, c, b) for c in range(d) if c not in (a, b)):
                    changed |= _orient(G, a, b)
                    continue
                # R2: a -> c -> b with a - b
                if any(
                    G[a, c] and not G[c, a] and G[c, b] and not G[b, c] for c in range(d) if c not in (a, b)
                ):
                    changed |= _orient(G, a, b)
                    continue
                # R3: a - c1 -> b, a - c2 -> b, c1 and c2 non-adjacent
                mids = [
                    c
                    for c in range(d)
                    if c not in (a, b) and _undirected(G, a, c) and G[c, b] and not G[b, c]
                ]
                if any(not _adjacent(G, c1, c2) for c1, c2 in combinations(mids, 2)):
                    changed |= _orient(G, a, b)
    return G


def pc_from_tests(d: int, indep: CiTest, cfg: PcConfig | None = None, names=None) -> DirectedGraph:
    cfg = cfg or PcConfig()
    skel, sepset = pc_skeleton(d, indep, cfg.max_cond_size)
    G = skel.copy()
    if cfg.orient_rules:
        for c in range(d):
            nbrs = np.flatnonzero(skel[c])
            for a, b in combinations(nbrs, 2):
                if skel[a, b]:
                    continue
                if c not in sepset.get(frozenset((a, b)), ()):
                    # a -> c <- b; keep earlier orientations on conflict
                    if G[a, c]:
                        G[c, a] = False
                    if G[b, c]:
                        G[c, b] = False
        meek_closure(G)
    return DirectedGraph(G.astype(np.int8), list(names) if names else [])


def pc_algorithm(obs, cfg: PcConfig | None = None) -> DirectedGraph:
    cfg = cfg or PcConfig()
    if obs.d < 2:
        raise ValueError("PC needs at least 2 variables")
    corr = correlation_matrix(obs.data)
    n = obs.T
    max_cond = min(cfg.max_cond_size, max(0, n - 4))

    def indep(a, b, cond):
        return fisher_z_from_corr(corr, n, a, b, cond, cfg.alpha).independent

    run_cfg = PcConfig(cfg.alpha, max_cond, cfg.orient_rules)
    return pc_from_tests(obs.d, indep, run_cfg, obs.names)
