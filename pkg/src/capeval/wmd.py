"""Word Mover's Distance: exact transportation solver, lower bounds, WMD relevance."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import AbstractSet

import numpy as np
from scipy.spatial.distance import cdist

from .core import Sentence
from .errors import AllOovError, ConfigError
from .io import EmbeddingTable

# Optimality/feasibility tolerances for the exact solver; supports are tiny
# (sentence vocabularies), so these are comfortably loose for float64.
_OPT_TOL = 1e-11
_FEAS_TOL = 1e-9


@dataclass(frozen=True)
class NBowDistribution:
    """Normalized bag-of-words mass over a sentence's in-vocabulary tokens."""

    tokens: tuple[str, ...]
    vectors: np.ndarray  # (k, d), one embedding per distinct token
    weights: np.ndarray  # (k,), positive, sums to 1

    def __post_init__(self):
        if len(self.weights) == 0:
            raise ValueError("empty distribution")
        if len(self.weights) != len(self.vectors) or len(self.weights) != len(self.tokens):
            raise ValueError("tokens, vectors and weights must align")
        if np.any(self.weights <= 0):
            raise ValueError("weights must be positive")
        if abs(float(self.weights.sum()) - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1")

    def __len__(self) -> int:
        return len(self.weights)


@dataclass(frozen=True)
class TransportPlan:
    """Positive flows of an optimal transport between two distributions."""

    flows: dict[tuple[int, int], float]
    cost: float

    def marginals(self, n: int, m: int) -> tuple[np.ndarray, np.ndarray]:
        row = np.zeros(n)
        col = np.zeros(m)
        for (i, j), f in self.flows.items():
            row[i] += f
            col[j] += f
        return row, col


def nbow(
    sentence: Sentence,
    table: EmbeddingTable,
    stopwords: AbstractSet[str] = frozenset(),
) -> NBowDistribution:
    """Build the nBOW distribution of a sentence over the embedding vocabulary.

    Out-of-vocabulary tokens (and stopwords, when given) are dropped; if
    nothing remains, :class:`AllOovError` lists the offending tokens.
    """
    counts = Counter(t for t in sentence.tokens if t not in stopwords)
    kept = [t for t in counts if t in table]
    if not kept:
        raise AllOovError(sentence.tokens)
    total = sum(counts[t] for t in kept)
    weights = np.array([counts[t] / total for t in kept], dtype=np.float64)
    vectors = np.stack([np.asarray(table[t], dtype=np.float64) for t in kept])
    return NBowDistribution(tuple(kept), vectors, weights)


def _tree_duals(basis: list[tuple[int, int]], C: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Dual potentials u, v with u_i + v_j = c_ij on every basis arc."""
    n, m = C.shape
    adj: list[list[tuple[int, float]]] = [[] for _ in range(n + m)]
    for i, j in basis:
        c = C[i, j]
        adj[i].append((n + j, c))
        adj[n + j].append((i, c))
    pot = np.full(n + m, np.nan)
    pot[0] = 0.0
    stack = [0]
    while stack:
        x = stack.pop()
        for y, c in adj[x]:
            if np.isnan(pot[y]):
                pot[y] = c - pot[x]
                stack.append(y)
    return pot[:n], pot[n:]


def _tree_path(basis: list[tuple[int, int]], n: int, m: int, start: int, goal: int) -> list[int]:
    """Node path from ``start`` to ``goal`` through the basis spanning tree."""
    adj: list[list[int]] = [[] for _ in range(n + m)]
    for i, j in basis:
        adj[i].append(n + j)
        adj[n + j].append(i)
    parent = {start: start}
    stack = [start]
    while stack:
        x = stack.pop()
        if x == goal:
            break
        for y in adj[x]:
            if y not in parent:
                parent[y] = x
                stack.append(y)
    path = [goal]
    while path[-1] != start:
        path.append(parent[path[-1]])
    path.reverse()
    return path


def _transport(a: np.ndarray, b: np.ndarray, C: np.ndarray) -> tuple[dict[tuple[int, int], float], float]:
    """Solve the transportation problem min <T, C> with marginals a and b exactly.

    Transportation simplex on the bipartite support graph: northwest-corner
    start, most-negative-reduced-cost pivots, falling back to Bland's rule
    after a run of degenerate pivots so pivoting cannot cycle.  Optimality is
    certified before returning: no reduced cost below tolerance, marginal
    residuals below 1e-9.
    """
    n, m = C.shape
    if n == 1:
        flows = {(0, j): float(b[j]) for j in range(m)}
        return flows, float(np.dot(b, C[0]))
    if m == 1:
        flows = {(i, 0): float(a[i]) for i in range(n)}
        return flows, float(np.dot(a, C[:, 0]))

    ra = np.array(a, dtype=np.float64)
    rb = np.array(b, dtype=np.float64)
    basis: list[tuple[int, int]] = []
    flow: dict[tuple[int, int], float] = {}
    i = j = 0
    while True:
        q = min(ra[i], rb[j])
        basis.append((i, j))
        flow[(i, j)] = float(q)
        ra[i] -= q
        rb[j] -= q
        if i == n - 1 and j == m - 1:
            break
        if i < n - 1 and ra[i] <= rb[j]:
            i += 1
        elif j < m - 1:
            j += 1
        else:
            i += 1

    scale = float(C.max()) if C.size else 1.0
    opt_tol = _OPT_TOL * max(scale, 1.0)
    degenerate_streak = 0
    bland_after = 2 * (n + m)
    max_pivots = 1000 + 200 * (n + m) * (n + m)

    for _ in range(max_pivots):
        u, v = _tree_duals(basis, C)
        reduced = C - u[:, None] - v[None, :]
        for bi, bj in basis:
            reduced[bi, bj] = 0.0
        if degenerate_streak <= bland_after:
            ei, ej = np.unravel_index(int(np.argmin(reduced)), reduced.shape)
            if reduced[ei, ej] >= -opt_tol:
                break
        else:
            improving = np.argwhere(reduced < -opt_tol)
            if len(improving) == 0:
                break
            ei, ej = improving[0]
        ei, ej = int(ei), int(ej)

        # cycle: entering arc plus the tree path from its column back to its row
        path = _tree_path(basis, n, m, n + ej, ei)
        minus_arcs: list[tuple[int, int]] = []
        plus_arcs: list[tuple[int, int]] = []
        for k in range(len(path) - 1):
            x, y = path[k], path[k + 1]
            arc = (x, y - n) if y >= n else (y, x - n)
            (minus_arcs if k % 2 == 0 else plus_arcs).append(arc)
        theta = min(flow[arc] for arc in minus_arcs)
        leaving = min(arc for arc in minus_arcs if flow[arc] == theta)

        for arc in plus_arcs:
            flow[arc] += theta
        for arc in minus_arcs:
            flow[arc] = max(0.0, flow[arc] - theta)
        del flow[leaving]
        basis.remove(leaving)
        basis.append((ei, ej))
        flow[(ei, ej)] = theta
        degenerate_streak = degenerate_streak + 1 if theta <= opt_tol else 0
    else:
        raise RuntimeError("transportation simplex exceeded its pivot budget")

    cost = math.fsum(f * C[i, j] for (i, j), f in flow.items())

    # certificates: dual feasibility and marginal residuals
    u, v = _tree_duals(basis, C)
    slack = float((C - u[:, None] - v[None, :]).min())
    if slack < -_FEAS_TOL * max(scale, 1.0):
        raise RuntimeError(f"optimality certificate failed: reduced cost {slack}")
    row = np.zeros(n)
    col = np.zeros(m)
    for (i, j), f in flow.items():
        row[i] += f
        col[j] += f
    if float(np.abs(row - a).max()) > _FEAS_TOL or float(np.abs(col - b).max()) > _FEAS_TOL:
        raise RuntimeError("primal feasibility certificate failed")

    return {arc: f for arc, f in flow.items() if f > 0.0}, cost


def wmd(a: NBowDistribution, b: NBowDistribution) -> tuple[float, TransportPlan]:
    """Exact Word Mover's Distance and its optimal transport plan.

    Ground cost is the Euclidean distance between raw word vectors.
    """
    C = cdist(a.vectors, b.vectors)
    flows, cost = _transport(a.weights, b.weights, C)
    return cost, TransportPlan(flows=flows, cost=cost)


def wcd(a: NBowDistribution, b: NBowDistribution) -> float:
    """Centroid-distance lower bound on :func:`wmd`."""
    return float(np.linalg.norm(a.weights @ a.vectors - b.weights @ b.vectors))


def rwmd(a: NBowDistribution, b: NBowDistribution) -> float:
    """Relaxed lower bound: each side's mass moves to its nearest counterpart."""
    C = cdist(a.vectors, b.vectors)
    one_sided_a = float(a.weights @ C.min(axis=1))
    one_sided_b = float(b.weights @ C.min(axis=0))
    return max(one_sided_a, one_sided_b)


def wmdrel(
    candidate: Sentence,
    mt_ref: Sentence,
    table: EmbeddingTable,
    z: float,
    stopwords: AbstractSet[str] = frozenset(),
) -> float:
    """WMD relevance: 1 - wmd(candidate, mt_ref)/z, clamped to [0, 1].

    ``z`` is the batch normalizer keeping scores in range; it must be
    positive.  :class:`AllOovError` propagates when either side has no
    in-vocabulary support.
    """
    if z <= 0:
        raise ConfigError(f"normalizer z must be positive, got {z}")
    distance, _ = wmd(
        nbow(candidate, table, stopwords=stopwords),
        nbow(mt_ref, table, stopwords=stopwords),
    )
    return min(1.0, max(0.0, 1.0 - distance / z))
