"""Shared helpers: seeded random graph factories and independent oracles."""
from __future__ import annotations

import numpy as np

from resilnet import build_graph
from resilnet.graphs import WeightedGraph, laplacian


def random_connected_graph(rng: np.random.Generator, n: int,
                           extra_edges: int | None = None,
                           unit_budget: bool = False) -> WeightedGraph:
    """Random spanning tree plus chords, weights bounded away from zero."""
    edges = [(int(rng.integers(1, v)), v) for v in range(2, n + 1)]
    seen = {(min(a, b), max(a, b)) for a, b in edges}
    if extra_edges is None:
        extra_edges = int(rng.integers(0, n))
    attempts = 0
    while extra_edges > 0 and attempts < 50 * n:
        attempts += 1
        u, v = int(rng.integers(1, n + 1)), int(rng.integers(1, n + 1))
        pair = (min(u, v), max(u, v))
        if u == v or pair in seen:
            continue
        seen.add(pair)
        edges.append(pair)
        extra_edges -= 1
    b = rng.uniform(0.5, 1.5, size=len(edges))
    if unit_budget:
        b = b / b.sum()
    return build_graph(n, edges, b)


def random_tree(rng: np.random.Generator, n: int) -> WeightedGraph:
    edges = [(int(rng.integers(1, v)), v) for v in range(2, n + 1)]
    return build_graph(n, edges, np.ones(n - 1))


def pinv_resistance(g: WeightedGraph, i: int, j: int) -> float:
    """Independent oracle: effective resistance via the eigen pseudoinverse."""
    lp = np.linalg.pinv(laplacian(g))
    a, c = i - 1, j - 1
    return float(lp[a, a] + lp[c, c] - 2.0 * lp[a, c])


def pinv_measure(g: WeightedGraph, k: int) -> float:
    """Independent oracle: the resistance-sum form of the measure."""
    n = g.n
    total_k = sum(pinv_resistance(g, j, k) for j in range(1, n + 1) if j != k)
    total_all = sum(
        pinv_resistance(g, i, j)
        for i in range(1, n + 1) for j in range(i + 1, n + 1)
    )
    return total_k / n - total_all / n ** 2


def simplex_grid(m: int, steps: int) -> np.ndarray:
    """All weight vectors with entries i/steps summing to 1 (boundary included)."""
    if m == 1:
        return np.ones((1, 1))
    if m == 2:
        i = np.arange(steps + 1)
        return np.column_stack([i, steps - i]) / steps
    if m == 3:
        i = np.repeat(np.arange(steps + 1), np.arange(steps + 1, 0, -1))
        j = np.concatenate([np.arange(steps + 1 - v) for v in range(steps + 1)])
        return np.column_stack([i, j, steps - i - j]) / steps
    import itertools
    rows = [
        np.diff((0,) + cuts + (steps,))
        for cuts in itertools.combinations_with_replacement(range(steps + 1), m - 1)
    ]
    return np.array(rows) / steps


def support_connected_mask(n: int, edges, B: np.ndarray) -> np.ndarray:
    """Row mask: does each weight vector's positive support span the graph?"""
    edges0 = [(min(i, j) - 1, max(i, j) - 1) for i, j in edges]
    patterns: dict[bytes, bool] = {}
    support = B > 0
    out = np.zeros(B.shape[0], dtype=bool)
    for row in range(B.shape[0]):
        key = support[row].tobytes()
        val = patterns.get(key)
        if val is None:
            adj = [[] for _ in range(n)]
            for (i, j), s in zip(edges0, support[row]):
                if s:
                    adj[i].append(j)
                    adj[j].append(i)
            seen = [False] * n
            seen[0] = True
            stack = [0]
            while stack:
                v = stack.pop()
                for u in adj[v]:
                    if not seen[u]:
                        seen[u] = True
                        stack.append(u)
            val = all(seen)
            patterns[key] = val
        out[row] = val
    return out


def batched_measure(n: int, edges, B: np.ndarray, k: int,
                    chunk: int = 50000) -> np.ndarray:
    """Vulnerability of node k for many weight vectors at once.

    ``edges`` are 1-based pairs; rows of B must have connected support.
    """
    m = len(edges)
    ei = np.array([min(i, j) - 1 for i, j in edges])
    ej = np.array([max(i, j) - 1 for i, j in edges])
    k0 = k - 1
    rhs = np.zeros((n, 1))
    rhs[k0, 0] = 1.0
    out = np.empty(B.shape[0])
    for lo in range(0, B.shape[0], chunk):
        W = B[lo:lo + chunk]
        N = W.shape[0]
        M = np.full((N, n, n), 1.0 / n)
        for l in range(m):
            w = W[:, l]
            M[:, ei[l], ej[l]] -= w
            M[:, ej[l], ei[l]] -= w
            M[:, ei[l], ei[l]] += w
            M[:, ej[l], ej[l]] += w
        sol = np.linalg.solve(M, np.broadcast_to(rhs, (N, n, 1)))
        out[lo:lo + chunk] = sol[:, k0, 0] - 1.0 / n
    return out


def traversal_connected(g: WeightedGraph, tol: float) -> bool:
    """Connectivity by traversal restricted to edges heavier than tol."""
    adj = [[] for _ in range(g.n)]
    for (i, j), w in zip(g.edges, g.b):
        if w > tol:
            adj[i].append(j)
            adj[j].append(i)
    seen = [False] * g.n
    stack = [0]
    seen[0] = True
    while stack:
        v = stack.pop()
        for u in adj[v]:
            if not seen[u]:
                seen[u] = True
                stack.append(u)
    return all(seen)
