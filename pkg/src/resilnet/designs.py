"""Closed-form optimal weightings for complete graphs and trees.

Both families admit exact minimizers of a single node's vulnerability over
the unit weight simplex: a uniform star centered at the node for complete
graphs, and square-root path-usage weights for trees. The per-edge
certificate `gradient_l + measure >= 0` is sufficient for global optimality
of any candidate point and is exposed for arbitrary graphs; a pass is a
sufficient-condition verdict, never a necessary one.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphs import WeightedGraph, complete_graph_edges
from .vulnerability import vulnerability_gradient, vulnerability_measure

__all__ = [
    "PathUsageCounts",
    "CertificateResult",
    "complete_graph_optimum",
    "path_usage_counts",
    "tree_optimum",
    "optimality_certificate",
]


class NotATreeError(ValueError):
    """Topology is not a spanning tree."""


@dataclass(frozen=True)
class PathUsageCounts:
    """Per-edge path usage of a tree.

    ``a[l]`` counts node pairs whose unique path crosses edge l; ``a_k[l]``
    counts nodes whose unique path from the reference node crosses edge l.
    """

    a: np.ndarray
    a_k: np.ndarray

    def __post_init__(self) -> None:
        self.a.setflags(write=False)
        self.a_k.setflags(write=False)


@dataclass(frozen=True)
class CertificateResult:
    """Per-edge optimality residuals r_l = gradient_l + measure."""

    residuals: np.ndarray
    min_residual: float
    optimal: bool

    def __post_init__(self) -> None:
        self.residuals.setflags(write=False)


def complete_graph_optimum(n: int, k: int) -> np.ndarray:
    """Optimal K_n weights for node k: a uniform star centered at k.

    The vector covers all n(n-1)/2 edges of K_n in the canonical
    lexicographic order (``complete_graph_edges``), with explicit zeros on
    the edges not incident to k; the resulting measure is ((n-1)/n)^2.
    """
    if n < 2:
        raise ValueError(f"complete graph needs n >= 2, got {n}")
    if not 1 <= k <= n:
        raise ValueError(f"node {k} out of range 1..{n}")
    edges = complete_graph_edges(n)
    b = np.zeros(len(edges))
    for l, (i, j) in enumerate(edges):
        if k in (i, j):
            b[l] = 1.0 / (n - 1)
    return b


def _tree_adjacency(tree: WeightedGraph) -> list[list[tuple[int, int]]]:
    """Adjacency lists (neighbor, edge index) of the edge structure.

    Weights are ignored: the input is a topology. Raises NotATreeError if
    the structure is not a spanning tree.
    """
    if tree.m != tree.n - 1:
        raise NotATreeError(
            f"tree needs m = n - 1 edges, got m={tree.m} with n={tree.n}"
        )
    adj: list[list[tuple[int, int]]] = [[] for _ in range(tree.n)]
    for l, (i, j) in enumerate(tree.edges):
        adj[i].append((j, l))
        adj[j].append((i, l))
    # m = n - 1 plus full reachability rules out cycles.
    seen = [False] * tree.n
    stack = [0]
    seen[0] = True
    while stack:
        v = stack.pop()
        for u, _ in adj[v]:
            if not seen[u]:
                seen[u] = True
                stack.append(u)
    if not all(seen):
        raise NotATreeError("edge structure is disconnected, not a spanning tree")
    return adj


def path_usage_counts(tree: WeightedGraph, k: int) -> PathUsageCounts:
    """Exact path-usage counts of a tree via subtree sizes.

    Removing edge l splits the tree into parts of sizes s and n - s; then
    a[l] = s * (n - s) pairs cross the edge and a_k[l] equals the size of
    the part not containing k.
    """
    if not 1 <= k <= tree.n:
        raise ValueError(f"node {k} out of range 1..{tree.n}")
    adj = _tree_adjacency(tree)
    root = k - 1
    # Iterative post-order from the reference node: subtree sizes looking
    # away from k give the component that does not contain k.
    parent_edge = [-1] * tree.n
    order = []
    stack = [(root, -1)]
    while stack:
        v, pe = stack.pop()
        parent_edge[v] = pe
        order.append(v)
        for u, l in adj[v]:
            if l != pe:
                stack.append((u, l))
    size = np.ones(tree.n, dtype=int)
    a = np.zeros(tree.m, dtype=int)
    a_k = np.zeros(tree.m, dtype=int)
    for v in reversed(order):
        l = parent_edge[v]
        if l >= 0:
            s = int(size[v])
            a[l] = s * (tree.n - s)
            a_k[l] = s
            i, j = tree.edges[l]
            up = i if j == v else j
            size[up] += size[v]
    return PathUsageCounts(a=a.astype(float), a_k=a_k.astype(float))


def tree_optimum(tree: WeightedGraph, k: int) -> np.ndarray:
    """Optimal tree weights for node k.

    Each edge gets weight proportional to sqrt(n * a_k[l] - a[l]); the
    certificate residuals vanish identically at this point.
    """
    counts = path_usage_counts(tree, k)
    s = np.sqrt(tree.n * counts.a_k - counts.a)
    return s / s.sum()


def optimality_certificate(
    g: WeightedGraph, k: int, tol: float = 1e-8
) -> CertificateResult:
    """Sufficient-condition check that g's weights minimize node k's measure.

    For unit total weight, nonnegative residuals r_l = gradient_l + measure
    certify global optimality over the weight simplex.
    """
    measure = vulnerability_measure(g, k)
    residuals = vulnerability_gradient(g, k) + measure
    min_residual = float(residuals.min())
    return CertificateResult(
        residuals=residuals,
        min_residual=min_residual,
        optimal=min_residual >= -tol,
    )
