"""Node vulnerability of a coupled-oscillator network.

The measure of node k is the k-th diagonal entry of the Laplacian
pseudoinverse, equivalently e_k^T (L + 11^T/n)^{-1} e_k - 1/n, and equals
the resistance combination n^{-1} sum_j Omega_jk - n^{-2} sum_{i<j} Omega_ij.
All evaluations share one SpectralBundle per graph.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .graphs import (
    DisconnectedGraphError,
    WeightedGraph,
    resistance_matrix,
    spectral_bundle,
)

__all__ = [
    "VulnerabilityReport",
    "vulnerability_measure",
    "vulnerability_gradient",
    "worst_case",
    "lower_bound",
    "commute_decomposition",
    "vulnerability_report",
]

# Nodes whose measures differ by less than this (relative) count as tied.
_TIE_RTOL = 1e-12


def _check_node(g: WeightedGraph, k: int) -> int:
    if not 1 <= k <= g.n:
        raise ValueError(f"node {k} out of range 1..{g.n}")
    return k - 1


def vulnerability_measure(g: WeightedGraph, k: int) -> float:
    """Small-angle vulnerability of node k: the diagonal entry L^+_kk."""
    k0 = _check_node(g, k)
    bundle = spectral_bundle(g)
    return float(bundle.reg_inverse[k0, k0]) - 1.0 / g.n


def vulnerability_gradient(g: WeightedGraph, k: int) -> np.ndarray:
    """Gradient of the measure of node k in the edge weights.

    Entry l for edge (i, j) is -(u_i - u_j)^2 with u = (L + 11^T/n)^{-1} e_k,
    so every entry is nonpositive.
    """
    k0 = _check_node(g, k)
    u = spectral_bundle(g).reg_inverse[:, k0]
    ei = np.fromiter((e[0] for e in g.edges), dtype=int, count=g.m)
    ej = np.fromiter((e[1] for e in g.edges), dtype=int, count=g.m)
    d = u[ei] - u[ej]
    return -d * d


def worst_case(g: WeightedGraph, nodes: Iterable[int]) -> tuple[int, float]:
    """Most vulnerable node of a candidate set and its measure.

    Ties (within floating-point noise) break toward the smallest node index.
    """
    candidates = sorted(set(nodes))
    if not candidates:
        raise ValueError("candidate node set is empty")
    measures = {k: vulnerability_measure(g, k) for k in candidates}
    vmax = max(measures.values())
    cut = vmax - _TIE_RTOL * max(1.0, abs(vmax))
    best = min(k for k, v in measures.items() if v >= cut)
    return best, measures[best]


def lower_bound(g: WeightedGraph) -> float:
    """Connectivity floor (1/lambda_2)(1 - 1/n)^2 on the vulnerability scale.

    Diverges as the network approaches disconnection, which is what makes a
    small positive floor on lambda_2 harmless to the design optimum. Note
    the guaranteed per-node floor at unit budget is (1 - 1/n)^2 (tight at
    the center of a path), and the worst node always measures at least
    1/(n*lambda_2); this quantity coincides with those guarantees only up
    to the factor n.
    """
    bundle = spectral_bundle(g)
    lam2 = float(bundle.eigenvalues[1])
    if lam2 <= 0.0:
        raise DisconnectedGraphError("lower bound undefined for disconnected graph")
    return (1.0 - 1.0 / g.n) ** 2 / lam2


def commute_decomposition(g: WeightedGraph, k: int) -> tuple[float, float]:
    """Commute-time split of the measure at node k.

    Returns (sum of commute times from k, sum of commute times between node
    pairs excluding k); these satisfy
    (n-1) * sum_from_k - sum_pairs_excl_k = 2 n^2 * measure(k)
    for unit total weight.
    """
    k0 = _check_node(g, k)
    omega = resistance_matrix(g)
    scale = 2.0 * float(np.sum(g.b))
    commute = scale * omega
    sum_from_k = float(np.sum(commute[:, k0]))
    all_pairs = float(np.sum(commute)) / 2.0
    return sum_from_k, all_pairs - sum_from_k


@dataclass(frozen=True)
class VulnerabilityReport:
    """Measure, gradient, and universal lower bound for one node."""

    node: int
    measure: float
    gradient: np.ndarray
    lower_bound: float

    def __post_init__(self) -> None:
        self.gradient.setflags(write=False)


def vulnerability_report(g: WeightedGraph, k: int) -> VulnerabilityReport:
    """Bundle measure, gradient, and lower bound for node k."""
    return VulnerabilityReport(
        node=k,
        measure=vulnerability_measure(g, k),
        gradient=vulnerability_gradient(g, k),
        lower_bound=lower_bound(g),
    )
