"""Grid design workflows: per-node sweeps and worst-case allocation.

Scenario "single" asks which candidate bus tolerates a new disturbance
best, before and after reallocating the susceptance budget for each
candidate separately. Scenario "minmax" reallocates once to protect a
whole node set. Internally the budget is normalized to one and results
are rescaled by homogeneity (measure(c*b) = measure(b)/c), so reported
measures and weights are in physical per-unit terms.
"""
from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .dynamics import NoSynchronizedStateError, steady_state
from .graphs import algebraic_connectivity
from .gridcase import GridCase
from .optimize import (
    DEFAULT_EPSILON_SCALE,
    DEFAULT_GAMMA,
    InfeasibleDesignError,
    SolverConfig,
    design_problem,
    epsilon_from_sync,
    solve_min_max,
    solve_single_node,
)
from .vulnerability import vulnerability_measure

__all__ = [
    "NodeOutcome",
    "SyncCheck",
    "ScenarioReport",
    "scenario_one",
    "scenario_two",
    "emit_report",
]

_IMPROVE_TOL = 1e-9


def _argmin_node(values: dict[int, float]) -> int:
    """Smallest node id among the (numerically tied) minimizers."""
    vmin = min(values.values())
    cut = vmin + _IMPROVE_TOL * max(1.0, abs(vmin))
    return min(k for k, v in values.items() if v <= cut)


@dataclass(frozen=True)
class NodeOutcome:
    """Measures of one candidate bus before and after optimization."""

    node: int
    before: float
    after: float | None
    feasible: bool
    increased: bool


@dataclass(frozen=True)
class SyncCheck:
    """Synchronization audit of the reported design."""

    gamma: float
    epsilon: float
    lambda2: float
    angle_gap: float | None
    warning: str | None


@dataclass(frozen=True)
class ScenarioReport:
    """Outcome of one scenario run; all quantities in physical units.

    ``b_out`` maps a bus id (as a string key, JSON-friendly) to that
    candidate's optimized weights for scenario "single", or holds the
    single shared vector under key "minmax".
    """

    scenario: str
    case_name: str
    gamma: float
    epsilon: float
    budget: float
    edges: tuple[tuple[int, int], ...]
    per_node: tuple[NodeOutcome, ...]
    best_node_before: int
    best_node: int | None
    objective_before: float
    objective_after: float
    sum_before: float
    sum_after: float
    b0: tuple[float, ...]
    b_out: dict[str, tuple[float, ...]]
    sync_check: SyncCheck

    def to_dict(self) -> dict:
        d = asdict(self)
        d["edges"] = [list(e) for e in self.edges]
        d["per_node"] = [asdict(o) for o in self.per_node]
        d["b0"] = list(self.b0)
        d["b_out"] = {k: list(v) for k, v in self.b_out.items()}
        d["sync_check"] = asdict(self.sync_check)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioReport":
        return cls(
            scenario=d["scenario"],
            case_name=d["case_name"],
            gamma=d["gamma"],
            epsilon=d["epsilon"],
            budget=d["budget"],
            edges=tuple((int(a), int(b)) for a, b in d["edges"]),
            per_node=tuple(NodeOutcome(**o) for o in d["per_node"]),
            best_node_before=d["best_node_before"],
            best_node=d["best_node"],
            objective_before=d["objective_before"],
            objective_after=d["objective_after"],
            sum_before=d["sum_before"],
            sum_after=d["sum_after"],
            b0=tuple(d["b0"]),
            b_out={k: tuple(v) for k, v in d["b_out"].items()},
            sync_check=SyncCheck(**d["sync_check"]),
        )


def _thread_count(jobs: int, threads: int | None) -> int:
    if threads is None:
        env = os.environ.get("RESILNET_THREADS", "")
        threads = int(env) if env.strip() else (os.cpu_count() or 1)
    return max(1, min(threads, jobs))


def _normalized_epsilon(case: GridCase, gamma: float,
                        epsilon: float | None) -> tuple[float, float]:
    """(physical, unit-budget) spectral floor for a case."""
    scale = case.total_susceptance
    if epsilon is None:
        sync = epsilon_from_sync(case.omega(), case.edge_pairs(), gamma)
        eps_norm = max(sync / scale, DEFAULT_EPSILON_SCALE)
        return eps_norm * scale, eps_norm
    return epsilon, epsilon / scale


def _sync_check(case: GridCase, weights_phys: np.ndarray, gamma: float,
                eps_phys: float) -> SyncCheck:
    graph = case.graph(weights_phys)
    lam2 = algebraic_connectivity(graph)
    warning = None
    gap = None
    try:
        ss = steady_state(graph, case.omega())
        gap = ss.max_angle_gap
        if gap > gamma:
            warning = (
                f"steady-state angle gap {gap:.4g} exceeds gamma {gamma:.4g}"
            )
    except NoSynchronizedStateError as exc:
        warning = f"no synchronized steady state found: {exc}"
    if lam2 < eps_phys:
        extra = f"lambda_2 {lam2:.4g} below spectral floor {eps_phys:.4g}"
        warning = extra if warning is None else f"{warning}; {extra}"
    return SyncCheck(gamma=gamma, epsilon=eps_phys, lambda2=lam2,
                     angle_gap=gap, warning=warning)


def scenario_one(
    case: GridCase,
    candidates: tuple[int, ...] | list[int],
    gamma: float = DEFAULT_GAMMA,
    epsilon: float | None = None,
    config: SolverConfig | None = None,
    threads: int | None = None,
) -> ScenarioReport:
    """Rank candidate buses by vulnerability before and after reallocation.

    Every candidate gets its own single-node optimization; candidates whose
    spectral floor is unreachable are flagged and excluded from the "after"
    ranking, and the run continues.
    """
    candidates = sorted(set(int(c) for c in candidates))
    if not candidates:
        raise ValueError("candidate set is empty")
    gens = set(case.generator_ids)
    rogue = [c for c in candidates if c not in gens]
    if rogue:
        raise ValueError(f"candidates must be generator buses; {rogue} are not")
    scale = case.total_susceptance
    eps_phys, eps_norm = _normalized_epsilon(case, gamma, epsilon)
    b0_phys = case.susceptances()
    graph0 = case.graph()
    nodes = {c: case.node_of(c) for c in candidates}
    problem = design_problem(
        case.n, case.edge_pairs(), v_prime=[nodes[c] for c in candidates],
        omega=case.omega(), gamma=gamma, epsilon=eps_norm, budget=1.0,
    )
    before = {c: vulnerability_measure(graph0, nodes[c]) for c in candidates}

    def solve_one(c: int):
        try:
            return c, solve_single_node(problem, nodes[c], config)
        except InfeasibleDesignError as exc:
            return c, exc

    with ThreadPoolExecutor(_thread_count(len(candidates), threads)) as pool:
        raw = dict(pool.map(solve_one, candidates))

    outcomes = []
    b_out: dict[str, tuple[float, ...]] = {}
    after: dict[int, float] = {}
    for c in candidates:
        res = raw[c]
        if isinstance(res, InfeasibleDesignError):
            outcomes.append(NodeOutcome(node=c, before=before[c], after=None,
                                        feasible=False, increased=False))
            continue
        a_phys = res.objective / scale
        after[c] = a_phys
        b_out[str(c)] = tuple(float(v) for v in res.b_star * scale)
        outcomes.append(NodeOutcome(
            node=c, before=before[c], after=a_phys, feasible=True,
            increased=a_phys > before[c] + _IMPROVE_TOL,
        ))

    best_before = _argmin_node(before)
    best = _argmin_node(after) if after else None
    if best is not None:
        sync = _sync_check(case, np.array(b_out[str(best)]), gamma, eps_phys)
    else:
        sync = _sync_check(case, b0_phys, gamma, eps_phys)
    return ScenarioReport(
        scenario="single",
        case_name=case.name,
        gamma=gamma,
        epsilon=eps_phys,
        budget=scale,
        edges=tuple((br.from_bus, br.to_bus) for br in case.branches),
        per_node=tuple(outcomes),
        best_node_before=best_before,
        best_node=best,
        objective_before=min(before.values()),
        objective_after=min(after.values()) if after else min(before.values()),
        sum_before=sum(before.values()),
        sum_after=sum(after.get(c, before[c]) for c in candidates),
        b0=tuple(float(v) for v in b0_phys),
        b_out=b_out,
        sync_check=sync,
    )


def scenario_two(
    case: GridCase,
    v_prime: tuple[int, ...] | list[int],
    gamma: float = DEFAULT_GAMMA,
    epsilon: float | None = None,
    config: SolverConfig | None = None,
) -> ScenarioReport:
    """Distribute the susceptance budget to protect a whole bus set.

    One worst-case optimization over the node set; raises
    InfeasibleDesignError (with the attained connectivity) when the
    spectral floor is unreachable.
    """
    v_prime = sorted(set(int(c) for c in v_prime))
    if not v_prime:
        raise ValueError("v_prime is empty")
    scale = case.total_susceptance
    eps_phys, eps_norm = _normalized_epsilon(case, gamma, epsilon)
    b0_phys = case.susceptances()
    graph0 = case.graph()
    nodes = {c: case.node_of(c) for c in v_prime}
    problem = design_problem(
        case.n, case.edge_pairs(), v_prime=[nodes[c] for c in v_prime],
        omega=case.omega(), gamma=gamma, epsilon=eps_norm, budget=1.0,
    )
    result = solve_min_max(problem, config)
    before = {c: vulnerability_measure(graph0, nodes[c]) for c in v_prime}
    after = {c: result.per_node[nodes[c]] / scale for c in v_prime}
    weights_phys = result.b_star * scale
    outcomes = tuple(
        NodeOutcome(
            node=c, before=before[c], after=after[c], feasible=True,
            increased=after[c] > before[c] + _IMPROVE_TOL,
        )
        for c in v_prime
    )
    best_before = _argmin_node(before)
    best = _argmin_node(after)
    return ScenarioReport(
        scenario="minmax",
        case_name=case.name,
        gamma=gamma,
        epsilon=eps_phys,
        budget=scale,
        edges=tuple((br.from_bus, br.to_bus) for br in case.branches),
        per_node=outcomes,
        best_node_before=best_before,
        best_node=best,
        objective_before=max(before.values()),
        objective_after=max(after.values()),
        sum_before=sum(before.values()),
        sum_after=sum(after.values()),
        b0=tuple(float(v) for v in b0_phys),
        b_out={"minmax": tuple(float(v) for v in weights_phys)},
        sync_check=_sync_check(case, weights_phys, gamma, eps_phys),
    )


def emit_report(report: ScenarioReport, out_dir: str | Path) -> dict[str, Path]:
    """Write report.json, measures.csv, weights.csv, and plot-data files."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from None
    paths: dict[str, Path] = {}

    def _write(name: str, text: str) -> None:
        path = out / name
        try:
            path.write_text(text)
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc}") from None
        paths[name] = path

    _write("report.json", json.dumps(report.to_dict(), indent=2) + "\n")

    rows = ["node,before,after"]
    for o in report.per_node:
        after = "" if o.after is None else f"{o.after:.17g}"
        rows.append(f"{o.node},{o.before:.17g},{after}")
    _write("measures.csv", "\n".join(rows) + "\n")

    if report.scenario == "minmax":
        b_star = report.b_out["minmax"]
    elif report.best_node is not None:
        b_star = report.b_out[str(report.best_node)]
    else:
        b_star = report.b0
    rows = ["edge,b0,b_star"]
    for (i, j), w0, ws in zip(report.edges, report.b0, b_star):
        rows.append(f"{i}-{j},{w0:.17g},{ws:.17g}")
    _write("weights.csv", "\n".join(rows) + "\n")

    rows = ["node,measure_before,measure_after"]
    for o in report.per_node:
        after = "" if o.after is None else f"{o.after:.17g}"
        rows.append(f"{o.node},{o.before:.17g},{after}")
    _write("figdata_bars.csv", "\n".join(rows) + "\n")

    for tag, weights in (("before", report.b0), ("after", b_star)):
        rows = ["from,to,weight"]
        for (i, j), w in zip(report.edges, weights):
            rows.append(f"{i},{j},{w:.17g}")
        _write(f"figdata_network_{tag}.csv", "\n".join(rows) + "\n")
    return paths
