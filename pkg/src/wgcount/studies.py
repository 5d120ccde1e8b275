"""Scaling studies: evolution depth versus P, random ensembles and abstract cost comparisons."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .counting import count_iterations
from .dynamics import SubspaceEngine, find_aqo_time, grover_time
from .errors import ResourceCapError
from .gatecost import GateCostModel, circuit_costs, total_quantum_cost
from .omcs import omcs_cost, stopping_threshold
from .problem import (
    Graph,
    SpectrumSummary,
    WeightModel,
    build_edge_cover_hamiltonian,
    dp_spectrum_path_and_ladder,
    enumerate_spectrum,
    generate_graph,
    linear_graph,
)
from .qaoa import run_qaoa_greedy
from .symspace import SymmetricSubspace, aqo_time_bound


@dataclass
class StudyResult:
    name: str
    rows: list[dict]
    summary: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# {self.name}\n")
        for key, value in self.summary.items():
            buf.write(f"# {key} = {value}\n")
        if self.rows:
            writer = csv.DictWriter(buf, fieldnames=list(self.rows[0].keys()), lineterminator="\n")
            writer.writeheader()
            writer.writerows(self.rows)
        return buf.getvalue()


def loglog_slope(x, y) -> float:
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


def growth_rate(sizes, y) -> float:
    """exp of the slope of log(y) against size."""
    return float(math.exp(np.polyfit(np.asarray(sizes, float), np.log(np.asarray(y, float)), 1)[0]))


def family_spectrum(family: str, edges: int, q: float, max_moment: int = 2) -> SpectrumSummary:
    kind = {"linear": "path", "path": "path", "grid2xn": "grid2xn"}.get(family)
    if kind is None:
        raise ValueError(f"unsupported family {family!r}")
    return dp_spectrum_path_and_ladder(kind, edges, q, max_moment)


def family_graph(family: str, edges: int) -> Graph:
    if family in ("linear", "path"):
        return linear_graph(edges)
    if family == "grid2xn":
        return generate_graph("grid2xn", edges=edges)
    raise ValueError(f"unsupported family {family!r}")


# ---------------------------------------------------------------------------
# Depth versus P on graph families
# ---------------------------------------------------------------------------


def aqo_family_study(family: str, sizes: Iterable[int], q: float, eta: float, dt: float,
                     max_doublings: int = 30) -> StudyResult:
    """Refined AQO steps-to-target for each size; slope of log steps against log 1/P."""
    rows = []
    for E in sizes:
        spec = family_spectrum(family, E, q)
        engine = SubspaceEngine.from_spectrum(spec)
        steps = find_aqo_time(engine, eta, dt, refine=True, max_doublings=max_doublings)
        rows.append({"edges": E, "P": spec.P, "inv_P": 1.0 / spec.P, "aqo_steps": steps, "steps_times_P": steps * spec.P})
    summary = {
        "slope_log_steps_vs_log_invP": loglog_slope([r["inv_P"] for r in rows], [r["aqo_steps"] for r in rows]),
        "invP_growth_per_edge": growth_rate([r["edges"] for r in rows], [r["inv_P"] for r in rows]),
    }
    return StudyResult(f"AQO steps to occupation {1 - eta * eta:g} on {family} graphs, q={q:.6g}, dt={dt:g}", rows, summary)


def qaoa_family_study(family: str, sizes: Iterable[int], q: float, eta: float, cap: int = 2000,
                      grid: int = 64) -> StudyResult:
    """Greedy QAOA depth for each size; slope of log depth against log 1/sqrt(P)."""
    rows = []
    target = 1.0 - eta * eta
    for E in sizes:
        spec = family_spectrum(family, E, q)
        engine = SubspaceEngine.from_spectrum(spec)
        rec = run_qaoa_greedy(engine, target, cap=cap, grid=grid)
        rows.append({"edges": E, "P": spec.P, "inv_sqrt_P": 1.0 / math.sqrt(spec.P), "qaoa_depth": rec.steps,
                     "grover_time": grover_time(spec.P, eta)})
    summary = {"slope_log_depth_vs_log_inv_sqrtP": loglog_slope([r["inv_sqrt_P"] for r in rows],
                                                               [r["qaoa_depth"] for r in rows])}
    return StudyResult(f"greedy QAOA depth to occupation {target:g} on {family} graphs, q={q:.6g}", rows, summary)


# ---------------------------------------------------------------------------
# Random ensembles
# ---------------------------------------------------------------------------


@dataclass
class Instance:
    graph: Graph
    q: float
    degree: float
    spectrum: SpectrumSummary

    @property
    def P(self) -> float:
        return self.spectrum.P


def random_ensemble(count: int, seed: int, *, degrees=(1.25, 2.5), edge_range=(5, 14),
                    P_max: float = 1.0, P_min: float = 0.0, max_draws: int = 100_000) -> list[Instance]:
    """Random graphs with alternating mean degree and q ~ U(0, 1), kept when P_min <= P <= P_max.

    Draw k uses the generator seeded by (seed, k), so the ensemble is
    reproducible and independent of how many draws were rejected before it.
    """
    out = []
    k = 0
    while len(out) < count:
        if k >= max_draws:
            raise ResourceCapError(f"only {len(out)} of {count} instances accepted after {k} draws", partial=out)
        rng = np.random.default_rng([seed, k])
        degree = degrees[len(out) % len(degrees)]
        E = int(rng.integers(edge_range[0], edge_range[1] + 1))
        q = float(rng.uniform(0.0, 1.0))
        k += 1
        try:
            g = generate_graph("random_mean_degree", seed=int(rng.integers(2 ** 63)), degree=degree, edges=E)
        except ValueError:
            continue
        spec = enumerate_spectrum(build_edge_cover_hamiltonian(g), WeightModel.bernoulli(g.edge_count, q))
        if spec.level_count < 2 or not (P_min <= spec.P <= P_max):
            continue
        out.append(Instance(g, q, degree, spec))
    return out


def grover_time_window(eta: float, t_lo: float, t_hi: float) -> tuple[float, float]:
    """(P_min, P_max) such that t_lo <= grover_time(P, eta) <= t_hi."""
    a = math.asin(math.sqrt(1.0 - eta * eta)) / 2.0
    return (a / t_hi) ** 2, (a / t_lo) ** 2


def qaoa_grover_ratio_study(instances: list[Instance], eta: float, depth_limit: int = 1000,
                            grid: int = 64) -> StudyResult:
    """T_QAOA / T_Grover per instance; instances at or beyond ``depth_limit`` are excluded."""
    target = 1.0 - eta * eta
    rows = []
    for inst in instances:
        engine = SubspaceEngine.from_spectrum(inst.spectrum)
        try:
            depth = run_qaoa_greedy(engine, target, cap=depth_limit - 1, grid=grid).steps
            status = "ok"
        except ResourceCapError:
            depth, status = None, "excluded"
        tg = grover_time(inst.P, eta)
        rows.append({"vertices": inst.graph.vertex_count, "edges": inst.graph.edge_count, "degree": inst.degree,
                     "q": inst.q, "P": inst.P, "qaoa_depth": depth, "grover_time": tg,
                     "ratio": None if depth is None else depth / tg, "status": status})
    kept = [r for r in rows if r["status"] == "ok"]
    inside = [r for r in kept if 1.0 < r["ratio"] < 2.0]
    summary = {
        "instances": len(rows),
        "kept": len(kept),
        "excluded_depth_limit": len(rows) - len(kept),
        "fraction_ratio_in_1_2_kept": len(inside) / len(kept) if kept else float("nan"),
        "fraction_ratio_in_1_2_all": len(inside) / len(rows) if rows else float("nan"),
    }
    return StudyResult(f"greedy QAOA depth over Grover time at occupation {target:g}, random graphs", rows, summary)


def aqo_bound_study(instances: list[Instance], eta: float, dt: float, max_doublings: int = 30) -> StudyResult:
    """AQO steps against the analytic time bound; steps * P should stay within a constant band."""
    rows = []
    for inst in instances:
        engine = SubspaceEngine.from_spectrum(inst.spectrum)
        steps = find_aqo_time(engine, eta, dt, refine=True, max_doublings=max_doublings)
        bound = aqo_time_bound(SymmetricSubspace.from_spectrum(inst.spectrum), eta)
        rows.append({"vertices": inst.graph.vertex_count, "edges": inst.graph.edge_count, "q": inst.q, "P": inst.P,
                     "aqo_steps": steps, "steps_times_P": steps * inst.P, "bound_steps": bound / dt})
    sp = [r["steps_times_P"] for r in rows]
    summary = {
        "steps_times_P_min": min(sp),
        "steps_times_P_max": max(sp),
        "spread": max(sp) / min(sp),
        "max_steps_over_bound": max(r["aqo_steps"] / r["bound_steps"] for r in rows),
        "slope_log_steps_vs_log_invP": loglog_slope([1 / r["P"] for r in rows], [r["aqo_steps"] for r in rows]),
    }
    return StudyResult(f"AQO steps versus time bound at occupation {1 - eta * eta:g}, dt={dt:g}", rows, summary)


# ---------------------------------------------------------------------------
# Abstract cost comparison
# ---------------------------------------------------------------------------


def cost_study(family: str, sizes: Iterable[int], q: float, *, eta: float, epsilon: float, delta: float,
               S: int = 8, model: Optional[GateCostModel] = None, grid: int = 64, cap: int = 2000) -> StudyResult:
    """QAOA total gate cost against OMCS sample cost, both in units of one-qubit gates / |E|."""
    model = model or GateCostModel()
    target = 1.0 - eta * eta
    upsilon = stopping_threshold(epsilon, delta)
    rows = []
    for E in sizes:
        spec = family_spectrum(family, E, q)
        graph = family_graph(family, E)
        engine = SubspaceEngine.from_spectrum(spec)
        depth = run_qaoa_greedy(engine, target, cap=cap, grid=grid).steps
        M, T_count = count_iterations(spec.P, spec.P2, epsilon, delta, eta, S)
        costs = circuit_costs(graph, model)
        rows.append({
            "family": family,
            "edges": E,
            "q": q,
            "P": spec.P,
            "P2": spec.P2,
            "qaoa_depth": depth,
            "M": M,
            "T_count": T_count,
            "qaoa_total": total_quantum_cost(depth, costs, T_count),
            "omcs_total": omcs_cost(E, upsilon / spec.P),
        })
    edges = [r["edges"] for r in rows]
    qs = loglog_slope_linear(edges, [r["qaoa_total"] for r in rows])
    os_ = loglog_slope_linear(edges, [r["omcs_total"] for r in rows])
    summary = {"qaoa_log_slope": qs, "omcs_log_slope": os_, "ratio": qs / os_}
    return StudyResult(f"abstract cost of QAOA counting versus OMCS on {family} graphs, q={q:.6g}", rows, summary)


def loglog_slope_linear(sizes, y) -> float:
    """Slope of log(y) against size (exponential growth rate in nats per edge)."""
    return float(np.polyfit(np.asarray(sizes, float), np.log(np.asarray(y, float)), 1)[0])
