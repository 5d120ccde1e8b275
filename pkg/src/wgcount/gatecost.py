"""Abstract gate counts for one evolution step and for the full counting protocol."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .problem import Graph


@dataclass(frozen=True)
class GateCostModel:
    """k-controlled phase costs c1*k with ancillas or c2*k^2 without."""

    ancilla_policy: str = "with_ancillas"
    c1: float = 16.0
    c2: float = 8.0

    def __post_init__(self):
        if self.ancilla_policy not in ("with_ancillas", "without_ancillas"):
            raise ValueError(f"unknown ancilla policy {self.ancilla_policy!r}")
        if self.c1 < 1 or self.c2 < 1:
            raise ValueError("cost constants must be >= 1")

    def controlled_phase(self, k: int) -> float:
        if k < 1:
            raise ValueError("k must be >= 1")
        return self.c1 * k if self.ancilla_policy == "with_ancillas" else self.c2 * k * k


@dataclass(frozen=True)
class CircuitCosts:
    T_psi0: float
    T_x: float
    T_z: float


def circuit_costs(g: Graph, model: GateCostModel) -> CircuitCosts:
    """Gate counts for state preparation, the mixer and the edge-cover phase.

    State preparation is one rotation per qubit.  The mixer un-prepares,
    applies an |E|-controlled phase and re-prepares.  The phase step uses one
    single-qubit phase per edge and one deg(v)-controlled phase per vertex.
    """
    E = g.edge_count
    T_x = 2 * E + model.controlled_phase(E)
    T_z = E + sum(model.controlled_phase(d) for d in g.degrees)
    return CircuitCosts(float(E), float(T_x), float(T_z))


def total_quantum_cost(steps: float, costs: CircuitCosts, T_count: float, *,
                       search_overhead: Optional[float] = None) -> float:
    """T_count (T_psi0 + (T_x + T_z) steps), plus an optional angle-search term.

    ``search_overhead`` is a number of extra layer evaluations, e.g. depth^2
    for greedy QAOA or a constant for fixed angles.  ``steps`` may be a
    RunRecord, in which case its realized depth is used.
    """
    steps = getattr(steps, "steps", steps)
    total = T_count * (costs.T_psi0 + (costs.T_x + costs.T_z) * steps)
    if search_overhead is not None:
        total += search_overhead * (costs.T_x + costs.T_z)
    return total
