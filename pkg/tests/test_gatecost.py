import pytest
from hypothesis import given, strategies as st

from wgcount.dynamics import RunRecord
from wgcount.gatecost import CircuitCosts, GateCostModel, circuit_costs, total_quantum_cost
from wgcount.problem import ladder_graph, linear_graph, paw_graph


def test_paw_costs():
    g = paw_graph()
    assert sorted(g.degrees) == [1, 2, 2, 3]
    model = GateCostModel()
    c = circuit_costs(g, model)
    assert c.T_psi0 == 4
    assert c.T_x == 2 * 4 + 16 * 4
    assert c.T_z == 4 + 16 * (2 + 2 + 3 + 1)


def test_without_ancillas_quadratic():
    model = GateCostModel("without_ancillas")
    for E in (3, 7, 12):
        assert circuit_costs(linear_graph(E), model).T_x == 2 * E + 8 * E * E


def test_linear_growth_with_ancillas():
    model = GateCostModel()
    tz = [circuit_costs(ladder_graph(n), model).T_z for n in (2, 4, 8, 16)]
    diffs = [b - a for a, b in zip(tz, tz[1:])]
    assert diffs[1] == pytest.approx(2 * diffs[0]) and diffs[2] == pytest.approx(2 * diffs[1])


@given(k=st.integers(1, 200), policy=st.sampled_from(["with_ancillas", "without_ancillas"]))
def test_monotone(k, policy):
    m = GateCostModel(policy)
    assert m.controlled_phase(1) >= 1
    assert m.controlled_phase(k + 1) >= m.controlled_phase(k)


def test_larger_graphs_cost_more():
    m = GateCostModel()
    costs = [circuit_costs(linear_graph(E), m) for E in range(1, 15)]
    for a, b in zip(costs, costs[1:]):
        assert b.T_x >= a.T_x and b.T_z >= a.T_z


def test_total_cost():
    c = CircuitCosts(5.0, 30.0, 70.0)
    assert total_quantum_cost(0, c, 12.0) == 12.0 * 5.0
    assert total_quantum_cost(3, c, 2.0) == 2.0 * (5 + 100 * 3)
    rec = RunRecord("qaoa", 3, [0.1, 0.2, 0.3, 0.4])
    assert total_quantum_cost(rec, c, 2.0) == total_quantum_cost(3, c, 2.0)
    assert total_quantum_cost(3, c, 2.0, search_overhead=9) == 2.0 * (5 + 300) + 900


def test_bad_policy():
    with pytest.raises(ValueError):
        GateCostModel("magic")
    with pytest.raises(ValueError):
        GateCostModel().controlled_phase(0)
