import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import example, given, settings, strategies as st

from oracles import exhaustive_draw_moments
from wgcount.counting import (
    CancellationError,
    CaptureBatch,
    MeasurementSource,
    NoCollisionsError,
    adaptive_count,
    collect_batch,
    confidence,
    count_iterations,
    estimate_p,
    exact_target_source,
    expected_pairs,
    expected_qm,
    expected_qm_uniform,
    expected_rm,
    ground_moments,
    required_batches,
    state_source,
    variance_pairs,
    variance_qm,
)
from wgcount.errors import ResourceCapError
from wgcount.problem import (
    WeightModel,
    build_edge_cover_hamiltonian,
    enumerate_spectrum,
    ground_states,
    paw_graph,
    triangle_graph,
)


def paw(q):
    h = build_edge_cover_hamiltonian(paw_graph())
    return h, WeightModel.bernoulli(4, q)


def paw_ground_weights(q, exact=False):
    h, m = paw(q)
    if exact:
        q = Fraction(q).limit_denominator(10 ** 6)
        return [q ** bin(g).count("1") * (1 - q) ** (4 - bin(g).count("1")) for g in ground_states(h)]
    return m.weight_of(ground_states(h)).tolist()


def test_paw_q03_m4_exhaustive():
    w = paw_ground_weights(Fraction(3, 10), exact=True)
    eq, er, vq = exhaustive_draw_moments(w, 4)
    moments = ground_moments(w, 4, exact=True)
    assert expected_qm(moments, 4) == eq
    assert expected_rm(moments, 4) == er
    assert variance_qm(moments, 4) == vq
    fl = ground_moments([float(x) for x in w], 4)
    assert float(expected_qm(fl, 4)) == pytest.approx(float(eq), rel=1e-10)
    assert float(variance_qm(fl, 4)) == pytest.approx(float(vq), rel=1e-10)


@settings(max_examples=25, deadline=None)
@given(weights=st.lists(st.integers(1, 50), min_size=1, max_size=5), M=st.integers(1, 6))
@example(weights=[19], M=4)
def test_series_match_enumeration(weights, M):
    w = [Fraction(x, 997) for x in weights]
    eq, er, vq = exhaustive_draw_moments(w, M)
    exact = ground_moments(w, max(M, 3), exact=True)
    assert expected_qm(exact, M) == eq
    assert expected_rm(exact, M) == er
    assert variance_qm(exact, M) == vq
    fl = ground_moments([float(x) for x in w], max(M, 3))
    assert float(expected_qm(fl, M)) == pytest.approx(float(eq), rel=1e-10)
    assert float(expected_rm(fl, M)) == pytest.approx(float(er), rel=1e-10)
    if vq == 0:
        # zero variance: float terms either cancel exactly or leave a residual the guard rejects
        try:
            assert variance_qm(fl, M) == 0
        except CancellationError:
            pass
    else:
        assert float(variance_qm(fl, M)) == pytest.approx(float(vq), rel=1e-10, abs=1e-12)


def test_pair_moments_match_enumeration():
    w = [Fraction(k, 15) for k in (1, 2, 3, 4, 5)]
    P = sum(w)
    p = [x / P for x in w]
    M = 5
    mean = second = Fraction(0)
    for seq in itertools.product(range(5), repeat=M):
        pr = math.prod(p[g] for g in seq)
        c = sum(math.comb(seq.count(g), 2) for g in range(5))
        mean += pr * c
        second += pr * c * c
    mom = ground_moments(w, 3, exact=True)
    assert expected_pairs(mom, M) == mean
    assert variance_pairs(mom, M) == second - mean * mean


@pytest.mark.parametrize("count", [1, 2, 5, 13])
@pytest.mark.parametrize("M", [1, 2, 4, 7])
def test_uniform_geometric_series(count, M):
    w = [Fraction(1, 16)] * count
    assert expected_qm(ground_moments(w, M, exact=True), M) == expected_qm_uniform(count, M)
    c = Fraction(count)
    assert expected_qm_uniform(count, M) == c * (1 - (1 - 1 / c) ** M)


def test_single_draw_moments():
    w = paw_ground_weights(0.3)
    mom = ground_moments(w, 3)
    assert expected_qm(mom, 1) == pytest.approx(1.0)
    assert expected_rm(mom, 1) == pytest.approx(mom[2] / mom[1])
    assert variance_qm(mom, 1) == pytest.approx(0.0, abs=1e-15)


def test_spectrum_summary_input():
    h, m = paw(0.3)
    spec = enumerate_spectrum(h, m, max_moment=4)
    mom = ground_moments(paw_ground_weights(0.3), 4)
    assert expected_qm(spec, 4) == pytest.approx(expected_qm(mom, 4), rel=1e-12)
    with pytest.raises(ValueError):
        expected_qm(enumerate_spectrum(h, m), 4)


def test_cancellation_is_signalled():
    w = [0.5, 0.5]
    with pytest.raises(CancellationError):
        expected_qm(ground_moments(w, 100), 100)
    assert expected_qm(ground_moments(w, 100, exact=True), 100) == expected_qm_uniform(2, 100)


def exact_plugin_batch(mom, M):
    P, P2 = mom[1], mom[2]
    C = math.comb(M, 2) * P2 / P ** 2
    return CaptureBatch(M, np.array([]), np.array([]), Q=M - C, R=M * P2 / P, pairs=C, iterations=M)


@pytest.mark.parametrize("statistic", ["pairs", "distinct"])
def test_exact_moments_recover_P(statistic):
    mom = ground_moments([1e-4 * (1 + k % 7) for k in range(500)], 2)
    est = estimate_p([exact_plugin_batch(mom, 16)], statistic=statistic)
    assert est.P_est == pytest.approx(mom[1], rel=1e-12)
    assert est.P2_est == pytest.approx(mom[2], rel=1e-12)
    assert not est.truncation_warning


def test_single_ground_state_flagged():
    P = 0.2
    M = 6
    batches = [CaptureBatch.from_draws([3] * M, [P] * M) for _ in range(4)]
    assert all(b.Q == 1 and b.R == pytest.approx(M * P) for b in batches)
    est = estimate_p(batches, statistic="distinct")
    assert est.P_est == pytest.approx(M * (M - 1) * M * P / (2 * (M - 1)) / M)
    assert est.truncation_warning


def test_no_collisions():
    b = CaptureBatch.from_draws([1, 2, 3, 4], [0.1] * 4)
    with pytest.raises(NoCollisionsError):
        estimate_p([b])


def test_batch_from_draws():
    b = CaptureBatch.from_draws([5, 1, 5, 5, 2], [0.2, 0.1, 0.2, 0.2, 0.3], iterations=9)
    assert (b.M, b.Q, b.pairs, b.iterations) == (5, 3, 3, 9)
    assert b.R == pytest.approx(1.0)
    assert 1 <= b.Q <= b.M


def test_collect_batch_exact_source():
    h, m = paw(0.5)
    src = exact_target_source(h, m)
    b = collect_batch(src, 3, np.random.default_rng(0))
    assert b.iterations == 3 and b.Q in (1, 2, 3)
    assert np.all(h.energy_of(b.measurements) == 0)


def test_collect_batch_acceptance_rate():
    h, m = paw(0.5)
    psi = np.sqrt(m.weights).astype(complex)  # ground fraction 5/16
    src = state_source(psi, h, m)
    assert src.acceptance == pytest.approx(5 / 16)
    rng = np.random.default_rng(2)
    accepted = tried = 0
    for _ in range(400):
        b = collect_batch(src, 8, rng)
        accepted += b.M
        tried += b.iterations
    # accepted ground states in 'tried' trials: negative binomial, close to binomial at this size
    p = 5 / 16
    sigma = math.sqrt(tried * p * (1 - p))
    assert abs(accepted - tried * p) < 3 * sigma


def test_collect_batch_aborts():
    h, m = paw(0.5)
    src = MeasurementSource(runner=lambda size, rng: np.full(size, 15), ground_test=lambda idx: h.energy_of(idx) == 0,
                            weight=m.weight_of, acceptance=0.9)
    with pytest.raises(RuntimeError):
        collect_batch(src, 4, np.random.default_rng(0))


def test_monte_carlo_estimate_within_band():
    h, m = paw(0.5)
    src = exact_target_source(h, m)
    rng = np.random.default_rng(11)
    S, M = 10_000, 4
    batches = [collect_batch(src, M, rng) for _ in range(S)]
    est = estimate_p(batches)
    P, P2 = 5 / 16, 5 / 256
    eps = 0.01
    while confidence(P, P2, M, S, eps) < 0.997:
        eps *= 1.05
    assert abs(est.P_est / P - 1) < eps


def test_confidence_properties():
    P, P2 = 0.01, 2e-5
    vals = [confidence(P, P2, 16, S, 0.05) for S in (1, 4, 16, 64, 256, 4096)]
    assert all(0 <= v <= 1 for v in vals)
    assert vals == sorted(vals)
    assert vals[-1] > 1 - 1e-12
    with pytest.raises(ValueError):
        confidence(P, P2, 16, 8, 1.5)


def test_required_batches_scaling():
    P, P2 = 1e-3, 2e-6
    s1 = required_batches(P, P2, 8, 0.05, 0.05)
    s2 = required_batches(P, P2, 16, 0.05, 0.05)
    # S ~ P^2 / (P2 M^2 eps^2): doubling M quarters S (up to rounding of the M(M-1) factor)
    assert s1 / s2 == pytest.approx((16 * 15) / (8 * 7), rel=0.25)
    s3 = required_batches(P, P2, 16, 0.025, 0.05)
    assert s3 / s2 == pytest.approx(4.0, rel=0.15)


def test_count_iterations_scaling():
    eta = math.sqrt(0.5)
    M1, T1 = count_iterations(1e-3, 1e-6 * 2, 0.05, 0.05, eta)
    M2, T2 = count_iterations(1e-5, 1e-10 * 2, 0.05, 0.05, eta)
    assert T1 == pytest.approx(M1 * 8 / 0.5)
    # same P^2/P2 gives the same cost
    assert T1 == pytest.approx(T2, rel=0.05)
    M3, T3 = count_iterations(1e-5, 1e-10 * 8, 0.05, 0.05, eta)
    assert T3 < T2


def test_adaptive_count_paw():
    h, m = paw(0.5)
    est = adaptive_count(exact_target_source(h, m), 0.05, 0.05, seed=3)
    assert est.confidence >= 0.95
    assert est.P_est > 0
    assert est.resources["measurements"] == est.M * est.S
    again = adaptive_count(exact_target_source(h, m), 0.05, 0.05, seed=3)
    assert again.to_json() == est.to_json()


def test_adaptive_count_large_M_no_deadlock():
    h = build_edge_cover_hamiltonian(triangle_graph())
    m = WeightModel.bernoulli(3, 0.5)
    est = adaptive_count(exact_target_source(h, m), 0.1, 0.1, seed=0, M=64, S=2)
    assert est.M == 64


def test_adaptive_count_budget():
    h, m = paw(0.5)
    with pytest.raises(ResourceCapError):
        adaptive_count(exact_target_source(h, m), 0.01, 0.01, seed=0, budget=200)
