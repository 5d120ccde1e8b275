"""Capture-recapture estimation of the weighted ground-state count P.

Measurements of an importance-sampled target state return ground state g with
probability w(g)/P.  A batch of M such draws yields

* Q_M, the number of distinct states,
* R_M, the summed weight over all M draws,
* C_M, the number of colliding pairs i < j with g_i = g_j.

With s_mu = P_mu / P^mu:  E[R_M] = M s_2 P and E[C_M] = C(M, 2) s_2 exactly,
so P = (M - 1) E[R_M] / (2 E[C_M]).  When s_mu decays quickly,
M - E[Q_M] ~ C(M, 2) s_2 and the distinct-count form (M - 1) R / (2 (M - Q))
is an equivalent estimator.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ResourceCapError
from .problem import SpectrumSummary, SpinHamiltonian, WeightModel, ground_states

CANCELLATION_LIMIT = 1e12
TRUNCATION_THRESHOLD = 0.5


class CancellationError(ArithmeticError):
    """The alternating series lost too many digits to cancellation."""


class NoCollisionsError(ValueError):
    """No repeated ground state was observed; M must be increased."""


# ---------------------------------------------------------------------------
# Batches and sources
# ---------------------------------------------------------------------------


@dataclass
class CaptureBatch:
    M: int
    measurements: np.ndarray
    weights: np.ndarray
    Q: int
    R: float
    pairs: int
    iterations: int

    @classmethod
    def from_draws(cls, states, weights, iterations: Optional[int] = None) -> "CaptureBatch":
        states = np.asarray(states, dtype=np.int64)
        weights = np.asarray(weights, dtype=np.float64)
        _, counts = np.unique(states, return_counts=True)
        return cls(
            M=int(states.size),
            measurements=states,
            weights=weights,
            Q=int(counts.size),
            R=float(weights.sum()),
            pairs=int((counts * (counts - 1) // 2).sum()),
            iterations=int(states.size if iterations is None else iterations),
        )


@dataclass
class MeasurementSource:
    """Evolve-and-measure oracle used by the counting driver.

    ``runner(size, rng)`` returns measured basis-state indices of ``size``
    independent repetitions; ``ground_test`` and ``weight`` act elementwise on
    index arrays.  ``acceptance`` is the expected ground-state fraction
    (1 - eta^2) and ``steps_per_run`` the evolution depth of one repetition.
    """

    runner: Callable[[int, np.random.Generator], np.ndarray]
    ground_test: Callable[[np.ndarray], np.ndarray]
    weight: Callable[[np.ndarray], np.ndarray]
    acceptance: float = 1.0
    steps_per_run: int = 0


def exact_target_source(h: SpinHamiltonian, m: WeightModel) -> MeasurementSource:
    """Samples the ideal target state: ground state g with probability w(g)/P."""
    ground = ground_states(h)
    w = m.weight_of(ground)
    prob = w / w.sum()
    E0 = h.energies[ground[0]]
    return MeasurementSource(
        runner=lambda size, rng: ground[rng.choice(ground.size, size=size, p=prob)],
        ground_test=lambda idx: h.energy_of(idx) == E0,
        weight=m.weight_of,
        acceptance=1.0,
    )


def state_source(psi: np.ndarray, h: SpinHamiltonian, m: WeightModel, steps_per_run: int = 0) -> MeasurementSource:
    """Measures a fixed evolved full statevector."""
    prob = np.abs(psi) ** 2
    prob = prob / prob.sum()
    E0 = float(h.energies.min())
    ground_test = lambda idx: h.energy_of(idx) <= E0 + 1e-9  # noqa: E731
    acceptance = float(prob[ground_test(np.arange(prob.size))].sum())
    return MeasurementSource(
        runner=lambda size, rng: rng.choice(prob.size, size=size, p=prob),
        ground_test=ground_test,
        weight=m.weight_of,
        acceptance=acceptance,
        steps_per_run=steps_per_run,
    )


def collect_batch(source: MeasurementSource, M: int, rng: np.random.Generator, abort_factor: float = 20.0) -> CaptureBatch:
    """Repeat evolve-and-measure until M ground states are recorded."""
    if M < 1:
        raise ValueError("M must be >= 1")
    if not source.acceptance > 0:
        raise ValueError("source acceptance (1 - eta^2) must be positive")
    limit = int(math.ceil(abort_factor * M / source.acceptance))
    accepted: list[np.ndarray] = []
    have = 0
    used = 0
    while have < M:
        if used >= limit:
            raise ResourceCapError(
                f"only {have} of {M} ground states after {used} measurements; eta is probably misestimated",
                partial=used,
            )
        chunk = min(limit - used, max(1, int(math.ceil(1.25 * (M - have) / source.acceptance))))
        draws = np.asarray(source.runner(chunk, rng))
        hits = np.flatnonzero(source.ground_test(draws))
        need = M - have
        if hits.size >= need:
            used += int(hits[need - 1]) + 1
            accepted.append(draws[hits[:need]])
            have = M
        else:
            used += chunk
            accepted.append(draws[hits])
            have += hits.size
    states = np.concatenate(accepted)
    return CaptureBatch.from_draws(states, source.weight(states), iterations=used)


# ---------------------------------------------------------------------------
# Exact moments of the batch statistics
# ---------------------------------------------------------------------------


def _normalized_moments(spectrum, order: int):
    """s_mu = P_mu / P^mu for mu = 0..order (s_0 is the ground-state count)."""
    if isinstance(spectrum, SpectrumSummary):
        if spectrum.max_moment < order:
            raise ValueError(f"need moments up to order {order}; spectrum has {spectrum.max_moment}")
        raw = [spectrum.P_mu(mu) for mu in range(order + 1)]
    else:
        raw = list(spectrum)
        if len(raw) < order + 1:
            raise ValueError(f"need moments up to order {order}; got {len(raw) - 1}")
    P = raw[1]
    if P <= 0:
        raise ValueError("P must be positive")
    return [raw[mu] / P ** mu for mu in range(order + 1)]


def _series_sum(terms: Sequence):
    if all(isinstance(t, (Fraction, int)) for t in terms):
        return sum(terms, Fraction(0))
    terms = [float(t) for t in terms]
    total = math.fsum(terms)
    biggest = max((abs(t) for t in terms), default=0.0)
    # fsum is correctly rounded, so an exact zero is the true sum of the float terms
    if total != 0 and biggest / abs(total) > CANCELLATION_LIMIT:
        raise CancellationError(
            f"alternating series cancels by a factor {biggest / abs(total):.3g}; pass exact Fraction moments"
        )
    return total


def expected_qm(spectrum, M: int):
    """<Q_M> = sum_{mu=1}^{M} (-1)^(mu-1) C(M, mu) s_mu.

    ``spectrum`` is a SpectrumSummary or a sequence of ground moments
    P_0, P_1, ..., P_M (Fractions give an exact result).
    """
    s = _normalized_moments(spectrum, M)
    return _series_sum([(-1) ** (mu - 1) * math.comb(M, mu) * s[mu] for mu in range(1, M + 1)])


def expected_rm(spectrum, M: int):
    """<R_M> = M P_2 / P."""
    s = _normalized_moments(spectrum, 2)
    P = spectrum.P if isinstance(spectrum, SpectrumSummary) else list(spectrum)[1]
    return M * s[2] * P


def expected_pairs(spectrum, M: int):
    """<C_M> = C(M, 2) P_2 / P^2."""
    return math.comb(M, 2) * _normalized_moments(spectrum, 2)[2]


def variance_qm(spectrum, M: int, truncated: bool = False):
    """var(Q_M), exact by default or to leading order C(M, 2) s_2."""
    if truncated:
        return math.comb(M, 2) * _normalized_moments(spectrum, 2)[2]
    s = _normalized_moments(spectrum, M)
    terms = []
    for k in range(2, M + 1):
        inner = [math.comb(k, a) * s[a] * s[k - a] for a in range(1, k)]
        inner.append(-(2 ** k - 2) * s[k])
        terms.extend((-1) ** k * math.comb(M, k) * t for t in inner)
    second_factorial = _series_sum(terms) if terms else 0
    mean = expected_qm(spectrum, M)
    return second_factorial + mean - mean * mean


def variance_pairs(spectrum, M: int):
    """var(C_M) = C(M,2) s_2 (1 - s_2) + 6 C(M,3) (s_3 - s_2^2)."""
    s = _normalized_moments(spectrum, 3)
    return math.comb(M, 2) * s[2] * (1 - s[2]) + 6 * math.comb(M, 3) * (s[3] - s[2] ** 2)


def expected_qm_uniform(count: int, M: int) -> Fraction:
    """<Q_M> for ``count`` equally weighted ground states: count (1 - (1 - 1/count)^M)."""
    c = Fraction(count)
    return c * (1 - (1 - 1 / c) ** M)


def ground_moments(weights, order: int, exact: bool = False) -> list:
    """[P_0, P_1, ..., P_order] from the weights of the ground states."""
    if exact:
        ws = [Fraction(w) for w in weights]
        return [sum((w ** mu for w in ws), Fraction(0)) for mu in range(order + 1)]
    w = np.asarray(weights, dtype=np.float64)
    return [float(np.sum(w ** mu)) for mu in range(order + 1)]


# ---------------------------------------------------------------------------
# Estimation and confidence
# ---------------------------------------------------------------------------


def confidence(P: float, P2: float, M: int, S: int, epsilon: float) -> float:
    """CLT probability that the estimate lies within relative error epsilon of P."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    z = math.sqrt(M * (M - 1) * S * P2 / (4.0 * P * P))
    return 0.5 * math.erf(epsilon / (1.0 - epsilon) * z) + 0.5 * math.erf(epsilon / (1.0 + epsilon) * z)


@dataclass
class CountEstimate:
    P_est: float
    M: int
    S: int
    Q_mean: float
    R_mean: float
    pairs_mean: float
    epsilon: float
    confidence: float
    P2_est: float
    statistic: str
    truncation_warning: bool
    resources: dict = field(default_factory=dict)

    def to_json(self, **kwargs) -> str:
        return json.dumps(asdict(self), sort_keys=True, **kwargs)


def estimate_p(batches: Sequence[CaptureBatch], epsilon: float = 0.05, statistic: str = "pairs") -> CountEstimate:
    """Estimate P from S batches of equal size M.

    ``statistic="pairs"`` uses the collision-pair count, which is unbiased in
    the ratio for every M; ``"distinct"`` uses M - Q_M, which matches it only
    when collisions of three or more draws are rare.  The truncation warning
    fires when the observed pair frequency (an unbiased estimate of P_2/P^2)
    exceeds 0.5, where the leading-order analysis breaks down.
    """
    if not batches:
        raise ValueError("need at least one batch")
    M = batches[0].M
    if any(b.M != M for b in batches):
        raise ValueError("all batches must have the same M")
    if M < 2:
        raise ValueError("M must be >= 2 to observe collisions")
    S = len(batches)
    Q = float(np.mean([b.Q for b in batches]))
    R = float(np.mean([b.R for b in batches]))
    C = float(np.mean([b.pairs for b in batches]))
    if statistic == "pairs":
        denom = 2.0 * C
    elif statistic == "distinct":
        denom = 2.0 * (M - Q)
    else:
        raise ValueError(f"unknown statistic {statistic!r}")
    if denom <= 0:
        raise NoCollisionsError("no collisions observed in any batch; increase M")
    P_est = (M - 1) * R / denom
    P2_est = P_est * R / M
    conf = confidence(P_est, P2_est, M, S, epsilon)
    s2_observed = C / math.comb(M, 2)
    resources = {
        "batches": S,
        "ground_measurements": M * S,
        "measurements": int(sum(b.iterations for b in batches)),
    }
    return CountEstimate(P_est, M, S, Q, R, C, epsilon, conf, P2_est, statistic,
                         bool(s2_observed > TRUNCATION_THRESHOLD), resources)


def adaptive_count(source: MeasurementSource, epsilon: float, delta: float, *, seed=None,
                   M: int = 16, S: int = 8, budget: int = 10_000_000, statistic: str = "pairs",
                   abort_factor: float = 20.0) -> CountEstimate:
    """Estimate P to relative error epsilon with confidence 1 - delta.

    M doubles while no collisions are seen; S doubles (keeping earlier
    batches) while the plug-in confidence falls short of 1 - delta.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    batches: list[CaptureBatch] = []
    used = 0

    def draw(count):
        nonlocal used
        for _ in range(count):
            if used >= budget:
                raise ResourceCapError(f"measurement budget {budget} exhausted", partial=list(batches))
            b = collect_batch(source, M, rng, abort_factor)
            used += b.iterations
            batches.append(b)

    draw(S)
    while True:
        try:
            est = estimate_p(batches, epsilon, statistic)
        except NoCollisionsError:
            M *= 2
            batches.clear()
            draw(S)
            continue
        if est.confidence >= 1.0 - delta:
            break
        draw(len(batches))
    est.resources.update({
        "measurements": used,
        "evolutions": used,
        "evolution_steps": used * source.steps_per_run,
        "seed": seed,
    })
    return est


def required_batches(P: float, P2: float, M: int, epsilon: float, delta: float) -> int:
    """Smallest S with confidence(P, P2, M, S, epsilon) >= 1 - delta."""
    target = 1.0 - delta
    hi = 1
    while confidence(P, P2, M, hi, epsilon) < target:
        hi *= 2
    lo = hi // 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if confidence(P, P2, M, mid, epsilon) >= target:
            hi = mid
        else:
            lo = mid
    return max(hi, 1)


def count_iterations(P: float, P2: float, epsilon: float, delta: float, eta: float, S: int = 8) -> tuple[int, float]:
    """(M, T_count): smallest M reaching 1 - delta at fixed S, and M S / (1 - eta^2)."""
    target = 1.0 - delta
    hi = 2
    while confidence(P, P2, hi, S, epsilon) < target:
        hi *= 2
    lo = max(hi // 2, 1)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if confidence(P, P2, mid, S, epsilon) >= target:
            hi = mid
        else:
            lo = mid
    return hi, hi * S / (1.0 - eta * eta)
