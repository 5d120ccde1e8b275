"""Classical stopping-rule Monte Carlo estimate of P.

Draw phi ~ w, record X = [H(phi) == E_0], and stop the first time the running
sum reaches Upsilon_1 = 1 + 4 (e - 2)(1 + eps) ln(2/delta) / eps^2.  Then
Upsilon_1 / N is within relative error eps of P with probability >= 1 - delta.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .errors import ResourceCapError
from .problem import SpinHamiltonian, WeightModel


@dataclass
class OmcsResult:
    P_est: float
    samples_drawn: int
    epsilon: float
    delta: float
    threshold: float
    seed: Optional[int] = None

    def as_dict(self) -> dict:
        return asdict(self)


def stopping_threshold(epsilon: float, delta: float) -> float:
    if not (0 < epsilon < 1 and 0 < delta < 1):
        raise ValueError("epsilon and delta must lie in (0, 1)")
    return 1.0 + 4.0 * (math.e - 2.0) * (1.0 + epsilon) * math.log(2.0 / delta) / epsilon ** 2


def draw_weighted_sample(m: WeightModel, rng: np.random.Generator, size=None):
    """Basis-state indices distributed as w; Bernoulli models flip one coin per bit."""
    if m.table is not None:
        return rng.choice(m.table.size, size=size, p=m.table)
    shape = (1,) if size is None else ((size,) if np.isscalar(size) else tuple(size))
    bits = rng.random(shape + (m.qubit_count,)) < m.q
    out = (bits.astype(np.int64) << np.arange(m.qubit_count, dtype=np.int64)).sum(axis=-1)
    return int(out[0]) if size is None else out


def omcs_estimate(h: SpinHamiltonian, m: WeightModel, epsilon: float, delta: float,
                  rng: np.random.Generator, *, ground_energy: Optional[float] = None,
                  budget: int = 100_000_000, chunk: int = 65536, seed: Optional[int] = None) -> OmcsResult:
    """Run the stopping rule; ``ground_energy`` defaults to 0, the edge-cover ground energy."""
    threshold = stopping_threshold(epsilon, delta)
    E0 = 0.0 if ground_energy is None else float(ground_energy)
    need = math.ceil(threshold)
    hits = 0
    drawn = 0
    while True:
        size = min(chunk, budget - drawn)
        if size <= 0:
            raise ResourceCapError(f"sample budget {budget} exhausted with {hits} hits", partial=drawn)
        x = np.abs(h.energy_of(draw_weighted_sample(m, rng, size)) - E0) <= 1e-9
        running = hits + np.cumsum(x)
        passed = np.flatnonzero(running >= need)
        if passed.size:
            drawn += int(passed[0]) + 1
            break
        hits = int(running[-1])
        drawn += size
    return OmcsResult(threshold / drawn, drawn, epsilon, delta, threshold, seed)


def omcs_cost(edge_count: int, samples: float) -> float:
    """Abstract cost: each sample plus energy evaluation counts |E|."""
    return edge_count * samples


def expected_samples(P: float, epsilon: float, delta: float) -> float:
    return stopping_threshold(epsilon, delta) / P


def trials_csv(results) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["trial", "samples_drawn", "P_est"])
    for k, r in enumerate(results):
        writer.writerow([k, r.samples_drawn, repr(r.P_est)])
    return buf.getvalue()
