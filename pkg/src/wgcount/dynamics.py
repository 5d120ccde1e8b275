"""Statevector simulators for Grover, discrete-time AQO and single QAOA layers.

Two engines share one interface:

* ``FullEngine`` holds all 2^n amplitudes.
* ``SubspaceEngine`` holds the m coordinates on the symmetric basis
  Phi_j = sum_{H(phi)=E_j} sqrt(w(phi)/N_j) |phi>, which the dynamics never leaves.

The mixer exp(-i alpha H_x) with H_x = -|psi0><psi0| is applied as the
rank-one update psi + (e^{i alpha} - 1) <psi0|psi> psi0.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ResourceCapError
from .problem import (
    EXHAUSTIVE_LIMIT,
    SpectrumSummary,
    SpinHamiltonian,
    WeightModel,
    check_exhaustive,
    group_levels,
)
from .symspace import SymmetricSubspace, schedule_alpha

Observer = Callable[[int, np.ndarray], None]


# ---------------------------------------------------------------------------
# Primitive operations on full statevectors
# ---------------------------------------------------------------------------


def prepare_initial(m: WeightModel) -> np.ndarray:
    """Amplitudes sqrt(w(phi)) as a complex vector."""
    return np.sqrt(m.weights).astype(np.complex128)


def apply_phase_z(psi: np.ndarray, h, beta: float) -> np.ndarray:
    """exp(-i beta H_z) psi; ``h`` is a SpinHamiltonian or a per-state energy array."""
    energies = h.energies if isinstance(h, SpinHamiltonian) else np.asarray(h)
    return psi * np.exp(-1j * beta * energies)


def apply_mixer(psi: np.ndarray, psi0: np.ndarray, alpha: float) -> np.ndarray:
    """exp(-i alpha H_x) psi with H_x = -|psi0><psi0|."""
    return psi + (np.exp(1j * alpha) - 1.0) * np.vdot(psi0, psi) * psi0


def apply_hamiltonian(psi: np.ndarray, psi0: np.ndarray, energies: np.ndarray, alpha: float, beta: float) -> np.ndarray:
    """(alpha H_x + beta H_z) psi."""
    return beta * energies * psi - alpha * np.vdot(psi0, psi) * psi0


def ground_occupation(psi: np.ndarray, ground) -> float:
    """Total probability on the given ground states (index array or boolean mask)."""
    ground = np.asarray(ground)
    if ground.size == 0 or (ground.dtype == bool and not ground.any()):
        raise ValueError("ground set is empty")
    return float(np.sum(np.abs(psi[ground]) ** 2))


def measure(psi: np.ndarray, rng: np.random.Generator, size=None):
    """Sample basis-state indices with probability |a_phi|^2."""
    prob = np.abs(psi) ** 2
    prob /= prob.sum()
    return rng.choice(prob.size, size=size, p=prob)


# Subspace mirrors. Coordinates are on the basis Phi_j.


def subspace_prepare(s: SymmetricSubspace) -> np.ndarray:
    return s.amplitudes.astype(np.complex128)


def subspace_phase_z(psi: np.ndarray, s: SymmetricSubspace, beta: float) -> np.ndarray:
    return psi * np.exp(-1j * beta * s.energies)


def subspace_mixer(psi: np.ndarray, s: SymmetricSubspace, alpha: float) -> np.ndarray:
    return apply_mixer(psi, s.amplitudes, alpha)


def subspace_occupation(psi: np.ndarray) -> float:
    return float(abs(psi[0]) ** 2)


# ---------------------------------------------------------------------------
# Engines
# ---------------------------------------------------------------------------


class FullEngine:
    """Dense 2^n simulator for a diagonal Hamiltonian and weight model."""

    kind = "full"

    def __init__(self, h: SpinHamiltonian, m: WeightModel, limit: int = EXHAUSTIVE_LIMIT):
        check_exhaustive(h.qubit_count, limit)
        if m.qubit_count != h.qubit_count:
            raise ValueError("weight model and Hamiltonian act on different qubit counts")
        self.hamiltonian = h
        self.weight_model = m
        self.state_energies = np.asarray(h.energies)
        self.levels, self.level_index = group_levels(self.state_energies, integer=h.is_integer_valued)
        self.psi0 = prepare_initial(m)
        self._psi0_real = self.psi0.real.copy()
        self.ground_mask = self.level_index == 0
        self.P = float(np.sum(m.weights[self.ground_mask]))
        if self.P <= 0:
            raise ValueError("ground states carry zero weight (P = 0)")
        self.level_weights = np.bincount(self.level_index, weights=m.weights, minlength=self.levels.size)
        self.integer_spectrum = h.is_integer_valued or bool(np.all(self.levels == np.rint(self.levels)))

    @property
    def ground_energy(self) -> float:
        return float(self.levels[0])

    def initial(self) -> np.ndarray:
        return self.psi0.copy()

    def phase(self, psi, beta):
        return psi * np.exp(-1j * beta * self.state_energies)

    def mix(self, psi, alpha):
        return apply_mixer(psi, self.psi0, alpha)

    def oracle(self, psi):
        return np.where(self.ground_mask, -psi, psi)

    def occupation(self, psi) -> float:
        return float(np.sum(np.abs(psi[self.ground_mask]) ** 2))

    def level_overlaps(self, psi) -> np.ndarray:
        """d_j = sum over level j of psi0(phi) * psi(phi)."""
        prod = self._psi0_real * psi
        m = self.levels.size
        return (np.bincount(self.level_index, weights=prod.real, minlength=m)
                + 1j * np.bincount(self.level_index, weights=prod.imag, minlength=m))

    def project_to_subspace(self, psi) -> np.ndarray:
        """Coordinates <Phi_j|psi> for levels with positive weight."""
        d = self.level_overlaps(psi)
        keep = self.level_weights > 0
        return d[keep] / np.sqrt(self.level_weights[keep])

    def subspace(self) -> SymmetricSubspace:
        keep = self.level_weights > 0
        return SymmetricSubspace(self.levels[keep], self.level_weights[keep])


class SubspaceEngine:
    """m-dimensional simulator on the symmetric basis Phi_j."""

    kind = "subspace"

    def __init__(self, s: SymmetricSubspace):
        self.space = s
        self.levels = s.energies
        self.psi0 = subspace_prepare(s)
        self.P = s.P
        self.level_weights = s.weights
        self.integer_spectrum = bool(np.all(self.levels == np.rint(self.levels)))

    @classmethod
    def from_spectrum(cls, spectrum: SpectrumSummary) -> "SubspaceEngine":
        return cls(SymmetricSubspace.from_spectrum(spectrum))

    @property
    def ground_energy(self) -> float:
        return float(self.levels[0])

    def initial(self) -> np.ndarray:
        return self.psi0.copy()

    def phase(self, psi, beta):
        return psi * np.exp(-1j * beta * self.levels)

    def mix(self, psi, alpha):
        return apply_mixer(psi, self.psi0, alpha)

    def oracle(self, psi):
        out = psi.copy()
        out[0] = -out[0]
        return out

    def occupation(self, psi) -> float:
        return subspace_occupation(psi)

    def level_overlaps(self, psi) -> np.ndarray:
        return self.psi0.real * psi

    def subspace(self) -> SymmetricSubspace:
        return self.space


# ---------------------------------------------------------------------------
# Runs
# ---------------------------------------------------------------------------


@dataclass
class RunRecord:
    """Trajectory of one evolution; ``occupations[0]`` is the initial state."""

    algorithm: str
    steps: int
    occupations: list[float]
    angles: list[tuple[float, float]] = field(default_factory=list)
    seed: Optional[int] = None
    meta: dict = field(default_factory=dict)

    @property
    def final(self) -> float:
        return self.occupations[-1]

    def to_csv(self, fh=None, angles_in_pi: bool = False) -> str:
        buf = io.StringIO() if fh is None else fh
        writer = csv.writer(buf, lineterminator="\n")
        scale = math.pi if angles_in_pi else 1.0
        suffix = "_over_pi" if angles_in_pi else ""
        writer.writerow(["step", "alpha" + suffix, "beta" + suffix, "occupation"])
        for k, occ in enumerate(self.occupations):
            if k == 0 or k > len(self.angles):
                a = b = ""
            else:
                a, b = (repr(float(v) / scale) for v in self.angles[k - 1])
            writer.writerow([k, a, b, repr(float(occ))])
        return buf.getvalue() if fh is None else ""


def run_grover(engine, steps: int, observe: Optional[Observer] = None) -> RunRecord:
    """Apply (U_0 U_G)^steps to psi0, where U_0 = exp(-i pi H_x)."""
    psi = engine.initial()
    occ = [engine.occupation(psi)]
    if observe:
        observe(0, psi)
    for t in range(1, steps + 1):
        psi = engine.mix(engine.oracle(psi), math.pi)
        occ.append(engine.occupation(psi))
        if observe:
            observe(t, psi)
    return RunRecord("grover", steps, occ, [(math.pi, math.pi)] * steps, meta={"engine": engine.kind})


def grover_occupation(P: float, t: int) -> float:
    theta = math.asin(math.sqrt(P))
    return math.sin((2 * t + 1) * theta) ** 2


def grover_steps_needed(P: float, eta: float) -> int:
    """Smallest t with sin^2((2t+1) theta) >= 1 - eta^2."""
    theta = math.asin(math.sqrt(P))
    target = math.asin(math.sqrt(1.0 - eta * eta))
    return max(0, math.ceil(target / (2.0 * theta) - 0.5 - 1e-12))


def grover_time(P: float, eta: float) -> float:
    """Continuous Grover iteration count asin(sqrt(1 - eta^2)) / (2 sqrt(P))."""
    return math.asin(math.sqrt(1.0 - eta * eta)) / (2.0 * math.sqrt(P))


def run_aqo(engine, total_time: float, dt: float, schedule: str = "linear",
            observe: Optional[Observer] = None, record: bool = True) -> RunRecord:
    """Discrete-time AQO with beta(t) = t/T sampled at step midpoints.

    Each step applies exp(-i beta H_z dt) and then exp(-i alpha H_x dt).
    """
    if dt <= 0 or total_time < 0:
        raise ValueError("need dt > 0 and total_time >= 0")
    steps = int(round(total_time / dt))
    T = steps * dt
    space = engine.subspace() if schedule != "linear" else None
    psi = engine.initial()
    occ = [engine.occupation(psi)]
    angles = []
    if observe:
        observe(0, psi)
    for j in range(1, steps + 1):
        beta = (j - 0.5) * dt / T
        alpha = 1.0 - beta if space is None else schedule_alpha(space, beta, schedule)
        psi = engine.mix(engine.phase(psi, beta * dt), alpha * dt)
        if record:
            occ.append(engine.occupation(psi))
            angles.append((alpha * dt, beta * dt))
        if observe:
            observe(j, psi)
    if not record:
        occ.append(engine.occupation(psi))
    return RunRecord("aqo", steps, occ, angles, meta={"engine": engine.kind, "T": T, "dt": dt, "schedule": schedule})


def _aqo_final(engine, steps, dt, schedule, sampler):
    rec = run_aqo(engine, steps * dt, dt, schedule, record=False)
    return rec.final if sampler is None else sampler(rec.final)


def find_aqo_time(engine, eta: float, dt: float, *, T0: Optional[float] = None, max_doublings: int = 30,
                  refine: bool = False, schedule: str = "linear", shots: Optional[int] = None,
                  rng: Optional[np.random.Generator] = None) -> int:
    """Number of AQO steps after which the ground occupation reaches 1 - eta^2.

    T doubles from ``T0`` (default 4/sqrt(P)) until the target is met.  With
    ``refine`` the last doubling interval is bisected down to one step.  When
    ``shots`` is given the occupation is estimated from that many simulated
    measurements instead of being read off the state.
    """
    if not 0 < eta < 1:
        raise ValueError("eta must lie in (0, 1)")
    target = 1.0 - eta * eta
    if T0 is None:
        T0 = 4.0 / math.sqrt(engine.P)
    sampler = None
    if shots is not None:
        rng = rng if rng is not None else np.random.default_rng()
        sampler = lambda occ: rng.binomial(shots, min(max(occ, 0.0), 1.0)) / shots  # noqa: E731
    steps = max(1, int(math.ceil(T0 / dt - 1e-9)))
    for _ in range(max_doublings + 1):
        if _aqo_final(engine, steps, dt, schedule, sampler) >= target:
            break
        steps *= 2
    else:
        raise ResourceCapError(f"AQO target not reached after {max_doublings} doublings", partial=steps // 2)
    if refine:
        lo, hi = steps // 2, steps
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if _aqo_final(engine, mid, dt, schedule, sampler) >= target:
                hi = mid
            else:
                lo = mid
        steps = hi
    return steps
