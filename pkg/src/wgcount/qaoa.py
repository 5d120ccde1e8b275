"""QAOA angle selection: per-layer greedy optimization and constant angles.

One layer is U(alpha, beta) = exp(-i alpha H_x) exp(-i beta H_z).  For a
fixed incoming state the ground occupation after one layer has the closed form

    A + 2 Re[(e^{i alpha} - 1) c(beta) e^{i beta E_0} conj(d_0)] + |e^{i alpha} - 1|^2 |c(beta)|^2 P

with d_j the level overlaps of psi with psi0, c(beta) = sum_j e^{-i beta E_j} d_j
and A the incoming occupation, so a full angle grid costs O(grid * m).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._search import golden_section_max
from .dynamics import Observer, RunRecord
from .errors import ResourceCapError

TWO_PI = 2.0 * math.pi
TIE_TOL = 1e-12


@dataclass
class AngleSchedule:
    mode: str
    angles: list[tuple[float, float]]
    target_occupation: float
    meta: dict = field(default_factory=dict)


def _beta_period(engine, energy_quantum: Optional[float]) -> float:
    if energy_quantum is not None:
        return TWO_PI / energy_quantum
    if not engine.integer_spectrum:
        warnings.warn(
            "spectrum is not integer-valued; exp(-i beta H_z) is not 2*pi periodic and the "
            "beta search over [0, 2*pi) may miss the optimum (set energy_quantum)",
            RuntimeWarning,
            stacklevel=3,
        )
    return TWO_PI


class _Landscape:
    """Closed-form one-layer occupation for a fixed incoming state."""

    def __init__(self, engine, psi):
        self.E = engine.levels
        self.E0 = engine.levels[0]
        self.d = engine.level_overlaps(psi)
        self.A = engine.occupation(psi)
        self.P = engine.P

    def grid(self, alphas, betas) -> np.ndarray:
        """Occupation array indexed [beta, alpha]."""
        phases = np.exp(-1j * np.outer(betas, self.E))
        c = phases @ self.d
        u = np.exp(1j * np.asarray(alphas)) - 1.0
        cross = (c * np.exp(1j * np.asarray(betas) * self.E0) * np.conj(self.d[0]))[:, None] * u[None, :]
        return self.A + 2.0 * cross.real + (np.abs(u) ** 2)[None, :] * (np.abs(c) ** 2)[:, None] * self.P

    def __call__(self, alpha, beta) -> float:
        return float(self.grid(np.array([alpha]), np.array([beta]))[0, 0])


def _grid_argmax(values: np.ndarray) -> tuple[int, int]:
    """First (smallest beta, then alpha) index within TIE_TOL of the maximum."""
    best = values.max()
    ib, ia = np.argwhere(values >= best - TIE_TOL)[0]
    return int(ib), int(ia)


def _refine(objective, alpha, beta, best, h_alpha, h_beta, sweeps, tol):
    for _ in range(sweeps):
        x, v = golden_section_max(lambda b: objective(alpha, b), beta - h_beta, beta + h_beta)
        if v > best + tol:
            beta, best = x, v
        x, v = golden_section_max(lambda a: objective(a, beta), alpha - h_alpha, alpha + h_alpha)
        if v > best + tol:
            alpha, best = x, v
    return alpha, beta, best


def greedy_optimize_step(engine, psi, *, grid: int = 64, sweeps: int = 3, tol: float = 1e-8,
                         energy_quantum: Optional[float] = None) -> tuple[float, float, float]:
    """Angles maximizing the ground occupation after one layer; returns (alpha, beta, occupation).

    A uniform grid over [0, 2pi) x [0, beta_period) is followed by coordinate
    descent with golden-section line searches; a refinement is accepted only
    if it gains more than ``tol``.
    """
    period = _beta_period(engine, energy_quantum)
    land = _Landscape(engine, psi)
    alphas = np.arange(grid) * (TWO_PI / grid)
    betas = np.arange(grid) * (period / grid)
    values = land.grid(alphas, betas)
    ib, ia = _grid_argmax(values)
    alpha, beta, best = _refine(land, alphas[ia], betas[ib], float(values[ib, ia]),
                                TWO_PI / grid, period / grid, sweeps, tol)
    return float(alpha % TWO_PI), float(beta % period), float(best)


def apply_layer(engine, psi, alpha, beta):
    return engine.mix(engine.phase(psi, beta), alpha)


def run_qaoa_greedy(engine, target: float, *, cap: int = 2000, grid: int = 64, sweeps: int = 3,
                    tol: float = 1e-8, energy_quantum: Optional[float] = None,
                    observe: Optional[Observer] = None) -> RunRecord:
    """Add greedy layers until the ground occupation reaches ``target``.

    Raises ResourceCapError (with the partial record attached) when the depth
    would exceed ``cap`` or a layer fails to raise the occupation.
    """
    if not 0.0 < target <= 1.0:
        raise ValueError("target occupation must lie in (0, 1]")
    psi = engine.initial()
    occ = [engine.occupation(psi)]
    angles = []
    if observe:
        observe(0, psi)
    record = RunRecord("qaoa", 0, occ, angles, meta={"engine": engine.kind, "mode": "greedy", "grid": grid})
    while occ[-1] < target:
        if len(angles) >= cap:
            raise ResourceCapError(f"greedy QAOA depth exceeded cap {cap}", partial=record)
        alpha, beta, _ = greedy_optimize_step(engine, psi, grid=grid, sweeps=sweeps, tol=tol,
                                              energy_quantum=energy_quantum)
        psi = apply_layer(engine, psi, alpha, beta)
        new = engine.occupation(psi)
        if new <= occ[-1] + 1e-14:
            raise ResourceCapError(f"greedy QAOA stalled at occupation {new:.6g}", partial=record)
        angles.append((alpha, beta))
        occ.append(new)
        record.steps = len(angles)
        if observe:
            observe(record.steps, psi)
    depth = record.steps
    record.meta["alpha_beta_search"] = depth * depth
    record.meta["grid_evaluations"] = depth * grid * grid
    return record


def constant_angle_occupation(engine, alpha: float, beta: float, depth: int) -> float:
    psi = engine.initial()
    for _ in range(depth):
        psi = apply_layer(engine, psi, alpha, beta)
    return engine.occupation(psi)


def optimize_constant_angles(engine, depth: int, *, grid: int = 64, sweeps: int = 3, tol: float = 1e-8,
                             energy_quantum: Optional[float] = None) -> tuple[float, float, float]:
    """Shared (alpha, beta) maximizing the occupation after ``depth`` layers."""
    if depth < 0:
        raise ValueError("depth must be >= 0")
    if depth == 0:
        return 0.0, 0.0, engine.occupation(engine.initial())
    period = _beta_period(engine, energy_quantum)
    alphas = np.arange(grid) * (TWO_PI / grid)
    betas = np.arange(grid) * (period / grid)
    mix_phase = np.exp(1j * alphas) - 1.0
    psi0 = engine.psi0
    values = np.empty((grid, grid))
    for ib, beta in enumerate(betas):
        states = np.tile(engine.initial(), (grid, 1))
        for _ in range(depth):
            states = engine.phase(states, beta)
            overlap = states @ psi0.conj()
            states = states + (mix_phase * overlap)[:, None] * psi0[None, :]
        values[ib] = [engine.occupation(s) for s in states]
    ib, ia = _grid_argmax(values)
    objective = lambda a, b: constant_angle_occupation(engine, a, b, depth)  # noqa: E731
    alpha, beta, best = _refine(objective, alphas[ia], betas[ib], float(values[ib, ia]),
                                TWO_PI / grid, period / grid, sweeps, tol)
    return float(alpha % TWO_PI), float(beta % period), float(best)


def min_constant_depth(engine, target: float, *, cap: int = 200, grid: int = 64, sweeps: int = 3,
                       energy_quantum: Optional[float] = None) -> tuple[int, float, float, float]:
    """Smallest depth whose optimized constant angles reach ``target``; returns (depth, alpha, beta, occupation)."""
    occ = engine.occupation(engine.initial())
    if occ >= target:
        return 0, 0.0, 0.0, occ
    for depth in range(1, cap + 1):
        alpha, beta, occ = optimize_constant_angles(engine, depth, grid=grid, sweeps=sweeps,
                                                    energy_quantum=energy_quantum)
        if occ >= target:
            return depth, alpha, beta, occ
    raise ResourceCapError(f"no constant-angle circuit up to depth {cap} reaches {target}")


def run_qaoa_fixed(engine, alpha: float, beta: float, *, depth: Optional[int] = None,
                   target: Optional[float] = None, cap: int = 2000,
                   observe: Optional[Observer] = None) -> RunRecord:
    """Constant-angle layers, either a fixed ``depth`` or until ``target`` is reached."""
    if (depth is None) == (target is None):
        raise ValueError("give exactly one of depth or target")
    psi = engine.initial()
    occ = [engine.occupation(psi)]
    if observe:
        observe(0, psi)
    record = RunRecord("qaoa", 0, occ, [], meta={"engine": engine.kind, "mode": "constant", "alpha_beta_search": 1})
    limit = depth if depth is not None else cap
    while record.steps < limit and (target is None or occ[-1] < target):
        psi = apply_layer(engine, psi, alpha, beta)
        occ.append(engine.occupation(psi))
        record.angles.append((alpha, beta))
        record.steps += 1
        if observe:
            observe(record.steps, psi)
    if target is not None and occ[-1] < target:
        raise ResourceCapError(f"constant-angle QAOA did not reach {target} within {cap} layers", partial=record)
    return record


def schedule_from_record(record: RunRecord, target: float) -> AngleSchedule:
    mode = record.meta.get("mode", "greedy")
    angles = list(record.angles) if mode == "greedy" else list(record.angles[:1])
    return AngleSchedule(mode, angles, target, dict(record.meta))
