"""Spectral analysis of alpha*H_x + beta*H_z restricted to the symmetric subspace.

With H_x = -|psi0><psi0| the restricted Hamiltonian is diag(beta*E_j) - s s^T,
s_j = sqrt(N_j^(1)), so its eigenvalues solve the secular equation

    sum_j N_j / (beta*E_j - lambda) = 1/alpha.

Roots are found per interlacing interval by bisecting the offset from the
nearer pole, which keeps eigenvalues that sit exponentially close to a pole
(the small-P regime) at full relative precision.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from ._search import golden_section_min
from .problem import SpectrumSummary


class SecularBracketError(RuntimeError):
    """A secular-equation bracket failed to contain a sign change."""


@dataclass(frozen=True, eq=False)
class SymmetricSubspace:
    """Levels with positive weight: energies E_j and first moments N_j^(1)."""

    energies: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.energies, dtype=np.float64)
        n = np.asarray(self.weights, dtype=np.float64)
        if e.shape != n.shape or e.ndim != 1 or e.size == 0:
            raise ValueError("energies and weights must be matching nonempty vectors")
        if np.any(n < 0):
            raise ValueError("level weights must be nonnegative")
        if abs(n.sum() - 1.0) > 1e-9:
            raise ValueError(f"level weights sum to {n.sum()!r}, not 1")
        if np.any(np.diff(e) <= 0):
            raise ValueError("energies must be strictly increasing")
        object.__setattr__(self, "energies", e)
        object.__setattr__(self, "weights", n)

    @classmethod
    def from_spectrum(cls, spectrum: SpectrumSummary) -> "SymmetricSubspace":
        keep = spectrum.moments[1] > 0
        if not keep[0]:
            raise ValueError("ground level carries zero weight (P = 0)")
        return cls(spectrum.energies[keep], spectrum.moments[1][keep])

    @property
    def dimension(self) -> int:
        return self.energies.size

    @property
    def P(self) -> float:
        return float(self.weights[0])

    @property
    def amplitudes(self) -> np.ndarray:
        """Coordinates of psi0 in the basis Phi_j."""
        return np.sqrt(self.weights)

    def matrix(self, alpha: float, beta: float) -> np.ndarray:
        s = self.amplitudes
        return np.diag(beta * self.energies) - alpha * np.outer(s, s)


@dataclass(frozen=True, eq=False)
class SecularSolution:
    """Eigenvalues of the restricted Hamiltonian at one (alpha, beta).

    ``offsets[j]`` is lambda_j - beta*E_0, computed directly so that it keeps
    relative precision even when it is tiny.
    """

    alpha: float
    beta: float
    eigenvalues: np.ndarray
    offsets: np.ndarray

    @property
    def gap(self) -> float:
        if self.offsets.size < 2:
            return math.inf
        return float(self.offsets[1] - self.offsets[0])


_MAX_BISECTIONS = 400


def _bisect_offsets(de: np.ndarray, weights: np.ndarray, inv_alpha: float, origin: np.ndarray,
                    side: np.ndarray, width: np.ndarray) -> np.ndarray:
    """Solve the secular equation for the offset x = lambda - pole on each interval.

    ``de[k]`` are pole positions beta*E_k measured from beta*E_0, ``origin[i]``
    indexes the pole used as origin, ``side[i]`` is +1 when the root lies
    above it and -1 below, and the root satisfies 0 < |x| <= width[i].
    """
    shifted = de[None, :] - de[origin][:, None]  # pole positions relative to each origin

    def f(y):
        x = side * y
        return (weights[None, :] / (shifted - x[:, None])).sum(axis=1) - inv_alpha

    # Bisect y = |x| in (lo, hi]; f changes sign exactly once there.
    hi = width.astype(np.float64).copy()
    lo = np.maximum(hi * 1e-300, np.finfo(np.float64).tiny)
    f_hi = f(hi)
    sign_lo = np.sign(f(lo))
    bad = (sign_lo == np.sign(f_hi)) & (f_hi != 0)
    if np.any(bad):
        raise SecularBracketError(f"no sign change on intervals {np.flatnonzero(bad).tolist()}")
    for _ in range(_MAX_BISECTIONS):
        geometric = hi > 4.0 * lo
        mid = np.where(geometric, np.sqrt(lo * hi), 0.5 * (lo + hi))
        done = (mid <= lo) | (mid >= hi)
        if done.all():
            break
        fm = f(mid)
        same = np.sign(fm) == sign_lo
        lo = np.where(same & ~done, mid, lo)
        hi = np.where(~same & ~done, mid, hi)
    return side * 0.5 * (lo + hi)


def solve_secular(s: SymmetricSubspace, alpha: float, beta: float) -> SecularSolution:
    """All eigenvalues of alpha*H_x + beta*H_z on the symmetric subspace."""
    alpha = float(alpha)
    beta = float(beta)
    if alpha < 0 or beta < 0 or alpha + beta <= 0:
        raise ValueError("need alpha, beta >= 0 with alpha + beta > 0")
    if np.any(s.weights <= 0):
        raise SecularBracketError("levels with zero weight must be dropped before solving")
    E = s.energies
    N = s.weights
    m = E.size
    E0 = E[0]
    if alpha == 0.0:
        offsets = beta * (E - E0)
        return SecularSolution(alpha, beta, beta * E, offsets)
    if beta == 0.0:
        offsets = np.zeros(m)
        offsets[0] = -alpha
        return SecularSolution(alpha, beta, offsets.copy(), offsets)
    if m == 1:
        offsets = np.array([-alpha * N[0]])
        return SecularSolution(alpha, beta, beta * E0 + offsets, offsets)

    inv_alpha = 1.0 / alpha
    de = beta * (E - E0)

    # Interval 0 lies in [beta*E0 - alpha, beta*E0): origin is pole 0, root below it.
    origin = [0]
    side = [-1.0]
    width = [alpha]
    for j in range(1, m):
        a, b = de[j - 1], de[j]
        mid = 0.5 * (a + b)
        fmid = float((N / (de - mid)).sum() - inv_alpha)
        if fmid > 0:  # root between a and mid
            origin.append(j - 1)
            side.append(1.0)
            width.append(mid - a)
        else:
            origin.append(j)
            side.append(-1.0)
            width.append(b - mid)
    origin = np.array(origin)
    side = np.array(side)
    width = np.array(width)

    f_floor = float((N / (de + alpha)).sum() - inv_alpha)
    if f_floor > 1e-12 * inv_alpha:
        raise SecularBracketError("lowest eigenvalue lies below beta*E0 - alpha")

    x = _bisect_offsets(de, N, inv_alpha, origin, side, width)
    offsets = de[origin] + x
    # Roots lie inside their intervals; clipping only removes rounding past a pole.
    lower = np.concatenate(([beta * E0 - alpha], beta * E[:-1]))
    eigenvalues = np.clip(beta * E0 + offsets, lower, beta * E)
    return SecularSolution(alpha, beta, eigenvalues, offsets)


def gap_lower_bound(s: SymmetricSubspace, alpha: float, beta: float) -> float:
    """2*sqrt(alpha*beta*P*(E_1 - E_0)); the symmetric-subspace gap never falls below it."""
    if s.dimension < 2:
        return 0.0
    return 2.0 * math.sqrt(alpha * beta * s.P * (s.energies[1] - s.energies[0]))


def schedule_alpha(s: SymmetricSubspace, beta: float, schedule: str = "linear") -> float:
    if schedule == "linear":
        return 1.0 - beta
    if schedule == "alt_scaled":
        return (s.energies[1] - s.energies[0]) * (1.0 - beta)
    raise ValueError(f"unknown schedule {schedule!r}")


def min_gap_over_schedule(s: SymmetricSubspace, schedule: str = "linear", resolution: int = 1024,
                          tol: float = 1e-6) -> tuple[float, float]:
    """Minimum gap along the schedule beta in [0, 1]; returns (gap*, beta*)."""
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    if s.dimension < 2:
        return math.inf, math.nan

    def gap_at(beta):
        beta = min(max(beta, 0.0), 1.0)
        alpha = schedule_alpha(s, beta, schedule)
        if alpha == 0.0 and beta == 0.0:
            return math.inf
        return solve_secular(s, alpha, beta).gap

    grid = np.linspace(0.0, 1.0, resolution)
    gaps = np.array([gap_at(b) for b in grid])
    k = int(np.argmin(gaps))
    lo = grid[max(k - 1, 0)]
    hi = grid[min(k + 1, resolution - 1)]
    beta_star, gap_star = golden_section_min(gap_at, lo, hi, tol)
    if gaps[k] < gap_star:
        beta_star, gap_star = float(grid[k]), float(gaps[k])
    return float(gap_star), float(beta_star)


def beta_star_window(s: SymmetricSubspace) -> tuple[float, float]:
    """Interval expected to contain the minimizing beta for P << 1 and E_1 - E_0 of order one."""
    E = s.energies
    return float(1.0 / (1.0 + E[-1] - E[0])), float(1.0 / (1.0 + E[1] - E[0]))


def _window_factor(s: SymmetricSubspace) -> float:
    E = s.energies
    d1 = E[1] - E[0]
    dm = E[-1] - E[0]
    return float(min(d1 / (1.0 + d1) ** 2, dm / (1.0 + dm) ** 2))


def min_gap_closed_form(s: SymmetricSubspace) -> float:
    """Lower bound on the minimum gap when beta* lies in ``beta_star_window``."""
    d1 = float(s.energies[1] - s.energies[0])
    return math.sqrt(4.0 * d1 * _window_factor(s)) * math.sqrt(s.P)


def aqo_time_bound(s: SymmetricSubspace, eta: float) -> float:
    """Lower bound on the total AQO time for the linear schedule at final infidelity eta^2."""
    if not 0.0 < eta < 1.0:
        raise ValueError("eta must lie in (0, 1)")
    if s.dimension < 2:
        raise ValueError("need at least two levels (E_1 - E_0 > 0)")
    E = s.energies
    d1 = float(E[1] - E[0])
    return float(E[-1] + 1.0) / (4.0 * eta * s.P * d1 * _window_factor(s))


def spectrum_scan(s: SymmetricSubspace, betas, schedule: str = "linear") -> np.ndarray:
    """Rows (beta, lambda_0..lambda_{m-1}, gap) along the schedule."""
    rows = []
    for beta in np.asarray(betas, dtype=np.float64):
        alpha = schedule_alpha(s, beta, schedule)
        sol = solve_secular(s, alpha, beta)
        rows.append([beta, *sol.eigenvalues, sol.gap])
    return np.array(rows)


def spectrum_scan_csv(s: SymmetricSubspace, betas, schedule: str = "linear") -> str:
    table = spectrum_scan(s, betas, schedule)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["beta"] + [f"lambda{j}" for j in range(s.dimension)] + ["gap"])
    for row in table:
        writer.writerow([repr(float(v)) for v in row])
    return buf.getvalue()
