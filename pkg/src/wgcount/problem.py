"""Graphs, diagonal spin Hamiltonians, weight models and exact spectral oracles.

Bit convention: bit ``e`` of a basis-state index is 0 when edge ``e`` is
present (sigma^z = +1) and 1 when it is absent (sigma^z = -1).  Indices are
little-endian in edge-list order.
"""
from __future__ import annotations

import csv
import io
import itertools
import math
import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

EXHAUSTIVE_LIMIT = 24
ENERGY_TOL = 1e-9


def popcount(indices: np.ndarray) -> np.ndarray:
    return np.bitwise_count(np.asarray(indices, dtype=np.uint64)).astype(np.int64)


# ---------------------------------------------------------------------------
# Graphs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph with no isolated vertices."""

    vertex_count: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.vertex_count < 1:
            raise ValueError("vertex_count must be positive")
        normalized = []
        seen = set()
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-loop on vertex {u}")
            if not (0 <= u < self.vertex_count and 0 <= v < self.vertex_count):
                raise ValueError(f"edge ({u}, {v}) out of range for {self.vertex_count} vertices")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)
            normalized.append(key)
        object.__setattr__(self, "edges", tuple(normalized))
        isolated = [v for v, d in enumerate(self.degrees) if d == 0]
        if isolated:
            raise ValueError(f"isolated vertices {isolated}: no edge cover exists")

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @property
    def degrees(self) -> list[int]:
        deg = [0] * self.vertex_count
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg

    def incident_edges(self, vertex: int) -> list[int]:
        return [i for i, e in enumerate(self.edges) if vertex in e]

    def to_text(self) -> str:
        lines = [f"v {self.vertex_count}"]
        lines += [f"e {u} {v}" for u, v in self.edges]
        return "\n".join(lines) + "\n"


def read_graph(source) -> Graph:
    """Parse the ``v <n>`` / ``e <u> <w>`` text format from a path or string."""
    if isinstance(source, (str, os.PathLike)) and os.path.exists(source):
        with open(source) as fh:
            text = fh.read()
    else:
        text = str(source)
    vertex_count = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "v" and len(parts) == 2 and vertex_count is None:
            vertex_count = int(parts[1])
        elif parts[0] == "e" and len(parts) == 3:
            edges.append((int(parts[1]), int(parts[2])))
        else:
            raise ValueError(f"line {lineno}: cannot parse {raw!r}")
    if vertex_count is None:
        raise ValueError("missing 'v <vertex_count>' header")
    return Graph(vertex_count, tuple(edges))


def write_graph(graph: Graph, path) -> None:
    with open(path, "w") as fh:
        fh.write(graph.to_text())


def linear_graph(edge_count: int) -> Graph:
    if edge_count < 1:
        raise ValueError("edge_count must be >= 1")
    return Graph(edge_count + 1, tuple((i, i + 1) for i in range(edge_count)))


def ladder_graph(columns: int) -> Graph:
    """2 x n grid; vertex (row r, column c) has index 2c + r."""
    if columns < 1:
        raise ValueError("columns must be >= 1")
    edges = []
    for c in range(columns):
        edges.append((2 * c, 2 * c + 1))
        if c + 1 < columns:
            edges.append((2 * c, 2 * c + 2))
            edges.append((2 * c + 1, 2 * c + 3))
    return Graph(2 * columns, tuple(edges))


def paw_graph() -> Graph:
    return Graph(4, ((0, 1), (1, 2), (0, 2), (2, 3)))


def triangle_graph() -> Graph:
    return Graph(3, ((0, 1), (1, 2), (0, 2)))


def _random_cover_graph(vertex_count, edge_count, rng):
    # Valid starting point for the edge-move chain: a random edge cover padded
    # with random extra edges.
    order = rng.permutation(vertex_count)
    chosen = set()
    for i in range(0, vertex_count - 1, 2):
        u, v = order[i], order[i + 1]
        chosen.add((min(u, v), max(u, v)))
    if vertex_count % 2:
        u = order[-1]
        v = order[int(rng.integers(vertex_count - 1))]
        chosen.add((min(u, v), max(u, v)))
    while len(chosen) < edge_count:
        u, v = rng.choice(vertex_count, 2, replace=False)
        chosen.add((min(u, v), max(u, v)))
    return chosen


def random_mean_degree_graph(
    degree: float,
    rng: np.random.Generator,
    *,
    edges: int | None = None,
    vertices: int | None = None,
    max_tries: int = 200,
    mixing_sweeps: int = 50,
) -> Graph:
    """Uniform simple graph with the requested mean degree and no isolated vertex.

    Give either ``edges`` (vertex count becomes round(2E/degree)) or
    ``vertices`` (edge count becomes ceil(degree*V/2)).  Plain rejection is
    tried first; when isolated vertices make it hopeless a symmetric
    edge-move Markov chain restricted to valid graphs takes over.
    """
    if degree <= 0:
        raise ValueError("degree must be positive")
    if (edges is None) == (vertices is None):
        raise ValueError("give exactly one of edges= or vertices=")
    if edges is not None:
        E = int(edges)
        V = max(2, int(round(2 * E / degree)))
    else:
        V = int(vertices)
        E = int(math.ceil(degree * V / 2))
    if 2 * E < V:
        raise ValueError(f"{E} edges cannot cover {V} vertices")
    if E > V * (V - 1) // 2:
        raise ValueError(f"{E} edges do not fit in a simple graph on {V} vertices")

    pairs = [(u, v) for u in range(V) for v in range(u + 1, V)]
    for _ in range(max_tries):
        pick = rng.choice(len(pairs), E, replace=False)
        chosen = [pairs[i] for i in sorted(pick)]
        deg = np.zeros(V, dtype=int)
        for u, v in chosen:
            deg[u] += 1
            deg[v] += 1
        if deg.min() > 0:
            return Graph(V, tuple(chosen))

    current = _random_cover_graph(V, E, rng)
    deg = np.zeros(V, dtype=int)
    for u, v in current:
        deg[u] += 1
        deg[v] += 1
    edge_list = sorted(current)
    pair_index = {p: i for i, p in enumerate(pairs)}
    in_graph = np.zeros(len(pairs), dtype=bool)
    for p in edge_list:
        in_graph[pair_index[p]] = True
    for _ in range(mixing_sweeps * E):
        k = int(rng.integers(E))
        u, v = edge_list[k]
        new = pairs[int(rng.integers(len(pairs)))]
        if in_graph[pair_index[new]]:
            continue
        deg[u] -= 1
        deg[v] -= 1
        deg[new[0]] += 1
        deg[new[1]] += 1
        if deg.min() == 0:
            deg[u] += 1
            deg[v] += 1
            deg[new[0]] -= 1
            deg[new[1]] -= 1
            continue
        in_graph[pair_index[(u, v)]] = False
        in_graph[pair_index[new]] = True
        edge_list[k] = new
    return Graph(V, tuple(sorted(edge_list)))


def generate_graph(kind: str, seed: int | None = None, **params) -> Graph:
    """Build a graph of the named family.

    kinds: ``linear`` (edges), ``grid2xn`` (columns or edges), ``paw``,
    ``triangle``, ``random_mean_degree`` (degree plus edges or vertices).
    """
    if kind == "linear":
        return linear_graph(int(params["edges"]))
    if kind == "grid2xn":
        if "columns" in params:
            return ladder_graph(int(params["columns"]))
        E = int(params["edges"])
        if (E + 2) % 3:
            raise ValueError(f"a 2 x n grid has 3n-2 edges; {E} is not of that form")
        return ladder_graph((E + 2) // 3)
    if kind == "paw":
        return paw_graph()
    if kind == "triangle":
        return triangle_graph()
    if kind == "random_mean_degree":
        rng = np.random.default_rng(seed)
        return random_mean_degree_graph(
            float(params["degree"]),
            rng,
            edges=params.get("edges"),
            vertices=params.get("vertices"),
        )
    raise ValueError(f"unknown graph kind {kind!r}")


# ---------------------------------------------------------------------------
# Hamiltonians and weights
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SpinHamiltonian:
    """H = sum_s J_s prod_{j in s} sigma^z_j, diagonal in the computational basis.

    ``vertex_masks`` is set for edge-cover Hamiltonians and gives an exact
    integer evaluator: the energy is the number of masks whose bits are all 1.
    """

    qubit_count: int
    terms: tuple[tuple[frozenset, float], ...]
    vertex_masks: tuple[int, ...] | None = None

    @classmethod
    def from_terms(cls, qubit_count: int, terms: Iterable[tuple[Iterable[int], float]], vertex_masks=None):
        acc: dict[frozenset, float] = {}
        for subset, coeff in terms:
            s = frozenset(int(j) for j in subset)
            if any(j < 0 or j >= qubit_count for j in s):
                raise ValueError(f"term {sorted(s)} references a qubit outside 0..{qubit_count - 1}")
            acc[s] = acc.get(s, 0.0) + float(coeff)
        merged = tuple(
            sorted(((s, c) for s, c in acc.items() if c != 0.0), key=lambda t: (len(t[0]), sorted(t[0])))
        )
        return cls(int(qubit_count), merged, None if vertex_masks is None else tuple(vertex_masks))

    @property
    def is_integer_valued(self) -> bool:
        return self.vertex_masks is not None

    def energy_of(self, indices) -> np.ndarray:
        idx = np.asarray(indices, dtype=np.int64)
        if self.vertex_masks is not None:
            out = np.zeros(idx.shape, dtype=np.int64)
            for mask in self.vertex_masks:
                out += (idx & mask) == mask
            return out.astype(np.float64)
        out = np.zeros(idx.shape, dtype=np.float64)
        for subset, coeff in self.terms:
            mask = sum(1 << j for j in subset)
            parity = popcount(idx & mask) & 1
            out += coeff * (1 - 2 * parity)
        return out

    @cached_property
    def energies(self) -> np.ndarray:
        """Energies of all 2^n basis states (cached)."""
        check_exhaustive(self.qubit_count)
        out = self.energy_of(np.arange(1 << self.qubit_count, dtype=np.int64))
        out.setflags(write=False)
        return out


def build_edge_cover_hamiltonian(graph: Graph) -> SpinHamiltonian:
    """Sum over vertices of prod_{e in E(v)} (1 - sigma^z_e)/2, expanded into spin products."""
    terms = []
    masks = []
    for v in range(graph.vertex_count):
        inc = graph.incident_edges(v)
        if not inc:
            raise ValueError(f"vertex {v} is isolated")
        masks.append(sum(1 << e for e in inc))
        scale = 0.5 ** len(inc)
        for r in range(len(inc) + 1):
            for subset in itertools.combinations(inc, r):
                terms.append((subset, scale * (-1) ** r))
    return SpinHamiltonian.from_terms(graph.edge_count, terms, vertex_masks=masks)


def energy(h: SpinHamiltonian, index: int) -> float:
    if not 0 <= index < (1 << h.qubit_count):
        raise ValueError("basis-state index out of range")
    return float(h.energy_of(np.array([index]))[0])


@dataclass(frozen=True, eq=False)
class WeightModel:
    """Normalized nonnegative weights over basis states.

    Either the Bernoulli product model (weight q^{n1} (1-q)^{n0}) or an
    explicit table.
    """

    qubit_count: int
    q: float | None = None
    table: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if (self.q is None) == (self.table is None):
            raise ValueError("give exactly one of q or table")
        if self.q is not None and not 0.0 <= self.q <= 1.0:
            raise ValueError("q must lie in [0, 1]")
        if self.table is not None:
            t = np.asarray(self.table, dtype=np.float64)
            if t.shape != (1 << self.qubit_count,):
                raise ValueError("weight table must have 2^n entries")
            if (t < 0).any():
                raise ValueError("weights must be nonnegative")
            if abs(t.sum() - 1.0) > 1e-9:
                raise ValueError(f"weights sum to {t.sum()!r}, not 1")
            t = t.copy()
            t.setflags(write=False)
            object.__setattr__(self, "table", t)

    @classmethod
    def bernoulli(cls, qubit_count: int, q: float) -> "WeightModel":
        return cls(int(qubit_count), q=float(q))

    @classmethod
    def explicit(cls, table) -> "WeightModel":
        t = np.asarray(table, dtype=np.float64)
        n = int(round(math.log2(len(t))))
        return cls(n, table=t)

    @property
    def kind(self) -> str:
        return "bernoulli" if self.q is not None else "explicit"

    def weight_of(self, indices) -> np.ndarray:
        idx = np.asarray(indices, dtype=np.int64)
        if self.table is not None:
            return self.table[idx]
        ones = popcount(idx)
        return self.q ** ones * (1.0 - self.q) ** (self.qubit_count - ones)

    @cached_property
    def weights(self) -> np.ndarray:
        check_exhaustive(self.qubit_count)
        if self.table is not None:
            return self.table
        out = self.weight_of(np.arange(1 << self.qubit_count, dtype=np.int64))
        out.setflags(write=False)
        return out


def weight(m: WeightModel, index: int) -> float:
    if not 0 <= index < (1 << m.qubit_count):
        raise ValueError("basis-state index out of range")
    return float(m.weight_of(np.array([index]))[0])


# ---------------------------------------------------------------------------
# Spectra
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SpectrumSummary:
    """Distinct energies E_j and weight moments N_j^(mu) = sum_{H(phi)=E_j} w(phi)^mu.

    ``moments[mu, j]`` holds N_j^(mu) for mu = 0..max_moment.
    """

    energies: np.ndarray
    moments: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.energies, dtype=np.float64)
        mom = np.atleast_2d(np.asarray(self.moments, dtype=np.float64))
        if e.ndim != 1 or mom.shape[1] != e.size:
            raise ValueError("moments must have shape (max_moment + 1, level_count)")
        if e.size and np.any(np.diff(e) <= 0):
            raise ValueError("energies must be strictly increasing")
        object.__setattr__(self, "energies", e)
        object.__setattr__(self, "moments", mom)

    @property
    def level_count(self) -> int:
        return self.energies.size

    @property
    def max_moment(self) -> int:
        return self.moments.shape[0] - 1

    @property
    def ground_energy(self) -> float:
        return float(self.energies[0])

    def N(self, j: int, mu: int) -> float:
        if mu > self.max_moment:
            raise ValueError(f"moment order {mu} not computed (max {self.max_moment})")
        return float(self.moments[mu, j])

    def P_mu(self, mu: int) -> float:
        return self.N(0, mu)

    @property
    def P(self) -> float:
        return self.P_mu(1)

    @property
    def P2(self) -> float:
        return self.P_mu(2)

    def ground_moments(self) -> np.ndarray:
        return self.moments[:, 0].copy()

    def to_csv(self, fh=None) -> str:
        buf = io.StringIO() if fh is None else fh
        writer = csv.writer(buf, lineterminator="\n")
        orders = list(range(min(self.max_moment, 2) + 1))
        writer.writerow(["level", "energy"] + [f"N{mu}" for mu in orders])
        for j, E in enumerate(self.energies):
            writer.writerow([j, repr(float(E))] + [repr(float(self.moments[mu, j])) for mu in orders])
        return buf.getvalue() if fh is None else ""


def check_exhaustive(n: int, limit: int = EXHAUSTIVE_LIMIT) -> None:
    if n > limit:
        raise ValueError(
            f"{n} qubits exceeds the exhaustive limit of {limit}; "
            "use dp_spectrum_path_and_ladder or linear_graph_moment for larger instances"
        )


def group_levels(energies: np.ndarray, integer: bool = False, tol: float = ENERGY_TOL):
    """Return (distinct energies, level index of every basis state)."""
    if integer:
        levels, inverse = np.unique(np.rint(energies).astype(np.int64), return_inverse=True)
        return levels.astype(np.float64), inverse
    order = np.argsort(energies, kind="stable")
    sorted_e = energies[order]
    new_level = np.empty(sorted_e.size, dtype=bool)
    new_level[0] = True
    new_level[1:] = np.diff(sorted_e) > tol
    level_of_sorted = np.cumsum(new_level) - 1
    inverse = np.empty_like(level_of_sorted)
    inverse[order] = level_of_sorted
    starts = np.flatnonzero(new_level)
    levels = np.array([sorted_e[a:b].mean() for a, b in zip(starts, list(starts[1:]) + [sorted_e.size])])
    return levels, inverse


def enumerate_spectrum(
    h: SpinHamiltonian, m: WeightModel, max_moment: int = 2, limit: int = EXHAUSTIVE_LIMIT
) -> SpectrumSummary:
    """Exact spectrum and moments by visiting all 2^n basis states."""
    check_exhaustive(h.qubit_count, limit)
    if m.qubit_count != h.qubit_count:
        raise ValueError("weight model and Hamiltonian act on different qubit counts")
    levels, inverse = group_levels(h.energies, integer=h.is_integer_valued)
    w = m.weights
    moments = np.empty((max(max_moment, 2) + 1, levels.size))
    moments[0] = np.bincount(inverse, minlength=levels.size)
    wp = np.ones_like(w)
    for mu in range(1, moments.shape[0]):
        wp = wp * w
        moments[mu] = np.bincount(inverse, weights=wp, minlength=levels.size)
    return SpectrumSummary(levels, moments)


def ground_states(h: SpinHamiltonian, tol: float = ENERGY_TOL) -> np.ndarray:
    e = h.energies
    return np.flatnonzero(e <= e.min() + tol)


# ---------------------------------------------------------------------------
# Analytic and transfer-matrix oracles
# ---------------------------------------------------------------------------


def linear_graph_moment(edge_count: int, q: float, mu: int) -> float:
    """Ground-state moment P_mu of the path graph with ``edge_count`` edges.

    The last edge is always present; the second-to-last either is present
    (reducing to the path one edge shorter) or absent (forcing the edge before
    it, reducing to the path two edges shorter).
    """
    if edge_count < 1 or mu < 0:
        raise ValueError("need edge_count >= 1 and mu >= 0")
    present = (1.0 - q) ** mu
    absent = q ** mu
    prev, cur = present, present * present  # |E| = 1, 2
    if edge_count == 1:
        return prev
    for _ in range(3, edge_count + 1):
        prev, cur = cur, present * cur + absent * present * prev
    return cur


def linear_graph_moment_closed_form(edge_count: int, q: float, mu: int) -> float:
    total = 0.0
    for r in range(edge_count // 2 + 1):
        total += math.comb(edge_count - r - 1, r) * q ** (mu * r) * (1.0 - q) ** (mu * (edge_count - r))
    return total


def _shift(poly: np.ndarray, k: int = 1) -> np.ndarray:
    out = np.zeros_like(poly)
    out[..., k:] = poly[..., :-k]
    return out


def dp_spectrum_path_and_ladder(kind: str, edge_count: int, q: float, max_moment: int = 2) -> SpectrumSummary:
    """Exact level moments for path or 2 x n ladder graphs by transfer matrices.

    The DP state is the coverage of the frontier vertices; each state carries
    a polynomial in the number of uncovered vertices, one row per moment order.
    """
    orders = np.arange(max(max_moment, 2) + 1)
    present = (1.0 - q) ** orders  # weight^mu of a present edge (bit 0)
    absent = q ** orders
    pres = present[:, None]
    abse = absent[:, None]

    if kind in ("path", "linear"):
        if edge_count < 1:
            raise ValueError("edge_count must be >= 1")
        V = edge_count + 1
        width = V + 1
        # state: is the current frontier vertex covered?
        st = {False: np.zeros((orders.size, width)), True: np.zeros((orders.size, width))}
        st[False][:, 0] = 1.0
        for _ in range(edge_count):
            nxt = {False: np.zeros_like(st[False]), True: np.zeros_like(st[False])}
            for covered, poly in st.items():
                nxt[True] += pres * poly
                nxt[False] += abse * (poly if covered else _shift(poly))
            st = nxt
        total = st[True] + _shift(st[False])
    elif kind in ("grid2xn", "ladder"):
        if edge_count < 1 or (edge_count + 2) % 3:
            raise ValueError(f"a 2 x n grid has 3n-2 edges; {edge_count} is not of that form")
        columns = (edge_count + 2) // 3
        V = 2 * columns
        width = V + 1
        st = {s: np.zeros((orders.size, width)) for s in itertools.product((False, True), repeat=2)}
        st[(False, False)][:, 0] = 1.0
        for c in range(columns):
            after_rung = {s: np.zeros_like(st[(False, False)]) for s in st}
            for (top, bot), poly in st.items():
                after_rung[(True, True)] += pres * poly
                after_rung[(top, bot)] += abse * poly
            if c == columns - 1:
                st = after_rung
                break
            nxt = {s: np.zeros_like(st[(False, False)]) for s in st}
            for (top, bot), poly in after_rung.items():
                for rail_top, rail_bot in itertools.product((True, False), repeat=2):
                    factor = (pres if rail_top else abse) * (pres if rail_bot else abse)
                    uncovered = int(not (top or rail_top)) + int(not (bot or rail_bot))
                    p = factor * poly
                    nxt[(rail_top, rail_bot)] += _shift(p, uncovered) if uncovered else p
            st = nxt
        total = np.zeros_like(st[(False, False)])
        for (top, bot), poly in st.items():
            uncovered = int(not top) + int(not bot)
            total += _shift(poly, uncovered) if uncovered else poly
    else:
        raise ValueError(f"unsupported kind {kind!r}; use 'path' or 'grid2xn'")

    occupied = np.flatnonzero(total[0] > 0)
    energies = occupied.astype(np.float64)
    return SpectrumSummary(energies, total[:, occupied])
