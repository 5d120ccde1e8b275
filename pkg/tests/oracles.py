"""Independent reference implementations used only by the tests."""
from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np


def naive_edge_cover_energy(graph, index):
    """Count vertices with no present edge; bit e = 0 means edge e is present."""
    present = [e for e in range(graph.edge_count) if not (index >> e) & 1]
    covered = set()
    for e in present:
        covered.update(graph.edges[e])
    return graph.vertex_count - len(covered)


def naive_spectrum(graph, q, max_moment=3):
    """{energy: [N^(0), ..., N^(max_moment)]} by plain loops."""
    out = {}
    n = graph.edge_count
    for index in range(1 << n):
        ones = bin(index).count("1")
        w = q ** ones * (1 - q) ** (n - ones)
        E = naive_edge_cover_energy(graph, index)
        row = out.setdefault(E, [0.0] * (max_moment + 1))
        for mu in range(max_moment + 1):
            row[mu] += w ** mu
    return dict(sorted(out.items()))


def fibonacci(k):
    a, b = 0, 1
    for _ in range(k):
        a, b = b, a + b
    return a


def dense_hamiltonian(psi0, energies, alpha, beta):
    psi0 = np.asarray(psi0)
    return beta * np.diag(energies) - alpha * np.outer(psi0, psi0.conj())


def expm_hermitian(H, t=1.0):
    vals, vecs = np.linalg.eigh(H)
    return (vecs * np.exp(-1j * t * vals)) @ vecs.conj().T


def exhaustive_draw_moments(weights, M):
    """Exact E[Q], E[R], var(Q) over all M-draw sequences with p(g) = w(g)/P."""
    ws = [Fraction(w) for w in weights]
    P = sum(ws)
    probs = [w / P for w in ws]
    eq = er = eq2 = Fraction(0)
    for seq in itertools.product(range(len(ws)), repeat=M):
        p = math.prod(probs[g] for g in seq)
        Q = len(set(seq))
        eq += p * Q
        eq2 += p * Q * Q
        er += p * sum(ws[g] for g in seq)
    return eq, er, eq2 - eq * eq
