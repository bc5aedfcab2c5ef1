"""Small-dimension integer lattice helpers for quadratic forms.

Everything here works on Z^m equipped with a positive definite form Q: vector
norms are n^t Q n.  Dimensions stay tiny (m <= 4), so pairwise (Lagrange
style) greedy reduction is enough to make enumeration boxes small.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["greedy_reduce", "enumerate_box", "box_chunks", "ShortestVector",
           "min_quadratic_form"]


def greedy_reduce(Q: np.ndarray, max_rounds: int = 200) -> np.ndarray:
    """Unimodular U such that U^t Q U is pairwise-reduced with sorted diagonal.

    Repeated Lagrange steps: shave each basis vector by rounded projections on
    the others and keep the basis sorted by norm.  Terminates because every
    accepted step strictly decreases a basis norm.
    """
    Q = np.asarray(Q, dtype=float)
    m = Q.shape[0]
    U = np.eye(m, dtype=np.int64)

    def form(u, v):
        return float(u @ Q @ v)

    for _ in range(max_rounds):
        changed = False
        order = np.argsort([form(U[:, j], U[:, j]) for j in range(m)], kind="stable")
        U = U[:, order]
        for j in range(1, m):
            for i in range(j):
                denom = form(U[:, i], U[:, i])
                if denom <= 0.0:
                    continue
                mu = round(form(U[:, j], U[:, i]) / denom)
                if mu != 0:
                    new = U[:, j] - mu * U[:, i]
                    if form(new, new) < form(U[:, j], U[:, j]) * (1 - 1e-15):
                        U[:, j] = new
                        changed = True
        if not changed:
            break
    return U


def enumerate_box(radius: int, m: int) -> np.ndarray:
    """All integer vectors with coordinates in [-radius, radius], shape (N, m)."""
    axes = [np.arange(-radius, radius + 1, dtype=np.int64)] * m
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def box_chunks(radius: int, m: int, chunk: int = 2_000_000):
    """Yield the box in pieces small enough to keep memory flat."""
    total = (2 * radius + 1) ** m
    if total <= chunk or m == 1:
        yield enumerate_box(radius, m)
        return
    sub = enumerate_box(radius, m - 1)
    for lead in range(-radius, radius + 1):
        yield np.concatenate(
            [np.full((sub.shape[0], 1), lead, dtype=np.int64), sub], axis=1)


@dataclass(frozen=True)
class ShortestVector:
    value: float          # minimal n^t Q n over nonzero n
    witness: np.ndarray   # a minimising integer vector
    radius: int           # certified exhaustive box radius
    examined: int         # lattice points swept


def min_quadratic_form(Q: np.ndarray) -> ShortestVector:
    """Exact minimum of n^t Q n over nonzero integer vectors, with a witness.

    Any candidate value v bounds the search box: a minimiser satisfies
    |n_j| <= sqrt(v / lambda_min(Q)).  The box is seeded with the coordinate
    vectors and the first vector of a greedy-reduced basis, then swept
    exhaustively.
    """
    Q = np.asarray(Q, dtype=float)
    m = Q.shape[0]
    if m > 4:
        raise ValueError("exhaustive lattice search is limited to m <= 4")
    lam_min = float(np.linalg.eigvalsh(Q)[0])
    if lam_min <= 0.0:
        raise ValueError("form must be positive definite")

    best = np.inf
    witness = np.zeros(m, dtype=np.int64)
    for cand in list(np.eye(m, dtype=np.int64)) + [greedy_reduce(Q)[:, 0]]:
        val = float(cand @ Q @ cand)
        if val < best:
            best, witness = val, cand.astype(np.int64)

    radius = int(np.floor(np.sqrt(best / lam_min) + 1e-12))
    examined = 0
    if radius >= 1:
        for pts in box_chunks(radius, m):
            vals = np.einsum("ni,ij,nj->n", pts, Q, pts)
            vals[np.all(pts == 0, axis=1)] = np.inf
            examined += pts.shape[0]
            idx = int(np.argmin(vals))
            if vals[idx] < best:
                best, witness = float(vals[idx]), pts[idx].copy()
    return ShortestVector(value=best, witness=witness, radius=radius, examined=examined)
