"""Irreducible representations and certified spectral-gap computations.

The smallest positive Laplace eigenvalue of a left-invariant metric is the
minimum, over nontrivial irreducibles, of the smallest eigenvalue of the
assembled operator -sum_ij (A A^t)_ij pi(X_i) pi(X_j).  Enumerating irreps in
ascending order of their bi-invariant eigenvalue lambda^pi gives a sound
stopping rule: every unexamined irrep satisfies
lambda_min >= sigma_m^2 * lambda^pi, so once sigma_m^2 * lambda^pi exceeds the
running minimum the result is certified.

Irrep catalog:

* su2: spins j = 1/2, 1, 3/2, ... with lambda^pi = 4 j (j+1), dim 2j+1,
  generators -2i J_a built from ladder matrices.
* so3: integer spins only.
* torus: characters n in Z^m with lambda^pi = 4 pi^2 |n|^2, dim 1.
* products: outer Kronecker pairs, lambda^pi additive, merged best-first.
"""

from __future__ import annotations

import heapq
import math
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from . import _lattice
from .lie_core import LieGroupCatalogEntry, Subalgebra, is_bracket_generating
from .metric_space import MetricSpec

__all__ = [
    "Irrep",
    "SpectralResult",
    "spin_irrep",
    "character_irrep",
    "enumerate_irreps",
    "assemble_minus_CA",
    "lambda_min_hermitian",
    "lambda1_certified",
    "torus_lambda1",
    "invariant_dim",
    "lambda1_restricted",
    "sublaplacian_lambda1",
]

FOUR_PI_SQ = 4.0 * math.pi ** 2

DEFAULT_WINDOW_CAP = 1.0e6


@dataclass(frozen=True)
class Irrep:
    """One irreducible unitary representation, differentiated at the identity.

    ``generators[j]`` is the anti-hermitian matrix representing the j-th basis
    vector; ``casimir`` is the scalar by which minus the bi-invariant Casimir
    acts.
    """

    label: str
    dim: int
    generators: np.ndarray  # (m, d, d) complex
    casimir: float

    def __post_init__(self):
        G = np.asarray(self.generators, dtype=complex)
        if G.ndim != 3 or G.shape[1] != self.dim or G.shape[2] != self.dim:
            raise ValueError("generator stack has wrong shape")
        G = G.copy()
        G.flags.writeable = False
        object.__setattr__(self, "generators", G)
        skew = np.max(np.abs(G + np.conj(np.swapaxes(G, 1, 2))))
        if skew > 1e-12 * max(1.0, float(np.max(np.abs(G)))):
            raise ValueError(f"{self.label}: generators are not anti-hermitian")
        cas = -np.einsum("iab,ibc->ac", G, G)
        if np.max(np.abs(cas - self.casimir * np.eye(self.dim))) > 1e-10 * max(1.0, self.casimir):
            raise ValueError(f"{self.label}: Casimir does not act by the stated scalar")

    def check_commutators(self, entry: LieGroupCatalogEntry, tol: float = 1e-11) -> float:
        """Max residual of [pi(X_i), pi(X_j)] - sum_k c_ij^k pi(X_k)."""
        G = self.generators
        comm = np.einsum("iab,jbc->ijac", G, G)
        comm = comm - np.swapaxes(comm, 0, 1)
        target = np.einsum("ijk,kab->ijab", entry.structure_constants, G)
        res = float(np.max(np.abs(comm - target)))
        if res > tol * max(1.0, float(np.max(np.abs(G))) ** 2):
            raise ValueError(f"{self.label}: commutators do not match the bracket")
        return res


@dataclass(frozen=True)
class SpectralResult:
    """Output of a spectral-gap computation.

    For certified results ``window`` is the certification boundary: the
    smallest Casimir eigenvalue not evaluated, which by the stopping rule
    satisfies window * sigma_m^2 >= lambda1.  Window-limited (uncertified)
    results report the largest value actually examined.
    """

    lambda1: float
    witness: str
    certified: bool
    window: float
    evaluations: int
    reason: str = ""


# ---------------------------------------------------------------------------
# Irrep constructors
# ---------------------------------------------------------------------------

_SPIN_CACHE: dict[Fraction, np.ndarray] = {}
_SPIN_LOCK = threading.Lock()


def _spin_generators(j: Fraction) -> np.ndarray:
    with _SPIN_LOCK:
        cached = _SPIN_CACHE.get(j)
    if cached is not None:
        return cached
    d = int(2 * j) + 1
    mvals = [j - i for i in range(d)]
    jz = np.diag([float(m) for m in mvals]).astype(complex)
    jp = np.zeros((d, d), dtype=complex)
    for i in range(1, d):
        m = mvals[i]
        jp[i - 1, i] = math.sqrt(float(j * (j + 1) - m * (m + 1)))
    jm = jp.conj().T
    jx = 0.5 * (jp + jm)
    jy = (jp - jm) / 2j
    G = np.stack([-2j * jx, -2j * jy, -2j * jz])
    G.flags.writeable = False
    with _SPIN_LOCK:
        _SPIN_CACHE[j] = G
    return G


def _format_spin(j: Fraction) -> str:
    return f"spin({j})"


def spin_irrep(j) -> Irrep:
    """Spin-j irrep of su2/so3 under the fixed normalisation; Casimir 4j(j+1)."""
    j = Fraction(j)
    if j < 0 or (2 * j).denominator != 1:
        raise ValueError("spin must be a nonnegative half-integer")
    return Irrep(label=_format_spin(j), dim=int(2 * j) + 1,
                 generators=_spin_generators(j), casimir=float(4 * j * (j + 1)))


def character_irrep(n: Sequence[int]) -> Irrep:
    """Torus character with frequency vector n; Casimir 4 pi^2 |n|^2."""
    n = np.asarray(n, dtype=np.int64)
    gens = (2j * math.pi * n.astype(complex)).reshape(-1, 1, 1)
    label = "char(" + ",".join(str(int(v)) for v in n) + ")"
    return Irrep(label=label, dim=1, generators=gens,
                 casimir=FOUR_PI_SQ * float(n @ n))


def _pair_irrep(a: Irrep, b: Irrep) -> Irrep:
    ia = np.eye(a.dim, dtype=complex)
    ib = np.eye(b.dim, dtype=complex)
    gens = np.concatenate([
        np.stack([np.kron(g, ib) for g in a.generators]),
        np.stack([np.kron(ia, g) for g in b.generators]),
    ])
    return Irrep(label=f"pair({a.label},{b.label})", dim=a.dim * b.dim,
                 generators=gens, casimir=a.casimir + b.casimir)


# ---------------------------------------------------------------------------
# Ascending enumeration
# ---------------------------------------------------------------------------

def _spin_stream(step: Fraction, include_trivial: bool) -> Iterator[Irrep]:
    j = Fraction(0) if include_trivial else step
    while True:
        yield spin_irrep(j)
        j += step


def _character_stream(m: int, include_trivial: bool) -> Iterator[Irrep]:
    if include_trivial:
        yield character_irrep(np.zeros(m, dtype=np.int64))
    radius = 4
    emitted = 0
    while True:
        pts = _lattice.enumerate_box(radius, m)
        norms = np.einsum("ni,ni->n", pts, pts)
        keep = (norms > 0) & (norms <= radius * radius)
        pts, norms = pts[keep], norms[keep]
        order = np.lexsort(tuple(pts[:, c] for c in reversed(range(m))) + (norms,))
        count = 0
        for idx in order:
            count += 1
            if count <= emitted:
                continue
            yield character_irrep(pts[idx])
        emitted = int(pts.shape[0])
        radius *= 2


def _merge_streams(s1: Iterator[Irrep], s2: Iterator[Irrep]) -> Iterator[Irrep]:
    """Best-first merge of two ascending irrep streams into ascending pairs."""
    l1: list[Irrep] = [next(s1)]
    l2: list[Irrep] = [next(s2)]

    def ensure(lst, src, k):
        while len(lst) <= k:
            lst.append(next(src))

    heap = [(l1[0].casimir + l2[0].casimir, 0, 0)]
    seen = {(0, 0)}
    while heap:
        _, i, j = heapq.heappop(heap)
        yield _pair_irrep(l1[i], l2[j])
        for ni, nj in ((i + 1, j), (i, j + 1)):
            if (ni, nj) in seen:
                continue
            seen.add((ni, nj))
            ensure(l1, s1, ni)
            ensure(l2, s2, nj)
            heapq.heappush(heap, (l1[ni].casimir + l2[nj].casimir, ni, nj))


def _irrep_stream(entry: LieGroupCatalogEntry, include_trivial: bool = False) -> Iterator[Irrep]:
    if entry.kind == "su2":
        return _spin_stream(Fraction(1, 2), include_trivial)
    if entry.kind == "so3":
        return _spin_stream(Fraction(1), include_trivial)
    if entry.kind == "torus":
        return _character_stream(entry.dim, include_trivial)
    if entry.kind == "product":
        stream = _irrep_stream(entry.factors[0], include_trivial=True)
        for f in entry.factors[1:]:
            stream = _merge_streams(stream, _irrep_stream(f, include_trivial=True))
        if include_trivial:
            return stream

        def skip_trivial(src):
            first = next(src)
            if first.casimir > 0:  # pragma: no cover - trivial always leads
                yield first
            yield from src

        return skip_trivial(stream)
    raise ValueError(f"no irrep catalog for kind {entry.kind!r}")


def enumerate_irreps(entry: LieGroupCatalogEntry, casimir_cutoff: float) -> list[Irrep]:
    """All nontrivial irreps with Casimir eigenvalue <= cutoff, ascending."""
    if casimir_cutoff <= 0:
        raise ValueError("cutoff must be positive")
    out = []
    for irrep in _irrep_stream(entry):
        if irrep.casimir > casimir_cutoff:
            break
        out.append(irrep)
    return out


# ---------------------------------------------------------------------------
# Operator assembly and eigenvalues
# ---------------------------------------------------------------------------

def assemble_minus_CA(irrep: Irrep, spec: MetricSpec) -> np.ndarray:
    """Hermitian PSD operator -sum_ij (A A^t)_ij pi(X_i) pi(X_j)."""
    G = irrep.generators
    if G.shape[0] != spec.m:
        raise ValueError("irrep and metric have different dimensions")
    W = np.tensordot(spec.AAt, G, axes=(1, 0))
    M = -np.einsum("iab,ibc->ac", G, W)
    herm = np.max(np.abs(M - M.conj().T))
    if herm > 1e-11 * max(1.0, float(np.max(np.abs(M)))):
        raise AssertionError("assembled operator is not hermitian")
    return 0.5 * (M + M.conj().T)


def lambda_min_hermitian(M: np.ndarray) -> float:
    """Smallest eigenvalue of a hermitian matrix.

    Rejects inputs whose anti-hermitian part exceeds 1e-10 relative to the
    entry scale.
    """
    M = np.asarray(M)
    scale = max(1.0, float(np.max(np.abs(M))) if M.size else 1.0)
    if np.max(np.abs(M - M.conj().T)) > 1e-10 * scale:
        raise ValueError("matrix is not hermitian")
    H = 0.5 * (M + M.conj().T)
    return float(np.linalg.eigvalsh(H)[0])


# ---------------------------------------------------------------------------
# Certified spectral gap
# ---------------------------------------------------------------------------

def lambda1_certified(entry: LieGroupCatalogEntry, spec: MetricSpec,
                      window_cap: float = DEFAULT_WINDOW_CAP) -> SpectralResult:
    """Smallest positive Laplace eigenvalue of the metric, with certification.

    Walks irreps in ascending Casimir order keeping the running minimum of
    lambda_min(-C_A); stops certified once the next Casimir value nu satisfies
    sigma_m^2 * nu > running minimum.  If that would require nu beyond
    ``window_cap`` the result is returned uncertified.
    """
    if spec.m != entry.dim:
        raise ValueError("metric and group have different dimensions")
    if entry.kind == "torus":
        return _torus_lambda1_certified(spec, window_cap)
    sm2 = spec.sigma[-1] ** 2
    lam_hat = math.inf
    witness = ""
    evals = 0
    examined = 0.0
    for irrep in _irrep_stream(entry):
        if sm2 * irrep.casimir > lam_hat:
            return SpectralResult(lambda1=lam_hat, witness=witness, certified=True,
                                  window=irrep.casimir, evaluations=evals)
        if irrep.casimir > window_cap:
            return SpectralResult(
                lambda1=lam_hat, witness=witness, certified=False,
                window=examined, evaluations=evals,
                reason=f"certification needs Casimir window beyond cap {window_cap:g}")
        lm = lambda_min_hermitian(assemble_minus_CA(irrep, spec))
        evals += 1
        examined = irrep.casimir
        if lm < lam_hat:
            lam_hat = lm
            witness = irrep.label
    raise AssertionError("irrep stream is infinite")  # pragma: no cover


def _torus_lambda1_certified(spec: MetricSpec, window_cap: float) -> SpectralResult:
    """Character enumeration in ascending shells with the same stop rule.

    Seeds the running minimum with the coordinate characters, which bounds the
    exhaustive box; shells up to the certification boundary are then complete.
    """
    Q = spec.AAt
    m = spec.m
    if m > 4:
        raise ValueError("torus spectral enumeration is limited to m <= 4")
    sm2 = spec.sigma[-1] ** 2
    diag = np.diag(Q)
    j0 = int(np.argmin(diag))
    lam_hat = FOUR_PI_SQ * float(diag[j0])
    witness_n = np.eye(m, dtype=np.int64)[j0]
    evals = m

    radius = int(math.floor(math.sqrt(lam_hat / (FOUR_PI_SQ * sm2)) + 1e-12))
    cap_radius = int(math.floor(math.sqrt(window_cap / FOUR_PI_SQ) + 1e-12))
    certified = True
    reason = ""
    if radius > cap_radius:
        radius = cap_radius
        certified = False
        reason = f"certification needs Casimir window beyond cap {window_cap:g}"
    for pts in _lattice.box_chunks(radius, m):
        vals = FOUR_PI_SQ * np.einsum("ni,ij,nj->n", pts, Q.astype(float), pts)
        vals[np.all(pts == 0, axis=1)] = np.inf
        evals += pts.shape[0]
        idx = int(np.argmin(vals))
        if vals[idx] < lam_hat:
            lam_hat = float(vals[idx])
            witness_n = pts[idx].copy()
    label = "char(" + ",".join(str(int(v)) for v in witness_n) + ")"
    if certified:
        boundary = FOUR_PI_SQ * (math.floor(lam_hat / (FOUR_PI_SQ * sm2) + 1e-12) + 1)
        return SpectralResult(lambda1=lam_hat, witness=label, certified=True,
                              window=boundary, evaluations=evals)
    return SpectralResult(lambda1=lam_hat, witness=label, certified=False,
                          window=FOUR_PI_SQ * radius * radius, evaluations=evals,
                          reason=reason)


def torus_lambda1(spec: MetricSpec) -> SpectralResult:
    """Exact torus spectral gap: 4 pi^2 min_{n != 0} n^t (A A^t) n.

    Exhaustive integer search over the certified box, seeded by a greedy
    reduced basis vector.
    """
    if spec.m > 4:
        raise ValueError("torus enumeration is limited to m <= 4")
    sv = _lattice.min_quadratic_form(spec.AAt)
    label = "char(" + ",".join(str(int(v)) for v in sv.witness) + ")"
    return SpectralResult(
        lambda1=FOUR_PI_SQ * sv.value, witness=label, certified=True,
        window=FOUR_PI_SQ * (sv.radius + 1) ** 2, evaluations=sv.examined + spec.m)


# ---------------------------------------------------------------------------
# Invariant vectors, restricted spectra, sub-Laplacians
# ---------------------------------------------------------------------------

def invariant_dim(irrep: Irrep, H) -> int:
    """Dimension of the joint null space of pi(X) over X in the subspace H.

    H may be a Subalgebra or a nonempty array of m-vectors (rows).
    """
    rows = H.basis if isinstance(H, Subalgebra) else np.asarray(H, dtype=float)
    if rows.ndim != 2 or rows.shape[0] == 0:
        raise ValueError("H must contain at least one vector")
    if not np.any(np.abs(rows) > 0):
        raise ValueError("H must be nonzero")
    stacked = np.tensordot(rows, irrep.generators, axes=(1, 0))
    stacked = stacked.reshape(rows.shape[0] * irrep.dim, irrep.dim)
    s = np.linalg.svd(stacked, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return irrep.dim
    rank = int(np.sum(s > 1e-9 * s[0]))
    return irrep.dim - rank


def lambda1_restricted(entry: LieGroupCatalogEntry, P: np.ndarray, k: int,
                       window_cap: float = DEFAULT_WINDOW_CAP) -> float:
    """Spectral gap of the bi-invariant Laplacian on functions annihilated by
    the first k-1 rotated basis directions.

    Returns math.inf when the prefix is bracket generating (only constants
    survive).  k = 1 imposes no constraint, so the plain bi-invariant gap
    comes back.
    """
    P = np.asarray(P, dtype=float)
    m = entry.dim
    if not 1 <= k <= m:
        raise ValueError("need 1 <= k <= m")
    if P.shape != (m, m) or np.max(np.abs(P.T @ P - np.eye(m))) > 1e-10:
        raise ValueError("P must be orthogonal")
    if k == 1:
        return next(iter(_irrep_stream(entry))).casimir
    prefix = P[:, :k - 1].T
    if is_bracket_generating(entry, prefix):
        return math.inf
    for irrep in _irrep_stream(entry):
        if irrep.casimir > window_cap:
            raise RuntimeError(
                f"no invariant vector found below Casimir cap {window_cap:g}; "
                "the prefix may generate a dense (non-closed) subgroup")
        if invariant_dim(irrep, prefix) > 0:
            return irrep.casimir
    raise AssertionError("irrep stream is infinite")  # pragma: no cover


def sublaplacian_lambda1(entry: LieGroupCatalogEntry, H_basis: np.ndarray,
                         h: np.ndarray, window: float) -> SpectralResult:
    """Window-limited spectral gap of the sub-Laplacian of (H, h).

    H_basis holds the spanning vectors as rows; h is the Gram matrix of the
    inner product in that basis.  There is no computable certification rule
    for sub-Laplacians, so results are always flagged uncertified.  A
    non-generating H admits invariant functions and the gap is exactly 0.
    """
    if window <= 0:
        raise ValueError("window must be positive")
    rows = np.asarray(H_basis, dtype=float)
    if rows.ndim != 2 or rows.shape[1] != entry.dim:
        raise ValueError("H_basis must be a list of m-vectors")
    h = np.asarray(h, dtype=float)
    if h.shape != (rows.shape[0], rows.shape[0]):
        raise ValueError("h must be a Gram matrix on H_basis")
    if not is_bracket_generating(entry, rows):
        return SpectralResult(lambda1=0.0, witness="", certified=False,
                              window=0.0, evaluations=0,
                              reason="H-invariant functions exist")
    L = np.linalg.cholesky(h)
    ortho = np.linalg.solve(L, rows)  # h-orthonormal basis of H, as rows
    best = math.inf
    witness = ""
    evals = 0
    for irrep in _irrep_stream(entry):
        if irrep.casimir > window:
            break
        B = np.tensordot(ortho, irrep.generators, axes=(1, 0))
        M = -np.einsum("iab,ibc->ac", B, B)
        lm = lambda_min_hermitian(0.5 * (M + M.conj().T))
        evals += 1
        if lm < best:
            best = lm
            witness = irrep.label
    return SpectralResult(lambda1=best, witness=witness, certified=False,
                          window=window, evaluations=evals,
                          reason="window-limited; sub-Laplacians have no certification rule")
