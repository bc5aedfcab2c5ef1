"""Left-invariant metrics parameterised by invertible matrices.

The metric attached to an invertible A has Gram matrix (A A^t)^{-1} in the
reference basis; its scale parameters sigma_k are the descending square roots
of the eigenvalues of A A^t.  Right-multiplying A by an orthogonal matrix
leaves the metric unchanged, so every metric has a canonical presentation
A = P_sort * diag(sigma).
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .lie_core import LieGroupCatalogEntry, ell_index

__all__ = [
    "MetricSpec",
    "SingularMatrixError",
    "MatrixFormatError",
    "jacobi_eigh",
    "metric_from_matrix",
    "canonical_form",
    "loewner_leq",
    "sample_metric",
    "random_rotation",
    "SigmaRatioClass",
    "RotationBlockClass",
    "DiagonalClass",
    "class_member",
    "class_build",
    "read_matrix",
    "write_matrix",
    "parse_matrix_text",
]


class SingularMatrixError(ValueError):
    """A is numerically singular relative to its entry scale."""


class MatrixFormatError(ValueError):
    """Matrix file/inline text is malformed or contains NaN/Inf."""


def jacobi_eigh(S: np.ndarray, rel_tol: float = 1e-13,
                max_sweeps: int = 60) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi eigendecomposition of a real symmetric matrix.

    Sweeps all (p, q) pairs, rotating away off-diagonal mass until its
    Frobenius norm drops below ``rel_tol`` times the norm of the input.
    Returns eigenvalues sorted descending (stable, so ties keep the rotation
    output order) and the matching orthogonal eigenvector columns.
    """
    S = np.asarray(S, dtype=float)
    n = S.shape[0]
    if S.shape != (n, n) or np.max(np.abs(S - S.T)) > 1e-10 * max(1.0, np.max(np.abs(S))):
        raise ValueError("jacobi_eigh expects a symmetric matrix")
    A = 0.5 * (S + S.T)
    V = np.eye(n)
    norm0 = np.linalg.norm(A)
    if norm0 == 0.0:
        return np.zeros(n), V
    thresh = rel_tol * norm0
    for _ in range(max_sweeps):
        # Off-diagonal mass summed directly; a subtraction of diagonal squares
        # would cancel below machine precision and stall convergence.
        off = math.sqrt(np.sum((A - np.diag(np.diag(A))) ** 2))
        if off <= thresh:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= thresh / max(1, n):
                    continue
                tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + math.hypot(1.0, tau))
                else:
                    t = -1.0 / (-tau + math.hypot(1.0, tau))
                c = 1.0 / math.hypot(1.0, t)
                s = t * c
                rot_p = c * A[:, p] - s * A[:, q]
                rot_q = s * A[:, p] + c * A[:, q]
                A[:, p], A[:, q] = rot_p, rot_q
                rot_p = c * A[p, :] - s * A[q, :]
                rot_q = s * A[p, :] + c * A[q, :]
                A[p, :], A[q, :] = rot_p, rot_q
                A[p, q] = A[q, p] = 0.0
                rot_p = c * V[:, p] - s * V[:, q]
                rot_q = s * V[:, p] + c * V[:, q]
                V[:, p], V[:, q] = rot_p, rot_q
    vals = np.diag(A).copy()
    order = np.argsort(-vals, kind="stable")
    return vals[order], V[:, order]


@dataclass(frozen=True)
class MetricSpec:
    """An invertible matrix together with the cached metric data derived from it.

    ``sigma`` is descending, ``AAt = P_sort diag(sigma^2) P_sort^t`` and
    ``gram = (AAt)^{-1}`` is the Gram matrix of the metric in the reference
    basis.
    """

    A: np.ndarray
    AAt: np.ndarray
    sigma: np.ndarray
    P_sort: np.ndarray
    gram: np.ndarray

    @property
    def m(self) -> int:
        return self.A.shape[0]

    def __post_init__(self):
        for name in ("A", "AAt", "sigma", "P_sort", "gram"):
            arr = np.asarray(getattr(self, name), dtype=float).copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)


def metric_from_matrix(A: np.ndarray) -> MetricSpec:
    """Build a MetricSpec from an invertible matrix.

    Raises SingularMatrixError when |det A| <= 1e-10 * (max |entry|)^m.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("A must be square")
    if not np.all(np.isfinite(A)):
        raise MatrixFormatError("matrix entries must be finite")
    m = A.shape[0]
    scale = np.max(np.abs(A))
    if scale == 0.0 or abs(np.linalg.det(A)) <= 1e-10 * scale ** m:
        raise SingularMatrixError("matrix is singular or too ill-conditioned")
    AAt = A @ A.T
    vals, vecs = jacobi_eigh(AAt)
    if vals[-1] <= 0.0:
        raise SingularMatrixError("A A^t is not positive definite")
    sigma = np.sqrt(vals)
    gram = vecs @ np.diag(1.0 / vals) @ vecs.T
    gram = 0.5 * (gram + gram.T)
    spec = MetricSpec(A=A, AAt=AAt, sigma=sigma, P_sort=vecs, gram=gram)
    _check_spec(spec)
    return spec


def _check_spec(spec: MetricSpec) -> None:
    recon = spec.P_sort @ np.diag(spec.sigma ** 2) @ spec.P_sort.T
    nrm = np.linalg.norm(spec.AAt)
    if np.linalg.norm(spec.AAt - recon) > 1e-10 * nrm:
        raise AssertionError("eigendecomposition reconstruction failed")
    # The inverse residual of a double-precision inverse floors out at
    # roughly eps * cond, so the fixed gate only binds at desk-scale
    # conditioning.
    cond = (spec.sigma[0] / spec.sigma[-1]) ** 2
    tol = max(1e-9, 1e-13 * cond)
    if np.max(np.abs(spec.gram @ spec.AAt - np.eye(spec.m))) > tol:
        raise AssertionError("gram is not the inverse of A A^t")
    if np.any(np.diff(spec.sigma) > 1e-12 * spec.sigma[0]):
        raise AssertionError("sigma is not descending")


def canonical_form(spec: MetricSpec) -> tuple[np.ndarray, np.ndarray]:
    """Return (P_sort, D) with the same metric as spec, A = P_sort @ D."""
    return spec.P_sort.copy(), np.diag(spec.sigma)


def loewner_leq(spec_a: MetricSpec, spec_b: MetricSpec) -> bool:
    """True iff B B^t - A A^t is positive semidefinite (up to 1e-10 relative)."""
    if spec_a.m != spec_b.m:
        raise ValueError("metrics live on different dimensions")
    diff = spec_b.AAt - spec_a.AAt
    vals, _ = jacobi_eigh(diff)
    return bool(vals[-1] >= -1e-10 * spec_b.sigma[0] ** 2)


def random_rotation(m: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-ish rotation from the sign-fixed QR of a Gaussian matrix, det +1."""
    g = rng.standard_normal((m, m))
    q, r = np.linalg.qr(g)
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, -1] = -q[:, -1]
    return q


def sample_metric(entry: LieGroupCatalogEntry, lo: float, hi: float,
                  seed: int, rotate: bool = True) -> MetricSpec:
    """Seeded random metric: sigma log-uniform in [lo, hi], A = P * diag(sigma)."""
    if not (0.0 < lo <= hi):
        raise ValueError("need 0 < lo <= hi")
    rng = np.random.default_rng(seed)
    m = entry.dim
    sigma = np.exp(rng.uniform(math.log(lo), math.log(hi), size=m))
    sigma = np.sort(sigma)[::-1]
    P = random_rotation(m, rng) if rotate else np.eye(m)
    return metric_from_matrix(P @ np.diag(sigma))


# ---------------------------------------------------------------------------
# Restricted metric classes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SigmaRatioClass:
    """Metrics with sigma_2 <= c0 * sigma_{k_max}."""

    c0: float

    def __post_init__(self):
        if self.c0 < 1.0:
            raise ValueError("c0 must be >= 1")


@dataclass(frozen=True)
class RotationBlockClass:
    """Metrics A = P Q D with Q block-diagonal of shape (k-1, 1, m-k).

    The split index k is the bracket-generating index of P and must be
    computed against a group entry before building or testing members.
    """

    P: np.ndarray

    def __post_init__(self):
        P = np.asarray(self.P, dtype=float).copy()
        P.flags.writeable = False
        object.__setattr__(self, "P", P)


@dataclass(frozen=True)
class DiagonalClass:
    """Metrics diagonal in the rotated basis: A = P D, any positive diagonal D."""

    P: np.ndarray

    def __post_init__(self):
        P = np.asarray(self.P, dtype=float).copy()
        P.flags.writeable = False
        object.__setattr__(self, "P", P)


MetricClassSpec = Union[SigmaRatioClass, RotationBlockClass, DiagonalClass]


def class_member(entry: LieGroupCatalogEntry, klass: MetricClassSpec,
                 spec: MetricSpec, tol: float = 1e-9) -> bool:
    if isinstance(klass, SigmaRatioClass):
        return bool(spec.sigma[1] <= klass.c0 * spec.sigma[entry.k_max - 1] * (1 + tol))
    if isinstance(klass, DiagonalClass):
        M = klass.P.T @ spec.AAt @ klass.P
        off = M - np.diag(np.diag(M))
        return bool(np.max(np.abs(off)) <= tol * spec.sigma[0] ** 2)
    if isinstance(klass, RotationBlockClass):
        k = ell_index(entry, klass.P)
        M = klass.P.T @ spec.AAt @ klass.P
        scale = spec.sigma[0] ** 2
        mask = np.zeros_like(M, dtype=bool)
        mask[:k - 1, :k - 1] = True
        mask[k - 1, k - 1] = True
        mask[k:, k:] = True
        if np.max(np.abs(np.where(mask, 0.0, M))) > tol * scale:
            return False
        top = M[:k - 1, :k - 1]
        mid = M[k - 1, k - 1]
        bot = M[k:, k:]
        lo_top = jacobi_eigh(top)[0][-1] if top.size else math.inf
        hi_bot = jacobi_eigh(bot)[0][0] if bot.size else 0.0
        return bool(lo_top >= mid - tol * scale and mid >= hi_bot - tol * scale)
    raise TypeError(f"unknown metric class {klass!r}")


def class_build(entry: LieGroupCatalogEntry, klass: MetricClassSpec,
                sigma: Sequence[float], seed: int = 0) -> MetricSpec:
    """Build a member of the class with the given diagonal values.

    For SigmaRatioClass the sigmas are sorted and then clipped so that
    sigma_2 <= c0 * sigma_{k_max}; for RotationBlockClass they must already be
    descending and the two orthogonal blocks are drawn from the seed.
    """
    sigma = np.asarray(sigma, dtype=float)
    m = entry.dim
    if sigma.shape != (m,) or np.any(sigma <= 0):
        raise ValueError("sigma must be m positive values")
    rng = np.random.default_rng(seed)
    if isinstance(klass, SigmaRatioClass):
        s = np.sort(sigma)[::-1]
        cap = klass.c0 * s[entry.k_max - 1]
        s[1:entry.k_max - 1] = np.minimum(s[1:entry.k_max - 1], cap)
        if m > 1:
            s[1] = min(s[1], cap)
        P = random_rotation(m, rng)
        return metric_from_matrix(P @ np.diag(s))
    if isinstance(klass, DiagonalClass):
        return metric_from_matrix(klass.P @ np.diag(sigma))
    if isinstance(klass, RotationBlockClass):
        if np.any(np.diff(sigma) > 1e-12 * sigma[0]):
            raise ValueError("RotationBlockClass needs descending sigma")
        k = ell_index(entry, klass.P)
        Q = np.eye(m)
        if k - 1 >= 1:
            Q[:k - 1, :k - 1] = random_rotation(k - 1, rng) if k - 1 > 1 else [[1.0]]
        if m - k >= 1:
            Q[k:, k:] = random_rotation(m - k, rng) if m - k > 1 else [[1.0]]
        return metric_from_matrix(klass.P @ Q @ np.diag(sigma))
    raise TypeError(f"unknown metric class {klass!r}")


# ---------------------------------------------------------------------------
# Plain-text matrix files: "m" on the first line, then m rows of m floats.
# ---------------------------------------------------------------------------

def parse_matrix_text(text: str) -> np.ndarray:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise MatrixFormatError("empty matrix file")
    try:
        m = int(lines[0])
    except ValueError as e:
        raise MatrixFormatError("first line must be the dimension") from e
    if m < 1 or len(lines) != m + 1:
        raise MatrixFormatError(f"expected {m} rows after the header")
    rows = []
    for ln in lines[1:]:
        try:
            row = [float(tok) for tok in ln.split()]
        except ValueError as e:
            raise MatrixFormatError(f"bad row: {ln!r}") from e
        if len(row) != m:
            raise MatrixFormatError(f"expected {m} entries per row")
        rows.append(row)
    A = np.array(rows, dtype=float)
    if not np.all(np.isfinite(A)):
        raise MatrixFormatError("NaN/Inf entries are not allowed")
    return A


def read_matrix(path: str) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as f:
        return parse_matrix_text(f.read())


def write_matrix(path_or_file: Union[str, io.TextIOBase], A: np.ndarray) -> None:
    A = np.asarray(A, dtype=float)
    m = A.shape[0]
    own = isinstance(path_or_file, str)
    f = open(path_or_file, "w", encoding="utf-8") if own else path_or_file
    try:
        f.write(f"{m}\n")
        for row in A:
            f.write(" ".join(f"{x:.17g}" for x in row) + "\n")
    finally:
        if own:
            f.close()
