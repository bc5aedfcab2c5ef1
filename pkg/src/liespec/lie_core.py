"""Catalog of supported compact groups: brackets, subalgebras, group arithmetic.

Every group is described by a `LieGroupCatalogEntry` holding the structure
constants of its Lie algebra in a fixed orthonormal basis.  The catalog covers
flat tori T^m, the unit quaternions SU(2), the rotation group SO(3) (unit
quaternions modulo sign), and finite products of these.

Conventions baked into the catalog:

* su(2) basis: [X1,X2] = 2*X3, [X2,X3] = 2*X1, [X3,X1] = 2*X2, i.e. the
  basis vectors act like the imaginary quaternion units i, j, k under the
  commutator.  The reference inner product makes {X1,X2,X3} orthonormal.
* Torus: exp(t*X_j) is the closed loop of period 1 in the j-th circle factor,
  so group elements are coordinate vectors in [0,1)^m.
* SO(3) shares the su(2) structure constants; elements are unit quaternions
  with q and -q identified.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

__all__ = [
    "LieGroupCatalogEntry",
    "GroupElement",
    "Subalgebra",
    "torus_entry",
    "su2_entry",
    "so3_entry",
    "product_entry",
    "entry_from_key",
    "su_n_k_max",
    "bracket",
    "generated_subalgebra",
    "is_bracket_generating",
    "ell_index",
    "group_exp",
    "group_log",
    "group_log_with_flag",
    "group_mul",
    "group_inv",
    "identity_element",
    "quat_mul",
    "quat_conj",
]

# Rank decisions in subalgebra closures use this relative singular-value cut.
RANK_TOL = 1e-9

_STRUCTURE_TOL = 1e-12


def su_n_k_max(n: int) -> int:
    """Largest-proper-subgroup index for SU(n): n^2 - 2n + 2."""
    return n * n - 2 * n + 2


@dataclass(frozen=True)
class LieGroupCatalogEntry:
    """One supported group: structure constants plus group-level metadata.

    ``structure_constants[i, j, k]`` is the coefficient of the k-th basis
    vector in [X_i, X_j].  ``k_max`` is 1 plus the largest dimension of a
    proper closed subgroup.
    """

    kind: str  # 'torus' | 'su2' | 'so3' | 'product'
    dim: int
    structure_constants: np.ndarray
    k_max: int
    semisimple: bool
    factors: tuple = ()

    def __post_init__(self):
        c = np.asarray(self.structure_constants, dtype=float)
        if c.shape != (self.dim, self.dim, self.dim):
            raise ValueError("structure constant tensor has wrong shape")
        c = c.copy()
        c.flags.writeable = False
        object.__setattr__(self, "structure_constants", c)
        _validate_structure(self)

    @property
    def name(self) -> str:
        if self.kind == "torus":
            return f"t{self.dim}"
        if self.kind == "product":
            return "x".join(f.name for f in self.factors)
        return self.kind

    def factor_dims(self) -> list[int]:
        if self.kind == "product":
            return [f.dim for f in self.factors]
        return [self.dim]


def _validate_structure(entry: LieGroupCatalogEntry) -> None:
    c = entry.structure_constants
    m = entry.dim
    if not np.all(np.isfinite(c)):
        raise ValueError("structure constants must be finite")
    if np.max(np.abs(c + np.swapaxes(c, 0, 1))) > _STRUCTURE_TOL:
        raise ValueError("structure constants are not antisymmetric")
    # Jacobi identity: sum over cyclic permutations of c_{ij}^l c_{lk}^r.
    t = np.einsum("ijl,lkr->ijkr", c, c)
    jac = t + np.einsum("jkl,lir->ijkr", c, c) + np.einsum("kil,ljr->ijkr", c, c)
    if np.max(np.abs(jac)) > _STRUCTURE_TOL:
        raise ValueError("structure constants violate the Jacobi identity")
    # The reference inner product is Ad-invariant iff ad(X_i) is skew,
    # i.e. c_{ij}^k + c_{ik}^j = 0.
    if np.max(np.abs(c + np.swapaxes(c, 1, 2))) > _STRUCTURE_TOL:
        raise ValueError("reference inner product is not Ad-invariant")
    # Catalog consistency for the supported kinds.
    expected = {"torus": m, "su2": 2, "so3": 2}.get(entry.kind)
    if expected is not None and entry.k_max != expected:
        raise ValueError(f"k_max={entry.k_max} inconsistent for {entry.kind}")
    if entry.kind == "product":
        kinds = tuple(f.kind for f in entry.factors)
        if kinds == ("su2", "su2") and entry.k_max != 5:
            raise ValueError("k_max(su2 x su2) must be 5")


def _su2_constants() -> np.ndarray:
    c = np.zeros((3, 3, 3))
    for (i, j, k) in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        c[i, j, k] = 2.0
        c[j, i, k] = -2.0
    return c


def torus_entry(m: int) -> LieGroupCatalogEntry:
    if m < 1:
        raise ValueError("torus dimension must be >= 1")
    return LieGroupCatalogEntry("torus", m, np.zeros((m, m, m)), k_max=m, semisimple=False)


def su2_entry() -> LieGroupCatalogEntry:
    return LieGroupCatalogEntry("su2", 3, _su2_constants(), k_max=2, semisimple=True)


def so3_entry() -> LieGroupCatalogEntry:
    return LieGroupCatalogEntry("so3", 3, _su2_constants(), k_max=2, semisimple=True)


def product_entry(factors: Sequence[LieGroupCatalogEntry],
                  k_max: Optional[int] = None) -> LieGroupCatalogEntry:
    """Direct product of catalog entries.

    ``k_max`` is only known in closed form for a few combinations: products of
    tori (where it equals the total dimension, and the product is returned as
    a flat torus outright) and su2 x su2 (k_max = 5).  Anything else requires
    an explicit value; products mixing torus and semisimple factors are not
    part of the catalog.
    """
    factors = tuple(factors)
    if len(factors) < 2:
        raise ValueError("a product needs at least two factors")
    kinds = {f.kind for f in factors}
    if kinds == {"torus"}:
        return torus_entry(sum(f.dim for f in factors))
    if "torus" in kinds or "product" in kinds:
        raise ValueError("unsupported product combination (torus/semisimple mix or nesting)")
    m = sum(f.dim for f in factors)
    c = np.zeros((m, m, m))
    off = 0
    for f in factors:
        d = f.dim
        c[off:off + d, off:off + d, off:off + d] = f.structure_constants
        off += d
    if k_max is None:
        if tuple(f.kind for f in factors) == ("su2", "su2"):
            k_max = 5
        else:
            raise ValueError("k_max is not tabulated for this product; pass it explicitly")
    return LieGroupCatalogEntry("product", m, c, k_max=k_max,
                                semisimple=all(f.semisimple for f in factors),
                                factors=factors)


def entry_from_key(key: str) -> LieGroupCatalogEntry:
    """Resolve a CLI-style group key like 't2', 'su2', 'so3', 'su2xsu2'."""
    key = key.strip().lower()
    if key == "su2":
        return su2_entry()
    if key == "so3":
        return so3_entry()
    if key == "su2xsu2":
        return product_entry([su2_entry(), su2_entry()])
    if key.startswith("t") and key[1:].isdigit():
        return torus_entry(int(key[1:]))
    raise ValueError(f"unknown group key: {key!r}")


@dataclass(frozen=True)
class GroupElement:
    """Group element with a kind-dependent payload.

    torus: coordinate vector in [0,1)^m; su2: unit quaternion (w, x, y, z);
    so3: unit quaternion modulo sign (stored with a canonical sign);
    product: tuple of factor elements.
    """

    kind: str
    data: Union[np.ndarray, tuple]

    def __post_init__(self):
        if self.kind in ("su2", "so3"):
            q = np.asarray(self.data, dtype=float)
            if q.shape != (4,):
                raise ValueError("quaternion payload must be a 4-vector")
            n = np.linalg.norm(q)
            if abs(n - 1.0) > 1e-12:
                raise ValueError("quaternion payload must have unit norm")
            if self.kind == "so3":
                q = _canonical_sign(q)
            q = q.copy()
            q.flags.writeable = False
            object.__setattr__(self, "data", q)
        elif self.kind == "torus":
            x = np.mod(np.asarray(self.data, dtype=float), 1.0)
            x = np.where(x >= 1.0, 0.0, x)  # mod can return 1.0 for tiny negatives
            x.flags.writeable = False
            object.__setattr__(self, "data", x)


def _canonical_sign(q: np.ndarray) -> np.ndarray:
    for v in q:
        if abs(v) > 1e-14:
            return q if v > 0 else -q
    raise ValueError("zero quaternion")


@dataclass(frozen=True)
class Subalgebra:
    """Span closed under the bracket, stored as orthonormal row vectors."""

    basis: np.ndarray  # shape (dim, m), orthonormal rows
    dim: int


def identity_element(entry: LieGroupCatalogEntry) -> GroupElement:
    if entry.kind == "torus":
        return GroupElement("torus", np.zeros(entry.dim))
    if entry.kind in ("su2", "so3"):
        return GroupElement(entry.kind, np.array([1.0, 0.0, 0.0, 0.0]))
    return GroupElement("product", tuple(identity_element(f) for f in entry.factors))


# ---------------------------------------------------------------------------
# Algebra operations
# ---------------------------------------------------------------------------

def bracket(entry: LieGroupCatalogEntry, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Lie bracket of coefficient vectors: [X, Y]_k = sum_ij X_i Y_j c_{ij}^k."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.shape != (entry.dim,) or Y.shape != (entry.dim,):
        raise ValueError("bracket arguments must be m-vectors")
    return np.einsum("i,j,ijk->k", X, Y, entry.structure_constants)


def _orthonormal_rows(rows: np.ndarray) -> np.ndarray:
    if rows.size == 0:
        return rows.reshape(0, rows.shape[-1])
    u, s, vh = np.linalg.svd(rows, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((0, rows.shape[1]))
    r = int(np.sum(s > RANK_TOL * s[0]))
    return vh[:r]


def generated_subalgebra(entry: LieGroupCatalogEntry,
                         S: Sequence[np.ndarray]) -> Subalgebra:
    """Smallest subalgebra containing the span of S.

    Iteratively adjoins brackets of current basis pairs and re-orthonormalises
    until the rank stabilises.  Rank decisions use singular values above
    RANK_TOL relative to the largest.
    """
    rows = np.asarray(list(S), dtype=float)
    if rows.ndim != 2 or rows.shape[0] == 0 or rows.shape[1] != entry.dim:
        raise ValueError("S must be a nonempty list of m-vectors")
    basis = _orthonormal_rows(rows)
    while basis.shape[0] < entry.dim:
        n = basis.shape[0]
        brs = [bracket(entry, basis[i], basis[j])
               for i in range(n) for j in range(i + 1, n)]
        if not brs:
            break
        new = _orthonormal_rows(np.vstack([basis] + brs))
        if new.shape[0] == n:
            basis = new
            break
        basis = new
    return Subalgebra(basis=basis, dim=basis.shape[0])


def is_bracket_generating(entry: LieGroupCatalogEntry,
                          S: Sequence[np.ndarray]) -> bool:
    return generated_subalgebra(entry, S).dim == entry.dim


def ell_index(entry: LieGroupCatalogEntry, P: np.ndarray) -> int:
    """Smallest k such that the first k rotated basis vectors generate.

    The rotated vectors are the columns of P.  For the abelian torus no proper
    prefix generates, so the index is always m (the full space).
    """
    P = np.asarray(P, dtype=float)
    m = entry.dim
    if P.shape != (m, m) or np.max(np.abs(P.T @ P - np.eye(m))) > 1e-10:
        raise ValueError("P must be orthogonal")
    for k in range(1, m + 1):
        if is_bracket_generating(entry, P[:, :k].T):
            return k
    raise AssertionError("full orthogonal prefix must generate")  # pragma: no cover


def prefix_subalgebra_dims(entry: LieGroupCatalogEntry, P: np.ndarray) -> list[int]:
    """Dimensions of the subalgebras generated by each column prefix of P."""
    P = np.asarray(P, dtype=float)
    return [generated_subalgebra(entry, P[:, :k].T).dim for k in range(1, entry.dim + 1)]


# ---------------------------------------------------------------------------
# Quaternion helpers (broadcast over leading axes)
# ---------------------------------------------------------------------------

def quat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    w = a[..., :1] * b[..., :1] - np.sum(a[..., 1:] * b[..., 1:], axis=-1, keepdims=True)
    v = (a[..., :1] * b[..., 1:] + b[..., :1] * a[..., 1:]
         + np.cross(a[..., 1:], b[..., 1:]))
    return np.concatenate([w, v], axis=-1)


def quat_conj(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return np.concatenate([q[..., :1], -q[..., 1:]], axis=-1)


def _quat_exp(v: np.ndarray) -> np.ndarray:
    theta = float(np.linalg.norm(v))
    if theta < 1e-300:
        return np.array([1.0, 0.0, 0.0, 0.0])
    s = math.sin(theta) / theta
    return np.concatenate([[math.cos(theta)], s * np.asarray(v, dtype=float)])


def _quat_log(q: np.ndarray, cut_tol: float = 1e-12) -> tuple[np.ndarray, bool]:
    w = float(q[0])
    u = np.asarray(q[1:], dtype=float)
    s = float(np.linalg.norm(u))
    theta = math.atan2(s, w)
    if s < cut_tol:
        if w > 0:
            return np.zeros(3), False
        # Antipode: every direction is a shortest branch; flag it.
        return np.array([math.pi, 0.0, 0.0]), True
    return (theta / s) * u, theta > math.pi - 1e-9


# ---------------------------------------------------------------------------
# Group arithmetic
# ---------------------------------------------------------------------------

def group_exp(entry: LieGroupCatalogEntry, X: np.ndarray) -> GroupElement:
    """Group exponential of an algebra vector (coefficients in the fixed basis)."""
    X = np.asarray(X, dtype=float)
    if X.shape != (entry.dim,):
        raise ValueError("exp argument must be an m-vector")
    if entry.kind == "torus":
        return GroupElement("torus", np.mod(X, 1.0))
    if entry.kind in ("su2", "so3"):
        return GroupElement(entry.kind, _quat_exp(X))
    parts = []
    off = 0
    for f in entry.factors:
        parts.append(group_exp(f, X[off:off + f.dim]))
        off += f.dim
    return GroupElement("product", tuple(parts))


def group_log_with_flag(entry: LieGroupCatalogEntry,
                        a: GroupElement) -> tuple[np.ndarray, bool]:
    """Principal logarithm plus a flag marking cut-locus ambiguity."""
    if entry.kind == "torus":
        x = np.asarray(a.data, dtype=float)
        v = x - np.ceil(x - 0.5)  # representative in (-1/2, 1/2]^m
        return v, bool(np.any(np.abs(np.abs(v) - 0.5) < 1e-12))
    if entry.kind == "su2":
        return _quat_log(np.asarray(a.data))
    if entry.kind == "so3":
        q = np.asarray(a.data, dtype=float)
        if q[0] < 0:
            q = -q
        v, _ = _quat_log(q)
        # Cut locus of SO(3): half turns, i.e. vanishing real part.
        return v, abs(q[0]) < 1e-12
    vs, flag = [], False
    for f, part in zip(entry.factors, a.data):
        v, fl = group_log_with_flag(f, part)
        vs.append(v)
        flag = flag or fl
    return np.concatenate(vs), flag


def group_log(entry: LieGroupCatalogEntry, a: GroupElement) -> np.ndarray:
    return group_log_with_flag(entry, a)[0]


def group_mul(entry: LieGroupCatalogEntry, a: GroupElement, b: GroupElement) -> GroupElement:
    if entry.kind == "torus":
        return GroupElement("torus", np.mod(np.asarray(a.data) + np.asarray(b.data), 1.0))
    if entry.kind in ("su2", "so3"):
        return GroupElement(entry.kind, quat_mul(a.data, b.data))
    return GroupElement("product", tuple(
        group_mul(f, x, y) for f, x, y in zip(entry.factors, a.data, b.data)))


def group_inv(entry: LieGroupCatalogEntry, a: GroupElement) -> GroupElement:
    if entry.kind == "torus":
        return GroupElement("torus", np.mod(-np.asarray(a.data), 1.0))
    if entry.kind in ("su2", "so3"):
        return GroupElement(entry.kind, quat_conj(a.data))
    return GroupElement("product", tuple(
        group_inv(f, x) for f, x in zip(entry.factors, a.data)))
