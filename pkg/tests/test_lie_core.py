"""Catalog, brackets, generated subalgebras, group arithmetic."""

import math
from fractions import Fraction

import numpy as np
import pytest
from scipy.linalg import expm

import liespec as ls
from liespec.lie_core import prefix_subalgebra_dims, quat_conj, quat_mul

# Spin-1/2 matrices built here from Pauli matrices, independent of the
# package's ladder construction; they realise the same bracket convention.
PAULI = [np.array([[0, 1], [1, 0]], dtype=complex),
         np.array([[0, -1j], [1j, 0]], dtype=complex),
         np.array([[1, 0], [0, -1]], dtype=complex)]
SPIN_HALF = [-1j * s for s in PAULI]


def exact_closure_dim(entry, vectors):
    """Bracket-closure dimension via exact rational row reduction."""
    c = entry.structure_constants

    def rref(rows):
        rows = [list(r) for r in rows]
        pivots = []
        col = 0
        r = 0
        while r < len(rows) and col < entry.dim:
            piv = next((i for i in range(r, len(rows)) if rows[i][col] != 0), None)
            if piv is None:
                col += 1
                continue
            rows[r], rows[piv] = rows[piv], rows[r]
            lead = rows[r][col]
            rows[r] = [x / lead for x in rows[r]]
            for i in range(len(rows)):
                if i != r and rows[i][col] != 0:
                    f = rows[i][col]
                    rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
            pivots.append(col)
            r += 1
            col += 1
        return [row for row in rows if any(x != 0 for x in row)]

    basis = rref([[Fraction(x) for x in v] for v in vectors])
    while True:
        new = list(basis)
        for u in basis:
            for v in basis:
                br = [sum(u[i] * v[j] * Fraction(c[i, j, k]).limit_denominator()
                          for i in range(entry.dim) for j in range(entry.dim))
                      for k in range(entry.dim)]
                new.append(br)
        new = rref(new)
        if len(new) == len(basis):
            return len(basis)
        basis = new


class TestCatalog:
    def test_structure_invariants_hold(self, su2, so3, t3, su2xsu2):
        for entry in (su2, so3, t3, su2xsu2):
            c = entry.structure_constants
            assert np.max(np.abs(c + np.swapaxes(c, 0, 1))) <= 1e-12
            assert np.max(np.abs(c + np.swapaxes(c, 1, 2))) <= 1e-12
            t = np.einsum("ijl,lkr->ijkr", c, c)
            jac = (t + np.einsum("jkl,lir->ijkr", c, c)
                   + np.einsum("kil,ljr->ijkr", c, c))
            assert np.max(np.abs(jac)) <= 1e-12

    def test_perturbed_constants_rejected(self, su2):
        bad = su2.structure_constants.copy()
        bad[0, 1, 2] += 1e-6
        with pytest.raises(ValueError):
            ls.LieGroupCatalogEntry("su2", 3, bad, k_max=2, semisimple=True)

    def test_k_max_catalog(self, su2, so3, su2xsu2):
        assert su2.k_max == 2
        assert so3.k_max == 2
        assert su2xsu2.k_max == 5
        for m in (1, 2, 3, 4):
            assert ls.torus_entry(m).k_max == m
        assert ls.su_n_k_max(2) == 2
        assert ls.su_n_k_max(3) == 5

    def test_torus_products_flatten(self):
        entry = ls.product_entry([ls.torus_entry(2), ls.torus_entry(1)])
        assert entry.kind == "torus" and entry.dim == 3

    def test_mixed_products_rejected(self):
        with pytest.raises(ValueError):
            ls.product_entry([ls.su2_entry(), ls.torus_entry(1)])

    def test_unknown_product_needs_explicit_k_max(self):
        with pytest.raises(ValueError):
            ls.product_entry([ls.so3_entry(), ls.so3_entry()])
        entry = ls.product_entry([ls.so3_entry(), ls.so3_entry()], k_max=5)
        assert entry.k_max == 5

    def test_entry_from_key(self):
        assert ls.entry_from_key("t2").dim == 2
        assert ls.entry_from_key("su2xsu2").dim == 6
        with pytest.raises(ValueError):
            ls.entry_from_key("e8")


class TestBracket:
    def test_su2_convention(self, su2):
        e = np.eye(3)
        assert np.allclose(ls.bracket(su2, e[0], e[1]), 2 * e[2])
        assert np.allclose(ls.bracket(su2, e[1], e[2]), 2 * e[0])
        assert np.allclose(ls.bracket(su2, e[2], e[0]), 2 * e[1])

    def test_matches_spin_half_commutators(self, su2):
        # The bracket must agree with matrix commutators in an independently
        # built faithful representation.
        rng = np.random.default_rng(3)
        for _ in range(20):
            x, y = rng.standard_normal((2, 3))
            mx = sum(a * g for a, g in zip(x, SPIN_HALF))
            my = sum(a * g for a, g in zip(y, SPIN_HALF))
            br = ls.bracket(su2, x, y)
            mbr = sum(a * g for a, g in zip(br, SPIN_HALF))
            assert np.allclose(mx @ my - my @ mx, mbr, atol=1e-12)

    def test_alternating_and_torus(self, su2, t3):
        rng = np.random.default_rng(4)
        x, y = rng.standard_normal((2, 3))
        assert np.allclose(ls.bracket(su2, x, x), 0.0)
        assert np.allclose(ls.bracket(t3, x, y), 0.0)

    def test_dimension_mismatch(self, su2):
        with pytest.raises(ValueError):
            ls.bracket(su2, np.ones(4), np.ones(3))


class TestGeneratedSubalgebra:
    def test_su2_dims(self, su2):
        e = np.eye(3)
        assert ls.generated_subalgebra(su2, [e[0]]).dim == 1
        assert ls.generated_subalgebra(su2, [e[0], e[1]]).dim == 3

    def test_matches_exact_closure(self, su2, su2xsu2):
        rng = np.random.default_rng(5)
        for entry in (su2, su2xsu2):
            for _ in range(10):
                k = int(rng.integers(1, 3))
                vecs = rng.integers(-2, 3, size=(k, entry.dim)).astype(float)
                if not np.any(vecs):
                    continue
                got = ls.generated_subalgebra(entry, vecs).dim
                assert got == exact_closure_dim(entry, vecs)

    def test_torus_is_span(self, t3):
        rng = np.random.default_rng(6)
        vecs = rng.standard_normal((2, 3))
        assert ls.generated_subalgebra(t3, vecs).dim == 2

    def test_closure_under_bracket(self, su2xsu2):
        rng = np.random.default_rng(7)
        sub = ls.generated_subalgebra(su2xsu2, rng.standard_normal((2, 6)))
        for u in sub.basis:
            for v in sub.basis:
                br = ls.bracket(su2xsu2, u, v)
                resid = br - sub.basis.T @ (sub.basis @ br)
                assert np.linalg.norm(resid) <= 1e-9 * max(1.0, np.linalg.norm(br))

    def test_monotone_in_generators(self, su2xsu2):
        rng = np.random.default_rng(8)
        for _ in range(20):
            big = rng.standard_normal((3, 6))
            small = big[:2]
            assert (ls.generated_subalgebra(su2xsu2, small).dim
                    <= ls.generated_subalgebra(su2xsu2, big).dim)

    def test_empty_rejected(self, su2):
        with pytest.raises(ValueError):
            ls.generated_subalgebra(su2, [])


class TestBracketGenerating:
    def test_examples(self, su2, su2xsu2):
        e3, e6 = np.eye(3), np.eye(6)
        assert ls.is_bracket_generating(su2, [e3[0], e3[1]])
        assert not ls.is_bracket_generating(su2, [e3[2]])
        assert not ls.is_bracket_generating(su2xsu2, [e6[0], e6[1]])

    def test_random_generic_pairs_generate(self, su2):
        rng = np.random.default_rng(9)
        count = 0
        while count < 100:
            u, v = rng.standard_normal((2, 3))
            u /= np.linalg.norm(u)
            v /= np.linalg.norm(v)
            if abs(u @ v) > 0.99:  # reject near-collinear samples
                continue
            count += 1
            assert ls.is_bracket_generating(su2, [u, v])


class TestEllIndex:
    def test_examples(self, su2, t3, su2xsu2):
        assert ls.ell_index(su2, np.eye(3)) == 2
        assert ls.ell_index(t3, np.eye(3)) == 3
        assert ls.ell_index(su2xsu2, np.eye(6)) == 5
        assert prefix_subalgebra_dims(su2xsu2, np.eye(6)) == [1, 3, 3, 4, 6, 6]

    def test_torus_any_rotation(self, t3):
        rng = np.random.default_rng(10)
        q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
        assert ls.ell_index(t3, q) == 3

    def test_non_orthogonal_rejected(self, su2):
        with pytest.raises(ValueError):
            ls.ell_index(su2, np.diag([2.0, 1.0, 1.0]))

    def test_invariant_under_block_factor(self, su2xsu2):
        # Right-multiplying by blockdiag(Q1, 1, Q2) at the split index must
        # not change the index.
        rng = np.random.default_rng(11)
        P, _ = np.linalg.qr(rng.standard_normal((6, 6)))
        k = ls.ell_index(su2xsu2, P)
        q1, _ = np.linalg.qr(rng.standard_normal((k - 1, k - 1)))
        q2, _ = np.linalg.qr(rng.standard_normal((6 - k, 6 - k)))
        Q = np.eye(6)
        Q[:k - 1, :k - 1] = q1
        Q[k:, k:] = q2
        assert ls.ell_index(su2xsu2, P @ Q) == k


class TestGroupArithmetic:
    def test_su2_exp_matches_matrix_exponential(self, su2):
        rng = np.random.default_rng(12)
        for _ in range(25):
            v = rng.standard_normal(3) * rng.uniform(0.1, 2.5)
            q = ls.group_exp(su2, v).data
            mat = q[0] * np.eye(2) + sum(a * g for a, g in zip(q[1:], SPIN_HALF))
            ref = expm(sum(a * g for a, g in zip(v, SPIN_HALF)))
            assert np.allclose(mat, ref, atol=1e-10)

    def test_su2_one_parameter_subgroup_hits_antipode(self, su2):
        q = ls.group_exp(su2, np.array([0.0, 0.0, math.pi]))
        assert np.allclose(q.data, [-1.0, 0.0, 0.0, 0.0], atol=1e-12)

    def test_torus_exp_and_identity_log(self, t3):
        a = ls.group_exp(t3, np.array([0.25, 0.0, 0.0]))
        assert np.allclose(a.data, [0.25, 0.0, 0.0])
        e = ls.identity_element(t3)
        assert np.allclose(ls.group_log(t3, e), 0.0)

    def test_exp_log_roundtrip(self, su2, so3, t2, su2xsu2):
        rng = np.random.default_rng(13)
        for entry, scale in ((su2, 2.8), (so3, 1.4), (t2, 0.45), (su2xsu2, 1.2)):
            for _ in range(25):
                v = rng.uniform(-1, 1, entry.dim)
                n = np.linalg.norm(v)
                if n == 0:
                    continue
                v *= rng.uniform(0.05, scale) / n
                back, flagged = ls.group_log_with_flag(entry, ls.group_exp(entry, v))
                if not flagged:
                    assert np.allclose(back, v, atol=1e-10)

    def test_cut_locus_flags(self, su2, so3, t2):
        antipode = ls.GroupElement("su2", np.array([-1.0, 0.0, 0.0, 0.0]))
        _, flag = ls.group_log_with_flag(su2, antipode)
        assert flag
        half_turn = ls.GroupElement("so3", np.array([0.0, 1.0, 0.0, 0.0]))
        _, flag = ls.group_log_with_flag(so3, half_turn)
        assert flag
        deep = ls.GroupElement("torus", np.array([0.5, 0.25]))
        _, flag = ls.group_log_with_flag(t2, deep)
        assert flag

    def test_mul_inv(self, su2, t2, su2xsu2):
        rng = np.random.default_rng(14)
        for entry in (su2, t2, su2xsu2):
            v = rng.uniform(-0.4, 0.4, entry.dim)
            a = ls.group_exp(entry, v)
            e = ls.group_mul(entry, a, ls.group_inv(entry, a))
            assert biinv_dist(entry, e) < 1e-12

    def test_quaternion_helpers_broadcast(self):
        rng = np.random.default_rng(15)
        a = rng.standard_normal((5, 4))
        a /= np.linalg.norm(a, axis=1, keepdims=True)
        prod = quat_mul(a, quat_conj(a))
        assert np.allclose(prod[:, 0], 1.0) and np.allclose(prod[:, 1:], 0.0)

    def test_unit_norm_enforced(self):
        with pytest.raises(ValueError):
            ls.GroupElement("su2", np.array([1.0, 1.0, 0.0, 0.0]))


def biinv_dist(entry, a):
    from liespec.geometry import biinvariant_distance
    return biinvariant_distance(entry, a)
