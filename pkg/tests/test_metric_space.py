"""Metric parameterisation, eigensolver, samplers, restricted classes, files."""

import io
import math

import numpy as np
import pytest

import liespec as ls
from liespec.metric_space import (DiagonalClass, RotationBlockClass,
                                  SigmaRatioClass, jacobi_eigh,
                                  parse_matrix_text, random_rotation)


class TestJacobiEigh:
    def test_against_numpy(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            n = int(rng.integers(2, 9))
            S = rng.standard_normal((n, n))
            S = S + S.T
            vals, vecs = jacobi_eigh(S)
            assert np.allclose(vals, np.linalg.eigvalsh(S)[::-1], atol=1e-11)
            assert np.allclose(vecs @ np.diag(vals) @ vecs.T, S, atol=1e-11)
            assert np.allclose(vecs.T @ vecs, np.eye(n), atol=1e-12)

    def test_tiny_offdiagonal_regression(self):
        # Matrices with off-diagonal mass near the cancellation floor of a
        # norm-difference test must still be fully rotated away.
        rng = np.random.default_rng(2)
        sig = np.exp(rng.uniform(math.log(0.2), math.log(5.0), 3))
        q, r = np.linalg.qr(rng.standard_normal((3, 3)))
        A = (q * np.sign(np.diag(r))) @ np.diag(np.sort(sig)[::-1])
        S = A @ A.T
        vals, vecs = jacobi_eigh(S)
        resid = np.linalg.norm(S - vecs @ np.diag(vals) @ vecs.T)
        assert resid <= 1e-12 * np.linalg.norm(S)

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            jacobi_eigh(np.array([[1.0, 2.0], [0.0, 1.0]]))


class TestMetricFromMatrix:
    def test_diagonal(self):
        spec = ls.metric_from_matrix(np.diag([3.0, 2.0, 1.0]))
        assert np.allclose(spec.sigma, [3.0, 2.0, 1.0])
        assert np.allclose(spec.P_sort, np.eye(3))
        assert np.allclose(spec.gram, np.diag([1 / 9, 1 / 4, 1.0]))

    def test_singular_values_from_svd_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            m = int(rng.integers(2, 6))
            A = rng.standard_normal((m, m))
            if abs(np.linalg.det(A)) < 1e-3:
                continue
            spec = ls.metric_from_matrix(A)
            assert np.allclose(spec.sigma, np.linalg.svd(A, compute_uv=False),
                               atol=1e-10)
            assert np.allclose(spec.gram @ spec.AAt, np.eye(m), atol=1e-9)

    def test_homothety(self):
        base = ls.metric_from_matrix(np.eye(3))
        scaled = ls.metric_from_matrix(2.5 * np.eye(3))
        assert np.allclose(scaled.gram, base.gram / 2.5 ** 2)
        assert np.allclose(scaled.sigma, 2.5 * base.sigma)

    def test_singular_rejected(self):
        with pytest.raises(ls.SingularMatrixError):
            ls.metric_from_matrix(np.diag([1.0, 1.0, 0.0]))

    def test_nan_rejected(self):
        with pytest.raises(ls.MatrixFormatError):
            ls.metric_from_matrix(np.array([[np.nan, 0.0], [0.0, 1.0]]))


class TestCanonicalForm:
    def test_roundtrip(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            A = rng.standard_normal((3, 3))
            if abs(np.linalg.det(A)) < 1e-3:
                continue
            spec = ls.metric_from_matrix(A)
            P, D = ls.canonical_form(spec)
            again = ls.metric_from_matrix(P @ D)
            scale = max(1.0, float(np.max(np.abs(spec.gram))))
            assert np.max(np.abs(again.gram - spec.gram)) <= 1e-9 * scale
            # sigma is presentation-free
            assert np.allclose(again.sigma, spec.sigma,
                               atol=1e-10 * max(1.0, spec.sigma[0]))

    def test_right_orthogonal_invariance(self):
        rng = np.random.default_rng(5)
        A = rng.standard_normal((4, 4)) + 2 * np.eye(4)
        spec = ls.metric_from_matrix(A)
        for _ in range(50):
            R = random_rotation(4, rng)
            other = ls.metric_from_matrix(A @ R)
            assert np.max(np.abs(other.gram - spec.gram)) <= 1e-9

    def test_orthogonal_input_gives_identity_metric(self):
        rng = np.random.default_rng(6)
        R = random_rotation(3, rng)
        spec = ls.metric_from_matrix(R)
        assert np.allclose(spec.sigma, 1.0)
        assert np.allclose(spec.gram, np.eye(3), atol=1e-12)

    def test_repeated_sigma_consistent(self):
        # Ties make the sorting rotation non-unique; sigma itself must not
        # depend on the choice.
        spec = ls.metric_from_matrix(np.diag([2.0, 2.0, 1.0]))
        P, D = ls.canonical_form(spec)
        assert np.allclose(np.diag(D), [2.0, 2.0, 1.0])
        assert np.allclose(ls.metric_from_matrix(P @ D).sigma, spec.sigma)


class TestLoewner:
    def test_examples(self):
        a = ls.metric_from_matrix(np.eye(2))
        b = ls.metric_from_matrix(2 * np.eye(2))
        assert ls.loewner_leq(a, b)
        assert not ls.loewner_leq(b, a)
        c = ls.metric_from_matrix(np.diag([2.0, 1.0]))
        d = ls.metric_from_matrix(np.diag([1.0, 2.0]))
        assert not ls.loewner_leq(c, d)
        assert not ls.loewner_leq(d, c)

    def test_rank_one_bump(self):
        rng = np.random.default_rng(7)
        for _ in range(30):
            A = rng.standard_normal((3, 3)) + 2 * np.eye(3)
            v = rng.standard_normal(3)
            B = np.linalg.cholesky(A @ A.T + np.outer(v, v))
            assert ls.loewner_leq(ls.metric_from_matrix(A), ls.metric_from_matrix(B))

    def test_length_monotonicity(self):
        rng = np.random.default_rng(8)
        a = ls.metric_from_matrix(rng.standard_normal((3, 3)) + 2 * np.eye(3))
        v = rng.standard_normal(3)
        b = ls.metric_from_matrix(np.linalg.cholesky(a.AAt + np.outer(v, v)))
        X = rng.standard_normal((100, 3))
        qa = np.einsum("ni,ij,nj->n", X, a.gram, X)
        qb = np.einsum("ni,ij,nj->n", X, b.gram, X)
        assert np.all(qa >= qb - 1e-9 * np.maximum(1.0, qb))


class TestSampler:
    def test_deterministic(self, su2):
        a = ls.sample_metric(su2, 0.2, 5.0, seed=42)
        b = ls.sample_metric(su2, 0.2, 5.0, seed=42)
        assert np.array_equal(a.A, b.A)

    def test_degenerate_range(self, su2):
        spec = ls.sample_metric(su2, 1.0, 1.0, seed=0)
        assert np.allclose(spec.sigma, 1.0)
        assert np.allclose(spec.gram, np.eye(3), atol=1e-12)

    def test_sigma_spread_statistics(self, t2):
        ratios = [ls.sample_metric(t2, 0.1, 10.0, seed=s).sigma for s in range(10_000)]
        ratios = np.array([s[0] / s[1] for s in ratios])
        assert ratios.min() < 1.5
        assert ratios.max() > 30.0
        assert np.all(ratios >= 1.0)

    def test_invalid_range(self, su2):
        with pytest.raises(ValueError):
            ls.sample_metric(su2, 0.0, 1.0, seed=0)
        with pytest.raises(ValueError):
            ls.sample_metric(su2, 2.0, 1.0, seed=0)


class TestMetricClasses:
    def test_sigma_ratio_membership(self, su2, su2xsu2):
        klass = SigmaRatioClass(1.0)
        spec = ls.metric_from_matrix(3.0 * np.eye(3))
        assert ls.class_member(su2, klass, spec)
        # On su2 the split index is 2, so every metric is a member; a real
        # exclusion needs a group with a larger index.
        assert ls.class_member(su2, klass, ls.metric_from_matrix(np.diag([5.0, 2.0, 1.0])))
        skew6 = ls.metric_from_matrix(np.diag([5.0, 4.0, 3.0, 2.0, 1.0, 1.0]))
        assert not ls.class_member(su2xsu2, klass, skew6)
        assert ls.class_member(su2xsu2, klass, ls.metric_from_matrix(np.eye(6)))

    def test_sigma_ratio_builder(self, su2xsu2):
        klass = SigmaRatioClass(2.0)
        spec = ls.class_build(su2xsu2, klass, [9.0, 8.0, 5.0, 3.0, 2.0, 1.0], seed=1)
        assert ls.class_member(su2xsu2, klass, spec)
        assert spec.sigma[1] <= 2.0 * spec.sigma[su2xsu2.k_max - 1] * (1 + 1e-12)

    def test_rotation_block_builder_membership(self, su2):
        rng = np.random.default_rng(9)
        P = random_rotation(3, rng)
        klass = RotationBlockClass(P)
        spec = ls.class_build(su2, klass, [3.0, 2.0, 0.5], seed=2)
        assert ls.class_member(su2, klass, spec)
        assert np.allclose(spec.sigma, [3.0, 2.0, 0.5], atol=1e-10)
        # generic metrics are not members
        assert not ls.class_member(su2, klass, ls.sample_metric(su2, 0.5, 2.0, 7))

    def test_diagonal_class_covers_unsorted_diagonals(self, su2):
        # A metric diagonal in the rotated frame lies in a block class for
        # the permutation that sorts the diagonal.
        rng = np.random.default_rng(10)
        for _ in range(20):
            P = random_rotation(3, rng)
            d = rng.uniform(0.3, 3.0, 3)
            spec = ls.metric_from_matrix(P @ np.diag(d))
            assert ls.class_member(su2, DiagonalClass(P), spec)
            perm = np.argsort(-d)
            R = np.eye(3)[:, perm]
            assert ls.class_member(su2, RotationBlockClass(P @ R), spec)

    def test_block_builder_rejects_unsorted(self, su2):
        with pytest.raises(ValueError):
            ls.class_build(su2, RotationBlockClass(np.eye(3)), [1.0, 2.0, 3.0], 0)


class TestMatrixFiles:
    def test_roundtrip(self, tmp_path):
        A = np.array([[1.5, 0.25], [-0.75, 2.0]])
        path = tmp_path / "a.mat"
        ls.write_matrix(str(path), A)
        assert np.array_equal(ls.read_matrix(str(path)), A)

    def test_format(self):
        text = "2\n1 0\n0 1\n"
        assert np.array_equal(parse_matrix_text(text), np.eye(2))

    def test_rejects_nan_and_shape(self):
        with pytest.raises(ls.MatrixFormatError):
            parse_matrix_text("2\n1 nan\n0 1\n")
        with pytest.raises(ls.MatrixFormatError):
            parse_matrix_text("2\n1 0 0\n0 1 0\n")
        with pytest.raises(ls.MatrixFormatError):
            parse_matrix_text("3\n1 0\n0 1\n")
        with pytest.raises(ls.MatrixFormatError):
            parse_matrix_text("")

    def test_write_to_stream(self):
        buf = io.StringIO()
        ls.write_matrix(buf, np.eye(2))
        assert buf.getvalue().splitlines()[0] == "2"
