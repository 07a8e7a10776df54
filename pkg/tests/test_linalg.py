"""SVD contracts and singular-value soft-thresholding properties."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rwe.linalg import nuclear_norm, svd, svt, svt_batch


def nuclear(a):
    return np.linalg.svd(a, compute_uv=False).sum()


def svt_objective(a, z, theta):
    return 0.5 * np.sum((a - z) ** 2) + theta * nuclear(z)


class TestSvd:
    def test_diag_singular_values(self):
        _, s, _ = svd(np.diag([3.0, 1.0]))
        assert np.allclose(s, [3.0, 1.0], atol=1e-12)

    def test_zero_matrix(self):
        _, s, _ = svd(np.zeros((4, 6)))
        assert np.all(s == 0.0)

    def test_reconstruction_and_orthonormality(self, rng):
        a = rng.standard_normal((121, 60))
        h, s, v = svd(a)
        recon = (h * s) @ v.T
        assert np.linalg.norm(a - recon) <= 1e-10 * max(1.0, np.linalg.norm(a))
        assert np.max(np.abs(h.T @ h - np.eye(60))) <= 1e-10
        assert np.max(np.abs(v.T @ v - np.eye(60))) <= 1e-10
        assert np.all(np.diff(s) <= 0) and np.all(s >= 0)

    def test_rejects_nonfinite(self):
        a = np.zeros((3, 3))
        a[1, 1] = np.nan
        with pytest.raises(ValueError):
            svd(a)


class TestSvt:
    def test_diag_shrink(self):
        out = svt(np.diag([3.0, 1.0]), 2.0)
        assert np.max(np.abs(out - np.diag([1.0, 0.0]))) <= 1e-10

    def test_theta_zero_identity(self, rng):
        a = rng.standard_normal((7, 5))
        assert np.max(np.abs(svt(a, 0.0) - a)) <= 1e-10

    def test_rejects_negative_theta(self):
        with pytest.raises(ValueError):
            svt(np.eye(2), -0.1)

    def test_prox_optimality_spot_check(self, rng):
        for _ in range(20):
            a = rng.standard_normal((5, 5))
            theta = 0.3
            z = svt(a, theta)
            base = svt_objective(a, z, theta)
            for _ in range(50):
                pert = z + 1e-3 * rng.standard_normal((5, 5))
                assert svt_objective(a, pert, theta) >= base - 1e-12

    def test_semigroup(self, rng):
        for _ in range(20):
            a = rng.standard_normal((6, 4))
            t1, t2 = rng.uniform(0, 1, 2)
            once = svt(a, t1 + t2)
            twice = svt(svt(a, t1), t2)
            assert np.max(np.abs(once - twice)) <= 1e-8

    def test_nuclear_norm_and_rank_never_increase(self, rng):
        for _ in range(20):
            a = rng.standard_normal((6, 5))
            theta = rng.uniform(0, 2)
            z = svt(a, theta)
            assert nuclear(z) <= nuclear(a) + 1e-10
            assert np.linalg.matrix_rank(z, tol=1e-9) <= np.linalg.matrix_rank(a)

    @given(st.integers(0, 2**32 - 1), st.floats(0.0, 3.0))
    @settings(max_examples=40, deadline=None)
    def test_prox_inequality_random(self, seed, theta):
        r = np.random.default_rng(seed)
        a = r.standard_normal((4, 4))
        z = svt(a, theta)
        w = r.standard_normal((4, 4))
        assert svt_objective(a, z, theta) <= svt_objective(a, z + 1e-3 * w, theta) + 1e-12


class TestBatched:
    def test_matches_single(self, rng):
        stack = rng.standard_normal((32, 12, 7))
        out = svt_batch(stack, 0.4)
        for g in range(32):
            assert np.max(np.abs(out[g] - svt(stack[g], 0.4))) <= 1e-9

    def test_theta_zero_exact(self, rng):
        stack = rng.standard_normal((8, 9, 4))
        assert np.max(np.abs(svt_batch(stack, 0.0) - stack)) <= 1e-10

    def test_tall_and_wide(self, rng):
        tall = rng.standard_normal((4, 10, 3))
        wide = rng.standard_normal((4, 3, 10))
        for stack in (tall, wide):
            out = svt_batch(stack, 0.2)
            for g in range(4):
                assert np.max(np.abs(out[g] - svt(stack[g], 0.2))) <= 1e-9

    def test_nuclear_norm_batch(self, rng):
        stack = rng.standard_normal((5, 8, 6))
        vals = nuclear_norm(stack)
        expect = [nuclear(stack[g]) for g in range(5)]
        assert np.allclose(vals, expect, atol=1e-9)
