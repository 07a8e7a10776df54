"""PSNR/SSIM, weighted-residual statistics, and the aggregation
consistency check, each against independent direct-computation oracles."""

import math

import numpy as np
import pytest

from rwe.metrics import (
    equivalence_check,
    histogram_csv,
    psnr,
    ssim,
    weighted_residual_stats,
)
from rwe.patches import build_group_index


def gaussian_kernel(side=11, std=1.5):
    half = side // 2
    g = [math.exp(-(d * d) / (2 * std * std)) for d in range(-half, half + 1)]
    k = [[a * b for b in g] for a in g]
    total = sum(sum(row) for row in k)
    return [[v / total for v in row] for row in k]


def ssim_scalar_reference(x, y, side=11, std=1.5, c1=0.01**2, c2=0.03**2):
    """Direct per-pixel evaluation with symmetric padding, python loops."""
    h, w = x.shape
    half = side // 2
    xp = np.pad(x, half, mode="symmetric")
    yp = np.pad(y, half, mode="symmetric")
    k = gaussian_kernel(side, std)
    total = 0.0
    for i in range(h):
        for j in range(w):
            mx = my = 0.0
            for a in range(side):
                for b in range(side):
                    mx += k[a][b] * xp[i + a, j + b]
                    my += k[a][b] * yp[i + a, j + b]
            vx = vy = cxy = 0.0
            for a in range(side):
                for b in range(side):
                    vx += k[a][b] * xp[i + a, j + b] ** 2
                    vy += k[a][b] * yp[i + a, j + b] ** 2
                    cxy += k[a][b] * xp[i + a, j + b] * yp[i + a, j + b]
            vx -= mx * mx
            vy -= my * my
            cxy -= mx * my
            total += ((2 * mx * my + c1) * (2 * cxy + c2)) / (
                (mx * mx + my * my + c1) * (vx + vy + c2)
            )
    return total / (h * w)


class TestPsnr:
    def test_identity_sentinel(self, rng):
        g = rng.random((8, 8))
        assert psnr(g, g) == float("inf")

    def test_uniform_difference(self):
        a = np.full((16, 16), 0.5)
        assert abs(psnr(a + 0.1, a) - 20.0) < 1e-12

    def test_strictly_decreasing_in_mse(self, rng):
        ref = rng.random((16, 16))
        vals = [psnr(ref + d, ref) for d in (0.01, 0.02, 0.05, 0.1)]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_permutation_invariant(self, rng):
        a, b = rng.random((10, 10)), rng.random((10, 10))
        perm = rng.permutation(100)
        ap = a.ravel()[perm].reshape(10, 10)
        bp = b.ravel()[perm].reshape(10, 10)
        assert abs(psnr(a, b) - psnr(ap, bp)) < 1e-12

    def test_shape_mismatch(self, rng):
        with pytest.raises(ValueError):
            psnr(rng.random((4, 4)), rng.random((4, 5)))

    def test_color_pools_all_channels(self, rng):
        a = rng.random((8, 8, 3))
        b = a.copy()
        b[..., 0] += 0.1
        mse = np.mean((a - b) ** 2)
        assert abs(psnr(a, b) - 10 * np.log10(1 / mse)) < 1e-12


class TestSsim:
    def test_identity(self, rng):
        g = rng.random((16, 16))
        assert abs(ssim(g, g) - 1.0) < 1e-12

    def test_symmetry(self, rng):
        a, b = rng.random((16, 16)), rng.random((16, 16))
        assert abs(ssim(a, b) - ssim(b, a)) <= 1e-12

    def test_matches_scalar_reference_on_ramp(self):
        ii, jj = np.mgrid[0:8, 0:8]
        a = (ii + jj) / 14.0
        b = np.clip(a + 0.1, 0, 1)
        assert abs(ssim(a, b) - ssim_scalar_reference(a, b)) <= 1e-10

    def test_matches_scalar_reference_random(self, rng):
        a = rng.random((8, 8))
        b = rng.random((8, 8))
        assert abs(ssim(a, b) - ssim_scalar_reference(a, b)) <= 1e-10

    def test_invariant_under_shared_isometry(self, rng):
        a, b = rng.random((12, 12)), rng.random((12, 12))
        base = ssim(a, b)
        for op in (np.fliplr, np.flipud, np.transpose, np.rot90):
            assert abs(ssim(op(a), op(b)) - base) <= 1e-12

    def test_lower_for_noisier(self, rng):
        ref = rng.random((32, 32))
        near = np.clip(ref + 0.02 * rng.standard_normal(ref.shape), 0, 1)
        far = np.clip(ref + 0.2 * rng.standard_normal(ref.shape), 0, 1)
        assert ssim(near, ref) > ssim(far, ref)

    def test_color_is_channel_mean(self, rng):
        a, b = rng.random((12, 12, 3)), rng.random((12, 12, 3))
        per = [ssim(a[..., c], b[..., c]) for c in range(3)]
        assert abs(ssim(a, b) - np.mean(per)) <= 1e-12


class TestResidualStats:
    def test_zero_residual(self, rng):
        y = rng.random((8, 8))
        st = weighted_residual_stats(y, y, np.ones_like(y))
        assert st.mean == 0.0 and st.variance == 0.0

    def test_matches_direct_formulas(self, rng):
        y, x = rng.random((16, 16)), rng.random((16, 16))
        w = rng.random((16, 16))
        st = weighted_residual_stats(y, x, w)
        r = 255.0 * w * (y - x)
        assert abs(st.mean - r.mean()) < 1e-12
        assert abs(st.variance - r.var()) < 1e-10
        assert abs(st.std - r.std()) < 1e-10

    def test_histogram_conserves_counts(self, rng):
        y = rng.random((32, 32))
        x = np.zeros_like(y)  # residuals up to 255, far out of histogram range
        st = weighted_residual_stats(y, x, np.ones_like(y))
        assert st.counts.sum() == y.size
        assert len(st.edges) == len(st.counts) + 1

    def test_out_of_range_lands_in_edge_bins(self):
        y = np.array([[1.0, 0.0]])
        x = np.array([[0.0, 1.0]])
        st = weighted_residual_stats(y, x, np.ones_like(y))
        assert st.counts[0] == 1 and st.counts[-1] == 1

    def test_histogram_csv(self, tmp_path, rng):
        y, x = rng.random((8, 8)), rng.random((8, 8))
        st = weighted_residual_stats(y, x, np.ones_like(y))
        out = tmp_path / "h.csv"
        histogram_csv(st, out)
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "bin_center,count"
        assert len(lines) == 1 + len(st.counts)
        total = sum(int(row.split(",")[1]) for row in lines[1:])
        assert total == 64


class TestEquivalence:
    def test_exact_split_gives_zero(self, rng):
        x = rng.random((32, 32))
        b = rng.random((32, 32))
        u = x - b
        index = build_group_index(x, side=11, k=8, stride=4, window=31)
        e1, e2 = equivalence_check(x, b, u, index)
        assert e1 == 0.0 and e2 == 0.0

    def test_matches_direct_summation(self, rng):
        x, b, u = (rng.random((32, 32)) for _ in range(3))
        index = build_group_index(x, side=11, k=8, stride=4, window=31)
        e1, e2 = equivalence_check(x, b, u, index)

        z = x - b - u
        e1_direct = float(np.sum(z**2)) / z.size
        total = 0.0
        for g in range(len(index.exemplars)):
            for s in range(index.k):
                oi, oj = index.members[g, s]
                total += float(np.sum(z[oi : oi + 11, oj : oj + 11] ** 2))
        c = len(index.exemplars)
        e2_direct = total / (121 * index.k * c)
        assert abs(e1 - e1_direct) <= 1e-12
        assert abs(e2 - e2_direct) <= 1e-12 * max(1.0, e2_direct)
