"""Quality metrics and diagnostic statistics.

PSNR is computed on the [0, 1] scale (identical to the 8-bit convention since
the peak is 1). SSIM follows the standard definition: 11x11 Gaussian window
with std 1.5, stabilizers C1 = 0.01^2 and C2 = 0.03^2 on the unit range, and
Gaussian-weighted (uncorrected) local moments. Local statistics use symmetric
padding so the map covers every pixel and small images remain well-defined.

Weighted residuals are reported in 8-bit units (scaled by 255) so they read
on the same scale noise levels are quoted in.
"""

import csv
from dataclasses import dataclass

import numpy as np
from scipy import ndimage as ndi

from rwe.patches import gather_members

__all__ = [
    "psnr",
    "ssim",
    "ResidualStats",
    "weighted_residual_stats",
    "histogram_csv",
    "equivalence_check",
]


def psnr(x, ref):
    """10 log10(1 / MSE) over all pixels and channels; +inf when identical."""
    x = np.asarray(x, dtype=np.float64)
    ref = np.asarray(ref, dtype=np.float64)
    if x.shape != ref.shape:
        raise ValueError("shape mismatch %r vs %r" % (x.shape, ref.shape))
    mse = np.mean((x - ref) ** 2)
    if mse == 0.0:
        return float("inf")
    return float(10.0 * np.log10(1.0 / mse))


def _gaussian_kernel(side, std):
    half = side // 2
    g = np.exp(-np.arange(-half, half + 1) ** 2 / (2.0 * std * std))
    k = np.outer(g, g)
    return k / k.sum()


def _ssim_plane(x, y, side, std, c1, c2):
    k = _gaussian_kernel(side, std)

    def smooth(img):
        return ndi.correlate(img, k, mode="reflect")

    mx, my = smooth(x), smooth(y)
    vx = smooth(x * x) - mx * mx
    vy = smooth(y * y) - my * my
    cxy = smooth(x * y) - mx * my
    num = (2 * mx * my + c1) * (2 * cxy + c2)
    den = (mx * mx + my * my + c1) * (vx + vy + c2)
    return float(np.mean(num / den))


def ssim(x, ref, side=11, std=1.5, c1=0.01**2, c2=0.03**2):
    """Mean structural similarity on [0, 1] images; symmetric in arguments.

    Color images score as the mean of the per-channel values.
    """

    x = np.asarray(x, dtype=np.float64)
    ref = np.asarray(ref, dtype=np.float64)
    if x.shape != ref.shape:
        raise ValueError("shape mismatch %r vs %r" % (x.shape, ref.shape))
    if x.ndim == 3:
        return float(
            np.mean([_ssim_plane(x[..., c], ref[..., c], side, std, c1, c2) for c in range(x.shape[2])])
        )
    return _ssim_plane(x, ref, side, std, c1, c2)


@dataclass
class ResidualStats:
    """Statistics of weighted residuals 255 * W * (Y - X).

    mean and variance are population moments in 8-bit units; edges/counts
    form a histogram whose edge bins absorb out-of-range values, so counts
    always sum to the pixel count.
    """

    mean: float
    variance: float
    edges: np.ndarray
    counts: np.ndarray

    @property
    def std(self):
        return float(np.sqrt(self.variance))


def weighted_residual_stats(y, x, w, bins=101, lo=-50.0, hi=50.0):
    """Moments and histogram of the weighted residual map in 8-bit units."""
    r = 255.0 * np.asarray(w) * (np.asarray(y) - np.asarray(x))
    flat = r.ravel()
    counts, edges = np.histogram(np.clip(flat, lo, hi), bins=bins, range=(lo, hi))
    return ResidualStats(
        mean=float(flat.mean()),
        variance=float(flat.var()),
        edges=edges,
        counts=counts,
    )


def histogram_csv(stats, path):
    """Write bin_center,count rows for external plotting."""
    centers = 0.5 * (stats.edges[:-1] + stats.edges[1:])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_center", "count"])
        for c, n in zip(centers, stats.counts):
            writer.writerow([repr(float(c)), int(n)])


def equivalence_check(x, b, u, index, chunk=2048):
    """Whole-image vs patch-group squared error of the split residual.

    E1 = ||X - B - U||^2 / (M N); E2 sums ||R_p(X - B - U)||_F^2 over groups
    and divides by m K C with C the group count. Agreement of the two
    validates that aggregation behaves like an (approximate) partition of
    unity.
    """

    z = np.asarray(x) - np.asarray(b) - np.asarray(u)
    e1 = float(np.sum(z * z)) / z.size
    total = 0.0
    c = len(index.exemplars)
    for lo_i in range(0, c, chunk):
        hi_i = min(lo_i + chunk, c)
        mats = gather_members(z, index.members[lo_i:hi_i], index.side)
        total += float(np.sum(mats * mats))
    m = index.side * index.side
    e2 = total / (m * index.k * c)
    return e1, e2
