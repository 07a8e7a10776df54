"""Impulse pre-filters used to initialize the solver.

Two classic detectors-correctors: the adaptive median filter (AMF) for
salt-and-pepper impulses and the adaptive center-weighted median filter
(ACWMF) for random-valued impulses. Both leave Gaussian noise mostly alone;
their job is to knock out impulses well enough that the first residual-scale
estimate is sane. For mixtures of both impulse kinds they are cascaded, AMF
first so salt-and-pepper extremes cannot corrupt the ACWMF medians.

All window filters use symmetric (reflect) boundary padding.
"""

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import ndimage as ndi

__all__ = ["InitConfig", "amf", "acwmf", "initialize"]


@dataclass(frozen=True)
class InitConfig:
    """Pre-filter parameters.

    amf_max_window is the largest (odd) adaptive-median window side.
    acwmf_thresholds are the four descending decision thresholds matched
    against the center-weighted medians with 6, 4, 2 and 0 extra center
    copies, in that order.
    """

    amf_max_window: int = 39
    acwmf_thresholds: tuple = (40 / 255, 25 / 255, 10 / 255, 5 / 255)
    acwmf_center_weights: tuple = (0, 2, 4, 6)

    def __post_init__(self):
        if self.amf_max_window < 3 or self.amf_max_window % 2 == 0:
            raise ValueError("amf_max_window must be odd and >= 3")
        t = self.acwmf_thresholds
        if len(t) != 4 or any(later >= earlier for earlier, later in zip(t, t[1:])) or min(t) <= 0:
            raise ValueError("acwmf_thresholds must be four descending positive values")
        if tuple(sorted(self.acwmf_center_weights)) != (0, 2, 4, 6):
            raise ValueError("acwmf_center_weights must be the set {0, 2, 4, 6}")


def _amf_plane(img, max_window):
    out = img.copy()
    undecided = np.ones(img.shape, dtype=bool)
    w = 3
    while True:
        med = ndi.median_filter(img, size=w, mode="reflect")
        if undecided.any():
            mn = ndi.minimum_filter(img, size=w, mode="reflect")
            mx = ndi.maximum_filter(img, size=w, mode="reflect")
            # the window median is trusted once it is not itself an extreme
            trusted = (med > mn) & (med < mx)
            newly = undecided & trusted
            keep = (img > mn) & (img < mx)
            out[newly] = np.where(keep[newly], img[newly], med[newly])
            undecided &= ~trusted
        if not undecided.any():
            return out
        if w >= max_window:
            out[undecided] = med[undecided]
            return out
        w += 2


def amf(img, cfg=InitConfig()):
    """Adaptive median filter.

    Per pixel, the window grows from 3x3 in steps of 2 until its median lies
    strictly between the window extremes (or the size cap is hit). The center
    is kept if it is itself strictly between those extremes, else replaced by
    the window median; pixels whose window hit the cap take the median of the
    largest window.
    """

    if img.ndim == 3:
        return np.stack([_amf_plane(img[..., c], cfg.amf_max_window) for c in range(img.shape[2])], axis=2)
    return _amf_plane(img, cfg.amf_max_window)


def _acwmf_plane(img, cfg):
    h, w = img.shape
    padded = np.pad(img, 1, mode="symmetric")
    win = sliding_window_view(padded, (3, 3)).reshape(h, w, 9)

    medians = {}
    for reps in cfg.acwmf_center_weights:
        if reps == 0:
            vals = win
        else:
            vals = np.concatenate([win, np.repeat(img[..., None], reps, axis=2)], axis=2)
        medians[reps] = np.median(vals, axis=2)

    replace = np.zeros(img.shape, dtype=bool)
    for reps, thr in zip((6, 4, 2, 0), cfg.acwmf_thresholds):
        replace |= np.abs(medians[reps] - img) > thr
    return np.where(replace, medians[0], img)


def acwmf(img, cfg=InitConfig()):
    """Adaptive center-weighted median filter for random-valued impulses.

    For each pixel the 3x3 window median is computed with 0, 2, 4 and 6 extra
    copies of the center value (odd multisets of 9, 11, 13, 15 elements). If
    any |median - center| exceeds its threshold, the center is replaced by
    the plain 3x3 median, else kept.
    """

    if img.ndim == 3:
        return np.stack([_acwmf_plane(img[..., c], cfg) for c in range(img.shape[2])], axis=2)
    return _acwmf_plane(img, cfg)


def initialize(noisy, kind, cfg=InitConfig()):
    """Produce the solver's starting estimate for the declared impulse kind.

    kind 'spin' runs the adaptive median filter, 'rvin' the center-weighted
    median filter, 'both' the cascade (AMF then ACWMF).
    """

    if kind == "spin":
        return amf(noisy, cfg)
    if kind == "rvin":
        return acwmf(noisy, cfg)
    if kind == "both":
        return acwmf(amf(noisy, cfg), cfg)
    raise ValueError("kind must be one of spin, rvin, both; got %r" % (kind,))
