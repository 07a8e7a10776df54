"""Seeded synthesis of mixed Gaussian plus impulse noise.

Mixture model per pixel: with probability s the pixel is salt-and-pepper
(0 or 1, each s/2); otherwise with probability r it is replaced by a uniform
draw in [0, 1] (random-valued impulse); otherwise it receives additive
Gaussian noise. Impulse pixels carry the impulse value only, so the joint
label probabilities are (1-s)(1-r), s/2, s/2, r(1-s).

Randomness comes from counter-based Philox streams keyed by (seed, stage,
channel), one full-grid draw per stage, in the fixed stage order: impulse
selection, salt-vs-pepper split, impulse value, Gaussian. Each pixel's draw is
therefore a pure function of (seed, stage, pixel index), which makes output
bitwise reproducible across platforms and runs.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "GAUSS",
    "SPIN_LOW",
    "SPIN_HIGH",
    "RVIN",
    "NoiseSpec",
    "synthesize",
    "awgn_only",
    "mask_to_bytes",
]

GAUSS = 0
SPIN_LOW = 1
SPIN_HIGH = 2
RVIN = 3

# stage indices for the per-stage RNG streams
_STAGE_SELECT = 0
_STAGE_SALT = 1
_STAGE_VALUE = 2
_STAGE_GAUSS = 3


@dataclass(frozen=True)
class NoiseSpec:
    """Mixed-noise parameters.

    sigma8 is the Gaussian standard deviation in 8-bit units (divided by 255
    internally); spin_ratio and rvin_ratio are the salt-and-pepper and
    random-valued impulse probabilities s and r.
    """

    sigma8: float = 0.0
    spin_ratio: float = 0.0
    rvin_ratio: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.sigma8 < 0:
            raise ValueError("sigma8 must be >= 0, got %r" % (self.sigma8,))
        for name in ("spin_ratio", "rvin_ratio"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError("%s must lie in [0, 1], got %r" % (name, v))


def _stream(seed, stage, channel):
    key = np.array([np.uint64(seed), np.uint64(stage * 8 + channel)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _synthesize_plane(clean, spec, channel):
    shape = clean.shape
    s, r = spec.spin_ratio, spec.rvin_ratio
    sigma = spec.sigma8 / 255.0

    u_sel = _stream(spec.seed, _STAGE_SELECT, channel).random(shape)
    u_salt = _stream(spec.seed, _STAGE_SALT, channel).random(shape)
    q = _stream(spec.seed, _STAGE_VALUE, channel).random(shape)
    g = _stream(spec.seed, _STAGE_GAUSS, channel).standard_normal(shape)

    # one selection draw: [0, s) -> spin, [s, s + (1-s) r) -> rvin, rest gauss
    spin = u_sel < s
    rvin = ~spin & (u_sel < s + (1.0 - s) * r)

    mask = np.full(shape, GAUSS, dtype=np.uint8)
    mask[spin & (u_salt < 0.5)] = SPIN_LOW
    mask[spin & (u_salt >= 0.5)] = SPIN_HIGH
    mask[rvin] = RVIN

    noisy = np.clip(clean + sigma * g, 0.0, 1.0)
    noisy[mask == SPIN_LOW] = 0.0
    noisy[mask == SPIN_HIGH] = 1.0
    noisy[mask == RVIN] = q[mask == RVIN]
    return noisy, mask


def synthesize(clean, spec):
    """Apply the mixed-noise model to a clean [0, 1] image.

    Parameters
    ----------
    clean : ndarray
        (H, W) or (H, W, 3) image in [0, 1].
    spec : NoiseSpec

    Returns
    -------
    (noisy, mask)
        noisy has the input shape with values in [0, 1]; mask holds one of
        GAUSS/SPIN_LOW/SPIN_HIGH/RVIN per pixel (per channel for color, each
        channel drawn independently).
    """

    if clean.ndim == 2:
        return _synthesize_plane(clean, spec, channel=0)
    noisy = np.empty_like(clean)
    mask = np.empty(clean.shape, dtype=np.uint8)
    for c in range(clean.shape[2]):
        noisy[..., c], mask[..., c] = _synthesize_plane(clean[..., c], spec, channel=c)
    return noisy, mask


def awgn_only(clean, sigma8, seed):
    """Additive Gaussian noise at sigma8/255, clamped to [0, 1]."""
    if sigma8 < 0:
        raise ValueError("sigma8 must be >= 0")
    if sigma8 == 0:
        return clean.copy()
    sigma = sigma8 / 255.0
    if clean.ndim == 2:
        g = _stream(seed, _STAGE_GAUSS, 0).standard_normal(clean.shape)
    else:
        g = np.stack(
            [
                _stream(seed, _STAGE_GAUSS, c).standard_normal(clean.shape[:2])
                for c in range(clean.shape[2])
            ],
            axis=2,
        )
    return np.clip(clean + sigma * g, 0.0, 1.0)


def mask_to_bytes(mask):
    """Label map as an 8-bit image: GAUSS 0, SPIN_LOW 64, SPIN_HIGH 128, RVIN 192."""
    return (mask.astype(np.uint8) * 64).astype(np.uint8)
