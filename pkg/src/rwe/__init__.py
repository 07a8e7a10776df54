"""Mixed Gaussian-impulse noise removal by reweighted low-rank patch estimation.

The solver jointly estimates the clean image, a per-pixel fidelity weight map
with a heavy-tailed (Pareto) prior, and the Gaussian noise level, alternating
closed-form weight/noise updates with a split-Bregman loop whose low-rank step
soft-thresholds singular values of groups of similar patches.
"""

from rwe.image import clamp, extract_patch, load_image, save_image
from rwe.noise import NoiseSpec, awgn_only, synthesize
from rwe.prefilter import InitConfig, acwmf, amf, initialize
from rwe.solver import DenoiseReport, SolverConfig, denoise

__all__ = [
    "clamp",
    "extract_patch",
    "load_image",
    "save_image",
    "NoiseSpec",
    "awgn_only",
    "synthesize",
    "InitConfig",
    "acwmf",
    "amf",
    "initialize",
    "DenoiseReport",
    "SolverConfig",
    "denoise",
]
