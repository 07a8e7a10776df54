"""Joint estimation of the clean image, per-pixel fidelity weights, and the
Gaussian noise level for mixed Gaussian-impulse noise.

The fidelity term is a weighted quadratic whose weights come from a
heavy-tailed (Pareto) prior on their inverses: pixels whose residual exceeds
sqrt(gamma) * sigma get weight sqrt(gamma) * sigma / |residual|, the rest
keep weight 1, so impulse pixels are softly excluded and the surviving
weighted residuals look Gaussian at level sigma. The pixel-wise shape
parameter gamma adapts to the local residual scale through a windowed median
absolute deviation (MAD): quiet regions push gamma toward 1 (aggressive
down-weighting of outliers), busy regions relax it.

The image prior is a nuclear norm on stacks of similar patches, handled by a
split-Bregman loop: a closed-form data-fit update, a singular-value
soft-thresholding step per patch group with overlap-normalized aggregation,
and a Bregman correction. The threshold follows the 8-bit convention noise
levels are quoted in: theta = 2 sqrt(2) sigma8^2 expressed on the [0, 1]
intensity scale (divide by 255).

sigma itself is re-estimated each outer iteration from the weighted
residuals; the first iteration uses a robust MAD scale of the pre-filter
residual instead, since the weights start at 1 and surviving impulses would
inflate the plain estimate.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from rwe.image import clamp
from rwe.metrics import equivalence_check
from rwe.metrics import psnr as _psnr
from rwe.metrics import ssim as _ssim
from rwe.metrics import weighted_residual_stats
from rwe.linalg import nuclear_norm, svt_batch
from rwe.noise import GAUSS
from rwe.patches import (
    build_group_index,
    gather_members,
    scatter_add,
    scatter_counts,
)
from rwe.prefilter import InitConfig, initialize

__all__ = [
    "SolverConfig",
    "SolverState",
    "NumericalError",
    "IterationRecord",
    "DenoiseReport",
    "initial_sigma",
    "detail_sigma",
    "bregman_coupling",
    "update_gamma",
    "update_weights_pareto",
    "update_weights_rcsr",
    "update_weights_oracle",
    "update_sigma",
    "x_closed_form",
    "inner_bregman_loop",
    "denoise",
]

_WEIGHT_RULES = ("pareto", "rcsr", "ones", "oracle")


class NumericalError(RuntimeError):
    """Raised when the solver produces non-finite values."""


@dataclass(frozen=True)
class SolverConfig:
    """Solver parameters. sigma-related quantities are on the [0, 1] scale."""

    patch_side: int = 11
    k: int = 60
    stride: int = 4
    search_window: int = 31
    beta: float = 5.0
    inner_iters: int = 8
    outer_iters: int = 3
    regroup_every: int = 4
    epsilon: float = 1e-6
    sigma_floor: float = 1e-4
    theta_coeff: float = 2.0 * math.sqrt(2.0)
    weight_rule: str = "pareto"
    xi: float = 0.0  # rcsr decay scale; 0 selects the default 10 sigma^2
    gamma_scope: str = "local"

    def __post_init__(self):
        if self.patch_side < 3 or self.patch_side % 2 == 0:
            raise ValueError("patch_side must be odd and >= 3")
        if min(self.k, self.stride, self.inner_iters, self.outer_iters) < 1:
            raise ValueError("k, stride, inner_iters, outer_iters must be >= 1")
        if self.search_window % 2 == 0:
            raise ValueError("search_window must be odd")
        if self.beta <= 0 or self.epsilon <= 0 or self.sigma_floor <= 0:
            raise ValueError("beta, epsilon, sigma_floor must be > 0")
        if self.weight_rule not in _WEIGHT_RULES:
            raise ValueError("weight_rule must be one of %s" % (_WEIGHT_RULES,))
        if self.gamma_scope not in ("local", "global"):
            raise ValueError("gamma_scope must be local or global")
        if self.xi < 0:
            raise ValueError("xi must be >= 0")

    def theta(self, sigma):
        # threshold on singular values; the quadratic lives on the 8-bit scale
        return self.theta_coeff * (255.0 * sigma) ** 2 / 255.0

    def rcsr_xi(self, sigma):
        return self.xi if self.xi > 0 else 10.0 * sigma * sigma


@dataclass
class SolverState:
    """Mutable state threaded through the outer loop (one image plane)."""

    x: np.ndarray
    w: np.ndarray
    u: np.ndarray
    b: np.ndarray
    sigma: float
    gamma: np.ndarray
    groups: object
    counts: np.ndarray


@dataclass
class IterationRecord:
    iteration: int
    sigma: float
    objective: float
    e1: float
    e2: float
    psnr: float | None
    ssim: float | None
    mean_weighted_residual: float
    var_weighted_residual: float
    w_max: float = 0.0


@dataclass
class DenoiseReport:
    iterations: list = field(default_factory=list)
    init_psnr: float | None = None
    init_ssim: float | None = None
    # final per-pixel weights, stacked like the input (planes on axis 2 for
    # color), for residual-calibration analysis downstream
    weights: np.ndarray | None = None

    @property
    def final_psnr(self):
        return self.iterations[-1].psnr if self.iterations else None

    @property
    def final_ssim(self):
        return self.iterations[-1].ssim if self.iterations else None

    def to_csv(self, path):
        import csv

        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                [
                    "iter",
                    "sigma",
                    "objective",
                    "E1",
                    "E2",
                    "psnr",
                    "ssim",
                    "mean_weighted_residual",
                    "var_weighted_residual",
                ]
            )
            for r in self.iterations:
                writer.writerow(
                    [
                        r.iteration,
                        repr(r.sigma),
                        repr(r.objective),
                        repr(r.e1),
                        repr(r.e2),
                        "" if r.psnr is None else repr(r.psnr),
                        "" if r.ssim is None else repr(r.ssim),
                        repr(r.mean_weighted_residual),
                        repr(r.var_weighted_residual),
                    ]
                )


def bregman_coupling(cfg, sigma):
    """Quadratic coupling t for the X update, chosen on singular-value scale.

    At the split-Bregman balance point the low-rank step acts like a nuclear
    prox on the data with effective threshold theta * t / W^2. Random-matrix
    scaling puts the noise singular values of an m x K patch stack below
    sigma (sqrt(m) + sqrt(K)), so t is set to hold the effective threshold at
    a fixed fraction of that bulk edge (beta = 5 puts it at 0.45). A plain
    t = beta sigma^2 misses this by orders of magnitude at the range ends:
    the effective threshold must grow linearly in sigma, not quartically.

    The bulk law alone diverges as sigma -> 0 (t ~ 1/sigma), which would pin
    X to the prior iterate exactly when the data deserve full trust. Below
    the smallest calibrated noise level (10 on the 8-bit scale) a cubic
    rolloff restores the vanishing-coupling limit of t = beta sigma^2, so a
    near-clean input converges to Y wherever the weights allow it; the factor
    is 1 at and above the calibration point, leaving the noisy regime alone.
    """

    m = cfg.patch_side**2
    bulk = sigma * (math.sqrt(m) + math.sqrt(cfg.k))
    fidelity = min(1.0, (255.0 * sigma / 10.0) ** 3)
    return min(1.0, 0.09 * cfg.beta * bulk / cfg.theta(sigma) * fidelity)


def _global_mad(values):
    med = np.median(values)
    return float(np.median(np.abs(values - med)))


def initial_sigma(residual, sigma_floor):
    """Robust scale of the pre-filter residual: 1.4826 * MAD, floored."""
    return max(sigma_floor, 1.4826 * _global_mad(np.asarray(residual).ravel()))


def detail_sigma(x0, untouched, sigma_floor):
    """Noise scale from Haar-like second differences of the pre-filter output.

    The residual Y - X0 is identically zero wherever the pre-filter kept the
    pixel, so its MAD goes degenerate once more than half the pixels are
    kept; the surviving Gaussian noise is still visible in the image itself.
    d = (a - b - c + d)/2 over 2x2 quads has variance sigma^2 under i.i.d.
    noise and cancels locally linear structure. Quads are restricted to
    all-kept pixels (pure noise, no median-filtered neighbors); if too few
    qualify, all quads are used.
    """

    d = 0.5 * (x0[:-1, :-1] - x0[:-1, 1:] - x0[1:, :-1] + x0[1:, 1:])
    keep = untouched[:-1, :-1] & untouched[:-1, 1:] & untouched[1:, :-1] & untouched[1:, 1:]
    vals = np.abs(d[keep]) if keep.sum() >= 100 else np.abs(d).ravel()
    return max(sigma_floor, 1.4826 * float(np.median(vals)))


def update_gamma(y, x_prev, cfg):
    """Shape parameters gamma = exp(-MAD(window of Y - X_prev)).

    The window is patch_side x patch_side with symmetric padding; MAD is the
    median absolute deviation about the window median. gamma_scope 'global'
    replaces the windowed MAD with one image-wide value.
    """

    s = np.asarray(y) - np.asarray(x_prev)
    if cfg.gamma_scope == "global":
        return np.full(s.shape, np.exp(-_global_mad(s.ravel())))
    side = cfg.patch_side
    half = side // 2
    pad = np.pad(s, half, mode="symmetric")
    h, w = s.shape
    out = np.empty_like(s)
    # row chunks keep the (rows, w, side*side) window tensor small
    chunk = max(1, 4_000_000 // (w * side * side))
    view = sliding_window_view(pad, (side, side))
    for lo in range(0, h, chunk):
        hi = min(lo + chunk, h)
        win = view[lo:hi].reshape(hi - lo, w, side * side)
        med = np.median(win, axis=2)
        mad = np.median(np.abs(win - med[..., None]), axis=2)
        out[lo:hi] = np.exp(-mad)
    return out


def update_weights_pareto(y, x, sigma, gamma, epsilon):
    """Closed-form weights under the Pareto prior.

    With e = |Y - X|: weight sqrt(gamma) * sigma / (e + epsilon) where
    sqrt(gamma) * sigma < e, else 1.
    """

    e = np.abs(np.asarray(y) - np.asarray(x))
    bound = np.sqrt(gamma) * sigma
    return np.where(bound < e, bound / (e + epsilon), 1.0)


def update_weights_rcsr(y, x, xi):
    """Residual-driven exponential weights, capped at exp(-1/2)."""
    if xi <= 0:
        raise ValueError("xi must be > 0, got %r" % (xi,))
    r2 = (np.asarray(y) - np.asarray(x)) ** 2
    return np.exp(-0.5 - r2 / (2.0 * xi))


def update_weights_oracle(mask):
    """Ground-truth weights from a synthesis mask: 1 on Gaussian pixels."""
    return (np.asarray(mask) == GAUSS).astype(np.float64)


def update_sigma(y, x, w, sigma_floor):
    """Noise level from the weighted residual energy, floored."""
    r = np.asarray(w) * (np.asarray(y) - np.asarray(x))
    return max(sigma_floor, float(np.sqrt(np.mean(r * r))))


def x_closed_form(y, w, u, b, beta, sigma):
    """Minimizer of the weighted data fit plus the Bregman penalty.

    X = (W^2 Y + beta sigma^2 (U + B)) / (W^2 + beta sigma^2), a pixel-wise
    convex combination of Y and U + B.
    """

    w2 = np.asarray(w) ** 2
    t = beta * sigma * sigma
    return (w2 * np.asarray(y) + t * (np.asarray(u) + np.asarray(b))) / (w2 + t)


def _low_rank_step(src, groups, counts, theta, width):
    """Per-group singular-value shrinkage of src, aggregated by deposit count."""
    num = np.zeros(src.size)
    members = groups.members
    side = groups.side
    chunk = max(1, 16_000_000 // (side * side * groups.k))
    for lo in range(0, members.shape[0], chunk):
        hi = min(lo + chunk, members.shape[0])
        mats = gather_members(src, members[lo:hi], side)
        shrunk = svt_batch(mats, theta)
        scatter_add(num, members[lo:hi], side, width, shrunk)
    return (num / counts).reshape(src.shape)


def inner_bregman_loop(y, state, cfg, trace=False):
    """Split-Bregman alternation at fixed weights and noise level.

    Entry resets U to X and B to 0. Each pass runs the closed-form data-fit
    update, the per-group singular-value shrinkage with threshold
    theta(sigma) aggregated back to the image, and the Bregman correction
    B += U - X. Returns the per-pass whole-image/per-group consistency pair
    (E1, E2) of the aggregation residual X - B - U, evaluated with the B used
    by the shrinkage step; with trace=True the full per-pass list is
    returned, else the final pair.
    """

    x = state.x
    u = x.copy()
    b = np.zeros_like(x)
    theta = cfg.theta(state.sigma)
    coupling = bregman_coupling(cfg, state.sigma)
    width = x.shape[1]
    pairs = []
    for _ in range(cfg.inner_iters):
        x = x_closed_form(y, state.w, u, b, coupling / state.sigma**2, state.sigma)
        u = _low_rank_step(x - b, state.groups, state.counts, theta, width)
        pairs.append(equivalence_check(x, b, u, state.groups))
        b = b + (u - x)
    state.x, state.u, state.b = x, u, b
    return pairs if trace else pairs[-1]


def _objective(y, state, cfg):
    """Reported objective: weighted fit, nuclear norms, weight prior, log sigma."""
    sigma = state.sigma
    r = state.w * (y - state.x)
    fit = float(np.sum(r * r)) / (2.0 * sigma * sigma)
    m = cfg.patch_side**2
    mn = y.size
    alpha = cfg.beta * mn / (m * cfg.k)
    lam = cfg.theta(sigma) * alpha
    members = state.groups.members
    nuclear = 0.0
    chunk = max(1, 16_000_000 // (m * cfg.k))
    for lo in range(0, members.shape[0], chunk):
        hi = min(lo + chunk, members.shape[0])
        mats = gather_members(state.x, members[lo:hi], cfg.patch_side)
        nuclear += float(nuclear_norm(mats).sum())
    prior = float(np.sum(np.abs(state.gamma * np.log(state.w + cfg.epsilon))))
    return fit + lam * nuclear + prior + mn * math.log(sigma)


def _check_state(state):
    if not (np.all(state.w >= 0.0) and np.all(state.w <= 1.0)):
        raise NumericalError("weights left [0, 1]")
    if not (np.all(state.gamma > 0.0) and np.all(state.gamma <= 1.0)):
        raise NumericalError("gamma left (0, 1]")
    if not np.isfinite(state.x).all():
        raise NumericalError("estimate is not finite")


def _denoise_plane(y, x0, cfg, mask=None):
    """Outer loop on one image plane; returns per-iteration snapshots."""
    h, w_img = y.shape
    groups = build_group_index(x0, cfg.patch_side, cfg.k, cfg.stride, cfg.search_window)
    counts = scatter_counts(groups, h, w_img)
    # Robust first noise estimate. The residual MAD alone is degenerate when
    # the pre-filter keeps most pixels (majority of residuals exactly zero),
    # and re-estimation can only shrink sigma, never recover it, so take the
    # larger of the residual scale and the kept-quad detail scale.
    sigma_detail = detail_sigma(x0, y == x0, cfg.sigma_floor)
    sigma0 = max(initial_sigma(y - x0, cfg.sigma_floor), sigma_detail)
    # The weight cap makes the re-estimate a strict contraction (each term of
    # the weighted residual is at most sqrt(gamma) sigma), so left alone sigma
    # walks below the measured noise level and the prior fades. Floor it at
    # the independent detail estimate: the Gaussian level has been measured
    # once and no re-estimate should claim less noise than that.
    sigma_min = max(cfg.sigma_floor, sigma_detail)
    state = SolverState(
        x=x0.copy(),
        w=np.ones_like(y),
        u=x0.copy(),
        b=np.zeros_like(y),
        sigma=sigma0,
        gamma=np.ones_like(y),
        groups=groups,
        counts=counts,
    )
    snapshots = []
    for t in range(1, cfg.outer_iters + 1):
        if t > 1:
            state.sigma = update_sigma(y, state.x, state.w, sigma_min)
        state.gamma = update_gamma(y, state.x, cfg)
        if cfg.weight_rule == "pareto":
            state.w = update_weights_pareto(y, state.x, state.sigma, state.gamma, cfg.epsilon)
        elif cfg.weight_rule == "rcsr":
            state.w = update_weights_rcsr(y, state.x, cfg.rcsr_xi(state.sigma))
        elif cfg.weight_rule == "ones":
            state.w = np.ones_like(y)
        else:
            if mask is None:
                raise ValueError("the oracle weight rule needs the synthesis mask")
            state.w = update_weights_oracle(mask)
        if cfg.regroup_every > 0 and t % cfg.regroup_every == 0:
            state.groups = build_group_index(
                state.x, cfg.patch_side, cfg.k, cfg.stride, cfg.search_window
            )
            state.counts = scatter_counts(state.groups, h, w_img)
        e1, e2 = inner_bregman_loop(y, state, cfg)
        _check_state(state)
        snapshots.append(
            {
                "iteration": t,
                "x": state.x.copy(),
                "w": state.w.copy(),
                "sigma": state.sigma,
                "objective": _objective(y, state, cfg),
                "e1": e1,
                "e2": e2,
            }
        )
    return snapshots


def denoise(y, cfg=SolverConfig(), kind="both", ref=None, mask=None, init_cfg=InitConfig()):
    """Restore an image corrupted by mixed Gaussian-impulse noise.

    Parameters
    ----------
    y : ndarray
        Noisy [0, 1] image, (H, W) or (H, W, 3).
    cfg : SolverConfig
    kind : str
        Impulse kind for the pre-filter: 'spin', 'rvin', or 'both'.
    ref : ndarray, optional
        Clean reference; when given, per-iteration PSNR/SSIM are reported.
    mask : ndarray, optional
        Synthesis label map, required by the oracle weight rule.
    init_cfg : InitConfig

    Returns
    -------
    (x, report)
        x is the restored image clamped to [0, 1]; report carries one record
        per outer iteration plus the pre-filter scores.
    """

    y = np.asarray(y, dtype=np.float64)
    x0 = initialize(y, kind, init_cfg)
    report = DenoiseReport()
    if ref is not None:
        report.init_psnr = _psnr(x0, ref)
        report.init_ssim = _ssim(x0, ref)

    if y.ndim == 2:
        plane_snaps = [_denoise_plane(y, x0, cfg, mask=mask)]
    else:
        plane_snaps = [
            _denoise_plane(y[..., c], x0[..., c], cfg, mask=None if mask is None else mask[..., c])
            for c in range(y.shape[2])
        ]

    n_iters = cfg.outer_iters
    for t in range(n_iters):
        snaps = [p[t] for p in plane_snaps]
        if y.ndim == 2:
            xt = snaps[0]["x"]
            wt = snaps[0]["w"]
        else:
            xt = np.stack([s["x"] for s in snaps], axis=2)
            wt = np.stack([s["w"] for s in snaps], axis=2)
        stats = weighted_residual_stats(y, xt, wt)
        report.iterations.append(
            IterationRecord(
                iteration=t + 1,
                sigma=float(np.sqrt(np.mean([s["sigma"] ** 2 for s in snaps]))),
                objective=float(np.sum([s["objective"] for s in snaps])),
                e1=float(np.mean([s["e1"] for s in snaps])),
                e2=float(np.mean([s["e2"] for s in snaps])),
                psnr=None if ref is None else _psnr(clamp(xt), ref),
                ssim=None if ref is None else _ssim(clamp(xt), ref),
                mean_weighted_residual=stats.mean,
                var_weighted_residual=stats.variance,
                w_max=float(wt.max()),
            )
        )

    final = plane_snaps[0][-1]["x"] if y.ndim == 2 else np.stack(
        [p[-1]["x"] for p in plane_snaps], axis=2
    )
    report.weights = plane_snaps[0][-1]["w"] if y.ndim == 2 else np.stack(
        [p[-1]["w"] for p in plane_snaps], axis=2
    )
    if not np.isfinite(final).all():
        raise NumericalError("solver produced non-finite intensities")
    return clamp(final), report
