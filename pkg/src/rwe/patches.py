"""Exemplar grids, kNN patch grouping, and overlap-normalized aggregation.

Exemplars sit on a stride grid with the last row/column clamped so patches
align with the image borders (full coverage). Each exemplar's group holds the
K most similar patches inside a square search window, ranked by squared
Euclidean patch distance with ties broken by row-major origin; slot 0 is
always the exemplar itself. Distances are computed as direct squared
differences so structurally identical patches tie at exactly 0.0 and the
ranking is reproducible against a scalar reference.

Aggregation deposits every group column back onto its member footprint and
divides by the per-pixel deposit count (kept as integers, so normalization is
a partition of unity up to float addition error).
"""

import csv
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

__all__ = [
    "PatchGroupIndex",
    "build_exemplar_grid",
    "group_similar",
    "build_group_index",
    "gather",
    "gather_groups",
    "gather_members",
    "scatter_counts",
    "scatter_add",
    "scatter_normalize",
    "dump_index_csv",
]

# memory cap per gather chunk, in float64 elements
_CHUNK_ELEMENTS = 16_000_000


@dataclass
class PatchGroupIndex:
    """Grouping of an image into overlapping similar-patch stacks.

    exemplars: list of (i, j) origins on the stride grid.
    members: (C, K, 2) int array, member origins per group, slot 0 the
        exemplar, remaining slots by ascending (distance, row-major origin).
    distances: (C, K) squared patch distances to the exemplar.
    side, k: patch side length and group size.
    """

    exemplars: list
    members: np.ndarray
    distances: np.ndarray
    side: int
    k: int


def build_exemplar_grid(height, width, side, stride):
    """Origins (i*stride, j*stride) plus clamped last origins covering borders."""
    if side > height or side > width:
        raise ValueError(
            "patch side %d exceeds image %dx%d" % (side, height, width)
        )
    rows = list(range(0, height - side + 1, stride))
    if rows[-1] != height - side:
        rows.append(height - side)
    cols = list(range(0, width - side + 1, stride))
    if cols[-1] != width - side:
        cols.append(width - side)
    return [(i, j) for i in rows for j in cols]


def _window_offsets(window):
    half = window // 2
    d = np.arange(-half, half + 1)
    di = np.repeat(d, window)
    dj = np.tile(d, window)
    return di, dj


def _search_chunk(view, ei, ej, side, k, window):
    """kNN for a chunk of exemplars. ei, ej: (n,) origin arrays.

    Returns members (n, k, 2) and distances (n, k).
    """

    hv, wv = view.shape[0], view.shape[1]
    n = ei.shape[0]
    di, dj = _window_offsets(window)
    ci = ei[:, None] + di[None, :]
    cj = ej[:, None] + dj[None, :]
    valid = (ci >= 0) & (ci < hv) & (cj >= 0) & (cj < wv)
    if int(valid.sum(axis=1).min()) < k:
        raise ValueError(
            "window %d holds fewer than k=%d candidates at some exemplar" % (window, k)
        )
    cic = np.clip(ci, 0, hv - 1)
    cjc = np.clip(cj, 0, wv - 1)

    cand = view[cic, cjc]
    ref = view[ei, ej][:, None]
    dist = ((cand - ref) ** 2).sum(axis=(2, 3))
    dist[~valid] = np.inf

    # candidates are enumerated row-major, so a stable sort on distance alone
    # realizes the (distance, row-major origin) tie-break
    order = np.argsort(dist, axis=1, kind="stable")

    center = (window // 2) * window + (window // 2)
    keep = order != center
    rank = np.cumsum(keep, axis=1)
    sel = keep & (rank <= k - 1)
    chosen = order[sel].reshape(n, k - 1)

    rows = np.arange(n)[:, None]
    mi = np.concatenate([ei[:, None], ci[rows, chosen]], axis=1)
    mj = np.concatenate([ej[:, None], cj[rows, chosen]], axis=1)
    dd = np.concatenate(
        [np.zeros((n, 1)), dist[rows, chosen]], axis=1
    )
    return np.stack([mi, mj], axis=2).astype(np.int64), dd


def group_similar(img, origin, side, k, window):
    """K nearest patches to one exemplar inside its search window.

    Returns (members, distances): members as a list of (i, j) origins with
    the exemplar first, distances as a list of squared patch distances.
    """

    view = sliding_window_view(img, (side, side))
    ei = np.array([origin[0]])
    ej = np.array([origin[1]])
    members, dists = _search_chunk(view, ei, ej, side, k, window)
    return [tuple(m) for m in members[0]], list(dists[0])


def build_group_index(img, side, k, stride, window):
    """Group every exemplar on the stride grid of img."""
    h, w = img.shape
    origins = build_exemplar_grid(h, w, side, stride)
    view = sliding_window_view(img, (side, side))
    ei = np.array([i for i, _ in origins])
    ej = np.array([j for _, j in origins])

    chunk = max(1, _CHUNK_ELEMENTS // (window * window * side * side))
    members = np.empty((len(origins), k, 2), dtype=np.int64)
    distances = np.empty((len(origins), k))
    for lo in range(0, len(origins), chunk):
        hi = min(lo + chunk, len(origins))
        members[lo:hi], distances[lo:hi] = _search_chunk(
            view, ei[lo:hi], ej[lo:hi], side, k, window
        )
    return PatchGroupIndex(
        exemplars=origins, members=members, distances=distances, side=side, k=k
    )


def _vector_offsets(side, width):
    # element r of a patch vector sits at pixel (r % side, r // side)
    r = np.arange(side * side)
    return (r % side) * width + (r // side)


def gather_members(img, members, side):
    """Stack patches for (n, K, 2) member origins into (n, m, K) matrices."""
    view = sliding_window_view(img, (side, side))
    patches = view[members[..., 0], members[..., 1]]
    # (n, K, side, side) -> column-major patch vectors -> columns
    return patches.transpose(0, 1, 3, 2).reshape(*members.shape[:2], side * side).transpose(0, 2, 1)


def gather(img, members, side):
    """Group matrix (m, K) whose column k is the k-th member patch."""
    arr = np.asarray(members, dtype=np.int64).reshape(1, -1, 2)
    return gather_members(img, arr, side)[0]


def gather_groups(img, index):
    """All group matrices of an index as one (C, m, K) array."""
    return gather_members(img, index.members, index.side)


def _flat_targets(members, side, width):
    base = members[..., 0] * width + members[..., 1]
    return base[..., None] + _vector_offsets(side, width)[None, None, :]


def scatter_counts(index, height, width):
    """Per-pixel deposit counts for an index, flat (height*width,) int64."""
    idx = _flat_targets(index.members, index.side, width)
    return np.bincount(idx.ravel(), minlength=height * width)


def scatter_add(num_flat, members, side, width, mats):
    """Accumulate group-matrix values onto a flat image buffer.

    mats: (n, m, K) values aligned with (n, K, 2) members.
    """

    idx = _flat_targets(members, side, width)
    vals = np.ascontiguousarray(np.transpose(mats, (0, 2, 1)))
    num_flat += np.bincount(
        idx.ravel(), weights=vals.ravel(), minlength=num_flat.shape[0]
    )


def scatter_normalize(index, mats, height, width):
    """Average all deposits per pixel: the inverse of gather on full-coverage
    indexes (partition of unity under per-pixel integer counts).

    mats: sequence or array of (m, K) matrices, one per group.
    """

    counts = scatter_counts(index, height, width)
    if counts.min() == 0:
        raise ValueError("grouping does not cover every pixel")
    num = np.zeros(height * width)
    mats = np.asarray(mats)
    chunk = max(1, _CHUNK_ELEMENTS // max(1, mats.shape[1] * mats.shape[2]))
    for lo in range(0, mats.shape[0], chunk):
        hi = min(lo + chunk, mats.shape[0])
        scatter_add(num, index.members[lo:hi], index.side, width, mats[lo:hi])
    return (num / counts).reshape(height, width)


def dump_index_csv(index, path):
    """Write exemplar origin, member origins, and distances per group."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["exemplar_i", "exemplar_j", "member", "i", "j", "distance"])
        for g, (ei, ej) in enumerate(index.exemplars):
            for s in range(index.k):
                mi, mj = index.members[g, s]
                writer.writerow([ei, ej, s, mi, mj, repr(index.distances[g, s])])
