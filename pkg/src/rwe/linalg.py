"""Dense SVD and singular-value soft-thresholding for patch-group matrices.

svt is the proximal operator of theta * nuclear norm: it shrinks every
singular value by theta and floors at zero. The batched variant runs on
stacks of group matrices via an eigendecomposition of the Gram matrix on the
smaller side: for A = U S V^T, A^T A = V S^2 V^T, so

    A (V f V^T) = U (S f) V^T,  f_i = max(s_i - theta, 0) / s_i,

which is the thresholded reconstruction without forming U. For theta = 0 the
projector V V^T spans the full eigenbasis and the input is reproduced exactly.
"""

import numpy as np

__all__ = ["svd", "svt", "svt_batch", "nuclear_norm"]


def svd(a):
    """Thin SVD (H, S, V) with H diag(S) V^T = A.

    S is non-negative descending; H and V have orthonormal columns. Raises
    ValueError on non-finite input.
    """

    a = np.asarray(a, dtype=np.float64)
    if not np.all(np.isfinite(a)):
        raise ValueError("svd input must be finite")
    h, s, vt = np.linalg.svd(a, full_matrices=False)
    return h, s, vt.T


def svt(a, theta):
    """Soft-threshold the singular values of a by theta."""
    if theta < 0:
        raise ValueError("theta must be >= 0, got %r" % (theta,))
    h, s, v = svd(a)
    return (h * np.maximum(s - theta, 0.0)) @ v.T


def _gram_factors(stack, theta):
    # eigh of the Gram matrix on the trailing side; ascending eigenvalues
    gram = np.swapaxes(stack, -2, -1) @ stack
    lam, vec = np.linalg.eigh(gram)
    s = np.sqrt(np.maximum(lam, 0.0))
    return s, vec


def svt_batch(stack, theta):
    """svt applied to every matrix of a (n, rows, cols) stack.

    Uses the Gram trick on the smaller dimension; transposes wide stacks so
    the eigenproblem is always on the short side.
    """

    if theta < 0:
        raise ValueError("theta must be >= 0, got %r" % (theta,))
    stack = np.asarray(stack, dtype=np.float64)
    n, rows, cols = stack.shape
    if cols > rows:
        return np.swapaxes(svt_batch(np.swapaxes(stack, 1, 2), theta), 1, 2)
    if theta == 0.0:
        return stack.copy()
    s, vec = _gram_factors(stack, theta)
    with np.errstate(divide="ignore", invalid="ignore"):
        f = np.where(s > 0.0, np.maximum(s - theta, 0.0) / np.where(s > 0.0, s, 1.0), 0.0)
    mix = (vec * f[:, None, :]) @ np.swapaxes(vec, 1, 2)
    return stack @ mix


def nuclear_norm(stack):
    """Sum of singular values per matrix of a (n, rows, cols) stack."""
    stack = np.asarray(stack, dtype=np.float64)
    if stack.shape[2] > stack.shape[1]:
        stack = np.swapaxes(stack, 1, 2)
    gram = np.swapaxes(stack, 1, 2) @ stack
    lam = np.linalg.eigvalsh(gram)
    return np.sqrt(np.maximum(lam, 0.0)).sum(axis=1)
