"""Two-dimensional PCA embedding of augmented-matrix rows."""

from __future__ import annotations

import numpy as np

from .augment import AugmentedCorrelationMatrix
from .core import ConvergenceError, InvalidArgumentError, make_rng


def _leading_component(X, basis, tol, max_iter, rng):
    """Power iteration on ``X^T X`` restricted to the complement of `basis`."""
    d = X.shape[1]
    v = rng.standard_normal(d)
    for u in basis:
        v -= (v @ u) * u
    norm = np.linalg.norm(v)
    if norm == 0:
        return v, 0.0
    v /= norm
    residual = np.inf
    for _ in range(max_iter):
        w = X.T @ (X @ v)
        for u in basis:
            w -= (w @ u) * u
        lam = float(v @ w)
        residual = float(np.linalg.norm(w - lam * v))
        scale = max(abs(lam), np.finfo(float).tiny)
        if residual <= tol * scale or np.linalg.norm(w) == 0:
            return v, max(lam, 0.0)
        v = w / np.linalg.norm(w)
    raise ConvergenceError(
        f"power iteration did not converge in {max_iter} iterations "
        f"(relative residual {residual / max(abs(lam), np.finfo(float).tiny):.3e})",
        residual,
    )


def project_2d(A, tol: float = 1e-8, max_iter: int = 1000, seed: int = 0,
               return_components: bool = False):
    """Scores of the mean-centred rows of `A` on their top two principal axes.

    Each axis is extracted by power iteration and deflated out before the
    next. Axes are signed so their largest-magnitude loading is positive.
    Returns an ``N x 2`` array, plus ``(axes, variances)`` when
    `return_components` is set.
    """
    E = A.entries if isinstance(A, AugmentedCorrelationMatrix) else np.asarray(A, dtype=float)
    if E.ndim != 2 or E.shape[0] < 3:
        raise InvalidArgumentError("need a 2-D array with at least three rows")
    X = E - E.mean(axis=0)
    rng = make_rng(seed)
    axes = []
    variances = []
    for _ in range(2):
        v, lam = _leading_component(X, axes, tol, max_iter, rng)
        if np.linalg.norm(v) > 0:
            v = v * np.sign(v[np.argmax(np.abs(v))])
        axes.append(v)
        variances.append(lam / (X.shape[0] - 1))
    W = np.column_stack(axes)
    coords = X @ W
    if return_components:
        return coords, W, np.array(variances)
    return coords
