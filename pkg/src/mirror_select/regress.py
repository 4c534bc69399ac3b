"""Least squares, Lasso via cyclic coordinate descent, and k-fold CV.

The Lasso objective throughout is ``(1/2n) ||y - x b||^2 + penalty ||b||_1``
with columns assumed (approximately) standardized; the solver itself uses
per-column norms, so modest deviations (e.g. CV fold subsets of a
standardized matrix) are handled correctly.  No intercept is fitted: callers
center the response.

Solver strategy follows common penalized-path practice: warm starts along a
descending penalty grid, Gram ("covariance") updates when p <= n and
residual ("naive") updates otherwise.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import (
    DidNotConverge,
    NotPositiveDefinite,
    RankDeficient,
    TooManyFeatures,
)
from .linalg import cholesky_solve

logger = logging.getLogger(__name__)

SWEEP_TOL = 1e-7
MAX_SWEEPS = 10_000
GRID_DECADES = 3.0  # penalty grid spans 1e-3 * penalty_max .. penalty_max

# Cross-validation fold fits only feed held-out error curves, so they run at
# a loose tolerance with a small per-grid-point sweep budget (warm starts
# carry most of the work) and stop descending the grid once the active set
# nears the fold's row count (pure interpolation from there on).  The refit
# that is actually returned runs at the full SWEEP_TOL.
CV_FOLD_TOL = 2e-4
CV_FOLD_SWEEPS = 30
CV_ACTIVE_FRACTION = 0.9


def soft_threshold(z: float, gamma: float) -> float:
    """sign(z) * max(|z| - gamma, 0); ``gamma`` must be nonnegative."""
    if gamma < 0:
        raise ValueError("threshold must be nonnegative")
    if z > gamma:
        return z - gamma
    if z < -gamma:
        return z + gamma
    return 0.0


@dataclass(frozen=True)
class LassoFit:
    """A Lasso solution: coefficients, penalty, support, solver diagnostics."""

    coef: np.ndarray
    penalty: float
    support: np.ndarray
    n_sweeps: int
    converged: bool

    def __post_init__(self):
        if self.penalty < 0:
            raise ValueError("penalty must be nonnegative")
        if not np.array_equal(self.support, np.flatnonzero(self.coef)):
            raise ValueError("support must be the nonzero pattern of coef")


@dataclass(frozen=True)
class OlsFit:
    """OLS coefficients on a feature subset plus the residual variance."""

    coef: np.ndarray
    subset: np.ndarray
    residual_variance: float


def penalty_grid(x: np.ndarray, y: np.ndarray, size: int) -> np.ndarray:
    """Log-spaced descending grid from penalty_max = max_j |x_j^T y| / n.

    The smallest grid value is 1e-3 * penalty_max (three decades).
    """
    n = x.shape[0]
    top = float(np.abs(x.T @ y).max() / n)
    top = max(top, 1e-12)
    return np.logspace(math.log10(top), math.log10(top) - GRID_DECADES, size)


def lasso_fit(
    x: np.ndarray,
    y: np.ndarray,
    penalty: float,
    *,
    tol: float = SWEEP_TOL,
    max_sweeps: int = MAX_SWEEPS,
) -> LassoFit:
    """Fit the Lasso at a single penalty by cyclic coordinate descent.

    Converged means the largest coordinate update in a full sweep fell below
    ``tol``; :class:`DidNotConverge` (carrying the partial fit) is raised if
    the sweep cap is reached first.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, p = x.shape
    if penalty < 0:
        raise ValueError("penalty must be nonnegative")
    if penalty == 0 and p > n:
        raise ValueError("penalty 0 requires p <= n")
    beta = np.zeros(p)
    if p <= n:
        gram = x.T @ x
        xty = x.T @ y
        gb = np.zeros(p)
        sweeps, ok = _kernels.cd_gram(
            gram, xty, n, beta, gb, penalty, tol, max_sweeps
        )
    else:
        xf = np.asfortranarray(x)
        resid = y.copy()
        colsq = np.einsum("ij,ij->j", xf, xf) / n
        sweeps, ok = _kernels.cd_naive(
            xf, beta, resid, colsq, penalty, tol, max_sweeps, np.zeros(0)
        )
    fit = LassoFit(
        coef=beta,
        penalty=float(penalty),
        support=np.flatnonzero(beta),
        n_sweeps=int(sweeps),
        converged=bool(ok),
    )
    if not ok:
        raise DidNotConverge(fit)
    return fit


def _fold_assignment(n: int, folds: int, rng: np.random.Generator) -> list[np.ndarray]:
    perm = rng.permutation(n)
    return [np.sort(part) for part in np.array_split(perm, folds)]


def _polish(x, y, beta, penalty, tol, max_sweeps):
    """Finish a warm-started solution at one penalty to full tolerance."""
    n, p = x.shape
    if p <= n:
        gram = x.T @ x
        gb = gram @ beta
        return _kernels.cd_gram(gram, x.T @ y, n, beta, gb, penalty, tol, max_sweeps)
    xf = np.asfortranarray(x)
    resid = y - x @ beta
    colsq = np.einsum("ij,ij->j", xf, xf) / n
    return _kernels.cd_naive(
        xf, beta, resid, colsq, penalty, tol, max_sweeps, np.zeros(0)
    )


def lasso_cv(
    x: np.ndarray,
    y: np.ndarray,
    folds: int,
    grid_size: int,
    rng: np.random.Generator,
    *,
    tol: float = SWEEP_TOL,
    max_sweeps: int = MAX_SWEEPS,
) -> LassoFit:
    """Select the penalty by k-fold CV and refit on the full data.

    The penalty minimizing the mean held-out squared error wins (no
    one-standard-error rule); ties go to the larger penalty.  Fold
    assignment is drawn once from ``rng`` up front.  Fold paths run coarse
    (see CV_FOLD_TOL); the returned refit is converged at ``tol``.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, p = x.shape
    if folds < 2:
        raise ValueError("need at least 2 folds")
    if n < 2 * folds:
        raise ValueError("need n >= 2 * folds")
    grid = penalty_grid(x, y, grid_size)
    assignment = _fold_assignment(n, folds, rng)
    min_train = n - max(part.size for part in assignment)
    gram_mode = p <= min_train
    if gram_mode:
        gram_full = x.T @ x
        xty_full = x.T @ y

    mean_mse = np.zeros(grid.size)
    for held_out in assignment:
        n_train = n - held_out.size
        cap = max(int(CV_ACTIVE_FRACTION * n_train), 1)
        x_out = np.asfortranarray(x[held_out])
        y_out = y[held_out]
        if gram_mode:
            rss = _kernels.cv_errors_gram(
                gram_full - x_out.T @ x_out,
                xty_full - x_out.T @ y_out,
                n_train,
                grid,
                CV_FOLD_TOL,
                CV_FOLD_SWEEPS,
                cap,
                x_out,
                y_out,
            )
        else:
            mask = np.ones(n, dtype=bool)
            mask[held_out] = False
            rss = _kernels.cv_errors_naive(
                np.asfortranarray(x[mask]),
                y[mask],
                grid,
                CV_FOLD_TOL,
                CV_FOLD_SWEEPS,
                cap,
                x_out,
                y_out,
            )
        mean_mse += rss / held_out.size / folds

    best = int(np.argmin(mean_mse))
    # Refit: coarse warm-started descent to the winner, then converge there.
    if gram_mode:
        betas, _, _ = _kernels.lasso_path_gram(
            gram_full, xty_full, n, grid[: best + 1],
            CV_FOLD_TOL, CV_FOLD_SWEEPS, p,
        )
    else:
        betas, _, _ = _kernels.lasso_path_naive(
            np.asfortranarray(x), y, grid[: best + 1],
            CV_FOLD_TOL, CV_FOLD_SWEEPS, p,
        )
    coef = betas[best].copy()
    sweeps, converged = _polish(x, y, coef, float(grid[best]), tol, max_sweeps)
    fit = LassoFit(
        coef=coef,
        penalty=float(grid[best]),
        support=np.flatnonzero(coef),
        n_sweeps=int(sweeps),
        converged=bool(converged),
    )
    if not fit.converged:
        raise DidNotConverge(fit)
    return fit


def ols_fit(x: np.ndarray, y: np.ndarray, subset: np.ndarray) -> OlsFit:
    """OLS on the given columns via the normal equations.

    Raises :class:`TooManyFeatures` when the subset is not smaller than the
    row count and :class:`RankDeficient` when the restricted Gram matrix
    fails the Cholesky pivot test.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    subset = np.asarray(subset, dtype=np.int64)
    n = x.shape[0]
    k = subset.size
    if k >= n:
        raise TooManyFeatures(f"{k} features with only {n} rows")
    xs = x[:, subset]
    gram = xs.T @ xs
    try:
        coef = cholesky_solve(gram, xs.T @ y)
    except NotPositiveDefinite as exc:
        raise RankDeficient(str(exc)) from exc
    rss = float(((y - xs @ coef) ** 2).sum())
    return OlsFit(coef=coef, subset=subset, residual_variance=rss / (n - k))


def kkt_violation(
    x: np.ndarray, y: np.ndarray, coef: np.ndarray, penalty: float
) -> float:
    """Worst-case stationarity violation of a Lasso solution.

    Zero at an exact optimum: inactive coordinates need |gradient| <=
    penalty, active ones need gradient = penalty * sign(coef).
    """
    n = x.shape[0]
    grad = x.T @ (y - x @ coef) / n
    active = coef != 0
    worst = 0.0
    if active.any():
        worst = float(np.abs(grad[active] - penalty * np.sign(coef[active])).max())
    if (~active).any():
        worst = max(worst, float(np.maximum(np.abs(grad[~active]) - penalty, 0.0).max()))
    return worst
