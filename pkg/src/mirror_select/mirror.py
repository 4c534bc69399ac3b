"""Mirror statistics, FDP estimation, and the single-data-split selector.

A mirror statistic combines two independently estimated coefficients for the
same feature: ``sign(b1 * b2) * f(|b1|, |b2|)`` where ``f`` is one of three
nonnegative, symmetric, coordinatewise-monotone contrasts.  For a null
feature the statistic is symmetric about zero, so the count of statistics
below ``-t`` conservatively estimates the false positives above ``t``; the
selection cutoff is the smallest threshold whose estimated FDP is within the
designated level.

The end-to-end selector splits the rows in half, screens features with
cross-validated Lasso on one half, refits the screened features by OLS on
the other half, and thresholds the resulting mirror statistics.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional

import numpy as np

from . import _kernels
from .linalg import Dataset, SplitIndex, random_split, standardize
from .regress import LassoFit, lasso_cv, ols_fit

if TYPE_CHECKING:  # pragma: no cover
    from .mds import InclusionRates


class Contrast(enum.Enum):
    """How the two coefficient magnitudes are combined."""

    MIN2 = "min2"  # 2 * min(u, v)
    PRODUCT = "product"  # u * v
    SUM = "sum"  # u + v


def mirror_statistic(b1: float, b2: float, contrast: Contrast) -> float:
    """sign(b1 * b2) * f(|b1|, |b2|); exactly 0 if either coefficient is 0."""
    if b1 == 0.0 or b2 == 0.0:
        return 0.0
    u, v = abs(b1), abs(b2)
    if contrast is Contrast.MIN2:
        magnitude = 2.0 * min(u, v)
    elif contrast is Contrast.PRODUCT:
        magnitude = u * v
    elif contrast is Contrast.SUM:
        magnitude = u + v
    else:
        raise ValueError(f"unknown contrast {contrast!r}")
    return float(np.sign(b1 * b2)) * magnitude


def mirror_values(
    coef1: np.ndarray, coef2: np.ndarray, contrast: Contrast
) -> np.ndarray:
    """Vectorized :func:`mirror_statistic` over paired coefficient vectors."""
    u = np.abs(coef1)
    v = np.abs(coef2)
    if contrast is Contrast.MIN2:
        magnitude = 2.0 * np.minimum(u, v)
    elif contrast is Contrast.PRODUCT:
        magnitude = u * v
    elif contrast is Contrast.SUM:
        magnitude = u + v
    else:
        raise ValueError(f"unknown contrast {contrast!r}")
    out = np.sign(coef1 * coef2) * magnitude
    out[(coef1 == 0.0) | (coef2 == 0.0)] = 0.0
    return out


@dataclass(frozen=True)
class SplitFit:
    """The paired per-half coefficient vectors behind a mirror vector."""

    screening_coefs: np.ndarray  # Lasso estimates from the first half, full length
    refit_coefs: np.ndarray  # OLS estimates from the second half, 0 off screen
    screened: np.ndarray  # features carried into the second-half refit
    split: SplitIndex
    screening_fit: Optional[LassoFit] = None


@dataclass(frozen=True)
class MirrorVector:
    """Per-feature mirror statistics with their contrast and provenance.

    Features that never entered the second-stage refit carry exactly 0.
    """

    values: np.ndarray
    contrast: Contrast
    fit: Optional[SplitFit] = None


@dataclass(frozen=True)
class SelectionResult:
    """A selected feature set with its cutoff and diagnostics.

    ``cutoff`` is +inf exactly when no threshold met the level (empty
    selection by infeasibility).  For multi-split selection the cutoff is an
    inclusion rate, not a mirror value, and ``estimated_fdp`` holds the spent
    rate budget; ``rates`` is populated instead of ``mirror``.
    """

    selected: np.ndarray
    cutoff: float
    estimated_fdp: float
    mirror: Optional[MirrorVector] = None
    rates: Optional["InclusionRates"] = None
    flags: tuple[str, ...] = field(default=())


def _as_values(m) -> np.ndarray:
    if isinstance(m, MirrorVector):
        return m.values
    return np.asarray(m, dtype=np.float64)


def estimated_fdp(m, threshold: float) -> float:
    """#{m <= -t} / max(#{m > t}, 1) — the conservative FDP estimate.

    The negative tail is closed: cutoff candidates are the attained
    magnitudes, and a statistic sitting exactly at ``-t`` must keep counting
    against the threshold there, otherwise the top-ranked feature slips
    through under a global null and control is lost.  At any non-attained
    threshold the two conventions agree.
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    values = _as_values(m)
    n_below = int((values <= -threshold).sum())
    n_above = int((values > threshold).sum())
    return n_below / max(n_above, 1)


def select_cutoff(m, level: float) -> tuple[float, float]:
    """Smallest candidate threshold with estimated FDP within ``level``.

    Candidates are the distinct nonzero |values|; a candidate only counts
    while it still selects something, so the result is ``(inf, nan)`` when
    no nonempty selection meets the level.
    """
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    values = np.ascontiguousarray(_as_values(m), dtype=np.float64)
    cutoff, est = _kernels.cutoff_scan(values, level)
    return float(cutoff), float(est)


def _selection_from(values: np.ndarray, cutoff: float) -> np.ndarray:
    if np.isinf(cutoff):
        return np.empty(0, dtype=np.int64)
    return np.flatnonzero(values > cutoff)


def ds_select(
    data: Dataset,
    level: float,
    contrast: Contrast,
    rng: np.random.Generator,
    cv_folds: int = 10,
    grid_size: int = 100,
) -> SelectionResult:
    """Single data-split selection for a linear model.

    Splits the rows in half, runs CV Lasso on the first half and OLS on the
    second restricted to the screened features (each half re-standardized
    and re-centered first), and thresholds the mirror statistics at
    ``level``.  Features outside the screen get mirror statistic 0.  An
    empty screen yields an empty selection, flagged ``"empty-screen"``.
    """
    if not data.standardized:
        raise ValueError("ds_select requires standardized data")
    split = random_split(data.n, rng)
    x1, y1 = _restandardized_half(data, split.first_half)
    x2, y2 = _restandardized_half(data, split.second_half)

    screen_fit = lasso_cv(x1, y1, cv_folds, grid_size, rng)
    screened = screen_fit.support
    if screened.size == 0:
        mirror = MirrorVector(np.zeros(data.p), contrast, None)
        return SelectionResult(
            selected=np.empty(0, dtype=np.int64),
            cutoff=np.inf,
            estimated_fdp=np.nan,
            mirror=mirror,
            flags=("empty-screen",),
        )
    # OLS needs strictly more rows than columns; an oversized screen keeps
    # only the largest first-stage coefficients.
    if screened.size >= data.n // 2:
        keep = data.n // 4
        order = np.argsort(-np.abs(screen_fit.coef[screened]), kind="stable")
        screened = np.sort(screened[order[:keep]])

    refit = ols_fit(x2, y2, screened)
    refit_coefs = np.zeros(data.p)
    refit_coefs[screened] = refit.coef

    values = mirror_values(screen_fit.coef, refit_coefs, contrast)
    cutoff, est = select_cutoff(values, level)
    mirror = MirrorVector(
        values,
        contrast,
        SplitFit(
            screening_coefs=screen_fit.coef,
            refit_coefs=refit_coefs,
            screened=screened,
            split=split,
            screening_fit=screen_fit,
        ),
    )
    return SelectionResult(
        selected=_selection_from(values, cutoff),
        cutoff=cutoff,
        estimated_fdp=est,
        mirror=mirror,
    )


def _restandardized_half(
    data: Dataset, rows: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Half-sample design re-standardized, response re-centered."""
    xh, _, _ = standardize(data.x[rows])
    yh = data.y[rows]
    return xh, yh - yh.mean()


# ---------------------------------------------------------------------------
# Normal means specialization
# ---------------------------------------------------------------------------


def normal_means_mirror(mean1: float, mean2: float) -> float:
    """|mean1 + mean2| - |mean1 - mean2| for a pair of half-sample means.

    Algebraically this equals 2 * sign(mean1 * mean2) * min(|mean1|,
    |mean2|), i.e. the MIN2 contrast.
    """
    return abs(mean1 + mean2) - abs(mean1 - mean2)


def normal_means_ds(
    x: np.ndarray, level: float, rng: np.random.Generator
) -> SelectionResult:
    """Single data-split selection on the column-means testing problem.

    Rows of ``x`` are independent observations of p unit-variance Gaussian
    coordinates; the two coefficient estimates per column are the
    half-sample means.
    """
    x = np.asarray(x, dtype=np.float64)
    split = random_split(x.shape[0], rng)
    mean1 = x[split.first_half].mean(axis=0)
    mean2 = x[split.second_half].mean(axis=0)
    values = np.abs(mean1 + mean2) - np.abs(mean1 - mean2)
    cutoff, est = select_cutoff(values, level)
    return SelectionResult(
        selected=_selection_from(values, cutoff),
        cutoff=cutoff,
        estimated_fdp=est,
        mirror=MirrorVector(values, Contrast.MIN2, None),
    )
