"""Numba kernels: Cholesky, cyclic coordinate descent, cutoff scans.

Everything here is nopython + nogil so harness-level thread pools get real
parallelism.  The coordinate-descent solvers come in two flavors, matching
standard practice for penalized paths:

* ``cd_naive``   keeps the residual vector updated; a coordinate visit costs
  O(n).  Preferred when p > n (the Gram matrix would dominate).
* ``cd_gram``    keeps the gradient via the precomputed Gram matrix; a
  coordinate *change* costs O(p) and visits are O(1).  Preferred when p <= n.

Both iterate full sweeps alternating with sweeps restricted to the current
active set, and declare convergence only when a full sweep moves no
coordinate by ``tol`` or more.
"""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def soft_threshold(z, gamma):
    if z > gamma:
        return z - gamma
    if z < -gamma:
        return z + gamma
    return 0.0


# ---------------------------------------------------------------------------
# Cholesky
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def cholesky_factor(a, pivot_tol):
    """Lower-triangular factor of ``a``; ok=False when a pivot <= pivot_tol."""
    p = a.shape[0]
    lower = np.zeros((p, p))
    for j in range(p):
        s = a[j, j]
        for k in range(j):
            s -= lower[j, k] * lower[j, k]
        if s <= pivot_tol:
            return lower, False
        lower[j, j] = np.sqrt(s)
        for i in range(j + 1, p):
            t = a[i, j]
            for k in range(j):
                t -= lower[i, k] * lower[j, k]
            lower[i, j] = t / lower[j, j]
    return lower, True


@njit(cache=True, nogil=True)
def cholesky_backsolve(lower, b):
    """Solve ``(L L^T) z = b`` given the lower factor."""
    p = lower.shape[0]
    z = np.empty(p)
    for i in range(p):
        s = b[i]
        for k in range(i):
            s -= lower[i, k] * z[k]
        z[i] = s / lower[i, i]
    for i in range(p - 1, -1, -1):
        s = z[i]
        for k in range(i + 1, p):
            s -= lower[k, i] * z[k]
        z[i] = s / lower[i, i]
    return z


# ---------------------------------------------------------------------------
# Coordinate descent, residual-update form
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def cd_naive(x, beta, resid, colsq, lam, tol, max_sweeps, obj_out):
    """Cyclic coordinate descent on (1/2n)||y - x b||^2 + lam ||b||_1.

    ``x`` must be Fortran ordered; ``beta`` and ``resid`` (= y - x @ beta on
    entry) are updated in place; ``colsq[j] = ||x_j||^2 / n``.  When
    ``obj_out`` is non-empty the objective is recorded after every sweep.
    Returns ``(sweeps, converged)``.
    """
    n, p = x.shape
    sweeps = 0
    converged = False
    trace = obj_out.shape[0] > 0
    while sweeps < max_sweeps:
        delta = 0.0
        for j in range(p):
            aj = colsq[j]
            if aj <= 0.0:
                continue
            xj = x[:, j]
            bj = beta[j]
            z = np.dot(xj, resid) / n + aj * bj
            bnew = soft_threshold(z, lam) / aj
            d = bnew - bj
            if d != 0.0:
                beta[j] = bnew
                for i in range(n):
                    resid[i] -= d * xj[i]
                ad = abs(d)
                if ad > delta:
                    delta = ad
        sweeps += 1
        if trace and sweeps <= obj_out.shape[0]:
            obj_out[sweeps - 1] = 0.5 * np.dot(resid, resid) / n + lam * np.abs(beta).sum()
        if delta < tol:
            converged = True
            break
        while sweeps < max_sweeps:
            inner = 0.0
            for j in range(p):
                bj = beta[j]
                if bj == 0.0:
                    continue
                aj = colsq[j]
                if aj <= 0.0:
                    continue
                xj = x[:, j]
                z = np.dot(xj, resid) / n + aj * bj
                bnew = soft_threshold(z, lam) / aj
                d = bnew - bj
                if d != 0.0:
                    beta[j] = bnew
                    for i in range(n):
                        resid[i] -= d * xj[i]
                    ad = abs(d)
                    if ad > inner:
                        inner = ad
            sweeps += 1
            if trace and sweeps <= obj_out.shape[0]:
                obj_out[sweeps - 1] = (
                    0.5 * np.dot(resid, resid) / n + lam * np.abs(beta).sum()
                )
            if inner < tol:
                break
    return sweeps, converged


@njit(cache=True, nogil=True)
def lasso_path_naive(x, y, lams, tol, max_sweeps, max_active):
    """Warm-started path over ``lams`` (largest to smallest).

    Once a solution activates more than ``max_active`` coordinates the
    remaining (even smaller) penalties inherit it unsolved: they are deep in
    the overfit/interpolation regime, where coordinate descent crawls.
    """
    n, p = x.shape
    k = lams.shape[0]
    betas = np.zeros((k, p))
    sweeps = np.zeros(k, dtype=np.int64)
    conv = np.zeros(k, dtype=np.bool_)
    colsq = np.empty(p)
    for j in range(p):
        xj = x[:, j]
        colsq[j] = np.dot(xj, xj) / n
    beta = np.zeros(p)
    resid = y.copy()
    no_trace = np.zeros(0)
    for t in range(k):
        s, ok = cd_naive(x, beta, resid, colsq, lams[t], tol, max_sweeps, no_trace)
        betas[t, :] = beta
        sweeps[t] = s
        conv[t] = ok
        if (beta != 0.0).sum() > max_active:
            for rest in range(t + 1, k):
                betas[rest, :] = beta
            break
    return betas, sweeps, conv


# ---------------------------------------------------------------------------
# Coordinate descent, Gram form
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def cd_gram(gram, xty, n, beta, gb, lam, tol, max_sweeps):
    """Same objective as :func:`cd_naive` using ``gram = x^T x``.

    ``gb`` (= gram @ beta on entry) is maintained in place alongside
    ``beta``.
    """
    p = gram.shape[0]
    sweeps = 0
    converged = False
    while sweeps < max_sweeps:
        delta = 0.0
        for j in range(p):
            ajj = gram[j, j]
            if ajj <= 0.0:
                continue
            bj = beta[j]
            z = (xty[j] - gb[j]) / n + (ajj / n) * bj
            bnew = soft_threshold(z, lam) * n / ajj
            d = bnew - bj
            if d != 0.0:
                beta[j] = bnew
                gj = gram[j]
                for i in range(p):
                    gb[i] += d * gj[i]
                ad = abs(d)
                if ad > delta:
                    delta = ad
        sweeps += 1
        if delta < tol:
            converged = True
            break
        while sweeps < max_sweeps:
            inner = 0.0
            for j in range(p):
                bj = beta[j]
                if bj == 0.0:
                    continue
                ajj = gram[j, j]
                if ajj <= 0.0:
                    continue
                z = (xty[j] - gb[j]) / n + (ajj / n) * bj
                bnew = soft_threshold(z, lam) * n / ajj
                d = bnew - bj
                if d != 0.0:
                    beta[j] = bnew
                    gj = gram[j]
                    for i in range(p):
                        gb[i] += d * gj[i]
                    ad = abs(d)
                    if ad > inner:
                        inner = ad
            sweeps += 1
            if inner < tol:
                break
    return sweeps, converged


@njit(cache=True, nogil=True)
def lasso_path_gram(gram, xty, n, lams, tol, max_sweeps, max_active):
    """Warm-started Gram-form path; see :func:`lasso_path_naive`."""
    p = gram.shape[0]
    k = lams.shape[0]
    betas = np.zeros((k, p))
    sweeps = np.zeros(k, dtype=np.int64)
    conv = np.zeros(k, dtype=np.bool_)
    beta = np.zeros(p)
    gb = np.zeros(p)
    for t in range(k):
        s, ok = cd_gram(gram, xty, n, beta, gb, lams[t], tol, max_sweeps)
        betas[t, :] = beta
        sweeps[t] = s
        conv[t] = ok
        if (beta != 0.0).sum() > max_active:
            for rest in range(t + 1, k):
                betas[rest, :] = beta
            break
    return betas, sweeps, conv


# ---------------------------------------------------------------------------
# Cross-validation fold paths
# ---------------------------------------------------------------------------
#
# Fold fits only feed the held-out error curve, so these variants skip the
# coefficient-path output and stop descending once the curve has clearly
# blown past its minimum (4x the running best, at least 10 points beyond the
# running argmin).  Remaining penalties inherit the stopping error, which is
# already >= 4x the fold minimum and therefore can never win the argmin.

ERR_BLOWUP = 4.0
ERR_PATIENCE = 10


@njit(cache=True, nogil=True)
def _held_out_rss(x_out, y_out, beta):
    n_out = x_out.shape[0]
    pred = np.zeros(n_out)
    for j in range(beta.shape[0]):
        bj = beta[j]
        if bj != 0.0:
            col = x_out[:, j]
            for i in range(n_out):
                pred[i] += col[i] * bj
    rss = 0.0
    for i in range(n_out):
        d = y_out[i] - pred[i]
        rss += d * d
    return rss


@njit(cache=True, nogil=True)
def cv_errors_gram(gram, xty, n, lams, tol, max_sweeps, max_active, x_out, y_out):
    """Held-out RSS along a warm-started Gram-form path."""
    p = gram.shape[0]
    k = lams.shape[0]
    errs = np.empty(k)
    beta = np.zeros(p)
    gb = np.zeros(p)
    best = np.inf
    best_idx = 0
    for t in range(k):
        cd_gram(gram, xty, n, beta, gb, lams[t], tol, max_sweeps)
        rss = _held_out_rss(x_out, y_out, beta)
        errs[t] = rss
        if rss < best:
            best = rss
            best_idx = t
        blown = rss > ERR_BLOWUP * best and t >= best_idx + ERR_PATIENCE
        if blown or (beta != 0.0).sum() > max_active:
            for rest in range(t + 1, k):
                errs[rest] = rss
            break
    return errs


@njit(cache=True, nogil=True)
def cv_errors_naive(x, y, lams, tol, max_sweeps, max_active, x_out, y_out):
    """Held-out RSS along a warm-started residual-form path."""
    n, p = x.shape
    k = lams.shape[0]
    errs = np.empty(k)
    colsq = np.empty(p)
    for j in range(p):
        xj = x[:, j]
        colsq[j] = np.dot(xj, xj) / n
    beta = np.zeros(p)
    resid = y.copy()
    no_trace = np.zeros(0)
    best = np.inf
    best_idx = 0
    for t in range(k):
        cd_naive(x, beta, resid, colsq, lams[t], tol, max_sweeps, no_trace)
        rss = _held_out_rss(x_out, y_out, beta)
        errs[t] = rss
        if rss < best:
            best = rss
            best_idx = t
        blown = rss > ERR_BLOWUP * best and t >= best_idx + ERR_PATIENCE
        if blown or (beta != 0.0).sum() > max_active:
            for rest in range(t + 1, k):
                errs[rest] = rss
            break
    return errs


# ---------------------------------------------------------------------------
# Mirror-statistic cutoff scan
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def cutoff_scan(values, level):
    """Smallest candidate threshold whose estimated FDP is within ``level``.

    Candidates are the distinct nonzero magnitudes, ascending.  The negative
    tail is closed (counts values at exactly -t) so a statistic sitting on
    an attained threshold still counts against it; the positive tail is open
    to match the strict selection rule.  A candidate only qualifies while
    the selection it induces is nonempty.  Returns ``(inf, nan)`` when no
    candidate qualifies.
    """
    p = values.shape[0]
    ordered = np.sort(values)
    magnitudes = np.abs(values[values != 0.0])
    if magnitudes.size == 0:
        return np.inf, np.nan
    magnitudes.sort()
    prev = -1.0
    for idx in range(magnitudes.size):
        t = magnitudes[idx]
        if t == prev:
            continue
        prev = t
        n_above = p - np.searchsorted(ordered, t, side="right")
        if n_above == 0:
            break
        n_below = np.searchsorted(ordered, -t, side="right")
        est = n_below / n_above
        if est <= level:
            return t, est
    return np.inf, np.nan


@njit(cache=True, nogil=True)
def cutoff_scan_batch(value_rows, level, cutoffs, fdps):
    """Row-wise :func:`cutoff_scan` over a matrix of mirror statistics."""
    for i in range(value_rows.shape[0]):
        t, est = cutoff_scan(value_rows[i], level)
        cutoffs[i] = t
        fdps[i] = est
