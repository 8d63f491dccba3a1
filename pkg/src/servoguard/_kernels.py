"""Hot numeric kernels with an optional numba-compiled fast path.

Every kernel below is written as a plain numpy function and then, when
numba is importable and SERVOGUARD_NO_NUMBA is unset, wrapped with
``numba.njit``.  Set ``SERVOGUARD_NO_NUMBA=1`` to force the pure-numpy
path (``benchmarks/bench_kernels.py`` times the two against each other).

Kernels assume validated inputs: float64 C-contiguous arrays, strictly
increasing knots, factor >= 1.  Argument checking lives in the calling
modules.
"""

import os

import numpy as np


def _env_flag(name):
    return os.environ.get(name, "").strip().lower() in {"1", "true", "yes", "on"}


_WANT_NUMBA = not _env_flag("SERVOGUARD_NO_NUMBA")

if _WANT_NUMBA:
    try:
        from numba import njit as _njit
    except ImportError:
        _njit = None
else:
    _njit = None

NUMBA_ENABLED = _njit is not None


def kernel_backend():
    """Name of the active kernel implementation, 'numba' or 'numpy'."""
    return "numba" if NUMBA_ENABLED else "numpy"


def monotone_slopes_numpy(x, y):
    """Shape-preserving cubic slopes at the knots (Fritsch-Carlson rules).

    Interior slopes are a weighted harmonic mean of the neighbouring
    secant slopes and are forced to zero at local extrema; endpoint
    slopes use a one-sided three-point estimate clamped so the first and
    last segments cannot overshoot.
    """
    n = x.shape[0]
    d = np.empty(n)
    if n == 2:
        d[0] = (y[1] - y[0]) / (x[1] - x[0])
        d[1] = d[0]
        return d

    h = np.empty(n - 1)
    delta = np.empty(n - 1)
    for k in range(n - 1):
        h[k] = x[k + 1] - x[k]
        delta[k] = (y[k + 1] - y[k]) / h[k]

    for k in range(1, n - 1):
        if delta[k - 1] == 0.0 or delta[k] == 0.0 or (delta[k - 1] > 0.0) != (delta[k] > 0.0):
            d[k] = 0.0
        else:
            w1 = 2.0 * h[k] + h[k - 1]
            w2 = h[k] + 2.0 * h[k - 1]
            d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k])

    # one-sided endpoint estimates, clamped to keep the edge segments monotone
    t0 = ((2.0 * h[0] + h[1]) * delta[0] - h[0] * delta[1]) / (h[0] + h[1])
    if t0 * delta[0] <= 0.0:
        t0 = 0.0
    elif delta[0] * delta[1] < 0.0 and abs(t0) > 3.0 * abs(delta[0]):
        t0 = 3.0 * delta[0]
    d[0] = t0

    t1 = ((2.0 * h[n - 2] + h[n - 3]) * delta[n - 2] - h[n - 2] * delta[n - 3]) / (h[n - 2] + h[n - 3])
    if t1 * delta[n - 2] <= 0.0:
        t1 = 0.0
    elif delta[n - 2] * delta[n - 3] < 0.0 and abs(t1) > 3.0 * abs(delta[n - 2]):
        t1 = 3.0 * delta[n - 2]
    d[n - 1] = t1
    return d


def hermite_eval_numpy(x, y, d, q):
    """Evaluate the cubic Hermite interpolant at arbitrary query points.

    Queries equal to a knot return the knot value bitwise.  Queries are
    clamped to the knot span.
    """
    n = x.shape[0]
    out = np.empty(q.shape[0])
    for i in range(q.shape[0]):
        qi = q[i]
        if qi <= x[0]:
            out[i] = y[0]
            continue
        if qi >= x[n - 1]:
            out[i] = y[n - 1]
            continue
        lo = 0
        hi = n - 1
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if x[mid] <= qi:
                lo = mid
            else:
                hi = mid
        if qi == x[lo]:
            out[i] = y[lo]
            continue
        h = x[lo + 1] - x[lo]
        s = (qi - x[lo]) / h
        dy = y[lo + 1] - y[lo]
        c2 = 3.0 * dy - h * (2.0 * d[lo] + d[lo + 1])
        c3 = -2.0 * dy + h * (d[lo] + d[lo + 1])
        out[i] = y[lo] + s * (h * d[lo] + s * (c2 + s * c3))
    return out


def hermite_eval_uniform_numpy(y, d, factor):
    """Evaluate the interpolant on a grid that subdivides each unit-spaced
    segment into ``factor`` steps.  Output length is factor*(L-1)+1 and
    every knot is reproduced bitwise.
    """
    n = y.shape[0]
    m = factor * (n - 1) + 1
    out = np.empty(m)
    inv = 1.0 / factor
    for j in range(m):
        seg = j // factor
        r = j - seg * factor
        if r == 0:
            out[j] = y[seg]
        else:
            s = r * inv
            dy = y[seg + 1] - y[seg]
            c2 = 3.0 * dy - (2.0 * d[seg] + d[seg + 1])
            c3 = -2.0 * dy + (d[seg] + d[seg + 1])
            out[j] = y[seg] + s * (d[seg] + s * (c2 + s * c3))
    return out


def lowrank_prox_gradient_numpy(X, lam, n_iter):
    """Proximal-gradient minimization of 0.5*||X - R X||_F^2 + lam*||R||_*.

    Iterates singular-value soft-thresholding with step 1/L, where L is
    the Lipschitz constant of the smooth term.  Returns the best
    objective value seen and the final iterate.  Serves as a slow
    reference for the closed-form solver in ``alignment``.
    """
    n = X.shape[0]
    R = np.zeros((n, n))
    best = 0.5 * np.sum(X * X)
    sv = np.linalg.svd(X, full_matrices=False)[1]
    lip = sv[0] * sv[0]
    if lip <= 0.0:
        return best, R
    step = 1.0 / lip
    thr = lam * step
    XXt = X @ X.T
    for _ in range(n_iter):
        G = R - step * (R @ XXt - XXt)
        U, s, Vt = np.linalg.svd(G, full_matrices=False)
        ss = np.maximum(s - thr, 0.0)
        R = (U * ss) @ Vt
        E = X - R @ X
        obj = 0.5 * np.sum(E * E) + lam * np.sum(ss)
        if obj < best:
            best = obj
    return best, R


if NUMBA_ENABLED:
    monotone_slopes = _njit(cache=True)(monotone_slopes_numpy)
    hermite_eval = _njit(cache=True)(hermite_eval_numpy)
    hermite_eval_uniform = _njit(cache=True)(hermite_eval_uniform_numpy)
    lowrank_prox_gradient = _njit(cache=True)(lowrank_prox_gradient_numpy)
else:
    monotone_slopes = monotone_slopes_numpy
    hermite_eval = hermite_eval_numpy
    hermite_eval_uniform = hermite_eval_uniform_numpy
    lowrank_prox_gradient = lowrank_prox_gradient_numpy
