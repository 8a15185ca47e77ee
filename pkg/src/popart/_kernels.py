"""Streaming Catoni roots for arm-indexed sample batches.

When every covariate row is one of K known arms, coordinate i's one-sample
estimates are z_t = m[k_t] * resid_t + pilot, with m = row i of Q^{-1} A'.
The root of sum_t psi(alpha (z_t - y)) = 0 can then be found without ever
materializing the n x d estimate matrix: one moments pass over the
(arm index, residual) stream yields a bracket and a small-argument series
initializer, and a few safeguarded Newton passes on the exact influence
sum finish the job.  Exploration batches run to ~5e7 rounds, so each pass
touches 12 bytes per sample instead of 8 d.

Compiled with numba when it is importable; a chunked numpy fallback keeps
the module usable without it.  Both paths run serial deterministic loops.
"""

from __future__ import annotations

import math

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via the _root_np tests
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(f):
            return f

        if args and callable(args[0]):
            return args[0]
        return wrap


_CHUNK = 1 << 22  # fallback reduction block; bounds temporaries, fixes sum order


@njit(cache=True)
def _moments_jit(m_row, arm_idx, resid, pilot):
    n = arm_idx.shape[0]
    m1 = 0.0
    m2 = 0.0
    m3 = 0.0
    zmin = np.inf
    zmax = -np.inf
    for t in range(n):
        z = m_row[arm_idx[t]] * resid[t] + pilot
        z2 = z * z
        m1 += z
        m2 += z2
        m3 += z2 * z
        if z < zmin:
            zmin = z
        if z > zmax:
            zmax = z
    return m1, m2, m3, zmin, zmax


@njit(cache=True)
def _psi_sums_jit(m_row, arm_idx, resid, pilot, alpha, y):
    # returns (sum psi(alpha (z - y)), sum psi'(alpha (z - y)))
    s = 0.0
    sp = 0.0
    for t in range(arm_idx.shape[0]):
        z = m_row[arm_idx[t]] * resid[t] + pilot
        x = alpha * (z - y)
        ax = abs(x)
        den = 1.0 + ax + 0.5 * x * x
        v = math.log(den)
        if x < 0.0:
            v = -v
        s += v
        sp += (1.0 + ax) / den
    return s, sp


def _moments_np(m_row, arm_idx, resid, pilot):
    n = arm_idx.shape[0]
    m1 = m2 = m3 = 0.0
    zmin = np.inf
    zmax = -np.inf
    for a in range(0, n, _CHUNK):
        z = m_row[arm_idx[a:a + _CHUNK]] * resid[a:a + _CHUNK] + pilot
        z2 = z * z
        m1 += float(z.sum())
        m2 += float(z2.sum())
        m3 += float((z2 * z).sum())
        zmin = min(zmin, float(z.min()))
        zmax = max(zmax, float(z.max()))
    return m1, m2, m3, zmin, zmax


def _psi_sums_np(m_row, arm_idx, resid, pilot, alpha, y):
    n = arm_idx.shape[0]
    s = sp = 0.0
    for a in range(0, n, _CHUNK):
        z = m_row[arm_idx[a:a + _CHUNK]] * resid[a:a + _CHUNK] + pilot
        x = alpha * (z - y)
        ax = np.abs(x)
        den = 1.0 + ax + 0.5 * x * x
        s += float((np.sign(x) * np.log(den)).sum())
        sp += float(((1.0 + ax) / den).sum())
    return s, sp


def _series_init(n, m1, m2, m3, alpha, lo, hi):
    """Root of the cubic series of the influence sum, as a Newton seed.

    psi(x) = x - x^3/6 + O(x^4) for small |x|, so
    sum psi(alpha (z - y)) ~ alpha (m1 - n y)
                             - alpha^3/6 (m3 - 3 m2 y + 3 m1 y^2 - n y^3).
    alpha is ~sqrt(log / (n V)), so the arguments are tiny for the sample
    sizes this path exists for; the series root is then accurate to many
    digits and the exact Newton loop needs only 2-3 passes.
    """
    y = m1 / n
    a3 = alpha * alpha / 6.0
    for _ in range(12):
        p = (m1 - n * y) - a3 * (m3 - 3.0 * m2 * y + 3.0 * m1 * y * y - n * y ** 3)
        dp = -n - a3 * (-3.0 * m2 + 6.0 * m1 * y - 3.0 * n * y * y)
        if dp == 0.0:
            break
        step = p / dp
        y -= step
        if abs(step) <= 1e-15 * max(1.0, abs(y)):
            break
    if not lo < y < hi:
        y = 0.5 * (lo + hi)
    return y


def catoni_root_indexed(m_row: np.ndarray, arm_idx: np.ndarray,
                        resid: np.ndarray, pilot: float,
                        alpha: float) -> float:
    """Root y of sum_t psi(alpha (m_row[arm_idx[t]] resid[t] + pilot - y)) = 0.

    Matches ``catoni_estimate`` on the materialized samples to the same
    1e-12 relative tolerance (the influence sum is strictly decreasing in
    y, and every iterate stays inside the sign-change bracket).
    """
    m_row = np.ascontiguousarray(m_row, dtype=np.float64)
    resid = np.ascontiguousarray(resid, dtype=np.float64)
    if arm_idx.dtype not in (np.int32, np.int64):
        arm_idx = arm_idx.astype(np.int64)
    arm_idx = np.ascontiguousarray(arm_idx)
    n = arm_idx.shape[0]
    if n == 0:
        raise ValueError("samples must be nonempty")
    if resid.shape[0] != n:
        raise ValueError("resid length must match arm_idx")
    if math.isinf(alpha):
        # zero-variance limit, same degenerate root as catoni_estimate
        return float(np.median(m_row[arm_idx] * resid + pilot))
    moments = _moments_jit if HAVE_NUMBA else _moments_np
    psi_sums = _psi_sums_jit if HAVE_NUMBA else _psi_sums_np
    m1, m2, m3, zmin, zmax = moments(m_row, arm_idx, resid, float(pilot))
    lo = zmin - 1.0
    hi = zmax + 1.0
    tol = 1e-12 * max(1.0, abs(zmin), abs(zmax))
    y = _series_init(n, m1, m2, m3, alpha, lo, hi)
    for _ in range(100):
        if hi - lo <= tol:
            return 0.5 * (lo + hi)
        s, sp = psi_sums(m_row, arm_idx, resid, float(pilot), alpha, y)
        if s > 0.0:
            lo = y
        else:
            hi = y
        y_new = y + s / (alpha * sp)  # sp > 0 always: psi' in (0, 1]
        if not lo < y_new < hi:
            y_new = 0.5 * (lo + hi)
        if abs(y_new - y) <= tol:
            return min(max(y_new, lo), hi)
        y = y_new
    return min(max(y, lo), hi)
