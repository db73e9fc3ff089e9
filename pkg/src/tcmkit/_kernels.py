"""Hot numeric kernels, each in a numba loop form and a vectorized numpy form.

The public wrappers at the bottom pick the implementation according to
``tcmkit._accel.USE_NUMBA``; passing ``backend="numba"`` or ``backend="numpy"``
forces one. Both forms compute the same quantity and are cross-checked in the
test suite.
"""

from __future__ import annotations

import math

import numpy as np

from . import _accel
from ._accel import njit

# ---------------------------------------------------------------------------
# Monte Carlo: moments of u_k^* u_k' over a block of waiting-time sequences
# ---------------------------------------------------------------------------


@njit
def _mc_pair_sums_nb(tau, energies, overlaps, ks, kps, shift):
    n_block, kmax = tau.shape
    n_levels = energies.shape[0]
    n_pairs = ks.shape[0]
    out = np.zeros((n_pairs, 4))
    u = np.empty(kmax, dtype=np.complex128)
    for b in range(n_block):
        t = 0.0
        for k in range(kmax):
            t += tau[b, k]
            acc = 0.0 + 0.0j
            for j in range(n_levels):
                ph = energies[j] * t
                acc += overlaps[j] * complex(math.cos(ph), -math.sin(ph))
            u[k] = acc
        for p in range(n_pairs):
            x = u[ks[p] - 1].conjugate() * u[kps[p] - 1] - shift[p]
            out[p, 0] += x.real
            out[p, 1] += x.imag
            out[p, 2] += x.real * x.real
            out[p, 3] += x.imag * x.imag
    return out


def _mc_pair_sums_np(tau, energies, overlaps, ks, kps, shift):
    t = np.cumsum(tau, axis=1)
    ph = t[:, :, None] * energies[None, None, :]
    u = (np.cos(ph) - 1j * np.sin(ph)) @ overlaps
    x = np.conj(u[:, ks - 1]) * u[:, kps - 1] - shift
    return np.stack(
        [x.real.sum(0), x.imag.sum(0), (x.real**2).sum(0), (x.imag**2).sum(0)], axis=1
    )


# ---------------------------------------------------------------------------
# Truncated double sum  sum_{k,k'=1..K} C_{k-k'} a^k b^k'
# ---------------------------------------------------------------------------


@njit
def _toeplitz_double_sum_nb(cvals, max_lag, a, b, cutoff):
    pa = np.empty(cutoff, dtype=np.complex128)
    pb = np.empty(cutoff, dtype=np.complex128)
    xa = a
    xb = b
    for k in range(cutoff):
        pa[k] = xa
        pb[k] = xb
        xa *= a
        xb *= b
    total = 0.0 + 0.0j
    for k in range(cutoff):
        row = 0.0 + 0.0j
        for kp in range(cutoff):
            row += cvals[k - kp + max_lag] * pb[kp]
        total += pa[k] * row
    return total


def _powers(x, cutoff):
    return np.cumprod(np.full(cutoff, x, dtype=np.complex128))


def _toeplitz_double_sum_np(cvals, max_lag, a, b, cutoff):
    k = np.arange(cutoff)
    mat = cvals[k[:, None] - k[None, :] + max_lag]
    return complex(_powers(a, cutoff) @ (mat @ _powers(b, cutoff)))


# ---------------------------------------------------------------------------
# Polynomial evaluation (ascending coefficients) at many points
# ---------------------------------------------------------------------------


@njit
def _polyval_nb(coeffs, z):
    out = np.empty(z.shape[0], dtype=np.complex128)
    deg = coeffs.shape[0] - 1
    for i in range(z.shape[0]):
        acc = coeffs[deg] + 0.0j
        for m in range(deg - 1, -1, -1):
            acc = acc * z[i] + coeffs[m]
        out[i] = acc
    return out


def _polyval_np(coeffs, z):
    return np.polynomial.polynomial.polyval(z, coeffs)


# ---------------------------------------------------------------------------
# Aberth-Ehrlich simultaneous root iteration
# ---------------------------------------------------------------------------


@njit
def _aberth_nb(coeffs, z, maxiter, tol):
    deg = coeffs.shape[0] - 1
    dcoeffs = np.empty(deg, dtype=np.complex128)
    for m in range(1, deg + 1):
        dcoeffs[m - 1] = m * coeffs[m]
    z = z.copy()
    for it in range(maxiter):
        worst = 0.0
        for i in range(deg):
            p = coeffs[deg] + 0.0j
            for m in range(deg - 1, -1, -1):
                p = p * z[i] + coeffs[m]
            dp = dcoeffs[deg - 1] + 0.0j
            for m in range(deg - 2, -1, -1):
                dp = dp * z[i] + dcoeffs[m]
            if p == 0:
                continue
            ratio = p / dp
            s = 0.0 + 0.0j
            for j in range(deg):
                if j != i:
                    s += 1.0 / (z[i] - z[j])
            w = ratio / (1.0 - ratio * s)
            z[i] -= w
            rel = abs(w) / max(abs(z[i]), 1e-300)
            if rel > worst:
                worst = rel
        if worst < tol:
            return z, it + 1, True
    return z, maxiter, False


def _aberth_np(coeffs, z, maxiter, tol):
    deg = coeffs.shape[0] - 1
    dcoeffs = coeffs[1:] * np.arange(1, deg + 1)
    z = z.astype(np.complex128).copy()
    off = ~np.eye(deg, dtype=bool)
    for it in range(maxiter):
        p = _polyval_np(coeffs, z)
        dp = _polyval_np(dcoeffs, z)
        diff = z[:, None] - z[None, :]
        s = np.where(off, 1.0 / np.where(off, diff, 1.0), 0.0).sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(p == 0, 0.0, p / dp)
            w = ratio / (1.0 - ratio * s)
        z = z - w
        rel = np.abs(w) / np.maximum(np.abs(z), 1e-300)
        if np.max(rel) < tol:
            return z, it + 1, True
    return z, maxiter, False


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------


def _use_numba(backend):
    if backend is None:
        return _accel.USE_NUMBA
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "numba" and not _accel.HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not installed")
    return backend == "numba"


def mc_pair_sums(tau, energies, overlaps, ks, kps, shift=None, backend=None):
    """Per-pair sums of Re x, Im x, (Re x)^2, (Im x)^2 with x = u_k^* u_k' - shift.

    A shift close to the mean keeps the second moments free of cancellation.
    """
    if shift is None:
        shift = np.zeros(len(ks), dtype=np.complex128)
    args = (
        np.ascontiguousarray(tau, dtype=np.float64),
        np.ascontiguousarray(energies, dtype=np.float64),
        np.ascontiguousarray(overlaps, dtype=np.complex128),
        np.ascontiguousarray(ks, dtype=np.int64),
        np.ascontiguousarray(kps, dtype=np.int64),
        np.ascontiguousarray(shift, dtype=np.complex128),
    )
    if _use_numba(backend):
        return _mc_pair_sums_nb(*args)
    return _mc_pair_sums_np(*args)


def toeplitz_double_sum(cvals, max_lag, a, b, cutoff, backend=None):
    cvals = np.ascontiguousarray(cvals, dtype=np.complex128)
    if _use_numba(backend):
        return complex(_toeplitz_double_sum_nb(cvals, int(max_lag), complex(a), complex(b), int(cutoff)))
    return _toeplitz_double_sum_np(cvals, int(max_lag), complex(a), complex(b), int(cutoff))


def polyval(coeffs, z, backend=None):
    coeffs = np.ascontiguousarray(coeffs, dtype=np.complex128)
    z = np.asarray(z, dtype=np.complex128)
    flat = np.ascontiguousarray(z.ravel())
    if _use_numba(backend):
        out = _polyval_nb(coeffs, flat)
    else:
        out = _polyval_np(coeffs, flat)
    return out.reshape(z.shape)


def aberth(coeffs, z0, maxiter=500, tol=4e-16, backend=None):
    coeffs = np.ascontiguousarray(coeffs, dtype=np.complex128)
    z0 = np.ascontiguousarray(z0, dtype=np.complex128)
    if _use_numba(backend):
        return _aberth_nb(coeffs, z0, int(maxiter), float(tol))
    return _aberth_np(coeffs, z0, int(maxiter), float(tol))
