"""Zeros, sensitivities and the pole form of the connection.

The connection ``C(z) = z d/dz' log C(z*, z')`` at ``z' = z``, ``z* = |z|^2 / z``
(``|z|`` frozen as a parameter) is evaluated two ways:

* ``connection_direct`` differentiates the closed-form generating function;
* ``connection_poles`` sums simple poles,
  ``1/(1-|z|^2) - z (sum_j 1/(z - 1/lam_j) + sum_n s_n/(z - zbar_n))``,
  with zeros ``zbar_n`` of the fixed-modulus polynomial and sensitivities
  ``s_n = d zbar_n / d Delta`` under ``z' = z + Delta``.

``decompose(..., form="fixed-modulus")`` builds the pole data from
:func:`tcmkit.genfunc.poly_at_fixed_modulus` (``2N`` zeros, sensitivities
summing to ``-N``). ``form="exact"`` instead roots ``z^N`` times the true
numerator of the level sum at ``z* = |z|^2/z``; that decomposition reproduces
``connection_direct`` but has ``2N - 1`` zeros and no fixed sensitivity sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DegenerateRoots, NotConverged, PoleHit, PreconditionViolation, ValidationError
from .genfunc import (
    POLE_TOL,
    FixedModulusPolynomial,
    GenFuncCoeffs,
    coeff_matrix,
    poly_at_fixed_modulus,
)
from .spectrum import DecayFactors

DEGENERACY_GUARD = 1e-8
EVAL_POLE_GUARD = 1e-10
_ROUND = 10


def classical_term(modulus: float) -> float:
    r2 = float(modulus) ** 2
    return math.inf if r2 >= 1.0 else 1.0 / (1.0 - r2)


# ---------------------------------------------------------------------------
# root finding
# ---------------------------------------------------------------------------


def _canonical_order(z):
    keys = [(round(float(v.real), _ROUND), round(float(v.imag), _ROUND)) for v in z]
    return np.array([z[i] for i in sorted(range(len(z)), key=keys.__getitem__)], dtype=complex)


def _backward_residual(coeffs, z):
    num = np.abs(_kernels.polyval(coeffs, z))
    den = _kernels.polyval(np.abs(coeffs).astype(complex), np.abs(z).astype(complex)).real
    return num / den


def _newton_polish(coeffs, z, steps=6):
    dc = coeffs[1:] * np.arange(1, coeffs.size)
    z = z.copy()
    res = _backward_residual(coeffs, z)
    for _ in range(steps):
        p = _kernels.polyval(coeffs, z)
        dp = _kernels.polyval(dc, z)
        with np.errstate(divide="ignore", invalid="ignore"):
            cand = np.where(dp != 0, z - p / dp, z)
        cres = _backward_residual(coeffs, cand)
        better = cres < res
        if not better.any():
            break
        z = np.where(better, cand, z)
        res = np.where(better, cres, res)
    return z


def polynomial_roots(coeffs, backend=None) -> np.ndarray:
    """All roots of an ascending-coefficient polynomial (Aberth iteration + Newton polish).

    Exact zeros in the lowest coefficients are split off as roots at the origin.
    """
    c = np.asarray(coeffs, dtype=complex)
    scale = np.max(np.abs(c))
    if scale == 0:
        raise ValidationError("zero polynomial")
    lo = 0
    while c[lo] == 0:
        lo += 1
    c = c[lo:]
    deg = c.size - 1
    if deg == 0:
        return np.zeros(lo, dtype=complex)
    c = c / c[-1]
    # starting points on a circle of the geometric-mean root radius
    r0 = abs(c[0]) ** (1.0 / deg) if c[0] != 0 else 1.0
    z0 = r0 * np.exp(1j * (2 * np.pi * np.arange(deg) / deg + 0.4))
    z, _, ok = _kernels.aberth(c, z0, backend=backend)
    if not ok:
        z0 = np.roots(c[::-1])
        z, _, ok = _kernels.aberth(c, z0, backend=backend)
    z = _newton_polish(c, z)
    if not ok and np.max(_backward_residual(c, z)) > 1e-10:
        raise NotConverged("Aberth iteration failed to converge")
    return np.concatenate([np.zeros(lo, dtype=complex), z])


def _min_separation(z):
    if z.size < 2:
        return math.inf
    d = np.abs(z[:, None] - z[None, :])
    return float(d[np.triu_indices(z.size, 1)].min())


def find_zeros(poly: FixedModulusPolynomial, backend=None) -> np.ndarray:
    """The ``2N`` zeros of ``poly`` in canonical (real, imag) lexicographic order."""
    z = polynomial_roots(poly.coefficients, backend=backend)
    sep = _min_separation(z)
    if sep < DEGENERACY_GUARD:
        raise DegenerateRoots(f"zeros closer than {DEGENERACY_GUARD:g} (min separation {sep:.3e})")
    return _canonical_order(z)


def sensitivities(coeffs: GenFuncCoeffs, zeros, modulus: float) -> np.ndarray:
    """``s_l = -[sum |z|^(2m) g[m, m'] m' zbar_l^(N-m+m'-1)] / [g[0, N] prod_{m != l}(zbar_l - zbar_m)]``."""
    zeros = np.asarray(zeros, dtype=complex)
    if _min_separation(zeros) < DEGENERACY_GUARD:
        raise DegenerateRoots("sensitivities undefined for (near-)degenerate zeros")
    poly = poly_at_fixed_modulus(coeffs, modulus)
    return _sensitivities_from(poly.delta_coefficients, poly.leading, zeros)


def _sensitivities_from(delta_coeffs, leading, zeros):
    num = _kernels.polyval(delta_coeffs, zeros)
    diff = zeros[:, None] - zeros[None, :]
    np.fill_diagonal(diff, 1.0)
    return -num / (leading * np.prod(diff, axis=1))


def sum_rule_residual(sens, N: int) -> float:
    """``|sum_n s_n + N|``."""
    return float(abs(np.sum(np.asarray(sens, dtype=complex)) + N))


# ---------------------------------------------------------------------------
# pole decomposition
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PoleDecomposition:
    modulus: float
    lambda_poles: np.ndarray
    zeros: np.ndarray
    sensitivities: np.ndarray
    classical_term: float
    form: str = "fixed-modulus"

    @property
    def dimension(self) -> int:
        return self.lambda_poles.size

    @property
    def pole_count(self) -> int:
        return self.lambda_poles.size + self.zeros.size

    def all_poles(self) -> np.ndarray:
        return np.concatenate([self.lambda_poles, self.zeros])


def _exact_polynomial(coeffs: GenFuncCoeffs, modulus: float):
    """``z^N`` times the true level-sum numerator at ``z* = |z|^2/z``, ``z' = z + Delta``."""
    N = coeffs.dimension
    natural = coeffs.g[::-1, :]
    r2 = float(modulus) ** 2
    c = np.zeros(2 * N + 1, dtype=complex)
    d = np.zeros(2 * N, dtype=complex)
    for a in range(N + 1):
        for b in range(N + 1):
            v = r2**a * natural[a, b]
            c[N - a + b] += v
            if b:
                d[N - a + b - 1] += b * v
    tol = 1e-14 * np.max(np.abs(c))
    top = c.size - 1
    while top > 0 and abs(c[top]) <= tol:
        top -= 1
    return c[: top + 1], d[:top]


def decompose(
    decay: DecayFactors, overlaps, modulus: float, form: str = "fixed-modulus", backend=None
) -> PoleDecomposition:
    """Pole decomposition of the connection at fixed ``|z| = modulus``."""
    decay.require_strict()
    modulus = float(modulus)
    if not (0 < modulus <= 1):
        raise ValidationError(f"modulus must lie in (0, 1], got {modulus}")
    coeffs = coeff_matrix(decay, overlaps)
    if form == "fixed-modulus":
        poly = poly_at_fixed_modulus(coeffs, modulus)
        zeros = find_zeros(poly, backend=backend)
        sens = _sensitivities_from(poly.delta_coefficients, poly.leading, zeros)
    elif form == "exact":
        c, d = _exact_polynomial(coeffs, modulus)
        zeros = _canonical_order(polynomial_roots(c, backend=backend))
        if _min_separation(zeros) < DEGENERACY_GUARD:
            raise DegenerateRoots("exact-form zeros are degenerate")
        sens = _sensitivities_from(d, complex(c[-1]), zeros)
    else:
        raise ValidationError(f"unknown decomposition form {form!r}")
    return PoleDecomposition(
        modulus=modulus,
        lambda_poles=1.0 / decay.lam,
        zeros=zeros,
        sensitivities=sens,
        classical_term=classical_term(modulus),
        form=form,
    )


# ---------------------------------------------------------------------------
# evaluation paths
# ---------------------------------------------------------------------------


def _classical(modulus, subtract_classical):
    if subtract_classical:
        return 0.0
    if modulus >= 1.0:
        raise PreconditionViolation("classical term diverges at |z| = 1; use subtract_classical=True")
    return 1.0 / (1.0 - modulus**2)


def connection_poles(decomp: PoleDecomposition, z: complex, subtract_classical: bool = False) -> complex:
    z = complex(z)
    poles = decomp.all_poles()
    if np.min(np.abs(z - poles)) <= EVAL_POLE_GUARD:
        raise PoleHit(f"z = {z} is within {EVAL_POLE_GUARD:g} of a pole")
    quantum = -z * (np.sum(1.0 / (z - decomp.lambda_poles)) + np.sum(decomp.sensitivities / (z - decomp.zeros)))
    return complex(_classical(decomp.modulus, subtract_classical) + quantum)


def connection_poles_many(decomp: PoleDecomposition, z, subtract_classical: bool = False) -> np.ndarray:
    """Vectorized :func:`connection_poles` over an array of points (no pole guard)."""
    z = np.asarray(z, dtype=complex)
    zz = z[..., None]
    quantum = -z * (
        np.sum(1.0 / (zz - decomp.lambda_poles), axis=-1)
        + np.sum(decomp.sensitivities / (zz - decomp.zeros), axis=-1)
    )
    return _classical(decomp.modulus, subtract_classical) + quantum


def _direct_quantum(lam, w, z, modulus):
    zs = modulus**2 / z
    s = np.abs(lam) ** 2
    d1 = z * lam - 1.0
    d2 = zs * np.conj(lam) - 1.0
    if np.min(np.abs(d1)) < POLE_TOL or np.min(np.abs(d2)) < POLE_TOL:
        raise PoleHit(f"z = {z} hits a 1/lambda pole")
    num = s * zs * z - 1.0
    S = np.sum(w * num / (d1 * d2))
    dS = np.sum(w * (s * zs / (d1 * d2) - num * lam / (d1 * d1 * d2)))
    if abs(S) < 1e-300 or abs(S) < 1e-14 * np.sum(w):
        raise PoleHit(f"z = {z} hits a zero of the generating function")
    return z * dS / S


def connection_direct(
    decay: DecayFactors, overlaps, z: complex, modulus: float, subtract_classical: bool = False
) -> complex:
    """Connection from the analytic derivative of the closed-form generating function.

    Prefactor ``z* z'/(z* z' - 1)`` gives the classical term; the level sum and
    its ``z'``-derivative give the rest.
    """
    modulus = float(modulus)
    if not (0 < modulus <= 1):
        raise ValidationError(f"modulus must lie in (0, 1], got {modulus}")
    z = complex(z)
    if z == 0:
        raise PoleHit("z = 0")
    w = np.abs(np.asarray(overlaps, dtype=complex)) ** 2
    q = _direct_quantum(decay.lam, w, z, modulus)
    return complex(_classical(modulus, subtract_classical) + q)


def connection_direct_many(decay: DecayFactors, overlaps, z, modulus: float, subtract_classical=False):
    """Vectorized :func:`connection_direct` over an array of points."""
    z = np.asarray(z, dtype=complex)
    zz = z[..., None]
    lam = decay.lam
    w = np.abs(np.asarray(overlaps, dtype=complex)) ** 2
    zs = modulus**2 / zz
    s = np.abs(lam) ** 2
    d1 = zz * lam - 1.0
    d2 = zs * np.conj(lam) - 1.0
    num = s * zs * zz - 1.0
    S = np.sum(w * num / (d1 * d2), axis=-1)
    dS = np.sum(w * (s * zs / (d1 * d2) - num * lam / (d1 * d1 * d2)), axis=-1)
    return _classical(float(modulus), subtract_classical) + z * dS / S


@dataclass(frozen=True)
class TimeStatistics:
    transition_time: complex
    correlation_time: complex
    z: complex
    modulus: float


def time_statistics(connection_value: complex, z: complex, modulus: float) -> TimeStatistics:
    """Average transition time ``<k>_z`` and correlation time ``<k-k'>_z = 2i Im <k>_z``."""
    v = complex(connection_value)
    return TimeStatistics(v, 2j * v.imag, complex(z), float(modulus))
