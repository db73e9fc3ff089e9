"""Generating function of the correlation sequence and its polynomial data.

``C(z*, z') = sum_{k,k'>=1} C_{k-k'} z*^k z'^k'`` has the closed form
``z* z' / (z* z' - 1) * sum_j |q_j|^2 (|lam_j|^2 z* z' - 1) / ((z' lam_j - 1)(z* conj(lam_j) - 1))``.

Coefficient convention
----------------------
``GenFuncCoeffs.g[n, n']`` multiplies ``z*^(N-n) z'^n'`` in the common
numerator of the level sum. This is the indexing under which the symmetric
two-level matrix takes its known published form (zero diagonal,
``g[0, N] = 2 |q|^2 |lam|^4``). The fixed-modulus polynomial
``p(z) = sum |z|^(2n) g[n, n'] z^(N-n+n')`` is built from ``g`` exactly as
written, so its leading coefficient is ``g[0, N]`` and it has degree ``2N``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import LeadingZero, PoleHit, ValidationError
from .spectrum import DecayFactors
from .tcm import CorrSequence

POLE_TOL = 1e-13
LEADING_TOL = 1e-13


def _weights(overlaps):
    return np.abs(np.asarray(overlaps, dtype=complex)) ** 2


def cj_closed(lam: complex, zstar: complex, zprime: complex) -> complex:
    """Generating function of a single level, ``sum_{k,k'} |lam|^|k-k'| e^{i phi (k'-k)} z*^k z'^k'``."""
    lam = complex(lam)
    zstar = complex(zstar)
    zprime = complex(zprime)
    d1 = zprime * lam - 1.0
    d2 = lam.conjugate() * zstar - 1.0
    d3 = zprime * zstar - 1.0
    if min(abs(d1), abs(d2), abs(d3)) < POLE_TOL:
        raise PoleHit(f"cj_closed evaluated on a pole (z*={zstar}, z'={zprime}, lambda={lam})")
    x = zstar * zprime
    return x * (abs(lam) ** 2 * x - 1.0) / (d1 * d2 * d3)


def level_sum(decay: DecayFactors, overlaps, zstar, zprime) -> complex:
    """``sum_j |q_j|^2 (|lam_j|^2 z* z' - 1) / ((z' lam_j - 1)(z* conj(lam_j) - 1))``."""
    lam = decay.lam
    d1 = zprime * lam - 1.0
    d2 = zstar * np.conj(lam) - 1.0
    if np.min(np.abs(d1)) < POLE_TOL or np.min(np.abs(d2)) < POLE_TOL:
        raise PoleHit("level sum evaluated on a 1/lambda pole")
    return complex(np.sum(_weights(overlaps) * (np.abs(lam) ** 2 * zstar * zprime - 1.0) / (d1 * d2)))


def genfunc_closed(decay: DecayFactors, overlaps, zstar: complex, zprime: complex) -> complex:
    w = _weights(overlaps)
    return complex(sum(wj * cj_closed(lj, zstar, zprime) for wj, lj in zip(w, decay.lam)))


def genfunc_bruteforce(corr: CorrSequence, zstar: complex, zprime: complex, cutoff: int, backend=None) -> complex:
    """Truncated double sum over ``1 <= k, k' <= cutoff``."""
    if cutoff < 1:
        raise ValidationError("cutoff must be >= 1")
    if corr.max_lag < cutoff - 1:
        raise ValidationError(f"correlation sequence covers lags up to {corr.max_lag}, need {cutoff - 1}")
    if abs(zstar) >= 1 or abs(zprime) >= 1:
        raise ValidationError("brute-force sum needs |z*|, |z'| < 1")
    return _kernels.toeplitz_double_sum(corr.values, corr.max_lag, zstar, zprime, cutoff, backend=backend)


# ---------------------------------------------------------------------------
# common-denominator coefficients
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GenFuncCoeffs:
    g: np.ndarray
    lam: np.ndarray

    @property
    def dimension(self) -> int:
        return self.lam.size

    def q_star(self, zstar):
        return np.prod(zstar * np.conj(self.lam) - 1.0)

    def q_prime(self, zprime):
        return np.prod(self.lam * zprime - 1.0)

    def numerator(self, zstar, zprime) -> complex:
        """``sum g[n, n'] z*^(N-n) z'^n'``."""
        N = self.dimension
        n = np.arange(N + 1)
        a = zstar ** (N - n)
        b = zprime**n
        return complex(a @ self.g @ b)

    def reconstruct(self, zstar, zprime) -> complex:
        """Level sum rebuilt from the coefficient matrix."""
        return self.numerator(zstar, zprime) / (self.q_star(zstar) * self.q_prime(zprime))


def _poly_mul(p, q):
    return np.convolve(p, q)


def _linear_product(roots_coeffs):
    """Product of linear factors ``(c_i x - 1)`` as ascending coefficients."""
    out = np.array([1.0 + 0j])
    for c in roots_coeffs:
        out = _poly_mul(out, np.array([-1.0, c], dtype=complex))
    return out


def coeff_matrix(decay: DecayFactors, overlaps) -> GenFuncCoeffs:
    """Expand the level sum over the common denominator ``Q(z*) Q'(z')``.

    Each level contributes ``|q_j|^2 (|lam_j|^2 z* z' - 1) prod_{i != j} (z* conj(lam_i) - 1)(lam_i z' - 1)``;
    the factors are multiplied out by exact convolution.
    """
    lam = decay.lam
    N = lam.size
    if N < 1:
        raise ValidationError("need at least one level")
    w = _weights(overlaps)
    # natural[a, b]: coefficient of z*^a z'^b
    natural = np.zeros((N + 1, N + 1), dtype=complex)
    for j in range(N):
        others = np.delete(lam, j)
        pa = _linear_product(np.conj(others))
        pb = _linear_product(others)
        rest = np.outer(pa, pb)  # degree N-1 in each variable
        s = abs(lam[j]) ** 2
        term = np.zeros((N + 1, N + 1), dtype=complex)
        term[1:, 1:] += s * rest
        term[:-1, :-1] -= rest
        natural += w[j] * term
    return GenFuncCoeffs(natural[::-1, :].copy(), lam.copy())


# ---------------------------------------------------------------------------
# fixed-modulus polynomial
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FixedModulusPolynomial:
    """``p(z) = sum_{n,n'} |z|^(2n) g[n, n'] z^(N-n+n')`` with ``|z|`` frozen.

    ``coefficients`` are ascending (``z^0 .. z^2N``); ``delta_coefficients``
    hold ``dp/dDelta`` at ``Delta = 0`` for the deformation ``z' = z + Delta``.
    """

    modulus: float
    coefficients: np.ndarray
    delta_coefficients: np.ndarray
    dimension: int

    @property
    def leading(self) -> complex:
        return complex(self.coefficients[-1])

    @property
    def degree(self) -> int:
        return self.coefficients.size - 1

    def __call__(self, z):
        return _kernels.polyval(self.coefficients, z)

    def delta_derivative(self, z):
        return _kernels.polyval(self.delta_coefficients, z)

    def derivative(self, z):
        c = self.coefficients
        return _kernels.polyval(c[1:] * np.arange(1, c.size), z)


def shifted_poly_coefficients(coeffs: GenFuncCoeffs, modulus: float, delta: complex = 0.0) -> np.ndarray:
    """Ascending coefficients of ``sum |z|^(2n) g[n, n'] z^(N-n) (z + delta)^n'``."""
    g = coeffs.g
    N = coeffs.dimension
    r2 = float(modulus) ** 2
    out = np.zeros(2 * N + 1, dtype=complex)
    for np_ in range(N + 1):
        # (z + delta)^n' expanded
        binom = np.array([_binom(np_, i) * delta ** (np_ - i) for i in range(np_ + 1)], dtype=complex)
        for n in range(N + 1):
            c = r2**n * g[n, np_]
            if c == 0:
                continue
            out[N - n : N - n + np_ + 1] += c * binom
    return out


def _binom(n, k):
    from math import comb

    return comb(n, k)


def poly_at_fixed_modulus(coeffs: GenFuncCoeffs, modulus: float) -> FixedModulusPolynomial:
    modulus = float(modulus)
    if not (0 < modulus <= 1):
        raise ValidationError(f"modulus must lie in (0, 1], got {modulus}")
    N = coeffs.dimension
    g = coeffs.g
    if abs(g[0, N]) < LEADING_TOL:
        raise LeadingZero(f"|g[0, N]| = {abs(g[0, N]):.3e}: polynomial degree drops below 2N")
    r2 = modulus**2
    c = np.zeros(2 * N + 1, dtype=complex)
    d = np.zeros(2 * N, dtype=complex)
    for n in range(N + 1):
        for m in range(N + 1):
            v = r2**n * g[n, m]
            c[N - n + m] += v
            if m:
                d[N - n + m - 1] += m * v
    return FixedModulusPolynomial(modulus, c, d, N)
