"""Scaling family ``lam -> t lam``: classical limit and small-t corrections."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .connection import connection_direct, connection_direct_many
from .errors import MuZero, PreconditionViolation, ValidationError
from .spectrum import DecayFactors, Spectrum

MU_TOL = 1e-13


def _weights(spec_or_overlaps) -> np.ndarray:
    if isinstance(spec_or_overlaps, Spectrum):
        return np.asarray(spec_or_overlaps.weights, dtype=float)
    return np.abs(np.asarray(spec_or_overlaps, dtype=complex)) ** 2


def _check_t(t, allow_zero=True):
    t = float(t)
    lo_ok = t >= 0 if allow_zero else t > 0
    if not (lo_ok and t <= 1):
        raise ValidationError(f"t must lie in {'[0' if allow_zero else '(0'}, 1], got {t}")
    return t


def scaled_decay(decay: DecayFactors, t: float) -> DecayFactors:
    return decay.scaled(_check_t(t))


def scaled_connection(
    decay: DecayFactors, overlaps, t: float, z: complex, modulus: float, subtract_classical: bool = False
) -> complex:
    """``C_t(z)``: the connection with every ``lam_j`` replaced by ``t lam_j``."""
    return connection_direct(scaled_decay(decay, t), overlaps, z, modulus, subtract_classical)


def scaled_connection_many(decay, overlaps, t, z, modulus, subtract_classical=False):
    return connection_direct_many(scaled_decay(decay, t), overlaps, z, modulus, subtract_classical)


def classical_limit(modulus: float) -> float:
    """``sum k |z|^2k / sum |z|^2k = 1/(1 - |z|^2)``."""
    modulus = float(modulus)
    if not (0 < modulus < 1):
        raise ValidationError(f"classical limit needs 0 < |z| < 1, got {modulus}")
    return 1.0 / (1.0 - modulus**2)


def classical_limit_truncated(modulus: float, kmax: int = 2000) -> float:
    k = np.arange(1, kmax + 1)
    p = float(modulus) ** (2 * k)
    return float(np.sum(k * p) / np.sum(p))


@dataclass(frozen=True)
class ScalingPoint:
    t: float
    mu: complex
    mu_bar: float
    z_plus: complex
    z_minus: complex
    modulus: float

    @property
    def linear(self) -> complex:
        """Linear coefficient ``mu_bar/(t mu)`` of the pole quadratic."""
        return self.mu_bar / (self.t * self.mu)

    @property
    def constant(self) -> complex:
        return self.modulus**2 * np.conj(self.mu) / self.mu


def small_t_poles(spec_or_overlaps, decay: DecayFactors, t: float, modulus: float) -> ScalingPoint:
    """Roots of ``z^2 + mu_bar/(t mu) z + |z|^2 mu*/mu``.

    ``z_plus`` is the root whose modulus diverges as ``t -> 0``; ``z_minus``
    follows from the product so it keeps full relative accuracy.
    """
    t = _check_t(t, allow_zero=False)
    w = _weights(spec_or_overlaps)
    mu = complex(np.sum(w * decay.lam))
    mu_bar = float(np.sum(w))
    if abs(mu) < MU_TOL:
        raise MuZero(f"|mu| = {abs(mu):.3e}: small-t poles undefined")
    if mu_bar <= 0:
        raise ValidationError("mu_bar must be positive")
    b = mu_bar / (t * mu)
    c = float(modulus) ** 2 * np.conj(mu) / mu
    root = np.sqrt(complex(b * b - 4 * c))
    if (np.conj(b) * root).real < 0:
        root = -root
    z_plus = (-b - root) / 2
    z_minus = c / z_plus
    return ScalingPoint(t, mu, mu_bar, complex(z_plus), complex(z_minus), float(modulus))


def first_order_connection(
    decay: DecayFactors, overlaps, t: float, z: complex, modulus: float, form: str = "linear"
) -> complex:
    """First-order small-t connection.

    ``form="linear"``: ``1/(1-|z|^2) + sum w t lam z / sum w [z + t(lam z^2 + |z|^2 lam*)]``.
    ``form="quadratic"`` replaces the numerator by ``sum w t lam z^2``, the
    first-order expansion of the closed form.
    """
    t = _check_t(t)
    z = complex(z)
    w = _weights(overlaps)
    lam = decay.lam
    r2 = float(modulus) ** 2
    den = np.sum(w * (z + t * (lam * z * z + r2 * np.conj(lam))))
    if form == "linear":
        num = np.sum(w * t * lam * z)
    elif form == "quadratic":
        num = np.sum(w * t * lam * z * z)
    else:
        raise ValidationError(f"unknown form {form!r}")
    if modulus >= 1:
        raise PreconditionViolation("classical term diverges at |z| = 1")
    return complex(1.0 / (1.0 - r2) + num / den)


def small_t_c0(point: ScalingPoint) -> complex:
    """``1/(1-|z|^2) - t |z|^2 mu*/mu_bar``."""
    r2 = point.modulus**2
    return complex(1.0 / (1.0 - r2) - point.t * r2 * np.conj(point.mu) / point.mu_bar)


def small_t_c0_intermediate(point: ScalingPoint) -> complex:
    """``1/(1-|z|^2) + 1/(z_plus - z_minus)``."""
    return complex(1.0 / (1.0 - point.modulus**2) + 1.0 / (point.z_plus - point.z_minus))


def omega_averaged_times(point: ScalingPoint) -> tuple[complex, complex]:
    """Angle averages of the transition and (``i`` times) correlation times to first order in ``t``."""
    r2 = point.modulus**2
    trans = 1.0 / (1.0 - r2) - point.t * r2 * np.conj(point.mu) / point.mu_bar
    corr = 2.0 * point.t * r2 * point.mu.imag / point.mu_bar
    return complex(trans), complex(corr)


def omega_average_numeric(decay: DecayFactors, overlaps, t: float, modulus: float, samples: int = 1024):
    """Trapezoid average of ``C_t`` over ``|z| = modulus``.

    Returns ``(mean C_t, i * mean <k - k'>)`` with ``<k - k'> = 2i Im C_t``.
    """
    if modulus >= 1:
        raise PreconditionViolation("classical term diverges at |z| = 1")
    z = modulus * np.exp(2j * np.pi * np.arange(samples) / samples)
    vals = scaled_connection_many(decay, overlaps, t, z, modulus)
    trans = complex(np.mean(vals))
    corr = complex(1j * np.mean(2j * vals.imag))
    return trans, corr


def defect_ratio(d_coarse: float, d_fine: float) -> float:
    """Defect shrink factor between ``t`` and ``t/10``."""
    if d_fine == 0:
        return math.inf
    return float(d_coarse / d_fine)
