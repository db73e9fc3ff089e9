"""Cauchy/Laurent coefficients on circular contours and Berry winding numbers.

A contour is either a single :class:`ContourSpec` (a positively oriented
circle) or a tuple of disjoint circles, i.e. a cycle whose interior is the
union of the discs. Integrals use the M-point trapezoidal rule in the angle,
which converges geometrically for integrands analytic near the circle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from . import _kernels
from .connection import PoleDecomposition, find_zeros
from .errors import NotConverged, PoleTooClose, PreconditionViolation, ValidationError
from .genfunc import GenFuncCoeffs, level_sum, poly_at_fixed_modulus
from .spectrum import DecayFactors


@dataclass(frozen=True)
class ContourSpec:
    center: complex
    radius: float
    samples: int = 512

    def __post_init__(self):
        object.__setattr__(self, "center", complex(self.center))
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise ValidationError(f"radius must be positive, got {self.radius}")
        m = int(self.samples)
        if m < 256 or m & (m - 1):
            raise ValidationError(f"samples must be a power of two >= 256, got {self.samples}")
        object.__setattr__(self, "samples", m)

    @property
    def guard(self) -> float:
        return max(1e-6, self.radius / self.samples)

    def nodes(self, samples: int | None = None):
        m = self.samples if samples is None else samples
        e = np.exp(2j * np.pi * np.arange(m) / m)
        return self.center + self.radius * e, self.radius * e

    def contains(self, p: complex) -> bool:
        return abs(complex(p) - self.center) < self.radius

    def doubled(self) -> "ContourSpec":
        return ContourSpec(self.center, self.radius, 2 * self.samples)


Contour = Union[ContourSpec, Sequence[ContourSpec]]


def circles(contour: Contour) -> tuple[ContourSpec, ...]:
    if isinstance(contour, ContourSpec):
        return (contour,)
    out = tuple(contour)
    if not out or not all(isinstance(c, ContourSpec) for c in out):
        raise ValidationError("contour must be a ContourSpec or a non-empty sequence of them")
    for i, a in enumerate(out):
        for b in out[i + 1 :]:
            if abs(a.center - b.center) <= a.radius + b.radius:
                raise ValidationError("circles of a cycle must be disjoint")
    return out


def encloses(contour: Contour, p: complex) -> bool:
    return any(c.contains(p) for c in circles(contour))


def check_guard(contour: Contour, poles) -> None:
    """Raise :class:`PoleTooClose` if any pole is within the guard distance of a circle."""
    poles = np.atleast_1d(np.asarray(poles, dtype=complex))
    if poles.size == 0:
        return
    for c in circles(contour):
        dist = np.abs(np.abs(poles - c.center) - c.radius)
        i = int(np.argmin(dist))
        if dist[i] <= c.guard:
            raise PoleTooClose(f"pole {poles[i]} is {dist[i]:.3e} from the circle |z - {c.center}| = {c.radius}")


def _default_z0(contour):
    return circles(contour)[0].center


def _evaluate(f, z):
    try:
        v = f(z)
        v = np.asarray(v, dtype=complex)
        if v.shape == z.shape:
            return v
    except (TypeError, ValueError):
        pass
    return np.array([complex(f(x)) for x in z.ravel()]).reshape(z.shape)


def _trapezoid(f, contour, n, z0, samples_factor=1):
    total = 0.0 + 0.0j
    for c in circles(contour):
        z, dz = c.nodes(c.samples * samples_factor)
        vals = _evaluate(f, z) * (z - z0) ** (-n - 1) * dz
        total += np.sum(vals) / vals.size
    return complex(total)


def cauchy_coeff(
    f: Callable,
    contour: Contour,
    n: int,
    z0: complex | None = None,
    poles=(),
    convergence_check: bool = False,
    tol: float = 1e-9,
) -> complex:
    """``(1/2 pi i) oint f(z) (z - z0)^(-n-1) dz`` by the trapezoidal rule.

    ``z0`` defaults to the centre of the (first) circle. ``poles`` are the
    known singularities of ``f``, checked against the guard distance. With
    ``convergence_check`` the rule is repeated on twice as many nodes and
    :class:`NotConverged` is raised if the two differ by more than ``tol``;
    the refined value is returned.
    """
    z0 = _default_z0(contour) if z0 is None else complex(z0)
    guard_pts = list(np.atleast_1d(np.asarray(poles, dtype=complex)))
    if n >= 0:
        guard_pts.append(z0)
    check_guard(contour, guard_pts)
    value = _trapezoid(f, contour, n, z0)
    if not convergence_check:
        return value
    refined = _trapezoid(f, contour, n, z0, samples_factor=2)
    if abs(refined - value) > tol:
        raise NotConverged(f"doubling the nodes changed c_{n} by {abs(refined - value):.3e}")
    return refined


@dataclass(frozen=True)
class LaurentSeries:
    z0: complex
    orders: np.ndarray
    coefficients: np.ndarray
    refined: np.ndarray | None = None

    def __getitem__(self, n: int) -> complex:
        idx = int(n) - int(self.orders[0])
        if not 0 <= idx < self.orders.size:
            raise IndexError(n)
        return complex(self.coefficients[idx])

    def max_change(self) -> float:
        if self.refined is None:
            return math.nan
        return float(np.max(np.abs(self.refined - self.coefficients)))


def _fft_coefficients(f, contour: ContourSpec, n_max, samples):
    if 2 * n_max + 1 > samples:
        raise ValidationError("n_max too large for the sample count")
    z, _ = contour.nodes(samples)
    F = np.fft.fft(_evaluate(f, z)) / samples
    orders = np.arange(-n_max, n_max + 1)
    return orders, F[orders % samples] / contour.radius ** orders.astype(float)


def laurent_series(f: Callable, contour: ContourSpec, n_max: int, poles=(), convergence_check=False) -> LaurentSeries:
    """Coefficients ``c_n``, ``|n| <= n_max``, about the circle centre (via FFT)."""
    if not isinstance(contour, ContourSpec):
        raise ValidationError("laurent_series needs a single circle")
    check_guard(contour, poles)
    orders, coeffs = _fft_coefficients(f, contour, n_max, contour.samples)
    refined = None
    if convergence_check:
        _, refined = _fft_coefficients(f, contour, n_max, 2 * contour.samples)
    return LaurentSeries(contour.center, orders, coeffs, refined)


# ---------------------------------------------------------------------------
# pole bookkeeping and the closed-form c_0
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PoleClassification:
    enclosed_lambda: tuple[int, ...]
    enclosed_zeros: tuple[int, ...]
    n_lambda: int
    n_zeros: int
    z0: complex
    z0_enclosed: bool

    @property
    def n_prime(self) -> int:
        return len(self.enclosed_lambda)

    @property
    def excluded_lambda(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.n_lambda) if i not in self.enclosed_lambda)

    @property
    def excluded_zeros(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.n_zeros) if i not in self.enclosed_zeros)

    @property
    def all_zeros_enclosed(self) -> bool:
        return len(self.enclosed_zeros) == self.n_zeros


def classify_poles(decomp: PoleDecomposition, contour: Contour, z0: complex | None = None) -> PoleClassification:
    z0 = _default_z0(contour) if z0 is None else complex(z0)
    check_guard(contour, np.concatenate([decomp.all_poles(), [z0]]))
    lam_in = tuple(i for i, p in enumerate(decomp.lambda_poles) if encloses(contour, p))
    zer_in = tuple(i for i, p in enumerate(decomp.zeros) if encloses(contour, p))
    return PoleClassification(
        lam_in, zer_in, decomp.lambda_poles.size, decomp.zeros.size, z0, encloses(contour, z0)
    )


def c0_analytic(
    modulus: float, classification: PoleClassification, lam, z0: complex | None = None, subtract_classical=False
) -> complex:
    """``c_0 = 1/(1-|z|^2) + N - N' - sum_{excluded j} z0/(z0 - 1/lam_j)``.

    Valid for contours enclosing ``z0`` and every zero; ``N'`` counts the
    enclosed ``1/lam_j`` poles.
    """
    lam = np.asarray(lam, dtype=complex)
    z0 = classification.z0 if z0 is None else complex(z0)
    if not classification.all_zeros_enclosed:
        raise PreconditionViolation("closed-form c_0 requires every zero inside the contour")
    if not classification.z0_enclosed:
        raise PreconditionViolation("closed-form c_0 requires z0 inside the contour")
    N = lam.size
    if subtract_classical:
        cl = 0.0
    elif modulus >= 1:
        raise PreconditionViolation("classical term diverges at |z| = 1")
    else:
        cl = 1.0 / (1.0 - modulus**2)
    excl = classification.excluded_lambda
    tail = sum(z0 / (z0 - 1.0 / lam[j]) for j in excl)
    return complex(cl + N - classification.n_prime - tail)


def c0_residues(decomp: PoleDecomposition, classification: PoleClassification, subtract_classical=False) -> complex:
    """``c_0`` of the pole form for any contour enclosing ``z0``.

    Each simple pole ``p`` with amplitude ``a`` (``1`` for ``1/lam_j``, ``s_n``
    for ``zbar_n``) adds ``-a`` when enclosed and ``-a z0/(z0 - p)`` when not.
    Reduces to :func:`c0_analytic` when every zero is enclosed and the
    sensitivities sum to ``-N``.
    """
    if not classification.z0_enclosed:
        raise PreconditionViolation("c_0 about z0 needs z0 inside the contour")
    z0 = classification.z0
    if subtract_classical:
        total = 0.0 + 0.0j
    elif decomp.modulus >= 1:
        raise PreconditionViolation("classical term diverges at |z| = 1")
    else:
        total = complex(1.0 / (1.0 - decomp.modulus**2))
    amps = np.concatenate([np.ones(decomp.dimension, dtype=complex), decomp.sensitivities])
    poles = decomp.all_poles()
    inside = set(classification.enclosed_lambda) | {decomp.dimension + i for i in classification.enclosed_zeros}
    for i, (a, p) in enumerate(zip(amps, poles)):
        total -= a if i in inside else a * z0 / (z0 - p)
    return complex(total)


def isolating_cycle(targets, poles, z0: complex = 0.0, samples: int = 512, shrink: float = 0.3) -> tuple[ContourSpec, ...]:
    """Small disjoint discs around ``z0`` and each point of ``targets``.

    Radii are ``shrink`` times the distance to the nearest other site, so the
    cycle encloses exactly the targets (and coincident poles) plus ``z0``.
    """
    sites = [complex(z0)]
    for t in np.atleast_1d(np.asarray(targets, dtype=complex)):
        if all(abs(t - s_) > 1e-12 for s_ in sites):
            sites.append(complex(t))
    everything = np.concatenate([np.asarray(sites), np.atleast_1d(np.asarray(poles, dtype=complex))])
    out = []
    for s_ in sites:
        d = np.abs(everything - s_)
        d = d[d > 1e-12]
        out.append(ContourSpec(s_, shrink * float(d.min()), samples))
    return tuple(out)


# ---------------------------------------------------------------------------
# Berry winding
# ---------------------------------------------------------------------------


def berry_winding(
    coeffs: GenFuncCoeffs, modulus: float, contour: Contour, require_all: bool = True, zeros=None
) -> complex:
    """``(1/2 pi i) oint C_1(z) dz / z`` with ``C_1(z) = -z sum_n s_n/(z - zbar_n)``.

    ``C_1(z)/z`` equals ``(dp/dDelta)(z) / p(z)`` for the fixed-modulus
    polynomial, so the integrand is evaluated from the polynomial itself and
    no root data enter the quadrature. The zeros are still located to enforce
    the guard and (with ``require_all``) the all-enclosed precondition.
    """
    poly = poly_at_fixed_modulus(coeffs, modulus)
    zeros = find_zeros(poly) if zeros is None else np.asarray(zeros, dtype=complex)
    check_guard(contour, zeros)
    if require_all:
        if not all(encloses(contour, z) for z in zeros):
            raise PreconditionViolation("contour must enclose all zeros")
        if not encloses(contour, 0.0):
            raise PreconditionViolation("contour must enclose the origin")
    total = 0.0 + 0.0j
    for c in circles(contour):
        z, dz = c.nodes()
        vals = _kernels.polyval(poly.delta_coefficients, z) / _kernels.polyval(poly.coefficients, z)
        total += np.sum(vals * dz) / z.size
    return complex(total)


def _cauchy_log_derivative(F, z, rho, m=32):
    """``F'(z)/F(z)`` from the Cauchy integral of ``F`` on circles of radius ``rho``."""
    e = np.exp(2j * np.pi * np.arange(m) / m)
    zeta = z[:, None] + rho[:, None] * e[None, :]
    vals = F(zeta)
    deriv = np.mean(vals * np.conj(e)[None, :], axis=1) / rho
    centre = np.mean(vals, axis=1)
    return deriv / centre


def berry_phase_full(
    decay: DecayFactors, overlaps, modulus: float, contour: Contour, subtract_classical: bool = False
) -> complex:
    """``(1/2 pi i) oint [-i d/d omega' log C(z*, z')]_{z'=z} dz / z``.

    ``-i d/d omega'`` acts as ``z' d/dz'``; the derivative of the closed-form
    generating function is taken numerically by a small Cauchy circle around
    each contour node, independent of the hand-differentiated form used by
    :func:`tcmkit.connection.connection_direct`. Equals ``c_0`` about
    ``z0 = 0``.
    """
    modulus = float(modulus)
    lam = decay.lam
    w = np.abs(np.asarray(overlaps, dtype=complex)) ** 2
    s = np.abs(lam) ** 2
    if not subtract_classical and modulus >= 1:
        raise PreconditionViolation("classical term diverges at |z| = 1; use subtract_classical=True")
    check_guard(contour, np.concatenate([1.0 / lam, [0.0]]))

    total = 0.0 + 0.0j
    for c in circles(contour):
        z, dz = c.nodes()
        zs = modulus**2 / z

        def S(zeta, zs=zs):
            zs_ = zs[:, None, None]
            zt = zeta[..., None]
            return np.sum(w * (s * zs_ * zt - 1.0) / ((zt * lam - 1.0) * (zs_ * np.conj(lam) - 1.0)), axis=-1)

        if subtract_classical:
            F = S
            sing = [np.full(z.shape, p) for p in 1.0 / lam]
        else:

            def F(zeta, zs=zs):
                x = zs[:, None] * zeta
                return x / (x - 1.0) * S(zeta)

            sing = [np.full(z.shape, p) for p in 1.0 / lam] + [z / modulus**2]
        dist = np.min(np.abs(np.stack(sing) - z[None, :]), axis=0)
        rho = 0.25 * np.minimum(dist, np.abs(z))
        conn = z * _cauchy_log_derivative(F, z, rho)
        total += np.sum(conn / z * dz) / z.size
    return complex(total)
