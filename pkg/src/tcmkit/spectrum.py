"""Quantum model input, waiting-time laws and decay factors.

A model is a list of energy levels ``E_j`` (units of inverse time) with complex
overlap weights ``q_j = <Psi|E_j><E_j|Psi_0>``. Measurement times are sums of
i.i.d. waiting times ``tau``; all downstream quantities depend on the law of
``tau`` only through its characteristic function.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import DegenerateModuli, ValidationError

#: energies closer than this are treated as degenerate when poles are requested
DEGENERACY_TOL = 1e-8
#: |lambda_j| within this of 1 counts as non-decaying
UNIT_MODULUS_TOL = 1e-12
_UNIFORM_SERIES_CUTOFF = 1e-6


@dataclass(frozen=True)
class Spectrum:
    energies: np.ndarray
    overlaps: np.ndarray

    def __post_init__(self):
        e = np.array(self.energies, dtype=float).reshape(-1)
        q = np.array(self.overlaps, dtype=complex).reshape(-1)
        e.flags.writeable = False
        q.flags.writeable = False
        object.__setattr__(self, "energies", e)
        object.__setattr__(self, "overlaps", q)
        self.validate()

    @classmethod
    def from_levels(cls, levels) -> "Spectrum":
        """Build from an iterable of ``(energy, overlap)`` pairs."""
        levels = list(levels)
        return cls([e for e, _ in levels], [q for _, q in levels])

    @property
    def dimension(self) -> int:
        return self.energies.shape[0]

    @property
    def weights(self) -> np.ndarray:
        """``|q_j|^2``."""
        return np.abs(self.overlaps) ** 2

    def validate(self, pole_analysis: bool = False) -> None:
        e, q = self.energies, self.overlaps
        if e.shape != q.shape:
            raise ValidationError("energies and overlaps differ in length")
        if e.size < 1:
            raise ValidationError("spectrum needs at least one level")
        if not np.all(np.isfinite(e)):
            raise ValidationError("energies must be finite")
        if not np.all(np.isfinite(q)):
            raise ValidationError("overlaps must be finite")
        total = float(np.sum(np.abs(q) ** 2))
        if total == 0.0:
            raise ValidationError("overlaps are all zero")
        if total > 1.0 + 1e-12:
            raise ValidationError(f"sum |q_j|^2 = {total} exceeds 1")
        if pole_analysis and e.size > 1:
            gaps = np.abs(e[:, None] - e[None, :])[np.triu_indices(e.size, 1)]
            if gaps.min() < DEGENERACY_TOL:
                raise ValidationError("degenerate energy levels are not supported in pole analysis")


# ---------------------------------------------------------------------------
# waiting-time distributions
# ---------------------------------------------------------------------------


def _positive(name, value):
    if not (math.isfinite(value) and value > 0):
        raise ValidationError(f"{name} must be positive and finite, got {value}")


@dataclass(frozen=True)
class Exponential:
    mean: float

    def __post_init__(self):
        _positive("mean", self.mean)

    def char_fn(self, E):
        return 1.0 / (1.0 - 1j * np.asarray(E, dtype=float) * self.mean)

    def sample(self, rng: np.random.Generator, size):
        return rng.exponential(self.mean, size)


@dataclass(frozen=True)
class Gamma:
    shape: float
    scale: float

    def __post_init__(self):
        _positive("shape", self.shape)
        _positive("scale", self.scale)

    def char_fn(self, E):
        return (1.0 - 1j * np.asarray(E, dtype=float) * self.scale) ** (-self.shape)

    def sample(self, rng, size):
        return rng.gamma(self.shape, self.scale, size)


@dataclass(frozen=True)
class Uniform:
    a: float
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ValidationError("uniform bounds must be finite")
        if self.a < 0 or self.b <= self.a:
            raise ValidationError(f"need 0 <= a < b, got a={self.a}, b={self.b}")

    def char_fn(self, E):
        E = np.asarray(E, dtype=float)
        w = self.b - self.a
        x = E * w
        small = np.abs(x) < _UNIFORM_SERIES_CUTOFF
        half = np.where(small, 1.0, x / 2.0)
        # (e^{iEb} - e^{iEa}) / (iEw) rewritten without cancellation
        exact = np.exp(0.5j * E * (self.a + self.b)) * np.sin(half) / half
        ix = 1j * x
        series = np.exp(1j * E * self.a) * (1.0 + ix / 2.0 + ix * ix / 6.0)
        return np.where(small, series, exact)

    def sample(self, rng, size):
        return rng.uniform(self.a, self.b, size)


@dataclass(frozen=True)
class Deterministic:
    tau0: float

    def __post_init__(self):
        _positive("tau0", self.tau0)

    def char_fn(self, E):
        return np.exp(1j * np.asarray(E, dtype=float) * self.tau0)

    def sample(self, rng, size):
        return np.full(size, float(self.tau0))


WaitingTimeDistribution = Union[Exponential, Gamma, Uniform, Deterministic]


def char_fn(dist: WaitingTimeDistribution, E):
    """Characteristic function ``E[exp(i E tau)]``; scalar in, complex out."""
    val = dist.char_fn(E)
    if np.ndim(val) == 0:
        return complex(val)
    return val


def sample_tau(dist: WaitingTimeDistribution, seed, n: int) -> np.ndarray:
    """``n`` i.i.d. waiting times, reproducible for a fixed seed."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    rng = np.random.default_rng(seed)
    return np.asarray(dist.sample(rng, n), dtype=float)


# ---------------------------------------------------------------------------
# decay factors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DecayFactors:
    """Time-averaged phase factors.

    ``lam[j] = <exp(i E_j tau)>`` and ``lam_pair[j, j'] = <exp(i (E_j - E_j') tau)>``.
    ``lam_pair`` is ``None`` for models specified directly at the level of
    ``lam`` (no spectrum or distribution behind them).
    """

    lam: np.ndarray
    lam_pair: np.ndarray | None = None
    moduli: np.ndarray = field(init=False)
    phases: np.ndarray = field(init=False)

    def __post_init__(self):
        lam = np.array(self.lam, dtype=complex).reshape(-1)
        lam.flags.writeable = False
        object.__setattr__(self, "lam", lam)
        if self.lam_pair is not None:
            pair = np.array(self.lam_pair, dtype=complex)
            if pair.shape != (lam.size, lam.size):
                raise ValidationError("lam_pair must be N x N")
            pair.flags.writeable = False
            object.__setattr__(self, "lam_pair", pair)
        object.__setattr__(self, "moduli", np.abs(lam))
        object.__setattr__(self, "phases", np.angle(lam))

    @property
    def dimension(self) -> int:
        return self.lam.size

    def is_strict(self) -> bool:
        return bool(np.all(self.moduli < 1.0 - UNIT_MODULUS_TOL))

    def require_strict(self) -> None:
        bad = np.flatnonzero(self.moduli >= 1.0 - UNIT_MODULUS_TOL)
        if bad.size:
            raise DegenerateModuli(
                f"|lambda_j| = 1 for levels {bad.tolist()}; strict decay (|lambda_j| < 1) required"
            )

    def scaled(self, t: float) -> "DecayFactors":
        """Decay factors with ``lambda_j -> t lambda_j`` (pair factors dropped)."""
        return DecayFactors(t * self.lam)


def decay_factors(spec: Spectrum, dist: WaitingTimeDistribution, strict: bool = False) -> DecayFactors:
    e = spec.energies
    lam = np.asarray(dist.char_fn(e), dtype=complex)
    pair = np.asarray(dist.char_fn(e[:, None] - e[None, :]), dtype=complex)
    np.fill_diagonal(pair, 1.0)
    # enforce exact conjugate symmetry of the pair matrix
    iu = np.triu_indices(e.size, 1)
    pair[(iu[1], iu[0])] = np.conj(pair[iu])
    out = DecayFactors(lam, pair)
    if strict:
        out.require_strict()
    return out


def polar(lam: complex) -> tuple[float, float]:
    """Modulus and principal phase in (-pi, pi]."""
    return abs(lam), cmath.phase(lam)
