"""Model builders: the symmetric two-level system and random N-level fixtures."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import RetryExhausted, ValidationError
from .spectrum import DecayFactors, Exponential, Spectrum, WaitingTimeDistribution, decay_factors

FIG2_LAMBDA = (1 + 1j) / math.sqrt(3)


@dataclass(frozen=True)
class TwoLevelModel:
    lambda1: complex
    q_mag: float
    decay: DecayFactors
    overlaps: np.ndarray

    @property
    def expected_poles(self) -> np.ndarray:
        """``{1/lam*, 1/|lam|, -1/|lam|, 1/lam}`` at ``|z| = 1``."""
        lam = self.lambda1
        return np.array([1 / np.conj(lam), 1 / abs(lam), -1 / abs(lam), 1 / lam])

    def closed_form_g(self) -> np.ndarray:
        """Coefficient matrix of the symmetric model written out by hand."""
        lam = self.lambda1
        w = self.q_mag**2
        s = abs(lam) ** 2
        re = lam.real
        return w * np.array(
            [
                [0.0, -2 * s * re, 2 * s * s],
                [2 * re, 0.0, -2 * s * re],
                [-2.0, 2 * re, 0.0],
            ],
            dtype=complex,
        )


def two_level(lambda1: complex = FIG2_LAMBDA, q_mag: float = 0.5) -> TwoLevelModel:
    lambda1 = complex(lambda1)
    if not abs(lambda1) < 1:
        raise ValidationError(f"|lambda1| must be < 1, got {abs(lambda1)}")
    if not (0 < q_mag <= 1 / math.sqrt(2) + 1e-15):
        raise ValidationError(f"q_mag must lie in (0, 1/sqrt(2)], got {q_mag}")
    decay = DecayFactors(np.array([lambda1, lambda1.conjugate()]))
    overlaps = np.array([q_mag, q_mag], dtype=complex)
    overlaps.flags.writeable = False
    return TwoLevelModel(lambda1, float(q_mag), decay, overlaps)


@dataclass(frozen=True)
class RandomModel:
    spectrum: Spectrum
    distribution: WaitingTimeDistribution
    decay: DecayFactors
    seed: int


def random_model(
    N: int,
    seed: int,
    mean_wait: float = 1.0,
    energy_scale: float = 3.0,
    min_gap: float = 0.05,
    min_energy: float = 0.25,
    max_modulus: float = 0.98,
    min_lambda_sep: float = 1e-3,
    retries: int = 100,
) -> RandomModel:
    """Random spectrum with exponential waiting times.

    Energies are uniform in ``+-energy_scale`` with ``|E| >= min_energy``
    (keeps ``|lam| < 0.98`` for the default mean) and pairwise gaps above
    ``min_gap``. Overlaps get random phases and total weight in ``[0.5, 1]``.
    """
    if not 2 <= N <= 8:
        raise ValidationError(f"N must lie in [2, 8], got {N}")
    dist = Exponential(mean_wait)
    rng = np.random.default_rng(seed)
    for _ in range(retries):
        mag = rng.uniform(min_energy, energy_scale, N)
        e = mag * rng.choice([-1.0, 1.0], N)
        amp = rng.uniform(0.2, 1.0, N)
        phase = rng.uniform(0, 2 * np.pi, N)
        total = rng.uniform(0.5, 1.0)
        q = amp * np.exp(1j * phase)
        q *= math.sqrt(total / np.sum(np.abs(q) ** 2))
        gaps = np.abs(e[:, None] - e[None, :])[np.triu_indices(N, 1)]
        if gaps.min() <= min_gap:
            continue
        lam = np.asarray(dist.char_fn(e), dtype=complex)
        if np.max(np.abs(lam)) >= max_modulus:
            continue
        seps = np.abs(lam[:, None] - lam[None, :])[np.triu_indices(N, 1)]
        if seps.min() <= min_lambda_sep:
            continue
        spec = Spectrum(e, q)
        return RandomModel(spec, dist, decay_factors(spec, dist, strict=True), int(seed))
    raise RetryExhausted(f"no admissible {N}-level model in {retries} draws (seed {seed})")


def find_peaks_periodic(values) -> np.ndarray:
    """Indices of strict local maxima of a periodic sampled curve."""
    v = np.asarray(values, dtype=float)
    left = np.roll(v, 1)
    right = np.roll(v, -1)
    return np.flatnonzero((v > left) & (v > right))


def angles(n: int) -> np.ndarray:
    if n < 1:
        raise ValidationError("angle grid must have at least one point")
    return 2 * np.pi * np.arange(n) / n
