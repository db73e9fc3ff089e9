"""Time correlation matrix: exact elements, Monte Carlo oracle, asymptotics."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import PreconditionViolation, ValidationError
from .spectrum import DecayFactors, Spectrum, WaitingTimeDistribution

#: samples per Monte Carlo block; each block has its own derived seed
MC_BLOCK = 16384


@dataclass(frozen=True)
class CorrSequence:
    """Asymptotic correlations ``C_m``, ``m = -M..M``, stored at index ``m + M``."""

    max_lag: int
    values: np.ndarray

    def __getitem__(self, m: int) -> complex:
        if abs(m) > self.max_lag:
            raise IndexError(f"lag {m} outside +-{self.max_lag}")
        return complex(self.values[m + self.max_lag])

    @property
    def lags(self) -> np.ndarray:
        return np.arange(-self.max_lag, self.max_lag + 1)


@dataclass(frozen=True)
class McEstimate:
    mean: complex
    std_error: float
    n_samples: int


def _check_k(k, kp):
    if int(k) < 1 or int(kp) < 1:
        raise ValidationError("time indices k, k' must be >= 1")


def tcm_element(decay: DecayFactors, overlaps, k: int, kp: int) -> complex:
    """Exact ``<u_k^* u_k'>`` averaged over the waiting times.

    For ``k' >= k`` the first ``k`` steps are shared and contribute
    ``lam_pair[j, j']**k``; the remaining ``k' - k`` steps only carry the phase
    ``exp(-i E_j' tau)``, whose average is ``conj(lam[j'])``. The case ``k' < k``
    is the Hermitian mirror.
    """
    _check_k(k, kp)
    if decay.lam_pair is None:
        raise PreconditionViolation("tcm_element needs pair decay factors (a spectrum + distribution)")
    q = np.asarray(overlaps, dtype=complex)
    amp = np.conj(q)[:, None] * q[None, :]
    if kp >= k:
        tail = np.conj(decay.lam)[None, :] ** (kp - k)
        terms = amp * decay.lam_pair**k * tail
    else:
        tail = decay.lam[:, None] ** (k - kp)
        terms = amp * decay.lam_pair**kp * tail
    return complex(terms.sum())


def diag_asymptote(spec: Spectrum) -> float:
    """``P_N = sum_j |q_j|^2``, the large-k limit of ``<|u_k|^2>``."""
    return float(np.sum(spec.weights))


def corr_sequence(decay: DecayFactors, overlaps, max_lag: int, strict: bool = True) -> CorrSequence:
    """``C_m = sum_j |q_j|^2 |lam_j|^|m| exp(-i phi_j m)``.

    Note ``<u_k^* u_k'>`` approaches ``C_{k'-k}`` for large ``min(k, k')``.
    """
    if max_lag < 0:
        raise ValidationError("max_lag must be >= 0")
    if strict:
        decay.require_strict()
    w = np.abs(np.asarray(overlaps, dtype=complex)) ** 2
    m = np.arange(-max_lag, max_lag + 1)
    mod = decay.moduli[None, :] ** np.abs(m)[:, None]
    phase = np.exp(-1j * decay.phases[None, :] * m[:, None])
    vals = (w[None, :] * mod * phase).sum(axis=1)
    # exact Hermiticity and a real zero lag
    vals[max_lag] = vals[max_lag].real
    vals[:max_lag] = np.conj(vals[: max_lag : -1]) if max_lag else vals[:0]
    return CorrSequence(max_lag, vals)


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------


def _block_tau(dist, kmax, seed, block, size):
    rng = np.random.default_rng([int(seed), int(block)])
    return np.asarray(dist.sample(rng, (size, kmax)), dtype=float)


def tcm_mc_batch(
    spec: Spectrum,
    dist: WaitingTimeDistribution,
    pairs,
    n_samples: int,
    seed: int,
    workers: int = 1,
    backend: str | None = None,
) -> list[McEstimate]:
    """Monte Carlo estimates of ``<u_k^* u_k'>`` for several ``(k, k')`` at once.

    All pairs are evaluated on the same waiting-time sequences. Samples are
    drawn in fixed blocks of ``MC_BLOCK`` with seeds ``(seed, block)``, so the
    result does not depend on ``workers``.
    """
    if n_samples < 100:
        raise ValidationError("n_samples must be >= 100")
    pairs = [(int(a), int(b)) for a, b in pairs]
    if not pairs:
        raise ValidationError("no (k, k') pairs given")
    for k, kp in pairs:
        _check_k(k, kp)
    ks = np.array([p[0] for p in pairs])
    kps = np.array([p[1] for p in pairs])
    kmax = int(max(ks.max(), kps.max()))

    n_blocks = -(-n_samples // MC_BLOCK)
    sizes = [min(MC_BLOCK, n_samples - b * MC_BLOCK) for b in range(n_blocks)]

    # moments are accumulated about the first sample to avoid cancellation
    tau0 = _block_tau(dist, kmax, seed, 0, sizes[0])
    first = _kernels.mc_pair_sums(tau0[:1], spec.energies, spec.overlaps, ks, kps, backend=backend)
    shift = first[:, 0] + 1j * first[:, 1]

    def run(b):
        tau = tau0 if b == 0 else _block_tau(dist, kmax, seed, b, sizes[b])
        return _kernels.mc_pair_sums(tau, spec.energies, spec.overlaps, ks, kps, shift, backend=backend)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(run, range(n_blocks)))
    else:
        parts = [run(b) for b in range(n_blocks)]
    sums = np.zeros((len(pairs), 4))
    for part in parts:  # fixed order keeps the reduction deterministic
        sums += part

    n = float(n_samples)
    out = []
    for p in range(len(pairs)):
        s_re, s_im, s_re2, s_im2 = sums[p]
        var_re = max(s_re2 - s_re * s_re / n, 0.0) / (n - 1)
        var_im = max(s_im2 - s_im * s_im / n, 0.0) / (n - 1)
        se = float(np.sqrt((var_re + var_im) / n))
        out.append(McEstimate(complex(shift[p] + complex(s_re / n, s_im / n)), se, n_samples))
    return out


def tcm_element_mc(
    spec: Spectrum,
    dist: WaitingTimeDistribution,
    k: int,
    kp: int,
    n_samples: int,
    seed: int,
    workers: int = 1,
    backend: str | None = None,
) -> McEstimate:
    return tcm_mc_batch(spec, dist, [(k, kp)], n_samples, seed, workers=workers, backend=backend)[0]


def amplitudes(spec: Spectrum, tau: np.ndarray) -> np.ndarray:
    """``u_k`` for one or more waiting-time sequences (last axis = steps)."""
    t = np.cumsum(np.asarray(tau, dtype=float), axis=-1)
    return np.exp(-1j * t[..., None] * spec.energies) @ spec.overlaps
