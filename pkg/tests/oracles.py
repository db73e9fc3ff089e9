"""Independent reference computations used only by the tests."""

from __future__ import annotations

import numpy as np

from tcmkit.genfunc import genfunc_closed, shifted_poly_coefficients


def corr_matrix(lam, weights, K):
    """``M[k, k'] = C_{k-k'}`` built entry by entry from the polar form."""
    lam = np.asarray(lam, dtype=complex)
    k = np.arange(1, K + 1)
    m = k[:, None] - k[None, :]
    out = np.zeros((K, K), dtype=complex)
    for wj, lj in zip(weights, lam):
        out += wj * np.abs(lj) ** np.abs(m) * np.exp(-1j * np.angle(lj) * m)
    return out


def truncated_genfunc(lam, weights, zstar, zprime, K):
    k = np.arange(1, K + 1)
    a = np.asarray(zstar, dtype=complex) ** k
    b = np.asarray(zprime, dtype=complex) ** k
    return complex(a @ corr_matrix(lam, weights, K) @ b)


def single_level_branches(lam, zstar, zprime, K):
    """Single-level double sum split into ``k >= k'`` and ``k' > k`` branches."""
    s = abs(lam)
    ph = np.angle(lam)
    total = 0.0 + 0.0j
    for k in range(1, K + 1):
        kp = np.arange(1, k + 1)
        total += np.sum(s ** (k - kp) * np.exp(-1j * ph * (k - kp)) * zstar**k * zprime**kp)
        kp = np.arange(k + 1, K + 1)
        total += np.sum(s ** (kp - k) * np.exp(1j * ph * (kp - k)) * zstar**k * zprime**kp)
    return complex(total)


def companion_roots(coeffs_ascending):
    return np.roots(np.asarray(coeffs_ascending, dtype=complex)[::-1])


def match_nearest(reference, candidates):
    """Reorder ``candidates`` to pair each ``reference`` entry with its nearest candidate."""
    candidates = list(np.asarray(candidates, dtype=complex))
    out = []
    for r in reference:
        i = int(np.argmin([abs(r - c) for c in candidates]))
        out.append(candidates.pop(i))
    return np.array(out)


def rerooted_sensitivities(coeffs, modulus, zeros, delta=1e-6):
    """``(zbar_n(Delta) - zbar_n(0)) / Delta`` by re-solving the shifted polynomial."""
    shifted = companion_roots(shifted_poly_coefficients(coeffs, modulus, delta))
    return (match_nearest(zeros, shifted) - zeros) / delta


def connection_central_difference(decay, overlaps, z, modulus, h=1e-6):
    """``z d/dz' log C(z*, z')`` at ``z' = z`` by a complex central difference."""
    zs = modulus**2 / z
    step = h * abs(z)
    up = genfunc_closed(decay, overlaps, zs, z + step)
    dn = genfunc_closed(decay, overlaps, zs, z - step)
    mid = genfunc_closed(decay, overlaps, zs, z)
    return z * (up - dn) / (2 * step) / mid


def two_level_connection_reference(lam1, z, subtract=True):
    lam1 = complex(lam1)
    a = abs(lam1)
    q = -0.5 * (z / (z - 1 / lam1) + z / (z - 1 / lam1.conjugate()) - z / (z - 1 / a) - z / (z + 1 / a))
    return q if subtract else q + 1.0 / (1.0 - abs(z) ** 2)


def naive_mc(spec, dist, k, kp, n, seed):
    """Plain-loop Monte Carlo mean of ``u_k^* u_k'``."""
    rng = np.random.default_rng(seed)
    kmax = max(k, kp)
    acc = 0.0 + 0.0j
    for _ in range(n):
        t = np.cumsum(dist.sample(rng, kmax))
        u = np.exp(-1j * np.outer(t, spec.energies)) @ spec.overlaps
        acc += np.conj(u[k - 1]) * u[kp - 1]
    return acc / n
