import os
import subprocess
import sys

import numpy as np
import pytest

from tcmkit import _kernels
from tcmkit._accel import HAVE_NUMBA


def _both(fn, *args, **kw):
    return fn(*args, backend="numba", **kw), fn(*args, backend="numpy", **kw)


@pytest.fixture
def rng():
    return np.random.default_rng(3)


def test_mc_pair_sums_backends_agree(rng):
    tau = rng.exponential(1.0, (500, 9))
    e = np.array([0.3, -1.2, 2.0])
    q = np.array([0.4, 0.2 + 0.3j, -0.5j])
    ks, kps = np.array([1, 4, 9]), np.array([2, 4, 3])
    shift = np.array([0.1, 0.2j, 0.0])
    a, b = _both(_kernels.mc_pair_sums, tau, e, q, ks, kps, shift)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-12)


def test_toeplitz_double_sum_backends_agree(rng):
    c = rng.normal(size=41) + 1j * rng.normal(size=41)
    a, b = _both(_kernels.toeplitz_double_sum, c, 20, 0.7 + 0.1j, 0.3 - 0.5j, 21)
    assert abs(a - b) < 1e-12 * abs(a)


def test_polyval_backends_agree(rng):
    c = rng.normal(size=7) + 1j * rng.normal(size=7)
    z = rng.normal(size=(4, 5)) + 1j * rng.normal(size=(4, 5))
    a, b = _both(_kernels.polyval, c, z)
    assert a.shape == z.shape
    assert np.allclose(a, b, rtol=1e-13)
    assert np.allclose(a, np.polyval(c[::-1], z), rtol=1e-12)


def test_aberth_backends_agree(rng):
    roots = rng.normal(size=6) + 1j * rng.normal(size=6)
    c = np.poly(roots)[::-1].astype(complex)
    z0 = 1.5 * np.exp(1j * (2 * np.pi * np.arange(6) / 6 + 0.4))
    for backend in ("numba", "numpy"):
        z, iters, ok = _kernels.aberth(c, z0, backend=backend)
        assert ok and iters < 200
        for r in roots:
            assert np.min(np.abs(z - r)) < 1e-10


@pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed")
def test_environment_flag_selects_numpy():
    code = "from tcmkit import backend; print(backend())"
    env = dict(os.environ, TCMKIT_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
    env["TCMKIT_DISABLE_NUMBA"] = "0"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numba"


def test_unknown_backend_rejected():
    with pytest.raises(ValueError):
        _kernels.polyval(np.ones(3, complex), np.ones(2, complex), backend="fortran")
