"""Time the numba and numpy kernel backends on representative workloads.

    python benchmarks/bench_kernels.py [--repeat 5]

Numba timings exclude the first (compiling) call.
"""

import argparse
import time

import numpy as np

from tcmkit import _kernels, coeff_matrix, corr_sequence, poly_at_fixed_modulus, random_model
from tcmkit._accel import HAVE_NUMBA
from tcmkit.tcm import _block_tau


def _workloads():
    m = random_model(4, 3)
    spec, dist = m.spectrum, m.distribution
    pairs = np.array([(k, kp) for k in (1, 2, 3, 5, 8) for kp in (1, 3, 4, 7)])
    tau = _block_tau(dist, 8, 0, 0, 200_000)
    corr = corr_sequence(m.decay, spec.overlaps, 700)
    poly = poly_at_fixed_modulus(coeff_matrix(m.decay, spec.overlaps), 0.8)
    grid = 3.0 * np.exp(2j * np.pi * np.arange(65536) / 65536)
    start = np.exp(2j * np.pi * (np.arange(poly.coefficients.size - 1) + 0.25) / (poly.coefficients.size - 1))
    return {
        "mc_pair_sums (200k x 20 pairs)": lambda b: _kernels.mc_pair_sums(
            tau, spec.energies, spec.overlaps, pairs[:, 0], pairs[:, 1], backend=b
        ),
        "toeplitz_double_sum (K=600)": lambda b: _kernels.toeplitz_double_sum(
            corr.values, corr.max_lag, 0.5 + 0.3j, 0.4 - 0.6j, 600, backend=b
        ),
        "polyval (65536 nodes)": lambda b: _kernels.polyval(poly.coefficients, grid, backend=b),
        "aberth (degree 8)": lambda b: _kernels.aberth(poly.coefficients, start, backend=b),
    }


def _time(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    backends = ["numpy"] + (["numba"] if HAVE_NUMBA else [])
    print(f"{'kernel':34s}" + "".join(f"{b:>12s}" for b in backends) + ("     speedup" if HAVE_NUMBA else ""))
    for name, fn in _workloads().items():
        times = []
        for b in backends:
            fn(b)  # warm-up, triggers compilation
            times.append(_time(lambda: fn(b), args.repeat))
        row = f"{name:34s}" + "".join(f"{t * 1e3:10.2f}ms" for t in times)
        if len(times) == 2:
            row += f"{times[0] / times[1]:11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
