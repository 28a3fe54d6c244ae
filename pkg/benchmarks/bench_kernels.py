"""Compare the compiled and NumPy decay-probability kernels.

Usage: python benchmarks/bench_kernels.py [--points N] [--repeat R]
"""

import argparse
import timeit

import numpy as np

from fanopa import kernels
from fanopa.params import ModelParams


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=500, help="field points (x 64 energies)")
    ap.add_argument("--repeat", type=int, default=7)
    args = ap.parse_args()

    p = ModelParams(gamma_f=1.0, gamma_1=15.5, gamma_2=0.04, q_1=-0.3, q_2=21.69,
                    detuning_1=-1.5, detuning_2=-10.0, b0=47.97, dmu=-1.4, temperature=3.5)
    pars = kernels.pack_params(p)
    x, _ = np.polynomial.laguerre.laggauss(64)
    energy = np.broadcast_to(x * 0.0729, (args.points, 64))
    eps = energy - np.linspace(-15.0, 30.0, args.points)[:, None]

    results = {}
    previous = kernels.backend_name()
    try:
        for name in kernels.available_backends():
            kernels.use_backend(name)
            kernels.decay_probability(energy, eps, pars)  # warm up
            t = min(timeit.repeat(lambda: kernels.decay_probability(energy, eps, pars),
                                  number=10, repeat=args.repeat)) / 10
            results[name] = t
            print(f"{name:>8}: {t * 1e3:9.3f} ms per call ({energy.size} evaluations)")
    finally:
        kernels.use_backend(previous)
    if "cython" in results:
        print(f"speed-up: {results['python'] / results['cython']:.1f}x")
    else:
        print("compiled kernel not built; only the NumPy path was timed")


if __name__ == "__main__":
    main()
