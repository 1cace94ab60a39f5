"""Compare the compiled series kernels with the pure-Python fallback.

Run with ``python3 benchmarks/bench_core.py``.
"""

import timeit

import numpy as np

from heatlab import _core_py

try:
    from heatlab import _core_ext
except ImportError:  # extension not built
    _core_ext = None


def cases():
    rng = np.random.default_rng(0)
    nus = rng.uniform(0, 40, 200)
    zs = rng.uniform(0, 20, 200)
    coeffs = np.exp(-np.arange(60) * 0.1) * (2 * np.arange(60) + 1)
    xs = np.cos(np.linspace(0, np.pi, 2000))

    def bessel(mod):
        for nu, z in zip(nus, zs):
            mod.bessel_i_series(float(nu), float(z), 1e-12, 10_000)

    def gegen(mod):
        for l in range(0, 200, 5):
            mod.gegenbauer(l, 0.5, 0.3)

    def gsum(mod):
        mod.gegenbauer_sum(coeffs, 0.5, xs)

    return {"bessel_i_series x200": bessel, "gegenbauer x40": gegen, "gegenbauer_sum 60x2000": gsum}


def main(repeat=5):
    print(f"{'kernel':26s} {'python [ms]':>12s} {'cython [ms]':>12s} {'speedup':>8s}")
    for name, fn in cases().items():
        t_py = min(timeit.repeat(lambda: fn(_core_py), number=1, repeat=repeat)) * 1e3
        if _core_ext is None:
            print(f"{name:26s} {t_py:12.3f} {'n/a':>12s}")
            continue
        t_cy = min(timeit.repeat(lambda: fn(_core_ext), number=1, repeat=repeat)) * 1e3
        print(f"{name:26s} {t_py:12.3f} {t_cy:12.3f} {t_py / t_cy:8.1f}x")


if __name__ == "__main__":
    main()
