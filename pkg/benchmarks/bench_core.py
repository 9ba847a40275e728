"""Time the compiled core against the NumPy fallback.

    python3 benchmarks/bench_core.py [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from cnpick import _core_py

try:
    from cnpick import _core
except ImportError:
    _core = None


def _cases(rng):
    x = 0.99 * np.sqrt(rng.random(200)) * np.exp(2j * np.pi * rng.random(200))
    ratios = 1.0 / (1.0 + 1.0 / np.arange(1, 20001)) ** 2
    nterms = np.full(200, 20000)
    b = rng.standard_normal((120, 60)) + 1j * rng.standard_normal((120, 60))
    a = b @ b.conj().T
    return {
        "series_sums (200 x 2e4 terms)": lambda m: m.series_sums(x, ratios, nterms),
        "pivoted_cholesky (120, rank 60)": lambda m: m.pivoted_cholesky(a, 1e-10),
        "moment_ratios (400 from 5000)": lambda m: m.moment_ratios(400, 5000),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _core is None:
        raise SystemExit("compiled core not built; run pip install -e . --no-build-isolation")
    rng = np.random.default_rng(0)
    print(f"{'case':34s} {'python ms':>10s} {'cython ms':>10s} {'speedup':>8s}")
    for name, fn in _cases(rng).items():
        t_py = min(timeit.repeat(lambda: fn(_core_py), number=1, repeat=args.repeat))
        t_cy = min(timeit.repeat(lambda: fn(_core), number=1, repeat=args.repeat))
        print(f"{name:34s} {1e3 * t_py:10.2f} {1e3 * t_cy:10.2f} {t_py / t_cy:8.1f}x")


if __name__ == "__main__":
    main()
