"""Cython vs numpy truncated-product kernels.

    python3 benchmarks/bench_kernels.py [--repeat 20]

Times ``series_mul`` from both backends on the same index tables, then an
end-to-end Schwarzian computation with each backend forced via
PRESCHWARZ_PURE in a subprocess.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from preschwarz import _kernels_py
from preschwarz.jets import layout

try:
    from preschwarz import _kernels
except ImportError:  # extension not built
    _kernels = None

SHAPES = [(1, 30), (2, 10), (2, 24), (3, 8), (4, 6)]

END_TO_END = """
import time, numpy as np
from preschwarz import _backend
from preschwarz.maps import MapSpec, build_germ
from preschwarz.operators import oda_schwarzian
spec = MapSpec.roper_suffridge(MapSpec('koebe', {}), n=3)
t = time.perf_counter()
for _ in range(3):
    oda_schwarzian(build_germ(spec, np.zeros(3), order=7))
print(_backend.BACKEND, (time.perf_counter() - t) / 3)
"""


def bench_kernel(repeat):
    rng = np.random.default_rng(0)
    print(f"{'n':>2} {'m':>3} {'pairs':>9} {'numpy ms':>10} {'cython ms':>10} {'speedup':>8}")
    for n, m in SHAPES:
        lay = layout(n, m)
        a = rng.standard_normal(lay.size) + 1j * rng.standard_normal(lay.size)
        b = rng.standard_normal(lay.size) + 1j * rng.standard_normal(lay.size)
        args = (a, b, lay.mul_a, lay.mul_b, lay.mul_c, lay.size)
        t_py = min(timeit.repeat(lambda: _kernels_py.series_mul(*args), number=1, repeat=repeat))
        if _kernels is not None:
            t_cy = min(timeit.repeat(lambda: _kernels.series_mul(*args), number=1, repeat=repeat))
            assert np.allclose(_kernels.series_mul(*args), _kernels_py.series_mul(*args))
            cy, sp = f"{1e3 * t_cy:10.3f}", f"{t_py / t_cy:8.1f}"
        else:
            cy, sp = f"{'n/a':>10}", f"{'':>8}"
        print(f"{n:>2} {m:>3} {lay.mul_a.size:>9} {1e3 * t_py:10.3f} {cy} {sp}")


def bench_end_to_end():
    print("\nSchwarzian of roper_suffridge(koebe) in n=3, order 7:")
    for pure in ("1", "0"):
        env = dict(os.environ, PRESCHWARZ_PURE=pure)
        out = subprocess.run([sys.executable, "-c", END_TO_END], env=env,
                             capture_output=True, text=True, check=True).stdout.split()
        print(f"  {out[0]:>7}: {float(out[1]):.3f} s")


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    bench_kernel(args.repeat)
    bench_end_to_end()
