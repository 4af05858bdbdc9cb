"""Time the numba and NumPy paths of the hot kernels side by side.

Run with ``python3 benchmarks/bench_kernels.py``.  With
``QDRES_DISABLE_NUMBA=1`` the ``_nb`` functions are plain Python and the
comparison shows the interpreter cost instead of the compiled one.
"""

import argparse
import time

import numpy as np

from qdres import backend
from qdres import kernels as K


def best_of(fn, *args, repeat=5):
    fn(*args)  # warm-up (compilation on the numba path)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(m):
    rng = np.random.default_rng(7)
    x = np.linspace(-6.0, 6.0, 4 * m)
    om = 1.3 * np.exp(-0.3j)
    z = np.abs(rng.normal(size=2000)) * 3 + 1j * rng.normal(size=2000)
    b = K._cm_brackets_np(m)
    k = b.shape[2]
    w = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
    w = w + w.T
    # the interaction is even: relative states of opposite parity do not couple
    n = np.arange(k)
    w[(n[:, None] + n[None, :]) % 2 == 1] = 0.0
    return [
        ("ho_table", (K._ho_table_nb, K._ho_table_np), (om, x, m)),
        ("erfcx", (K._erfcx_nb, K._erfcx_np), (z,)),
        ("cm_brackets", (K._cm_brackets_nb, K._cm_brackets_np), (m,)),
        ("pair_interaction", (K._pair_interaction_nb, K._pair_interaction_np), (b, w)),
    ]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--m", type=int, default=12, help="one-particle basis size")
    ap.add_argument("--repeat", type=int, default=5)
    ns = ap.parse_args(argv)
    print(f"backend: {backend()}   M = {ns.m}")
    print(f"{'kernel':<18}{'numba [s]':>12}{'numpy [s]':>12}{'ratio':>9}{'max|diff|':>12}")
    for name, (f_nb, f_np), args in cases(ns.m):
        t_nb = best_of(f_nb, *args, repeat=ns.repeat)
        t_np = best_of(f_np, *args, repeat=ns.repeat)
        diff = float(np.max(np.abs(np.asarray(f_nb(*args)) - np.asarray(f_np(*args)))))
        print(f"{name:<18}{t_nb:>12.2e}{t_np:>12.2e}{t_np / t_nb:>9.1f}{diff:>12.1e}")


if __name__ == "__main__":
    main()
