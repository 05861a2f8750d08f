"""Time the numba and numpy versions of each hot kernel on the same inputs.

Run with ``python3 benchmarks/bench_kernels.py``.  The numba column is only
meaningful when ``CRLAB_DISABLE_NUMBA`` is unset; otherwise the ``_nb_``
functions run as plain Python.
"""

import argparse
import time

import numpy as np

from crlab import _kernels as K


def cases(rng, scale):
    a = rng.normal(size=(2000 * scale, 2))
    b = rng.normal(size=(1500 * scale, 2))
    exps = rng.integers(0, 6, size=(30, 3)).astype(np.int64)
    coeffs = rng.normal(size=30) + 1j * rng.normal(size=30)
    pts = rng.normal(size=(20000 * scale, 3)) + 1j * rng.normal(size=(20000 * scale, 3))
    th = np.linspace(0, 2 * np.pi, 256 * scale, endpoint=False)
    pc = np.zeros((th.size, 3))
    pc[:, 2] = 1 + 0.25 * np.cos(2 * th)
    nodes = rng.normal(size=4000 * scale) + 1j * rng.normal(size=4000 * scale)
    w = rng.normal(size=nodes.size) + 1j * rng.normal(size=nodes.size)
    zs = 0.1 * (rng.normal(size=200) + 1j * rng.normal(size=200))
    traces = rng.normal(size=(60 * scale, 64, 3)) + 1j * rng.normal(size=(60 * scale, 64, 3))
    return {
        "directed_hausdorff": (a, b),
        "monomial_eval": (exps, coeffs, pts),
        "radial_roots": (pc, 0.1, 1.0, 64, 4, 200),
        "gauss_conv": (nodes, w, zs, 64.0),
        "trace_separation": (traces,),
    }


def best_of(fn, args, repeat):
    fn(*args)  # JIT warmup
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--scale", type=int, default=1, help="multiply problem sizes")
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"active backend: {K.BACKEND}")
    print(f"{'kernel':<20} {'numba [s]':>11} {'numpy [s]':>11} {'speedup':>8}")
    for name, inputs in cases(rng, args.scale).items():
        tn = best_of(getattr(K, f"_nb_{name}"), inputs, args.repeat)
        tp = best_of(getattr(K, f"_np_{name}"), inputs, args.repeat)
        print(f"{name:<20} {tn:11.4f} {tp:11.4f} {tp / tn:8.2f}")


if __name__ == "__main__":
    main()
