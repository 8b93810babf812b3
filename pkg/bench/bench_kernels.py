"""Compiled vs numpy moment kernels.

    python bench/bench_kernels.py [--repeat 20]

Times batched moments and Lions weights on training-sized inputs for both
backends and checks that they agree.
"""

import argparse
import timeit

import numpy as np

from mfcrl._kernels import _py
from mfcrl.moments import build_multi_index_set

try:
    from mfcrl._kernels import _ext
except ImportError:
    _ext = None


CASES = [
    # (label, batch, particles, d, order)
    ("systemic desk", 100, 1000, 1, 2),
    ("cosine desk", 100, 1000, 1, 3),
    ("multi-d d=2", 100, 1000, 2, 2),
    ("multi-d d=3", 100, 1000, 3, 2),
]


def run(repeat):
    rng = np.random.default_rng(0)
    print(f"{'case':16s} {'kernel':16s} {'numpy ms':>9s} {'cython ms':>9s} {'speedup':>8s} {'max diff':>9s}")
    for label, batch, particles, d, order in CASES:
        exps = build_multi_index_set(d, order).exponents
        x = rng.standard_normal((batch, particles, d))
        g = rng.standard_normal((batch, len(exps)))
        jobs = {
            "batched_moments": ((x, exps), lambda mod: mod.batched_moments(x, exps)),
            "lions_weights": ((x, exps, g), lambda mod: mod.lions_weights(x, exps, g)),
        }
        for name, (_, call) in jobs.items():
            t_py = min(timeit.repeat(lambda: call(_py), number=1, repeat=repeat)) * 1e3
            if _ext is None:
                print(f"{label:16s} {name:16s} {t_py:9.3f} {'n/a':>9s}")
                continue
            t_ext = min(timeit.repeat(lambda: call(_ext), number=1, repeat=repeat)) * 1e3
            a, b = call(_py), call(_ext)
            a = a if isinstance(a, tuple) else (a,)
            b = b if isinstance(b, tuple) else (b,)
            diff = max(float(np.max(np.abs(u - v))) for u, v in zip(a, b))
            print(f"{label:16s} {name:16s} {t_py:9.3f} {t_ext:9.3f} {t_py / t_ext:7.1f}x {diff:9.1e}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=20)
    run(ap.parse_args().repeat)
