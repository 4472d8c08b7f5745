"""Compare the compiled correlation core with the numpy fallback.

Times the two hot loops on synthetic pair data and one full Kriging training
on the hierarchical Goldstein problem under each backend (the backend is
chosen at import, so the training timing runs in subprocesses).

    python3 benchmarks/bench_core.py [--pairs 11175] [--dims 10] [--repeat 20]
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from hierkrig import _core_py

try:
    from hierkrig import _core
except ImportError:
    _core = None

TRAIN = """
import time
from hierkrig.problems import goldstein_problem
from hierkrig.kriging import KrigingConfig, train
from hierkrig.sampling import SamplerConfig, sample_values
p = goldstein_problem()
X, _ = sample_values(p.space, SamplerConfig(n_points={n}, seed=0))
t = time.perf_counter()
train(p.space, KrigingConfig(corr="matern52", n_starts=2), X, p(X))
print(time.perf_counter() - t)
"""


def bench_loops(pairs, dims, repeat):
    rng = np.random.default_rng(0)
    B = rng.uniform(0, 1, (pairs, dims))
    theta = rng.uniform(0.1, 5, dims)
    rows = []
    for name, prof in (("exp", _core_py.EXP), ("matern52", _core_py.MATERN52)):
        for fn in ("corr_product", "corr_product_grad"):
            t_py = min(timeit.repeat(lambda: getattr(_core_py, fn)(B, theta, prof), number=1, repeat=repeat))
            t_cy = float("nan")
            if _core is not None:
                t_cy = min(timeit.repeat(lambda: getattr(_core, fn)(B, theta, prof), number=1, repeat=repeat))
            rows.append((f"{fn}[{name}]", t_py, t_cy))
    return rows


def bench_train(n):
    out = {}
    for backend in ("python", "cython"):
        env = dict(os.environ, HIERKRIG_BACKEND="python" if backend == "python" else "")
        res = subprocess.run([sys.executable, "-c", TRAIN.format(n=n)], env=env,
                             capture_output=True, text=True, check=True)
        out[backend] = float(res.stdout.strip())
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--pairs", type=int, default=150 * 149 // 2)
    ap.add_argument("--dims", type=int, default=10)
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--train-points", type=int, default=60)
    args = ap.parse_args()

    print(f"compiled core available: {_core is not None}")
    print(f"{'kernel loop':32s} {'numpy [ms]':>11s} {'cython [ms]':>12s} {'speedup':>8s}")
    for name, t_py, t_cy in bench_loops(args.pairs, args.dims, args.repeat):
        print(f"{name:32s} {1e3 * t_py:11.3f} {1e3 * t_cy:12.3f} {t_py / t_cy:8.2f}")
    t = bench_train(args.train_points)
    print(f"goldstein training, n={args.train_points}: numpy {t['python']:.2f} s, "
          f"cython {t['cython']:.2f} s, speedup {t['python'] / t['cython']:.2f}")


if __name__ == "__main__":
    main()
