"""Time the compiled kernels against the numpy fallback and check they agree.

    python benchmarks/bench_kernels.py [--repeats 20]
"""
import argparse
import time

import numpy as np

from hect import kernels
from hect.classifier import class_weights


def best_of(func, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        func()
        best = min(best, time.perf_counter() - t0)
    return best


def problems(seed=0):
    rng = np.random.default_rng(seed)
    for n, d in ((100, 20), (300, 20), (1000, 50)):
        X = rng.standard_normal((n, d))
        y = (X[:, 0] + rng.standard_normal(n) > 1.0).astype(float)
        yield n, d, X, y, class_weights(y, True)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=20)
    args = ap.parse_args(argv)

    names = kernels.available()
    if "cython" not in names:
        print("compiled kernels are not built; only the fallback is available")
    backends = {name: kernels.load(name) for name in names}
    print(f"{'kernel':<16}{'n x d':>10}" + "".join(f"{b:>14}" for b in backends)
          + f"{'speedup':>10}{'max diff':>12}")
    for n, d, X, y, w in problems():
        order = np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T)
        cases = {
            "logistic_fit": lambda k: k.logistic_fit(X, y, w, 0.1, 1000, 1e-6),
            "stumps_fit": lambda k: k.stumps_fit(X, order, y, w, 30, 0.25, 1.0),
        }
        for label, call in cases.items():
            times = {b: best_of(lambda k=k: call(k), args.repeats) for b, k in backends.items()}
            outs = {b: call(k) for b, k in backends.items()}
            diff = 0.0
            if len(outs) == 2:
                a, b = outs.values()
                diff = max(float(np.max(np.abs(np.asarray(u, float) - np.asarray(v, float))))
                           for u, v in zip(a, b))
            speed = times.get("python", np.nan) / times.get("cython", np.nan)
            print(f"{label:<16}{f'{n}x{d}':>10}"
                  + "".join(f"{1e3 * t:>12.3f}ms" for t in times.values())
                  + f"{speed:>9.1f}x{diff:>12.1e}")


if __name__ == "__main__":
    main()
