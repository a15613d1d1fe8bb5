"""Compare the compiled and numpy kernel backends.

    python benchmarks/bench_kernels.py [--repeat N]

Prints one line per (kernel, backend) with the best wall time and the
speedup of the compiled backend.
"""
import argparse
import time

import numpy as np

from pam6rin import _backend
from pam6rin.constellation import optimized_qam32
from pam6rin.detection import build_context
from pam6rin.evaluation import QuadratureSpec, StopRule, monte_carlo, quadrature_ser
from pam6rin.labeling import builtin_labeling, construct_steps_1_2, search_step3
from pam6rin.model import NoiseModel


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def workloads():
    c = optimized_qam32()
    ctx = build_context(c, NoiseModel(0.05, 2e-3), 5.25, builtin_labeling("optimized"))
    y = np.random.default_rng(0).uniform(-7, 7, (500_000, 2))
    partial = construct_steps_1_2(c)
    return {
        "ml_detect 5e5": lambda k: k.ml_detect_batch(y, ctx.points, ctx.var),
        "monte_carlo 2^20": lambda k: monte_carlo(ctx, StopRule(10**9, 1 << 20), seed=1),
        "quadrature h=0.05": lambda k: quadrature_ser(ctx, QuadratureSpec(refine=False)),
        "label search 10!": lambda k: search_step3(partial, c),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    backends = _backend.available_backends()
    print(f"backends: {', '.join(backends)}")
    for name, work in workloads().items():
        res = {}
        for b in backends:
            prev = _backend.use(b)
            try:
                res[b] = best_of(lambda: work(_backend.kernels), 1 if "10!" in name and b == "python" else args.repeat)
            finally:
                _backend.kernels = prev
        line = "  ".join(f"{b}={t:8.3f}s" for b, t in res.items())
        if "cython" in res:
            line += f"  speedup={res['python'] / res['cython']:6.1f}x"
        print(f"{name:<20} {line}")


if __name__ == "__main__":
    main()
