"""Compare the numba and numpy kernel backends.

    python benchmarks/bench_kernels.py --samples 1000000 --repeat 5

Times the bare state recursion and the fused simulate-and-accumulate pass
used by the Monte Carlo oracle, for a few state dimensions, and checks that
both backends return the same sums.
"""

import argparse
import time

import numpy as np

from wienerfim import LinearParams, NormalizationConstraint, WienerModel, build_sensitivity_realization
from wienerfim.kernels import get_backend
from wienerfim.model import derivative_coefficients


def make_case(n, m, seed=0):
    rng = np.random.default_rng(seed)
    poles = rng.uniform(0.2, 0.7, n) * rng.choice([-1.0, 1.0], n)
    linear = LinearParams(np.real(np.poly(poles))[1:], rng.normal(0, 0.5, n), 1.0)
    ab = np.concatenate([[0.1, 1.0], rng.normal(0, 0.2, m - 1)])
    model = WienerModel(linear, ab, NormalizationConstraint(np.eye(m + 1)[1]))
    real = build_sensitivity_realization(linear)
    return model, real


def best_of(fn, repeat):
    fn()  # warm-up (JIT compile or cache load)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--samples", type=int, default=1_000_000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--orders", default="1,2,4", help="linear orders n (state dim is 2n+1)")
    args = ap.parse_args()

    backends = {name: get_backend(name) for name in ("numba", "numpy")}
    u = np.random.default_rng(1).normal(size=args.samples)
    print(f"{'kernel':<22}{'d':>3}{'numba [s]':>12}{'numpy [s]':>12}{'ratio':>8}  max rel diff")
    for n in (int(v) for v in args.orders.split(",")):
        model, real = make_case(n, 3)
        A, b, c = real.A, real.b, real.c
        L1 = np.ascontiguousarray(model.maps.L1)
        _, alpha2 = derivative_coefficients(model.alpha_bar)
        x0 = np.zeros(real.d)
        jobs = {
            "state_recursion": lambda k: k.state_recursion(A, b, u, x0),
            "simulate_accumulate": lambda k: k.simulate_accumulate(A, b, c, L1, alpha2, u, x0, 0),
        }
        for label, job in jobs.items():
            t = {name: best_of(lambda k=k: job(k), args.repeat) for name, k in backends.items()}
            out_nb, out_np = job(backends["numba"]), job(backends["numpy"])
            diff = max(
                float(np.max(np.abs(np.asarray(a) - np.asarray(b))) / max(np.max(np.abs(a)), 1e-300))
                for a, b in zip(out_nb, out_np)
            )
            print(f"{label:<22}{real.d:>3}{t['numba']:>12.4f}{t['numpy']:>12.4f}"
                  f"{t['numpy'] / t['numba']:>8.2f}  {diff:.1e}")


if __name__ == "__main__":
    main()
