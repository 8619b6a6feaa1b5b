"""Time the compiled and pure-Python transmission kernels.

Usage::

    python benchmarks/bench_kernels.py [--attempts 200000] [--population 100000] [--repeat 5]

Prints one line per backend for the bare kernel and for a full simulation
run, plus the speed-up of the compiled kernel when it is available.
"""
import argparse
import timeit

from stochepi import kernels
from stochepi.distributions import make_rng
from stochepi.engine import run
from stochepi.model import validate_scenario


def bench_kernel(backend, attempts, repeat):
    fn = kernels._BACKENDS[backend].transmit_attempts
    u = make_rng(0).generator.random(attempts)
    n_g, n_o = 20_000_000, 80_000_000
    best = min(timeit.repeat(lambda: fn(u, 0.2, n_g, n_o, n_g // 2, n_o // 2), number=1, repeat=repeat))
    return best


def bench_run(backend, population, repeat):
    cfg = validate_scenario({"population": {"n_total": population, "alpha": 0.2}})
    previous = kernels.use_backend(backend)
    try:
        return min(timeit.repeat(lambda: run(cfg, make_rng(1)), number=1, repeat=repeat))
    finally:
        kernels.use_backend(previous)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--attempts", type=int, default=200_000)
    parser.add_argument("--population", type=int, default=100_000)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    results = {}
    for backend in kernels.available_backends():
        k = bench_kernel(backend, args.attempts, args.repeat)
        r = bench_run(backend, args.population, args.repeat)
        results[backend] = (k, r)
        print(f"{backend:>9}: kernel {k * 1e3:9.3f} ms for {args.attempts} attempts "
              f"({k / args.attempts * 1e9:7.1f} ns/attempt); full run N={args.population}: {r * 1e3:8.1f} ms")
    if "compiled" in results:
        (kc, rc), (kp, rp) = results["compiled"], results["python"]
        print(f"  speed-up: kernel x{kp / kc:.1f}, full run x{rp / rc:.1f}")
    else:
        print("  compiled extension not built; only the pure-Python backend was timed")


if __name__ == "__main__":
    main()
