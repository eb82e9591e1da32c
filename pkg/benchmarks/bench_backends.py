#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallbacks.

Times the three hot paths (seeded query-draw synthesis, batch curve
evaluation, powerlaw residual+Jacobian) on both backends and checks the
outputs agree. Run from the repo root:

    python benchmarks/bench_backends.py [--json out.json]
"""

import argparse
import json
import time

import numpy as np

from wattroute import kernels

N_QUERIES = 200_000
N_TOKENS = 100_000
BENCH_RUNS = 5
SEED = 42
PARAMS = np.array([0.5, 1.3, 2.0])


def timeit(fn, *args, runs=BENCH_RUNS):
    fn(*args)  # warmup (and JIT compile for numba)
    times = []
    for _ in range(runs):
        start = time.perf_counter()
        result = fn(*args)
        times.append(time.perf_counter() - start)
    return min(times), result


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--json", help="also write results as JSON")
    args = parser.parse_args()

    if not kernels.have_numba():
        raise SystemExit("numba is not importable; nothing to compare")

    tokens = np.linspace(1, 512, N_TOKENS)
    energy = kernels.eval_curve_numpy(kernels.POWERLAW, PARAMS, tokens)

    cases = {
        "query_draws": (
            (kernels.query_draws_numpy, (SEED, N_QUERIES)),
            (kernels.query_draws_numba, (SEED, N_QUERIES)),
        ),
        "eval_powerlaw": (
            (kernels.eval_curve_numpy, (kernels.POWERLAW, PARAMS, tokens)),
            (kernels.eval_curve_numba, (kernels.POWERLAW, PARAMS, tokens)),
        ),
        "powerlaw_resid_jac": (
            (kernels.powerlaw_resid_jac_numpy, (0.4, 1.2, 1.0, tokens, energy)),
            (kernels.powerlaw_resid_jac_numba, (0.4, 1.2, 1.0, tokens, energy)),
        ),
    }

    results = {}
    print(f"{'kernel':<22}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>9}  agree")
    for name, ((np_fn, np_args), (nb_fn, nb_args)) in cases.items():
        t_np, r_np = timeit(np_fn, *np_args)
        t_nb, r_nb = timeit(nb_fn, *nb_args)
        if isinstance(r_np, tuple):
            agree = all(np.allclose(a, b, rtol=1e-12, atol=0) for a, b in zip(r_np, r_nb))
        else:
            agree = np.allclose(r_np, r_nb, rtol=1e-12, atol=0)
        results[name] = {
            "numpy_s": t_np,
            "numba_s": t_nb,
            "speedup": t_np / t_nb if t_nb > 0 else float("inf"),
            "agree": bool(agree),
        }
        print(
            f"{name:<22}{t_np * 1e3:>12.3f}{t_nb * 1e3:>12.3f}"
            f"{results[name]['speedup']:>9.2f}  {agree}"
        )

    if args.json:
        with open(args.json, "w") as fh:
            json.dump(results, fh, indent=2, sort_keys=True)
        print(f"results written to {args.json}")


if __name__ == "__main__":
    main()
