"""Seeded perturbed starts for either functional, run in parallel processes."""

import argparse
import json
import os
from concurrent.futures import ProcessPoolExecutor

from waveopt import MinimizerConfig, build_grid, minimize
from waveopt.minimizer import perturbed_start


def run(args):
    seed, functional, base, n, amplitude = args
    g = build_grid(1e-4, 1e4, n)
    f0 = perturbed_start(g, seed, base=base, amplitude=amplitude)
    res = minimize(functional, f0, MinimizerConfig(seed=seed))
    return {"seed": seed, "value": res.value, "iterations": res.iterations,
            "converged": res.converged}


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--functional", choices=["signal", "phase"], default="signal")
    p.add_argument("--base", default="log_gaussian:tau=1")
    p.add_argument("--starts", type=int, default=5)
    p.add_argument("--amplitude", type=float, default=0.1)
    p.add_argument("--n", type=int, default=4096)
    args = p.parse_args()
    workers = int(os.environ.get("WAVEOPT_THREADS", os.cpu_count() or 1))
    jobs = [(s, args.functional, args.base, args.n, args.amplitude) for s in range(args.starts)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        out = list(pool.map(run, jobs))
    for row in out:
        print(json.dumps(row))
    vals = [r["value"] for r in out]
    print(json.dumps({"min": min(vals), "max": max(vals),
                      "relative_spread": (max(vals) - min(vals)) / min(vals)}))


if __name__ == "__main__":
    main()
