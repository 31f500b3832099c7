"""How the discrete L_S minimum moves as the frequency grid is refined."""

import argparse
import json

from waveopt import MinimizerConfig, build_grid, catalog_get, minimize, phase_uncertainty_pullback


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--sizes", default="2048,4096,8192,16384")
    # minimizers fall off like omega near zero, so the grid reaches far down
    p.add_argument("--span", type=float, default=1e6, help="grid is [1/span, span]")
    p.add_argument("--start", default="log_gaussian:tau=1")
    args = p.parse_args()
    rows = []
    for n in map(int, args.sizes.split(",")):
        g = build_grid(1 / args.span, args.span, n)
        res = minimize("signal", catalog_get(args.start, g), MinimizerConfig())
        rows.append({"n": n, "signal_min": res.value, "iterations": res.iterations,
                     "converged": res.converged,
                     "phase_at_signal_min": phase_uncertainty_pullback(res.minimizer).total})
        print(json.dumps(rows[-1]))


if __name__ == "__main__":
    main()
