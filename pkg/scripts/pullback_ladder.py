"""Direct phase-space uncertainty against the pull-back value along a x2 surface ladder."""

import argparse
import json

from waveopt import build_grid, catalog_get, phase_uncertainty_direct, phase_uncertainty_pullback


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--spec", default="log_gaussian:tau=1")
    p.add_argument("--n", type=int, default=4097, help="frequency nodes")
    p.add_argument("--ladder", default="128,256,512,1024")
    args = p.parse_args()
    f = catalog_get(args.spec, build_grid(1e-4, 1e4, args.n))
    pull = phase_uncertainty_pullback(f).total
    prev = None
    for m in map(int, args.ladder.split(",")):
        r = phase_uncertainty_direct(f, n_alpha=m, n_beta=m, strict=False)
        gap = abs(r.total - pull) / pull
        print(json.dumps({"surface": m, "direct": r.total, "pullback": pull, "rel_gap": gap,
                          "shrink": None if prev is None else prev / gap,
                          "boundary_mass": r.diagnostics["boundary_mass"],
                          "surface_norm": r.diagnostics["surface_norm"]}))
        prev = gap


if __name__ == "__main__":
    main()
