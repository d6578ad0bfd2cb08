"""Fit the mode overlap that reproduces a measured HOM visibility.

Scans the two-photon coincidence dip on the one-step splitter as a
function of the overlap between the coherent probe and the heralded
photon, then bisects for the overlap whose visibility matches the
target.  The fitted value is the right `overlap` to carry into deeper
walk configs.

    python scripts/fit_hom_overlap.py --target 0.70 --out hom_scan.csv
"""

import argparse
import sys

from qwalk.experiments import ExperimentSpec, fit_overlap, hom_scan
from qwalk.io import render_distribution, write_text
from qwalk.walk import WalkConfig


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--mu-alpha", type=float, default=0.1)
    parser.add_argument("--mu-xi", type=float, default=0.026)
    parser.add_argument("--target", type=float, default=0.70)
    parser.add_argument("--tol", type=float, default=1e-4)
    parser.add_argument("--points", type=int, default=21)
    parser.add_argument("--out", help="also write the visibility scan here")
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    args = parser.parse_args(argv)

    spec = ExperimentSpec(
        walk=WalkConfig.uniform(1),
        kind="hom",
        mu_alpha=args.mu_alpha,
        mu_xi=args.mu_xi,
    )
    overlap, visibility = fit_overlap(spec, target=args.target, tol=args.tol)
    print(f"fitted overlap  {overlap:.6f}")
    print(f"visibility      {visibility:.6f}  (target {args.target})")

    if args.out:
        grid = [i / (args.points - 1) for i in range(args.points)]
        scan = hom_scan(spec, grid)
        echo = {
            "experiment": {
                "kind": "hom",
                "mu_alpha": args.mu_alpha,
                "mu_xi": args.mu_xi,
                "fitted_overlap": overlap,
            }
        }
        write_text(args.out, render_distribution(scan, echo, args.format))
        print(f"scan written to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
