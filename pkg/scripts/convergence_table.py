#!/usr/bin/env python3
import argparse
import math
import sys, os

import numpy as np

# Ensure project root is on sys.path when running as a script
sys.path.append(os.path.dirname(os.path.dirname(__file__)))

from frakgeo.services.caputo import SCHEMES, caputo_matrix, caputo_power


def max_error(scheme: str, alpha: float, power: float, m: int) -> float:
    nodes = np.linspace(0.0, 1.0, m)
    approx = caputo_matrix(0.0, 1.0, m, alpha, scheme) @ nodes**power
    exact = np.array([caputo_power(power, alpha, x) for x in nodes])
    return float(np.max(np.abs(approx - exact)[1:]))


def main():
    ap = argparse.ArgumentParser(description="Empirical convergence order of the grid Caputo schemes on x^p over [0, 1].")
    ap.add_argument("--alpha", type=float, nargs="+", default=[0.3, 0.5, 0.8, 1.0], help="Orders (default: 0.3 0.5 0.8 1.0)")
    ap.add_argument("--power", type=float, default=3.5, help="Exponent p of the test function (default: 3.5)")
    ap.add_argument("--levels", type=int, default=5, help="Number of grid refinements starting at 17 nodes (default: 5)")
    args = ap.parse_args()

    sizes = [16 * 2**k + 1 for k in range(args.levels)]
    print(f"{'scheme':<8}{'alpha':>7}{'m':>7}{'max error':>14}{'order':>8}")
    for scheme in SCHEMES:
        for alpha in args.alpha:
            prev = None
            for m in sizes:
                err = max_error(scheme, alpha, args.power, m)
                order = "" if prev is None or err == 0.0 else f"{math.log2(prev / err):.2f}"
                print(f"{scheme:<8}{alpha:>7g}{m:>7d}{err:>14.3e}{order:>8}")
                prev = err


if __name__ == "__main__":
    main()
