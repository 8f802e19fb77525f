"""Sweep bath temperature and cutoff, tracking the Kossakowski eigenvalue.

For each (T, Omega) pair the script tabulates the kernel, computes the
master-equation coefficients, and prints the most negative eigenvalue of
the 2x2 Kossakowski matrix over t in [t_min, t_max], together with the
CP verdict.  A CSV summary goes to stdout-adjacent file if requested.

Usage: python3 scripts/eigenvalue_sweep.py [--gamma G] [--omega-s W]
           [--t-max T] [--nodes N] [--out CSV]
"""

import argparse
import sys

import numpy as np

from qbmlab.bath import CorrelationKernel, SpectralDensity, ThermalBathSpec
from qbmlab.coefficients import (
    OscillatorKernels,
    compute_coefficients,
    dressed_kernel,
)
from qbmlab.positivity import audit_cp

PAIRS = ((1.0, 10.0), (10.0, 50.0), (100.0, 100.0))


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--gamma", type=float, default=0.1)
    parser.add_argument("--omega-s", type=float, default=1.0)
    parser.add_argument("--t-min", type=float, default=0.05)
    parser.add_argument("--t-max", type=float, default=10.0)
    parser.add_argument("--nodes", type=int, default=401)
    parser.add_argument("--out", help="optional CSV path for the summary")
    args = parser.parse_args()

    kernels = OscillatorKernels(args.omega_s)
    rows = []
    for T, Omega in PAIRS:
        bath = ThermalBathSpec(SpectralDensity(1.0, args.gamma, Omega),
                               T=T)
        grid = np.linspace(0.0, args.t_max, args.nodes)
        kernel = CorrelationKernel.from_bath(bath, grid)
        table = compute_coefficients(dressed_kernel(kernel, kernels, 1),
                                     kernels)
        window = table.grid[table.grid >= args.t_min]
        report = audit_cp(table, t_grid=window)
        worst = float(np.min(report.lambda_min))
        ratio = worst / float(np.max(report.norm))
        rows.append((T, Omega, worst, ratio, report.verdict))
        print(f"T={T:6.1f} Omega={Omega:6.1f}  min eig = {worst:+.6e}  "
              f"(/norm = {ratio:+.3e})  verdict: {report.verdict}")

    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("T,Omega,min_lambda,min_lambda_over_norm,verdict\n")
            for T, Omega, worst, ratio, verdict in rows:
                fh.write(f"{T:g},{Omega:g},{worst:.17g},{ratio:.17g},"
                         f"{verdict}\n")
        print(f"wrote {args.out}")

    return 0 if all(r[4] == "NotCP" for r in rows) else 1


if __name__ == "__main__":
    sys.exit(main())
