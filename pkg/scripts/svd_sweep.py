"""Locality spectra and discrete domain dimensions as the trial degree grows.

Writes ``svd_sweep.csv`` (smallest singular values of the traces on D_eps) and
``dimensions.csv`` (dim D_eps, dim T_off, dim graph). The N_t = 24 value is the
source of the frozen regression ceiling used by the acceptance suite.
"""

from __future__ import annotations

import argparse
import csv
from pathlib import Path

import numpy as np

from sphardy.continuation import domain_dimension_table
from sphardy.locality import build_context, sharmonic_subspace, trace_spectrum


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    p.add_argument("--theta-c", type=float, default=np.pi / 3)
    p.add_argument("--eps", type=float, default=1e-6)
    p.add_argument("--n-trials", default="8,12,16,20,24")
    p.add_argument("--out", default="sweep_out")
    a = p.parse_args()
    trials = [int(x) for x in a.n_trials.split(",")]
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)

    rows = []
    for nt in trials:
        ctx = build_context(a.theta_c, nt, eps=a.eps)
        plus = trace_spectrum(ctx, "K+")
        minus = trace_spectrum(ctx, "K-")
        rows.append({
            "ntrial": nt, "ntest": ctx.n_test, "dim_D_eps": sharmonic_subspace(ctx).dim,
            "sigma_min_plus": plus.min() if plus.size else "", "sigma_min_minus": minus.min() if minus.size else "",
        })
        print(f"N_t={nt:3d} N_s={ctx.n_test:3d} dim D_eps={rows[-1]['dim_D_eps']:4d} "
              f"sigma_min(K+1/2)={rows[-1]['sigma_min_plus']:.3e} sigma_min(K-1/2)={rows[-1]['sigma_min_minus']:.3e}")
    with open(out / "svd_sweep.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)

    dims = domain_dimension_table(a.theta_c, trials, a.eps)
    with open(out / "dimensions.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(dims[0]))
        w.writeheader()
        w.writerows(dims)
    for r in dims:
        print(r)


if __name__ == "__main__":
    main()
