#!/usr/bin/env python3
"""Derive characteristic parameters for the published diagram coefficients.

Prints, for each calibrated speed-density model, the free-flow speed, the
throughput optimum (k_m, v_m, q_m), and the maximum density k_max under
the 2.65 km/h minimum-speed constraint — the analytic counterparts of the
field-study summary tables.  Optionally exports plot-ready k,v,q curves.

Usage:
    python3 scripts/reproduce_characteristics.py [--curves-dir DIR]
"""

import argparse
from pathlib import Path

from fairway.fundamental_diagram import FdModel, derive_characteristics
from fairway.io_store import emit_curve_samples

V_MIN = 2.65
V_F = 10.5
K1 = 4.0

CLASSICAL = [
    ("greenshields", 0.7634, 11.817),
    ("greenberg", 2.502, 11.227),
    ("underwood", 12.999, 0.107),
]
PIECEWISE = [
    ("piecewise_linear", 0.667, 10.92),
    ("piecewise_log", 4.74, 15.28),
    ("piecewise_exp", 13.62, 0.115),
]


def fmt(x):
    return "     -" if x is None else f"{x:6.3f}"


def report(models, v_min):
    print(f"{'form':<18} {'v_f':>6} {'v_m':>6} {'k_m':>6} {'q_m':>7} {'k_max':>7}")
    for model in models:
        c = derive_characteristics(model, v_min)
        print(f"{model.form:<18} {fmt(c.v_f)} {fmt(c.v_m)} {fmt(c.k_m)} "
              f"{c.q_m:7.3f} {c.k_max:7.3f}")
    print()


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--curves-dir", help="also write k,v,q CSVs here")
    args = parser.parse_args()

    print(f"minimum-speed constraint: v_min = {V_MIN} km/h\n")
    print("classical forms (pooled fits)")
    classical = [FdModel(form=f, c1=c1, c2=c2) for f, c1, c2 in CLASSICAL]
    report(classical, V_MIN)

    print(f"piecewise forms (v_f = {V_F} km/h plateau up to k1 = {K1} vessels/km)")
    piecewise = [FdModel(form=f, c1=c1, c2=c2, v_f=V_F, k1=K1)
                 for f, c1, c2 in PIECEWISE]
    report(piecewise, V_MIN)

    if args.curves_dir:
        out_dir = Path(args.curves_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for model in classical + piecewise:
            k_max = derive_characteristics(model, V_MIN).k_max
            path = out_dir / f"{model.form}.csv"
            rows = emit_curve_samples(model, (0.1, k_max), 0.1, path)
            print(f"wrote {rows} rows to {path}")


if __name__ == "__main__":
    main()
