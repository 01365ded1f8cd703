"""Pollution error at fixed kh, compared with the reference curve.

The error grows with k at fixed resolution for every p, and the higher
orders stay orders of magnitude below linear elements.
"""
import csv
from pathlib import Path

from igahelm.analysis import pollution_study

ref = {}
with open(Path(__file__).parents[1] / "reference" / "fig3_pollution.csv") as fh:
    for row in csv.DictReader(fh):
        ref[(int(row["p"]), float(row["kh"]), int(row["k"]))] = float(row["l2_error"])

reports = pollution_study("MP1A", p_range=(1, 2, 3, 4, 5), k_range=(100, 500, 1000),
                          kh_targets=(0.625,))
print(" p      k     sampled L2     reference    ratio")
for r in reports:
    pub = ref[(r.p, r.kh, int(r.k))]
    print(f"{r.p:2d} {r.k:6.0f}   {r.sampled_l2_error:.4e}   {pub:.4e}   {r.sampled_l2_error / pub:5.2f}")
