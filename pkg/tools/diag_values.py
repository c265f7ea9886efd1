"""Scratch diagnostic: where recession phases landed in feature space."""
from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

REPO = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(REPO / "src"))
sys.path.insert(0, str(REPO / "tools"))

from spreadscope.data import attach_target, compute_spreads, parse_yield_csv

from build_yield_fixture import build_plan, KEPT, CLS_I, CLS_M, CLS_E, CLS_RAMP, CLS_A

out = REPO / "data"
res = parse_yield_csv((out / "treasury_yields.csv").read_text())
frame = compute_spreads(res.panel)
ds = attach_target(frame, (out / "usrec.csv").read_text())

plan = build_plan()
cls = plan["cls"]
kept_idx = {m: i for i, m in enumerate(KEPT)}
c = np.array([cls[kept_idx[d]] for d in ds.dates])
is_test = np.array([d >= "2000-01" for d in ds.dates])

mm = ds.column("M3-M6")
print("M3-M6 bands (full-sample ranks):")
v = np.sort(mm)
print(f"  rank 494 edge {v[494]:+.3f}  539 {v[539]:+.3f}  555 {v[555]:+.3f}"
      f"  561 {v[561]:+.3f}  585 {v[585]:+.3f}  tail edge {v[586]:+.3f}")
for label, mask in (
    ("train I", (c == CLS_I) & ~is_test),
    ("test  I", (c == CLS_I) & is_test),
    ("train M", (c == CLS_M) & ~is_test),
    ("test  M", (c == CLS_M) & is_test),
    ("train E", (c == CLS_E) & ~is_test),
    ("test  E", (c == CLS_E) & is_test),
):
    s = np.sort(mm[mask])
    print(f"  {label}: n={mask.sum():2d}  M3-M6 {np.round(s, 3)}")

for feat in ("Y2-M6", "Y3-M3", "Y7-Y20", "Y5-Y10", "Y2-Y5", "Y3-Y7"):
    x = ds.column(feat)
    rows = []
    for label, mask in (("N", (c == 0) & (ds.target == 0)),
                        ("R", c == CLS_RAMP), ("I", c == CLS_I),
                        ("Mtr", (c == CLS_M) & ~is_test),
                        ("Mte", (c == CLS_M) & is_test),
                        ("E", c == CLS_E), ("A", c == CLS_A)):
        rows.append(f"{label} {x[mask].mean():+.2f}/{x[mask].std():.2f}")
    print(f"{feat:7s} " + "  ".join(rows))
