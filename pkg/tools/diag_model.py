"""Scratch diagnostic: test-set error anatomy for both models."""
import sys
import pathlib

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent))
sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

import numpy as np
import build_yield_fixture as bf
from spreadscope.data import temporal_split
from spreadscope.forest import fit_forest
from spreadscope.boosting import fit_gbm
from spreadscope.shapley import shap_values, importance

CLS_NAME = {0: "N", 1: "RAMP", 2: "I", 3: "M", 4: "E", 5: "A"}

ds = bf.ingest(pathlib.Path("data"))
train, test = temporal_split(ds, "1970-01", "1999-12", "2000-01", "2020-11")

plan = bf.build_plan()
cls = plan["cls"]
date_cls = {mo: CLS_NAME[c] for mo, c in zip(bf.KEPT, cls)}

fidx = {n: k for k, n in enumerate(ds.feature_names)}
KEYS = ["M3-M6", "Y2-M6", "Y3-M3", "Y5-Y10", "Y3-Y7", "Y2-Y5", "Y10-Y20"]

gbm, _ = fit_gbm(train, seed=1)
fo = fit_forest(train, seed=1)

for name, model in (("gbm", gbm), ("forest", fo)):
    pred = model.label_batch(test.features)
    fp = np.where((pred == 1) & (test.target == 0))[0]
    fn = np.where((pred == 0) & (test.target == 1))[0]
    tp = int(((pred == 1) & (test.target == 1)).sum())
    print(f"\n== {name}: TP {tp} FP {len(fp)} FN {len(fn)}")
    print("-- false positives:")
    for i in fp:
        vals = " ".join(f"{k}={test.features[i, fidx[k]]:+.2f}" for k in KEYS)
        print(f"   {test.dates[i]} [{date_cls[test.dates[i]]}] {vals}")
    by_cls = {}
    for i in fn:
        by_cls.setdefault(date_cls[test.dates[i]], []).append(test.dates[i])
    print("-- false negatives by class:")
    for c, months in sorted(by_cls.items()):
        print(f"   {c}: {len(months)}  {months}")

sv = shap_values(gbm, test)
imp = importance(sv)
print("\nSHAP mean-|v| top 14:")
for nm in imp.top(14):
    print(f"   {nm}")
