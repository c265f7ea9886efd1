"""Scratch diagnostic: one build_once pass, delta-closure stats, verify."""
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent))
import build_yield_fixture as bf


def main() -> None:
    out = Path("/tmp/diagfix")
    out.mkdir(exist_ok=True)
    plan = bf.build_plan()
    knobs = {"depth": 1.2, "tight": 0.30}
    bf.build_once(plan, knobs, out)

    delta = bf.DIAG["delta"]
    seatplan = bf.DIAG["seatplan"]
    names = ["E   ", "band", "tail", "M   "]
    print(f"delta overall: sd {delta.std():.4f} max |{np.abs(delta).max():.4f}|")
    for nm, (rows, _) in zip(names, seatplan["groups"]):
        d = delta[rows]
        print(f"  {nm}: mean {d.mean():+.4f} sd {d.std():.4f} "
              f"max |{np.abs(d).max():.4f}|")
    d = delta[seatplan["free_rows"]]
    print(f"  free: mean {d.mean():+.4f} sd {d.std():.4f} "
          f"max |{np.abs(d).max():.4f}|")

    ds = bf.ingest(out)
    rep = bf.verify(ds)
    bf.print_report(rep)
    from spreadscope.metrics import pearson_correlations
    corr = pearson_correlations(ds.features, ds.feature_names)
    for n in ds.feature_names:
        got = corr.most_correlated(n)[0]
        if got != bf.TARGET_PARTNERS[n]:
            print(f"  partner miss: {n} -> {got} "
                  f"(want {bf.TARGET_PARTNERS[n]})")


if __name__ == "__main__":
    main()
