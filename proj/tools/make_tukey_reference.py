"""Regenerates tests/data/tukey_reference.json from scipy.stats.tukey_hsd."""

import json
import pathlib

import numpy as np
import scipy
from scipy import stats

OUT = pathlib.Path(__file__).resolve().parent.parent / "tests" / "data" / "tukey_reference.json"


def main():
    rng = np.random.default_rng(20240601)
    cases = []
    for _ in range(20):
        shifts = rng.uniform(-0.6, 0.6, size=3)
        scale = rng.uniform(0.5, 2.0)
        groups = [rng.normal(s, scale, size=30).round(6) for s in shifts]
        res = stats.tukey_hsd(*groups)
        pairs = []
        for i in range(3):
            for j in range(i + 1, 3):
                pairs.append({"i": i, "j": j, "p": float(res.pvalue[i, j])})
        cases.append({"groups": [g.tolist() for g in groups], "pairs": pairs})
    crit = float(stats.studentized_range.ppf(0.95, 3, 10))
    OUT.write_text(json.dumps({"scipy": scipy.__version__, "q_crit_0.05_3_10": crit, "cases": cases}, indent=1) + "\n")


if __name__ == "__main__":
    main()
