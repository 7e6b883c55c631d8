"""Regenerates the committed golden fixtures in this directory.

Run from the repository root:

    python3 tests/data/gen_golden.py

The study table is synthetic: n_full = 400 subjects, response built as
y = 5 + 0.4 * bm1 + noise (variance 5, predictor variance 5), with only
the 40 lowest and 40 highest responders biomarker-tested (gamma = 0.2).
Untested rows alternate between the two missing-value encodings. The
expected analyze/screen outputs are produced by the installed package;
the analyze numbers are independently re-derived from normal equations
inside the test suite before the golden files are trusted.
"""

import csv
import os
import subprocess
import sys

import numpy as np

from eods import screen

HERE = os.path.dirname(os.path.abspath(__file__))


def main():
    rng = np.random.default_rng(20260817)
    n = 400
    bm1 = rng.normal(0.0, np.sqrt(5.0), n)
    bm2 = rng.normal(0.0, np.sqrt(5.0), n)
    noise = rng.normal(0.0, np.sqrt(5.0), n)
    bm3 = 0.3 * bm1 + rng.normal(0.0, np.sqrt(5.0), n)
    y = 5.0 + 0.4 * bm1 + noise

    plan = screen.select_extremes(y, 0.2)
    tested = set(plan.low_indices + plan.high_indices)

    study = os.path.join(HERE, "golden_study.csv")
    with open(study, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "resp", "bm1", "bm2", "bm3"])
        for i in range(n):
            row = [f"s{i:03d}", repr(float(y[i]))]
            if i in tested:
                row += [repr(float(v[i])) for v in (bm1, bm2, bm3)]
            else:
                row += ["", "NA", ""] if i % 2 == 0 else ["NA", "", "NA"]
            w.writerow(row)

    env = dict(os.environ)
    subprocess.run(
        [
            sys.executable, "-m", "eods.cli", "analyze",
            "--input", "golden_study.csv",
            "--response", "resp", "--biomarker", "bm1",
            "--out", "golden_analyze",
        ],
        cwd=HERE, env=env, check=True,
    )
    subprocess.run(
        [
            sys.executable, "-m", "eods.cli", "screen",
            "--input", "golden_study.csv",
            "--response", "resp", "--out", "golden_screen.csv",
        ],
        cwd=HERE, env=env, check=True,
    )


if __name__ == "__main__":
    main()
