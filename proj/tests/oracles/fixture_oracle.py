#!/usr/bin/env python3
"""Independent recount of the fixture corpus.

Reads tests/data/fixture.csv with the stdlib csv module, recounts everything
by brute force and writes the golden files under tests/data/golden/. Nothing
here shares code with the C++ library; the GLM reference comes from
statsmodels.

Usage: python3 fixture_oracle.py <tests/data dir>
"""
import csv
import math
import os
import sys

import numpy as np
import statsmodels.api as sm

# Windows from tests/data/fixture.conf
T0 = 1985
TRAIN_START = 1995
TRAIN_END = 2004
TEST_START = 2002
TEST_END = 2012
MAX_COHORT = 15
YEAR_MIN, YEAR_MAX = 1900, 2100


def load(path):
    seen = set()
    pubs = {}  # author -> list of years (deduplicated on (author, key))
    with open(path, newline="", encoding="utf-8") as f:
        for row in csv.DictReader(f):
            y = int(row["year"])
            if y < YEAR_MIN or y > YEAR_MAX:
                continue
            k = (row["author_id"], row["pub_key"])
            if k in seen:
                continue
            seen.add(k)
            pubs.setdefault(row["author_id"], []).append(y)
    return pubs


def count_between(years, lo, hi):
    return sum(1 for y in years if lo <= y <= hi)


def main():
    data_dir = sys.argv[1]
    gold = os.path.join(data_dir, "golden")
    os.makedirs(gold, exist_ok=True)
    pubs = load(os.path.join(data_dir, "fixture.csv"))

    # Training split: >= 1 publication in [T0, t_{L-1}].
    training = sorted(a for a, ys in pubs.items() if count_between(ys, T0, TRAIN_END - 1) > 0)
    with open(os.path.join(gold, "training_authors.txt"), "w") as f:
        f.write("\n".join(training) + "\n")

    # Productivity matrix by two-pass recount.
    L = TRAIN_END - TRAIN_START
    n = np.zeros((MAX_COHORT + 1, L + 1), dtype=int)
    m = np.zeros((MAX_COHORT + 1, L + 1), dtype=int)
    for a in training:
        ys = pubs[a]
        for j in range(1, L + 1):
            prev = TRAIN_START + j - 1
            i = count_between(ys, T0, prev)
            if 1 <= i <= MAX_COHORT:
                n[i, j] += 1
                m[i, j] += sum(1 for y in ys if y == prev + 1)
    with open(os.path.join(gold, "matrix.csv"), "w") as f:
        f.write("i,j,t_j,n_ij,m_ij,eta_ij\n")
        for i in range(1, MAX_COHORT + 1):
            for j in range(1, L + 1):
                eta = repr(float(m[i, j] / n[i, j])) if n[i, j] > 0 else ""
                f.write(f"{i},{j},{TRAIN_START + j},{n[i, j]},{m[i, j]},{eta}\n")

    # Largest cohort index such that every row up to it has exposure and output.
    i1 = 0
    for i in range(1, MAX_COHORT + 1):
        if n[i, 1:].sum() > 0 and m[i, 1:].sum() > 0:
            i1 = i
        else:
            break
    with open(os.path.join(gold, "fittable_rows.txt"), "w") as f:
        f.write(f"{i1}\n")

    # Reference Poisson GLM (IRLS in statsmodels) and OLS on row i=1.
    with open(os.path.join(gold, "row1_fits.txt"), "w") as f:
        for i in (1, 2):
            x = np.array([j - 1 for j in range(1, L + 1) if n[i, j] > 0], dtype=float)
            y = np.array([m[i, j] for j in range(1, L + 1) if n[i, j] > 0], dtype=float)
            off = np.array([n[i, j] for j in range(1, L + 1) if n[i, j] > 0], dtype=float)
            res = sm.GLM(y, sm.add_constant(x), family=sm.families.Poisson(),
                         offset=np.log(off)).fit(tol=1e-14)
            f.write(f"glm {i} {float(res.params[0])!r} {float(res.params[1])!r} {float(res.bse[0])!r} {float(res.bse[1])!r} {float(res.deviance)!r}\n")
            pos = y > 0
            ly = np.log(y[pos] / off[pos])
            ols = sm.OLS(ly, sm.add_constant(x[pos])).fit()
            f.write(f"ols {i} {float(ols.params[0])!r} {float(ols.params[1])!r} {float(ols.bse[0])!r} {float(ols.bse[1])!r}\n")

    # Test split (active in TEST_START) with starting counts, and ground-truth
    # cumulative means by starting cohort for each year of the test window.
    test = sorted(a for a, ys in pubs.items() if TEST_START in ys)
    with open(os.path.join(gold, "test_h_start.csv"), "w") as f:
        f.write("author_id,h\n")
        for a in test:
            f.write(f"{a},{count_between(pubs[a], T0, TEST_START)}\n")
    groups = {}
    for a in test:
        groups.setdefault(count_between(pubs[a], T0, TEST_START), []).append(a)
    with open(os.path.join(gold, "trend_actual.csv"), "w") as f:
        f.write("i,year,researchers,actual_mean\n")
        for i in sorted(groups):
            for y in range(TEST_START + 1, TEST_END + 1):
                vals = [count_between(pubs[a], T0, y) for a in groups[i]]
                f.write(f"{i},{y},{len(vals)},{sum(vals) / len(vals)!r}\n")


if __name__ == "__main__":
    main()
