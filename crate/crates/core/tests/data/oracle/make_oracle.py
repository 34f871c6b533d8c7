"""Regenerates objectives.csv with an interior-point solver.

Instances come from `qcr gen`; each row of objectives.csv holds the file,
the weight lambda and the optimal value of

    min ||B||_* + lambda * ||A - B||_1

computed through cvxpy by CLARABEL, or CVXOPT when CLARABEL only reaches
an inaccurate status.

    python3 make_oracle.py path/to/qcr
"""

import csv
import random
import subprocess
import sys
from pathlib import Path

import cvxpy as cp
import numpy as np

HERE = Path(__file__).resolve().parent


def load(path):
    lines = [l.split() for l in path.read_text().splitlines() if l.strip()]
    n = int(lines[0][0])
    a = np.zeros((n, n))
    for i, j, v in lines[1:]:
        a[int(i), int(j)] = float(v)
    return a


def solve(a, lam):
    b = cp.Variable(a.shape)
    prob = cp.Problem(cp.Minimize(cp.normNuc(b) + lam * cp.sum(cp.abs(a - b))))
    for solver in (cp.CLARABEL, cp.CVXOPT):
        try:
            prob.solve(solver=solver)
        except cp.SolverError:
            continue
        if prob.status == cp.OPTIMAL:
            return prob.value, solver
    raise RuntimeError(f"no solver reached an optimal status ({prob.status})")


def main():
    qcr = sys.argv[1]
    rng = random.Random(20240)
    rows = []
    for k in range(20):
        n = rng.randint(5, 15)
        nc = rng.randint(2, n)
        gamma = rng.choice([0.6, 0.75, 0.85, 1.0])
        rho = rng.choice([0.0, 0.1, 0.25, 0.4])
        seed = rng.randint(0, 10**6)
        name = f"inst{k:02}.txt"
        subprocess.run(
            [qcr, "gen", "--n", str(n), "--nc", str(nc), "--gamma", str(gamma),
             "--rho", str(rho), "--seed", str(seed), "--out", str(HERE / name)],
            check=True, stdout=subprocess.DEVNULL,
        )
        lam = 1 / np.sqrt(n) if k % 4 else rng.choice([0.2, 0.35, 0.5])
        value, solver = solve(load(HERE / name), lam)
        rows.append((name, repr(float(lam)), repr(float(value)), solver))
    with open(HERE / "objectives.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["file", "lambda", "objective", "solver"])
        w.writerows(rows)


if __name__ == "__main__":
    main()
