"""Regenerates the synthetic CSVs in this directory."""
import csv
import math
import random
from pathlib import Path

HERE = Path(__file__).resolve().parent


def blobs(rng, n=500):
    rows = []
    for i in range(n):
        positive = i % 2 == 0
        cx = 1.5 if positive else -1.5
        rows.append((round(rng.gauss(cx, 1.0), 6), round(rng.gauss(cx, 1.0), 6),
                     "yes" if positive else "no"))
    with open(HERE / "blobs.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["x1", "x2", "approved"])
        w.writerows(rows)


def loans(rng, n=600):
    levels = ["high_school", "bachelor", "master", "doctorate"]
    housing = ["rent", "own", "mortgage"]
    with open(HERE / "loans.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["income", "age", "education", "housing", "region", "approved"])
        for _ in range(n):
            income = round(max(5.0, rng.gauss(45.0, 15.0)), 2)
            age = rng.randint(18, 70)
            edu = rng.choices(range(4), weights=[4, 3, 2, 1])[0]
            home = rng.choice(housing)
            region = rng.choice(["north", "south"])
            score = 0.08 * (income - 45) + 0.03 * (age - 40) + 0.6 * (edu - 1) \
                + (0.5 if home == "own" else 0.0) + rng.gauss(0, 0.7)
            approved = "yes" if 1 / (1 + math.exp(-score)) > 0.5 else "no"
            w.writerow([income, age, levels[edu], home, region, approved])


if __name__ == "__main__":
    rng = random.Random(20240611)
    blobs(rng)
    loans(rng)
