"""Regenerates remez.json: Remez-type factors at 20 random parameter points, 50 digits.

Usage: python3 remez_reference.py > remez.json
"""
import json
import random

from mpmath import mp, mpf, e, factorial, log

mp.dps = 50
rng = random.Random(20)
points = []
for _ in range(20):
    delta = rng.uniform(0.001, 0.5)
    d = rng.randint(1, 40)
    reach = rng.uniform(0.1, 50.0)
    D, L = mpf(delta), mpf(reach)
    points.append({
        "delta": delta,
        "d": d,
        "reach": reach,
        "ln_extrapolation": float(d * log(e**2 * L / (D * d))),
        "ln_interior": float(d * log(2) - d * log(D) - log(factorial(d))),
        "ln_leading_floor": float(d * log(D) - log(d + 1)),
    })
json.dump(points, __import__("sys").stdout, indent=1)
print()
