"""Exact per-axis translation statistics of tests/fixtures/poses_fixture.txt.

Population (1/n) standard deviation. Also prints the normalized
translation of the first and last records.
"""
from fractions import Fraction
from pathlib import Path
import math

rows = []
for line in (Path(__file__).parent.parent / "fixtures" / "poses_fixture.txt").read_text().splitlines():
    if not line.strip() or line.lstrip().startswith("#"):
        continue
    f = line.split()
    rows.append([Fraction(v) for v in f[1:4]])

n = len(rows)
print("records", n)
for axis in range(3):
    vals = [r[axis] for r in rows]
    mean = sum(vals) / n
    var = sum((v - mean) ** 2 for v in vals) / n
    std = math.sqrt(var)
    print(f"axis{axis} min {float(min(vals))!r} max {float(max(vals))!r} mean {float(mean)!r} std {std!r}")
    print(f"  first_norm {float(rows[0][axis] - mean) / std!r} last_norm {float(rows[-1][axis] - mean) / std!r}")
