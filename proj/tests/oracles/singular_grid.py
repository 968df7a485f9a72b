"""Brute-force scan of the half-angle formula's singular locus.

Grid: 64 values per angle, a_k = -pi + 2*pi*k/63 (both ends included).
A point is singular when the radicand is negative or the scalar part
sqrt(radicand)/2 falls below 1e-6. Evaluated in extended precision; points
with a zero radicand are singular however double rounding lands. The
smallest radicand among regular points shows the margin to the threshold.
"""
from mpmath import mp, mpf, cos, sin, pi

mp.dps = 40
N = 64
THRESH = mpf("1e-6")

grid = [-pi + 2 * pi * k / (N - 1) for k in range(N)]
cs = [(cos(a / 2), sin(a / 2)) for a in grid]

singular = []
min_regular = mpf(10)
for i in range(N):          # roll
    c1, s1 = cs[i]
    for j in range(N):      # pitch
        c3, s3 = cs[j]
        for k in range(N):  # yaw
            c2, s2 = cs[k]
            rad = 1 + c1 * c2 + c1 * c3 - s1 * s2 * s3 + c2 * c3
            if rad < 4 * THRESH * THRESH:
                singular.append((i, j, k, rad))
            else:
                min_regular = min(min_regular, rad)

print("singular", len(singular))
for i, j, k, rad in singular:
    print("S", i, j, k, mp.nstr(rad, 5))
print("min_regular_radicand", mp.nstr(min_regular, 10))
