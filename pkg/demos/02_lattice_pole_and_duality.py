"""Frequency side: the lattice system, its pole and the link to the march.

The Laplace transform of each charge is the n = 0 component of a
bi-infinite linear system.  We solve it truncated, locate the pole, and
compare with the transform of the time series.
"""
from ionize import spectral
from ionize.model import make_params
from ionize.volterra import run

params = make_params()
pole = spectral.find_pole(params)
print("pole root lambda:", pole.lambda_roots, " strip image p0:", pole.p0)

traj = run(params, t_max=60.0, n_steps=6000)
for p in (0.5 + 0.3j, 1.5 + 2.0j, 3.0 + 0.1j):
    sol = spectral.build_and_solve(p, 64, params)
    s1, s2 = sol.component(0)
    v1, v2, tail = traj.laplace(p)
    print(f"p={p}:  lattice q1={s1:.6f}  march q1={v1:.6f}  rel diff {abs(s1 - v1) / abs(s1):.1e}")

# Truncation barely matters: the coefficients grow like sqrt(|n|).
a = spectral.build_and_solve(1 + 1j, 32, params).component(0)[0]
b = spectral.build_and_solve(1 + 1j, 64, params).component(0)[0]
print("N=32 vs N=64:", abs(a - b))
