"""Where the t^(-3/2) tail comes from, and when it is absent.

A sqrt(p) term in a transform near p = 0 turns into t^(-3/2) in time.
For a static second center the coefficient carries a factor (r - 1)^2,
so at r = 1 the tail is missing.  At r = 0.5 it is there, and every
lattice component adds its own oscillating piece.  Takes a minute or two.
"""
import math

import numpy as np

from ionize.asymptotics import amplitude_bridge, fit_power_law
from ionize.model import make_params
from ionize.spectral import branch_fit_at_origin
from ionize.volterra import run

for r in (1.0, 0.5):
    d = branch_fit_at_origin(make_params(r=r, alpha=0.2), N=16, terms=4)["q2"].d
    print(f"static, r={r}: sqrt(p) coefficient of q2 = {d:.3e}")

params = make_params(r=0.5, omega=12.0, alpha=[[0, 0.2, 0], [1, 0.1, 0]])
traj = run(params, t_max=400.0, n_steps=40_000)
fit = fit_power_law(traj.t, np.abs(traj.q2), (200.0, 400.0), "envelope")
print(f"\nenvelope exponent on [200, 400]: {fit.exponent:.4f}")

d = {n: branch_fit_at_origin(params, terms=4, n=n)["q2"].d for n in range(-3, 4)}
print("fitted / predicted, d_0 only:", amplitude_bridge(fit, d[0]).ratio)
print("fitted / predicted, d_-3..d_3:", amplitude_bridge(fit, d[0], lattice=d).ratio)
print("fitted amplitude:", fit.amplitude, " |d_0|/(2 sqrt pi):", abs(d[0]) / (2 * math.sqrt(math.pi)))
