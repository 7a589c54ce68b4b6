"""Is a drive profile generic?

The test asks whether the shifted coefficient sequence spans the first
unit vector.  A zero of the generating polynomial inside the unit disk
leaves a gap of sqrt(1 - |z|^2) that no amount of shifting closes.
"""
from ionize.alpha import AlphaProfile, genericity_residual

cases = {
    "constant": {0: 1.0},
    "one harmonic": {0: 1.0, 1: 0.25},
    "zero at 1/2": {1: -0.5, 2: 1.0},
    "zero at 3": {1: -3.0, 2: 1.0},
}
for name, coeffs in cases.items():
    rep = genericity_residual(AlphaProfile.from_dict(coeffs, 1.0), M=100)
    print(f"{name:13s} residual {rep.residual:.6f}  {rep.verdict}")
