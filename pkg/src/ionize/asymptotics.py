"""Power-law tails of the charges and of the survival amplitude.

A branch term d sqrt(p) in a Laplace transform corresponds to
-d/(2 sqrt(pi)) t^(-3/2) in time; `amplitude_bridge` compares the two.
The fitted "amplitude" of an envelope fit is the prefactor of the upper
envelope of the oscillating magnitude.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

METHODS = ("envelope", "raw-regression")


@dataclass(frozen=True)
class DecayFit:
    exponent: float
    log_amplitude: float
    window: tuple[float, float]
    rms_residual: float
    method: str
    points: int = 0

    def __post_init__(self):
        if not self.window[0] < self.window[1]:
            raise ValueError("window must satisfy t_lo < t_hi")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")

    @property
    def amplitude(self) -> float:
        return math.exp(self.log_amplitude)

    def to_json(self, target: tuple[float, float] | None = None) -> dict:
        out = {
            "exponent": self.exponent,
            "amplitude": self.amplitude,
            "window": list(self.window),
            "residual": self.rms_residual,
            "method": self.method,
            "points": self.points,
        }
        if target is not None:
            out["pass"] = bool(target[0] <= self.exponent <= target[1])
        return out


def local_maxima(y: np.ndarray) -> np.ndarray:
    """Indices of interior samples not smaller than the left and larger than the right neighbour."""
    y = np.asarray(y)
    if y.size < 3:
        return np.zeros(0, dtype=int)
    mid = y[1:-1]
    return np.nonzero((mid >= y[:-2]) & (mid > y[2:]))[0] + 1


def fit_power_law(t, magnitude, window=None, method: str = "envelope") -> DecayFit:
    """Least squares of log|f| against log t on a window.

    window defaults to [t_max/4, t_max].
    """
    t = np.asarray(t, dtype=float)
    y = np.abs(np.asarray(magnitude))
    if t.shape != y.shape:
        raise ValueError("t and magnitude differ in length")
    if window is None:
        window = (t[-1] / 4.0, t[-1])
    lo, hi = float(window[0]), float(window[1])
    if not (0 < lo < hi):
        raise ValueError("window must satisfy 0 < t_lo < t_hi")
    sel = (t >= lo) & (t <= hi)
    ts, ys = t[sel], y[sel]
    if ts.size < 20:
        raise ValueError(f"window too short: {ts.size} samples (need at least 20)")
    if np.any(ys <= 0) or not np.all(np.isfinite(ys)):
        raise ValueError("magnitudes must be positive and finite on the window")
    if method == "envelope":
        idx = local_maxima(ys)
        if idx.size < 5:
            raise ValueError(f"window too short: {idx.size} envelope points (need at least 5)")
        ts, ys = ts[idx], ys[idx]
    elif method != "raw-regression":
        raise ValueError(f"unknown method {method!r}")
    X = np.column_stack([np.ones(ts.size), np.log(ts)])
    coef, *_ = np.linalg.lstsq(X, np.log(ys), rcond=None)
    res = np.log(ys) - X @ coef
    return DecayFit(float(coef[1]), float(coef[0]), (lo, hi),
                    float(np.sqrt(np.mean(res * res))), method, int(ts.size))


@dataclass(frozen=True)
class BridgeReport:
    fitted_amplitude: float
    predicted_amplitude: float
    ratio: float
    passed: bool
    note: str = ""

    def to_json(self) -> dict:
        return {
            "fitted_amplitude": self.fitted_amplitude,
            "predicted_amplitude": self.predicted_amplitude,
            "ratio": self.ratio,
            "pass": self.passed,
            "note": self.note,
        }


def lattice_envelope(d_lattice, samples: int = 8192) -> float:
    """max over a period of |sum_n d_n e^{i n theta}|.

    Each lattice component n carries its own branch point, so the tail of
    the charge is -(2 sqrt(pi))^(-1) t^(-3/2) sum_n d_n e^{i n omega t}; its
    envelope is this maximum times t^(-3/2)/(2 sqrt(pi)).
    """
    th = np.linspace(0.0, 2.0 * math.pi, samples, endpoint=False)
    total = np.zeros(samples, dtype=complex)
    for n, dn in dict(d_lattice).items():
        total += complex(dn) * np.exp(1j * int(n) * th)
    return float(np.max(np.abs(total)))


def amplitude_bridge(fit: DecayFit, d: complex, tolerance: float = 0.2, lattice=None) -> BridgeReport:
    """Compare the fitted t^(-3/2) amplitude with |d|/(2 sqrt(pi)).

    With `lattice` (a mapping n -> d_n that includes n = 0) the prediction
    is the envelope of all lattice components instead of |d_0| alone.
    The ratio passes when it lies in [1 - tolerance, 1/(1 - tolerance)].
    """
    weight = lattice_envelope(lattice) if lattice is not None else abs(complex(d))
    predicted = weight / (2.0 * math.sqrt(math.pi))
    A = fit.amplitude
    if predicted == 0.0:
        return BridgeReport(A, 0.0, math.inf, False,
                            "no branch contribution; power-law fit should fail or find steeper decay")
    ratio = A / predicted
    ok = (1.0 - tolerance) <= ratio <= 1.0 / (1.0 - tolerance)
    note = "" if abs(fit.exponent + 1.5) < 0.3 else f"fitted exponent {fit.exponent:.3f} is far from -3/2"
    return BridgeReport(A, predicted, ratio, ok, note)
