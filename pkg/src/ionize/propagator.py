"""Free propagator and the free evolution of the bound state.

Fractional powers of complex numbers use the principal branch, arg in
(-pi, pi], everywhere in the package; `principal_sqrt` is the single
place where that choice is made.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma, wofz

from ionize.model import BoundState

SQRT_PI = math.sqrt(math.pi)
# i^(-3/2) on the principal branch
I_M32 = complex(math.cos(-0.75 * math.pi), math.sin(-0.75 * math.pi))


def principal_sqrt(z):
    """sqrt with arg(z) in (-pi, pi]; a negative real with a -0.0 imaginary part maps to +i*sqrt."""
    z = np.asarray(z, dtype=complex)
    w = np.empty_like(z)
    w.real = z.real
    w.imag = z.imag + 0.0  # turns -0.0 into +0.0
    out = np.sqrt(w)
    return complex(out) if out.ndim == 0 else out


def free_kernel(t, x_norm):
    """(4 pi i t)^(-3/2) exp(i x^2/(4t))."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("free kernel needs t > 0")
    x = np.asarray(x_norm, dtype=float)
    out = (4.0 * np.pi * t) ** -1.5 * I_M32 * np.exp(1j * x * x / (4.0 * t))
    return complex(out) if out.ndim == 0 else out


def _v_series(a):
    # sum_{k>=1} (2k-1)!!/(-2a)^k, stopped at the smallest term
    a = np.asarray(a, dtype=complex)
    total = np.zeros(a.shape, dtype=complex)
    term = np.ones(a.shape, dtype=complex)
    x = -2.0 * a
    active = np.ones(a.shape, dtype=bool)
    prev = np.full(a.shape, np.inf)
    for k in range(1, 60):
        term = term * (2 * k - 1) / x
        mag = np.abs(term)
        active &= mag < prev
        total = total + np.where(active, term, 0)
        prev = mag
        if not active.any():
            break
    return total


def vfun(a):
    """sqrt(pi a) exp(a) erfc(sqrt a) - 1 for Re sqrt(a) >= 0.

    Evaluated through the Faddeeva function for moderate |a| and through
    its asymptotic series for |a| > 40, where the direct form cancels.
    """
    a = np.asarray(a, dtype=complex)
    out = np.empty(a.shape, dtype=complex)
    big = np.abs(a) > 40.0
    if (~big).any():
        s = principal_sqrt(a[~big])
        out[~big] = SQRT_PI * s * wofz(1j * s) - 1.0
    if big.any():
        out[big] = _v_series(a[big])
    return out


WATSON_TERMS = 24


def _watson_coeffs(rho):
    # k^{2m} coefficients of sinc(k rho)/(1 + k^2), one row per rho
    M = WATSON_TERMS
    rho = np.asarray(rho, dtype=float)[:, None]
    j = np.arange(M)
    fact = np.array([math.factorial(2 * k + 1) for k in range(M)], dtype=float)
    s = (-1.0) ** j * rho ** (2 * j) / fact
    # convolution with (-1)^i:  a_m = (-1)^m sum_{j<=m} rho^{2j}/(2j+1)!
    return (-1.0) ** j * np.cumsum(np.abs(s), axis=1)


def _evolved_large_t(t, rho, c):
    """Asymptotic series in 1/t (valid for t >> max(1, rho^2)), truncated at its smallest term."""
    t = np.asarray(t, dtype=float)
    a = _watson_coeffs(rho)
    m = np.arange(WATSON_TERMS)
    g = gamma(m + 1.5) / 2.0
    it = (1j * t)[:, None]
    terms = a * g / it ** (m + 1.5)
    mag = np.abs(terms)
    grow = np.zeros(mag.shape, dtype=bool)
    grow[:, 3:] = mag[:, 3:] > mag[:, 2:-1]
    keep = ~np.logical_or.accumulate(grow, axis=1)
    total = np.sum(np.where(keep, terms, 0), axis=1)
    return 4.0 * math.pi * c / (2.0 * math.pi**2) * total


def _w_odd_taylor(z0, A, order=7):
    # w(z0 - iA) - w(z0 + iA) from the Taylor series about z0
    d = [wofz(z0)]
    d.append(-2.0 * z0 * d[0] + 2j / SQRT_PI)
    for n in range(1, order):
        d.append(-2.0 * z0 * d[n] - 2.0 * n * d[n - 1])
    total = 0j
    for n in range(1, order + 1, 2):
        total = total + (1j * A) ** n * d[n] / math.factorial(n)
    return -2.0 * total


def evolved_bound_state(t, x_norm, state: BoundState | None = None):
    """(U0(t) psi0)(x) for |x| = x_norm; psi0 itself at t = 0.

    Closed form through the Faddeeva function w:
    (c/(2 rho)) e^{i rho^2/(4t)} [w(i(B - A)) - w(i(B + A))], B = sqrt(it),
    A = rho/(2B).  Small A uses a Taylor expansion of the difference,
    rho = 0 uses -c v(it)/(sqrt(pi) B), and t >> max(1, rho^2) an asymptotic
    series in 1/t whose leading term is c/(2 sqrt(pi) (it)^(3/2)).
    """
    c = (state or BoundState()).constant
    tb, xb = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(x_norm, dtype=float))
    if np.any(tb < 0):
        raise ValueError("t must be >= 0")
    out = np.empty(tb.shape, dtype=complex)
    zero = tb == 0
    with np.errstate(divide="ignore"):
        out[zero] = c * np.exp(-xb[zero]) / xb[zero]
    large = ~zero & (tb >= 30.0 * np.maximum(1.0, xb * xb))
    if large.any():
        out[large] = _evolved_large_t(tb[large], xb[large], c)
    rest = ~zero & ~large
    origin = rest & (xb == 0)
    if origin.any():
        a = 1j * tb[origin]
        out[origin] = -c * vfun(a) / (SQRT_PI * principal_sqrt(a))
    gen = rest & (xb > 0)
    if gen.any():
        tt, rho = tb[gen], xb[gen]
        B = principal_sqrt(1j * tt)
        A = rho / (2.0 * B)
        ph = np.exp(1j * rho * rho / (4.0 * tt))
        diff = np.empty(tt.shape, dtype=complex)
        small = np.abs(A) < 1e-3
        if small.any():
            diff[small] = _w_odd_taylor(1j * B[small], A[small])
        big = ~small
        diff[big] = wofz(1j * (B[big] - A[big])) - wofz(1j * (B[big] + A[big]))
        out[gen] = c / (2.0 * rho) * ph * diff
    return complex(out) if out.ndim == 0 else out


def autocorrelation(t, state: BoundState | None = None):
    """(psi0, U0(t) psi0)."""
    c = (state or BoundState()).constant
    t = np.asarray(t, dtype=float)
    out = np.empty(t.shape, dtype=complex)
    zero = t == 0
    out[zero] = 2.0 * math.pi * c * c
    a = 1j * t[~zero]
    v = vfun(a)
    out[~zero] = 8.0 * c * c * SQRT_PI / (2.0 * principal_sqrt(a)) * (a * v + 0.5 * (v + 1.0))
    return complex(out) if out.ndim == 0 else out


def forcing_laplace_reference(p, r: float):
    """Reference values (F1, F2) of the transformed forcing for the 1/sqrt(4 pi) prefactor.

    This F1 has the opposite sign to the n = 0 entry of the lattice G1,
    which is the sign the time-domain march agrees with.
    """
    p = complex(p)
    if p.real <= 0:
        raise ValueError("needs Re p > 0")
    s = principal_sqrt(-1j * p)
    k = 2j * math.sqrt(2.0 * math.pi)
    F1 = -k / (1.0 + 1j * p)
    F2 = -(k / s) * (np.exp(-s * r) - math.exp(-r)) / (r * (1.0 + 1j * p))
    return complex(F1), complex(F2)


@dataclass(frozen=True)
class GaussianPacket:
    """N exp(-|x - x0|^2/(4 sigma^2) + i k0.x), unit L2 norm."""

    center: tuple[float, float, float]
    sigma: float
    momentum: tuple[float, float, float] = (0.0, 0.0, 0.0)
    weight: complex = 1.0

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")

    @property
    def norm_const(self) -> float:
        return (2.0 * math.pi * self.sigma**2) ** -0.75

    def evolve(self, t, x):
        """Free evolution at points x (shape (..., 3))."""
        t = np.asarray(t, dtype=float)[..., None]
        x = np.asarray(x, dtype=float)
        x0 = np.asarray(self.center)
        k0 = np.asarray(self.momentum)
        s2 = self.sigma**2
        z = s2 + 1j * t[..., 0]
        d = x - x0 - 2.0 * k0 * t
        arg = -np.sum(d * d, axis=-1) / (4.0 * z) + 1j * (x @ k0) - 1j * float(k0 @ k0) * t[..., 0]
        return self.weight * self.norm_const * (s2 / z) ** 1.5 * np.exp(arg)

    def at_point(self, t, point):
        t = np.asarray(t, dtype=float)
        pts = np.broadcast_to(np.asarray(point, dtype=float), t.shape + (3,))
        return self.evolve(t, pts)
