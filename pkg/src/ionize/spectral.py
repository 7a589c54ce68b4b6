"""Laplace-domain lattice system for the charges.

With q_n(p) = Laplace transform of q at p + i omega n, the transformed
equations become, for |n| <= N,

    q1 = M1 q2 + G1,    q2 = L q2 + M2 q1 + G2,

with diagonal M1, M2 and L coupling n to n + k through alpha_k (k != 0).
All square roots are sqrt(omega n - i p) on the principal branch.

The cross terms carry a coupling constant: 1 is what the time-domain
equations produce; the "printed" convention uses (2 pi)^(-3/2).
`ModelParams.convention` selects between them.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from ionize.model import ConvergenceError, ModelParams, ValidationError
from ionize.propagator import principal_sqrt

log = logging.getLogger(__name__)

TWO_I_SQRT_2PI = 2j * math.sqrt(2.0 * math.pi)


class SingularCoefficient(ValueError):
    """A lattice coefficient is evaluated at its removable point."""


def lattice_sqrt(n, p, omega: float):
    return principal_sqrt(omega * np.asarray(n, dtype=float) - 1j * np.asarray(p, dtype=complex))


def c_n(n, p, params: ModelParams, coupling: float | None = None):
    """sqrt(omega n - i p) + kappa^2 e^{-2 r s} / (r^2 (1 - s)), s the lattice root."""
    kappa = params.coupling if coupling is None else coupling
    s = lattice_sqrt(n, p, params.omega)
    if np.any(s == 1.0):
        raise SingularCoefficient("coefficient singular at p = i (omega n - i p = 1)")
    r = params.r
    return s + kappa**2 * np.exp(-2.0 * r * s) / (r * r * (1.0 - s))


def c_n_direct(n: int, p: complex, params: ModelParams, coupling: float | None = None) -> complex:
    """Same value via cmath and an exponent assembled from real and imaginary parts."""
    import cmath

    kappa = params.coupling if coupling is None else coupling
    z = complex(params.omega * n, 0.0) - 1j * complex(p)
    mod = abs(z)
    arg = math.atan2(z.imag + 0.0, z.real)
    s = cmath.rect(math.sqrt(mod), arg / 2.0)
    decay = math.exp(-2.0 * params.r * s.real)
    phase = complex(math.cos(-2.0 * params.r * s.imag), math.sin(-2.0 * params.r * s.imag))
    return s + kappa * kappa * decay * phase / (params.r**2 * (1.0 - s))


def sign_lemma_value(n, p, r: float, omega: float, coupling: float = (2.0 * math.pi) ** -1.5):
    """Im[s + kappa^2 e^{-2 r s}/(r^2 (1 - s))]; negative for Re p > 0 at coupling (2 pi)^(-3/2)."""
    s = lattice_sqrt(n, p, omega)
    return np.imag(s + coupling**2 * np.exp(-2.0 * r * s) / (r * r * (1.0 - s)))


@dataclass(frozen=True)
class LatticeOperators:
    p: complex
    N: int
    n: np.ndarray
    roots: np.ndarray
    diag_M1: np.ndarray
    diag_M2: np.ndarray
    L_matrix: np.ndarray
    G1: np.ndarray
    G2: np.ndarray

    @property
    def system(self) -> np.ndarray:
        return np.eye(len(self.n)) - self.L_matrix - np.diag(self.diag_M2 * self.diag_M1)

    @property
    def rhs(self) -> np.ndarray:
        return self.diag_M2 * self.G1 + self.G2


def build_operators(p: complex, N: int, params: ModelParams) -> LatticeOperators:
    p = complex(p)
    n = np.arange(-N, N + 1)
    s = lattice_sqrt(n, p, params.omega)
    r = params.r
    a0 = params.alpha0
    kappa = params.coupling
    amp = params.bound_state.amplitude
    e = np.exp(-r * s)
    with np.errstate(divide="ignore", invalid="ignore"):
        M1 = -kappa * e / (r * (1.0 - s))
        M2 = kappa * e / (r * (4.0 * math.pi * a0 + s))
        A = -4.0 * math.pi / (4.0 * math.pi * a0 + s)
        denom = 1.0 - params.omega * n + 1j * p
        G1 = amp * TWO_I_SQRT_2PI / denom
        G2 = -amp * (TWO_I_SQRT_2PI / r) * (e - math.exp(-r)) / ((4.0 * math.pi * a0 + s) * denom)
    size = 2 * N + 1
    L = np.zeros((size, size), dtype=complex)
    rows = np.arange(size)
    for k, ak in params.alpha.full().items():
        if k == 0:
            continue
        cols = rows + k
        ok = (cols >= 0) & (cols < size)
        L[rows[ok], cols[ok]] = A[ok] * ak
    return LatticeOperators(p, N, n, s, M1, M2, L, G1, G2)


@dataclass
class SpectralSolution:
    p: complex
    N: int
    q1_vec: np.ndarray
    q2_vec: np.ndarray
    residual: float
    condition: float
    operators: LatticeOperators | None = field(default=None, repr=False)

    def component(self, n: int = 0) -> tuple[complex, complex]:
        i = n + self.N
        return complex(self.q1_vec[i]), complex(self.q2_vec[i])

    def to_json(self) -> dict:
        return {
            "p": [self.p.real, self.p.imag],
            "N": self.N,
            "n": list(range(-self.N, self.N + 1)),
            "q1": [[z.real, z.imag] for z in self.q1_vec],
            "q2": [[z.real, z.imag] for z in self.q2_vec],
            "residual": self.residual,
            "condition": self.condition,
        }


def _removable_points(p: complex, N: int, omega: float):
    # p with omega n - i p = 1, i.e. p = i (1 - omega n)
    n = np.arange(-N, N + 1)
    return np.abs(p - 1j * (1.0 - omega * n))


def build_and_solve(
    p: complex,
    N: int,
    params: ModelParams,
    guard: float = 1e-6,
    max_condition: float = 1e12,
    check_pole: bool = True,
) -> SpectralSolution:
    p = complex(p)
    if p.real < 0:
        raise ValidationError("needs Re p >= 0")
    if N < 8:
        raise ValidationError("truncation N must be >= 8")
    if np.min(_removable_points(p, N, params.omega)) < guard:
        raise SingularCoefficient("p within guard of a removable coefficient point (p = i modulo the lattice)")
    if check_pole:
        for p0 in find_pole(params).p0_list:
            # the pole repeats at p0 + i omega k
            d = p - p0
            k = round(d.imag / params.omega)
            if abs(d - 1j * params.omega * k) < guard:
                raise ConvergenceError("p within guard of the lattice pole", p=p, p0=p0, N=N)
    ops = build_operators(p, N, params)
    Amat = ops.system
    b = ops.rhs
    cond = float(np.linalg.cond(Amat))
    if not np.isfinite(cond) or cond > max_condition:
        raise ConvergenceError("lattice system ill-conditioned", p=p, N=N, condition=cond)
    q2 = np.linalg.solve(Amat, b)
    q1 = ops.diag_M1 * q2 + ops.G1
    res = float(np.linalg.norm(Amat @ q2 - b) / max(np.linalg.norm(b), 1e-300))
    return SpectralSolution(p, N, q1, q2, res, cond, ops)


# ---------------------------------------------------------------- pole

@dataclass(frozen=True)
class PoleLocation:
    lambda_roots: tuple[float, ...]
    n0: tuple[int, ...]
    p0_list: tuple[complex, ...]
    residuals: tuple[float, ...]

    @property
    def p0(self) -> complex:
        return self.p0_list[-1]

    def to_json(self) -> dict:
        return {
            "lambda_roots": list(self.lambda_roots),
            "n0": list(self.n0),
            "p0": [[z.real, z.imag] for z in self.p0_list],
            "residuals": list(self.residuals),
        }


def pole_function(lam, params: ModelParams):
    """(4 pi alpha0 + lam)(lam - 1) - kappa^2 e^{-2 r lam}/r^2; roots give the lattice pole."""
    lam = np.asarray(lam, dtype=float)
    k2 = params.coupling**2
    return (4.0 * math.pi * params.alpha0 + lam) * (lam - 1.0) - k2 * np.exp(-2.0 * params.r * lam) / params.r**2


def _polish(f, a, b):
    root = brentq(f, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    # a couple of secant steps on the scalar function
    x0, x1 = root, root * (1 + 1e-12) + 1e-15
    for _ in range(3):
        f0, f1 = f(x0), f(x1)
        if f1 == f0:
            break
        x2 = x1 - f1 * (x1 - x0) / (f1 - f0)
        if not (a <= x2 <= b) or abs(f(x2)) >= abs(f(x1)):
            break
        x0, x1 = x1, x2
    return x1 if abs(f(x1)) < abs(f(root)) else root


_pole_cache: dict = {}


def find_pole(params: ModelParams, scan_points: int = 100_000) -> PoleLocation:
    """Positive roots of the pole function and their strip images p0 = i(lam^2 - omega n0)."""
    key = (params.r, params.omega, params.alpha0, params.coupling)
    if key in _pole_cache:
        return _pole_cache[key]
    beta = -4.0 * math.pi * params.alpha0
    kappa = params.coupling
    lo_edge = min(beta, 1.0)
    hi_edge = max(beta, 1.0)
    Lam = max(18.5 / params.r, hi_edge + 1.0 + kappa / params.r) + 1.0

    def f(x):
        return float(pole_function(x, params))

    roots = []
    segments = []
    if lo_edge > 0:
        segments.append(np.linspace(0.0, lo_edge, scan_points + 1)[1:])
    segments.append(np.linspace(max(hi_edge, 0.0), Lam, scan_points + 1))
    for xs in segments:
        vals = pole_function(xs, params)
        for i in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0)[0]:
            a, b = xs[i], xs[i + 1]
            if vals[i] == 0:
                roots.append(float(a))
                continue
            if vals[i + 1] == 0:
                continue
            roots.append(_polish(f, a, b))
    roots = sorted(set(r for r in roots if r > 0))
    if not roots:
        if params.alpha0 >= 0:
            raise ConvergenceError("no pole root found although alpha0 >= 0", alpha0=params.alpha0)
        raise ConvergenceError("no pole root", alpha0=params.alpha0)
    if len(roots) > 2:
        raise ConvergenceError("more than two pole roots", roots=roots)
    n0 = tuple(int(math.floor(lam * lam / params.omega)) for lam in roots)
    p0 = tuple(1j * (lam * lam - params.omega * k) for lam, k in zip(roots, n0))
    res = tuple(abs(f(lam)) for lam in roots)
    out = PoleLocation(tuple(roots), n0, p0, res)
    _pole_cache[key] = out
    return out


# ---------------------------------------------------------------- limits and fits

@dataclass
class LimitResult:
    value: complex
    eps: list[float]
    samples: list[complex]
    extrapolated: list[complex]
    cauchy: bool
    converged: bool
    direction: complex

    def to_json(self) -> dict:
        return {
            "value": [self.value.real, self.value.imag],
            "eps": self.eps,
            "samples": [[z.real, z.imag] for z in self.samples],
            "extrapolated": [[z.real, z.imag] for z in self.extrapolated],
            "cauchy": self.cauchy,
            "converged": self.converged,
        }


def limit_at_i(
    params: ModelParams,
    N: int = 64,
    eps=(1e-2, 1e-3, 1e-4, 1e-5),
    direction: complex = 1.0,
    component: int = 1,
    tol: float = 1e-3,
) -> LimitResult:
    """Removable limit of q_0 (charge `component`) at p = i along i + eps*direction."""
    direction = complex(direction) / abs(direction)
    vals = []
    for e in eps:
        sol = build_and_solve(1j + e * direction, N, params, check_pole=False, max_condition=np.inf)
        vals.append(sol.component(0)[component - 1])
    # linear Richardson between consecutive eps
    ext = []
    for (e0, v0), (e1, v1) in zip(zip(eps, vals), zip(eps[1:], vals[1:])):
        ext.append((e0 * v1 - e1 * v0) / (e0 - e1))
    diffs = [abs(b - a) for a, b in zip(vals, vals[1:])]
    cauchy = all(d2 < d1 for d1, d2 in zip(diffs, diffs[1:]))
    converged = len(ext) >= 2 and abs(ext[-1] - ext[-2]) < tol
    return LimitResult(ext[-1] if ext else vals[-1], list(eps), vals, ext, cauchy, converged, direction)


def residue_identity(params: ModelParams, N: int = 64, eps=(1e-2, 1e-3, 1e-4, 1e-5)) -> dict:
    """Both sides of the cancellation condition at p = i.

    Regularity of q1 at p = i forces kappa e^{-r} q_0^(2)(i) / r = i sqrt(2 pi) * amp,
    that is i sqrt(2 pi) for the normalized state.
    """
    lim = limit_at_i(params, N, eps, component=2)
    lhs = params.coupling * math.exp(-params.r) * lim.value / params.r
    rhs = 1j * math.sqrt(2.0 * math.pi) * params.bound_state.amplitude
    return {"lhs": lhs, "rhs": rhs, "q2_at_i": lim.value, "converged": lim.converged}


@dataclass
class BranchFit:
    c: complex
    d: complex
    residual: float
    accepted: bool
    coeffs_c: list[complex]
    coeffs_d: list[complex]
    eps: float

    def to_json(self) -> dict:
        return {
            "c": [self.c.real, self.c.imag],
            "d": [self.d.real, self.d.imag],
            "residual": self.residual,
            "accepted": self.accepted,
            "eps": self.eps,
            "c_poly": [[z.real, z.imag] for z in self.coeffs_c],
            "d_poly": [[z.real, z.imag] for z in self.coeffs_d],
        }


def branch_sample_points(eps: float) -> np.ndarray:
    phis = np.deg2rad(np.arange(-80, 81, 10))
    return np.concatenate([eps * np.exp(1j * phis), [eps / 4, eps / 2, eps]]).astype(complex)


def fit_branch(p: np.ndarray, values: np.ndarray, terms: int = 2, eps: float | None = None) -> BranchFit:
    """Least squares for values = c(p) + d(p) sqrt(p) with c, d polynomials of `terms` coefficients.

    The reported residual is the RMS misfit; the model is accepted when it
    stays below 1e-4 |d(0)| sqrt(eps).
    """
    p = np.asarray(p, dtype=complex)
    values = np.asarray(values, dtype=complex)
    sp = principal_sqrt(p)
    cols = [p**j for j in range(terms)] + [sp * p**j for j in range(terms)]
    X = np.stack(cols, axis=1)
    scale = np.linalg.norm(X, axis=0)
    coef, *_ = np.linalg.lstsq(X / scale, values, rcond=None)
    coef = coef / scale
    resid = float(np.sqrt(np.mean(np.abs(X @ coef - values) ** 2)))
    eps = float(np.max(np.abs(p))) if eps is None else eps
    c = complex(coef[0])
    d = complex(coef[terms])
    ok = resid < 1e-4 * abs(d) * math.sqrt(eps)
    return BranchFit(c, d, resid, ok, [complex(x) for x in coef[:terms]], [complex(x) for x in coef[terms:]], eps)


def branch_fit_at_origin(params: ModelParams, N: int = 64, eps: float = 1e-3, terms: int = 2, n: int = 0) -> dict[str, BranchFit]:
    """Fit c + d sqrt(p) to the lattice component n of both charges near p = 0."""
    for p0 in find_pole(params).p0_list:
        k = round(p0.imag / params.omega)
        if abs(p0 - 1j * params.omega * k) < 2 * eps:
            raise ValidationError("pole within 2 eps of the origin")
    pts = branch_sample_points(eps)
    v1, v2 = [], []
    for p in pts:
        sol = build_and_solve(p, N, params, guard=0.0, check_pole=False, max_condition=np.inf)
        a, b = sol.component(n)
        v1.append(a)
        v2.append(b)
    return {"q1": fit_branch(pts, v1, terms, eps), "q2": fit_branch(pts, v2, terms, eps)}
