"""State reconstruction from the charges: wavefunction, survival amplitude,
norm and the probability of staying inside a ball around the origin.

The state at time t is

    psi_t(x) = (U0(t) psi0)(x) + i int_0^t [q1(tau) U0(t - tau; x) + q2(tau) U0(t - tau; x - r)] dtau,

a sum of a profile A(|x|) around the origin and B(|x - r|) around the
second center.  Spatial integrals over a ball reduce to one- and
two-dimensional radial integrals of rho*A and rho*B.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import wofz

from ionize.model import ConvergenceError
from ionize.propagator import I_M32, autocorrelation, evolved_bound_state, principal_sqrt
from ionize.volterra import ChargeTrajectory, node_weights

try:
    _trapz = np.trapezoid
except AttributeError:  # numpy < 2
    _trapz = np.trapz

# U0(s; rho) = FREE * s^(-3/2) e^{i rho^2/(4s)}
FREE = (4.0 * math.pi) ** -1.5 * I_M32


def _history(traj: ChargeTrajectory, t: float):
    """March nodes up to t (t must be a node) and both charges there."""
    x, q1, q2 = traj.fine()
    k = int(np.searchsorted(x, t - 1e-12 * max(1.0, t)))
    if k >= len(x) or abs(x[k] - t) > 1e-9 * max(1.0, t):
        raise ValueError(f"t = {t} is not a node of the trajectory")
    return x[: k + 1], q1[: k + 1], q2[: k + 1]


def radial_profiles(traj: ChargeTrajectory, t: float, rho):
    """A(rho) around the origin and B(rho) around the second center at time t."""
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    if np.any(rho <= 0):
        raise ValueError("profiles are singular at the centers (rho = 0)")
    state = traj.params.bound_state
    if t == 0:
        return state(rho) + 0j, np.zeros(rho.shape, dtype=complex)
    x, q1, q2 = _history(traj, t)
    A = np.asarray(evolved_bound_state(t, rho, state), dtype=complex).copy()
    B = np.zeros(rho.shape, dtype=complex)
    for i, r_ in enumerate(rho):
        w = node_weights(t, x, r_ * r_ / 4.0, power=-1.5)
        A[i] += 1j * FREE * np.sum(w * q1)
        B[i] = 1j * FREE * np.sum(w * q2)
    return A, B


def wavefunction(t: float, x, traj: ChargeTrajectory) -> complex:
    x = np.asarray(x, dtype=float)
    r = traj.params.r
    rho1 = float(np.linalg.norm(x))
    rho2 = float(np.linalg.norm(x - np.array([0.0, 0.0, r])))
    if rho1 == 0 or rho2 == 0:
        raise ValueError("wavefunction evaluated at an interaction center")
    if t == 0:
        return complex(traj.params.bound_state(rho1))
    A, _ = radial_profiles(traj, t, [rho1])
    _, B = radial_profiles(traj, t, [rho2])
    return complex(A[0] + B[0])


# ---------------------------------------------------------------- survival

@dataclass
class SurvivalSeries:
    t: np.ndarray
    theta: np.ndarray
    normalized: bool = True

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "re_theta", "im_theta", "abs_theta"])
            for ti, th in zip(self.t, self.theta):
                w.writerow([f"{v:.17g}" for v in (ti, th.real, th.imag, abs(th))])


def _product_linear(dx, qa, qb, ga, gb):
    # exact integral of a product of two linear functions on each interval
    return np.sum(dx / 6.0 * (2 * qa * ga + qa * gb + qb * ga + 2 * qb * gb))


def _sqrt_weights(tm: float, nodes: np.ndarray) -> np.ndarray:
    # node weights for int (tm - tau)^{1/2} q(tau) dtau, q piecewise linear
    ua = tm - nodes[1:]
    ub = tm - nodes[:-1]
    d = ub - ua
    p3 = ub**1.5 - ua**1.5
    m0 = (2.0 / 3.0) * p3
    ms = ((2.0 / 5.0) * (ub**2.5 - ua**2.5) - ua * m0) / d
    w = np.zeros(len(nodes))
    w[:-1] += ms
    w[1:] += m0 - ms
    return w


def _offcenter_oscillation(s, rho, c):
    """g with (U0(s) psi0)(rho) = (c/rho) e^{is - rho} + e^{i rho^2/(4s)} s^(-1/2) g(s).

    g(s) = -(c/(2 rho)) sqrt(s) [w(i(A - B)) + w(i(A + B))] is O(s) at s = 0.
    """
    s = np.asarray(s, dtype=float)
    g = np.zeros(s.shape, dtype=complex)
    m = s > 0
    B = principal_sqrt(1j * s[m])
    A = rho / (2.0 * B)
    g[m] = -(c / (2.0 * rho)) * np.sqrt(s[m]) * (wofz(1j * (A - B)) + wofz(1j * (A + B)))
    return g


def survival_amplitude(traj: ChargeTrajectory) -> SurvivalSeries:
    """theta(t) = (psi0, psi_t)/||psi0||^2 on the uniform grid.

    The overlap of the point-source terms with psi0 is (U0(s) psi0) at the
    centers.  At the origin this behaves like c/sqrt(pi i s); that part is
    integrated against the exact Abel weight, the sqrt(s) term of the
    remainder -c w(i sqrt(i s)) likewise, and what is left by the product
    rule for linear interpolants.  At the second center the overlap carries
    a factor e^{i r^2/(4s)} that is split off and weighted exactly.
    """
    state = traj.params.bound_state
    if traj.forcing_id != "bound-state":
        raise ValueError("survival amplitude needs the bound-state initial datum")
    c = state.constant
    r = traj.params.r
    x, q1, q2 = traj.fine()
    tg = traj.t
    theta = np.empty(len(tg), dtype=complex)
    base = autocorrelation(tg, state)
    sing = c / principal_sqrt(1j * math.pi)
    # -c w(i sqrt(is)) = -c + half sqrt(s) + O(s); the sqrt term gets exact weights
    half = 2.0 * c * principal_sqrt(1j) / math.sqrt(math.pi)
    fine_index = np.searchsorted(x, tg - 1e-12)
    for m, tm in enumerate(tg):
        if tm == 0:
            theta[m] = base[0]
            continue
        k = fine_index[m]
        xs = x[: k + 1]
        s = tm - xs
        w = node_weights(tm, xs)
        I1 = sing * np.sum(w * q1[: k + 1])
        I1 += half * np.sum(_sqrt_weights(tm, xs) * q1[: k + 1])
        reg = -c * wofz(1j * principal_sqrt(1j * s)) - half * np.sqrt(s)
        dx = np.diff(xs)
        I1 += _product_linear(dx, q1[:k], q1[1 : k + 1], reg[:-1], reg[1:])
        smooth = (c / r) * math.exp(-r) * np.exp(1j * s)
        I2 = _product_linear(dx, q2[:k], q2[1 : k + 1], smooth[:-1], smooth[1:])
        g = _offcenter_oscillation(s, r, c)
        I2 += np.sum(node_weights(tm, xs, r * r / 4.0) * q2[: k + 1] * g)
        theta[m] = base[m] + 1j * (I1 + I2)
    return SurvivalSeries(tg, theta / state.norm2)


def survival_momentum(traj: ChargeTrajectory, t: float, kmax: float = 60.0, nk: int = 200_001) -> complex:
    """theta(t) from the momentum representation, an independent route."""
    state = traj.params.bound_state
    k = np.linspace(0.0, kmax, nk)
    E = k * k
    Q1, Q2 = charge_spectra(traj, t, E)
    ph = state.fourier(k)
    psi_hat = np.exp(-1j * E * t) * ph + 1j * (Q1 + Q2 * np.sinc(k * traj.params.r / math.pi))
    integrand = k * k * ph * psi_hat
    val = _trapz(integrand, k) / (2.0 * math.pi**2)
    # beyond kmax: i Q1 ~ q1(t)/k^2 against 4 pi c/k^2
    _, q1, _ = _history(traj, t)
    val += 4.0 * math.pi * state.constant * q1[-1] / (2.0 * math.pi**2 * kmax)
    return complex(val / state.norm2)


# ---------------------------------------------------------------- norm

def charge_spectra(traj: ChargeTrajectory, t: float, E: np.ndarray, chunk: int = 4096):
    """Q_j(E) = int_0^t q_j(tau) e^{-iE(t - tau)} dtau, exact for linear q."""
    x, q1, q2 = _history(traj, t)
    E = np.asarray(E, dtype=float)
    h = np.diff(x)
    out1 = np.empty(E.shape, dtype=complex)
    out2 = np.empty(E.shape, dtype=complex)
    for lo in range(0, len(E), chunk):
        e = E[lo : lo + chunk][:, None]
        z = 1j * e * h[None, :]
        small = np.abs(z) < 1e-4
        zs = np.where(small, 1.0, z)
        ez = np.exp(z)
        # int_0^h e^{i e u}(1 - u/h) du and int_0^h e^{i e u} u/h du
        J1 = np.where(small, h * (0.5 + z / 3.0 + z * z / 8.0), h * (ez * (zs - 1.0) + 1.0) / (zs * zs))
        J0 = np.where(small, h * (1.0 + z / 2.0 + z * z / 6.0), h * (ez - 1.0) / zs)
        base = np.exp(1j * e * (x[:-1][None, :] - t))
        wl = base * (J0 - J1)
        wr = base * J1
        out1[lo : lo + chunk] = wl @ q1[:-1] + wr @ q1[1:]
        out2[lo : lo + chunk] = wl @ q2[:-1] + wr @ q2[1:]
    return out1, out2


def norm_squared(traj: ChargeTrajectory, t: float, kmax: float = 40.0, nk: int | None = None) -> float:
    """||psi_t||^2 from the momentum representation plus the analytic large-k tail.

    For large k the transform behaves like (q1(t) + q2(t) e^{-ik.r})/k^2;
    the integral beyond kmax is (|q1(t)|^2 + |q2(t)|^2)/(2 pi^2 kmax) to leading order.
    """
    state = traj.params.bound_state
    if nk is None:
        # resolve oscillations e^{i k^2 t} up to kmax
        nk = int(min(2_000_001, max(20_001, 8 * kmax * kmax * max(t, 1.0) / math.pi)))
    k = np.linspace(0.0, kmax, nk)
    E = k * k
    Q1, Q2 = charge_spectra(traj, t, E)
    a = np.exp(-1j * E * t) * state.fourier(k) + 1j * Q1
    b = 1j * Q2
    sinc = np.sinc(k * traj.params.r / math.pi)
    dens = np.abs(a) ** 2 + np.abs(b) ** 2 + 2.0 * np.real(np.conj(a) * b) * sinc
    body = _trapz(k * k * dens, k) / (2.0 * math.pi**2)
    _, q1, q2 = _history(traj, t)
    tail = (abs(q1[-1]) ** 2 + abs(q2[-1]) ** 2) / (2.0 * math.pi**2 * kmax)
    return float(body + tail)


# ---------------------------------------------------------------- ball probability

def _radial_grid(R: float, r: float, n: int):
    # denser near both centers; nodes strictly positive
    top = R + r
    u = np.linspace(0.0, 1.0, n + 1)[1:]
    return top * u**2


def inside_probability(traj: ChargeTrajectory, t: float, R: float, n_radial: int = 600) -> float:
    """||1_{|x| <= R} psi_t||^2.

    Uses |psi|^2 = |A|^2 + |B|^2 + 2 Re(conj(A) B): the first term is a radial
    integral, the second weights each shell around the second center by the
    fraction of it inside the ball, and the cross term is an integral over
    bipolar coordinates (rho1, rho2) with |rho1 - rho2| <= r <= rho1 + rho2.
    """
    if R <= 0:
        raise ValueError("R must be positive")
    r = traj.params.r
    if t == 0:
        return _inside_t0(traj, R)
    rho = _radial_grid(R, r, n_radial)
    A, B = radial_profiles(traj, t, rho)
    # bounded profiles rho*A, rho*B, extended to rho = 0 by their charges / (4 pi)
    x, q1, q2 = _history(traj, t)
    grid = np.concatenate([[0.0], rho])
    fa = CubicSpline(grid, np.concatenate([[q1[-1] / (4 * math.pi)], rho * A]))
    fb = CubicSpline(grid, np.concatenate([[q2[-1] / (4 * math.pi)], rho * B]))
    gx, gw = np.polynomial.legendre.leggauss(64)

    def gl(a, b, f, pieces=16):
        edges = np.linspace(a, b, pieces + 1)
        tot = 0.0
        for lo, hi in zip(edges[:-1], edges[1:]):
            xs = 0.5 * (hi - lo) * gx + 0.5 * (hi + lo)
            tot = tot + 0.5 * (hi - lo) * np.sum(gw * f(xs))
        return tot

    pa = 4 * math.pi * gl(0.0, R, lambda s: np.abs(fa(s)) ** 2)

    def cap(s):
        with np.errstate(divide="ignore", invalid="ignore"):
            mu = np.clip((R * R - r * r - s * s) / (2 * r * s), -1.0, 1.0)
        return 0.5 * (1.0 + mu)

    pb = 4 * math.pi * gl(0.0, R + r, lambda s: np.abs(fb(s)) ** 2 * cap(s))
    Fb = fb.antiderivative()
    cross = (2 * math.pi / r) * gl(
        0.0, R, lambda s: np.conj(fa(s)) * (Fb(s + r) - Fb(np.abs(s - r)))
    )
    return float(pa + pb + 2.0 * np.real(cross))


def _inside_t0(traj: ChargeTrajectory, R: float) -> float:
    # 4 pi c^2 int_0^R e^{-2 rho} d rho
    c = traj.params.bound_state.constant
    return float(2.0 * math.pi * c * c * (-math.expm1(-2.0 * R)))


def inside_probability_mc(traj: ChargeTrajectory, t: float, R: float, samples: int = 1_000_000,
                          seed: int = 0, n_table: int = 4000):
    """Monte Carlo estimate of the same quantity, with its standard error.

    Points are drawn from a mixture of densities proportional to 1/|x|^2,
    1/|x - r|^2 (both truncated to the ball) and the uniform density, which
    keeps the variance finite next to the 1/rho singularities.
    """
    rng = np.random.default_rng(seed)
    r = traj.params.r
    rc = np.array([0.0, 0.0, r])
    if t == 0:
        fa = lambda s: traj.params.bound_state(s) * s  # noqa: E731
        fb = lambda s: 0.0 * s  # noqa: E731
    else:
        grid = np.linspace(0.0, R + r, n_table + 1)[1:]
        A, B = radial_profiles(traj, t, grid)
        _, q1, q2 = _history(traj, t)
        g = np.concatenate([[0.0], grid])
        fa = CubicSpline(g, np.concatenate([[q1[-1] / (4 * math.pi)], grid * A]))
        fb = CubicSpline(g, np.concatenate([[q2[-1] / (4 * math.pi)], grid * B]))

    def unit(n):
        v = rng.normal(size=(n, 3))
        return v / np.linalg.norm(v, axis=1, keepdims=True)

    vol = 4.0 / 3.0 * math.pi * R**3
    out = np.empty(samples)
    # proposal 1: |x| uniform in [0, R], direction uniform -> density 1/(4 pi R |x|^2)
    # proposal 2: |x - r| uniform in [0, R + r], rejected outside the ball
    # proposal 3: uniform in the ball
    which = rng.integers(0, 3, size=samples)
    pts = np.empty((samples, 3))
    n1 = int(np.sum(which == 0))
    pts[which == 0] = unit(n1) * rng.uniform(0, R, size=(n1, 1))
    n2 = int(np.sum(which == 1))
    pts[which == 1] = rc + unit(n2) * rng.uniform(0, R + r, size=(n2, 1))
    n3 = int(np.sum(which == 2))
    pts[which == 2] = unit(n3) * (R * rng.uniform(0, 1, size=(n3, 1)) ** (1 / 3))
    rho1 = np.linalg.norm(pts, axis=1)
    rho2 = np.linalg.norm(pts - rc, axis=1)
    inside = rho1 <= R
    d1 = np.where(inside, 1.0 / (4 * math.pi * R * rho1**2), 0.0)
    # proposal 2 density (before rejection) at points of the ball
    d2 = np.where(rho2 <= R + r, 1.0 / (4 * math.pi * (R + r) * rho2**2), 0.0)
    d3 = np.where(inside, 1.0 / vol, 0.0)
    dens = (d1 + d2 + d3) / 3.0
    psi = fa(rho1) / rho1 + fb(rho2) / rho2
    out = np.where(inside, np.abs(psi) ** 2 / dens, 0.0)
    return float(out.mean()), float(out.std(ddof=1) / math.sqrt(samples))


@dataclass
class IonizationSeries:
    t: np.ndarray
    R: float
    inside_prob: np.ndarray
    running_average: np.ndarray
    flags: list

    def final_slope(self, fraction: float = 0.25) -> float:
        """Slope of the running average over the last `fraction` of the window."""
        k = max(2, int(len(self.t) * fraction))
        return float(np.polyfit(self.t[-k:], self.running_average[-k:], 1)[0])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "R", "inside_prob", "running_avg"])
            for ti, p, a in zip(self.t, self.inside_prob, self.running_average):
                w.writerow([f"{v:.17g}" for v in (ti, self.R, p, a)])


def ionization_average(traj: ChargeTrajectory, R: float, times, threads: int = 1,
                       n_radial: int = 600) -> IonizationSeries:
    """Inside probability at coarse times and its running time average (trapezoidal)."""
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) <= 0):
        raise ValueError("times must increase")
    flags = []

    def one(tt):
        try:
            return inside_probability(traj, float(tt), R, n_radial)
        except (ConvergenceError, FloatingPointError) as exc:
            flags.append((float(tt), str(exc)))
            return math.nan

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            vals = np.array(list(ex.map(one, times)))
    else:
        vals = np.array([one(tt) for tt in times])
    run = np.empty_like(vals)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (vals[1:] + vals[:-1]) * np.diff(times))])
    span = times - times[0]
    run[0] = vals[0]
    run[1:] = cum[1:] / span[1:]
    return IonizationSeries(times, R, vals, run, flags)
