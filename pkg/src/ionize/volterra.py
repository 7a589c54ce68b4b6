"""Time-domain solver for the two charges.

The charges obey two coupled Volterra equations of the second kind with
the Abel weight (t - tau)^(-1/2) and the cross kernel

    K(s) = int_0^s U0(sigma; r) (s - sigma)^(-1/2) dsigma
         = -i exp(i r^2/(4s)) / (4 pi r sqrt(s)).

Both are integrated exactly against piecewise-linear densities (product
integration).  Near t = 0 the second charge grows like sqrt(t) and relaxes
on the time scale (4 pi alpha)^(-2), which a uniform grid resolves only at
order 1/2.  The march therefore runs on a graded mesh over a short start
window (fixed in absolute time, merged with the uniform nodes it contains)
and on the uniform grid afterwards.  Results are reported on the uniform
grid; the start-window samples are kept for downstream integrals.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np
from scipy.special import wofz

from ionize.alpha import evaluate as alpha_at
from ionize.model import BoundState, ConvergenceError, ModelParams
from ionize.propagator import GaussianPacket, SQRT_PI, principal_sqrt

log = logging.getLogger(__name__)

_GX, _GW = np.polynomial.legendre.leggauss(12)
_GS = 0.5 * (_GX + 1.0)
_GW = 0.5 * _GW

ABEL_Q1 = 1.0 / principal_sqrt(-math.pi * 1j)  # coefficient of the q1 Abel term
ABEL_Q2 = 4.0 * principal_sqrt(math.pi * 1j)  # coefficient of the alpha q2 Abel term
CROSS_PRINTED = principal_sqrt(-2j) / math.pi
CROSS_PHYSICAL = 4.0 * SQRT_PI * complex(math.cos(-math.pi / 4), math.sin(-math.pi / 4))


def cross_coefficient(convention: str) -> complex:
    """Constant multiplying the cross-kernel convolution in both equations."""
    return CROSS_PHYSICAL if convention == "physical" else CROSS_PRINTED


@dataclass(frozen=True)
class TimeGrid:
    t_max: float
    n_steps: int

    def __post_init__(self):
        if not (self.t_max > 0 and self.n_steps >= 1):
            raise ValueError("need t_max > 0 and n_steps >= 1")

    @property
    def h(self) -> float:
        return self.t_max / self.n_steps

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.h


# ---------------------------------------------------------------- moments

def _antiderivatives(u, a):
    # W0 = int_0^u e^{ia/v} v^{-1/2} dv, W1 = int_0^u e^{ia/v} v^{1/2} dv
    u = np.asarray(u, dtype=float)
    W0 = np.zeros(u.shape, dtype=complex)
    W1 = np.zeros(u.shape, dtype=complex)
    m = u > 0
    uu = u[m]
    z = complex(math.cos(math.pi / 4), math.sin(math.pi / 4)) * np.sqrt(a / uu)
    w = wofz(z)
    ph = np.exp(1j * a / uu)
    su = np.sqrt(uu)
    W0[m] = ph * (2.0 * su - 2.0 * principal_sqrt(-1j * math.pi * a) * w)
    W1[m] = ph * ((2.0 / 3.0) * uu * su + (4.0 / 3.0) * 1j * a * su
                  + (4.0 * SQRT_PI / 3.0) * principal_sqrt(-1j * a) ** 3 * w)
    return W0, W1


def _antiderivatives_m32(u, a):
    # V = int_0^u e^{ia/v} v^{-3/2} dv, and int_0^u e^{ia/v} v^{-1/2} dv
    u = np.asarray(u, dtype=float)
    V = np.zeros(u.shape, dtype=complex)
    m = u > 0
    uu = u[m]
    z = complex(math.cos(math.pi / 4), math.sin(math.pi / 4)) * np.sqrt(a / uu)
    V[m] = math.sqrt(math.pi) / principal_sqrt(-1j * a) * np.exp(1j * a / uu) * wofz(z)
    W0, _ = _antiderivatives(u, a)
    return V, W0


def interval_moments(ua, ub, a: float = 0.0, power: float = -0.5):
    """Integrals of e^{ia/u} u^power times 1 and (u - ua)/(ub - ua) over [ua, ub].

    power is -1/2 or -3/2 (the latter needs a > 0).  a = 0 with power -1/2
    is the Abel weight, in closed form.  Otherwise smooth intervals use
    12-point Gauss-Legendre and the rest use exact antiderivatives.
    """
    ua = np.asarray(ua, dtype=float)
    ub = np.asarray(ub, dtype=float)
    d = ub - ua
    if power == -0.5 and a == 0.0:
        sa, sb = np.sqrt(ua), np.sqrt(ub)
        ssum = sa + sb
        return 2.0 * d / ssum + 0j, (2.0 / 3.0) * d * (sb + 2.0 * sa) / ssum**2 + 0j
    if power not in (-0.5, -1.5) or (power == -1.5 and a <= 0):
        raise ValueError("unsupported kernel")
    smooth = (ua > 4.0 * d) & (a * d < 0.5 * ua * ua)
    m0 = np.empty(ua.shape, dtype=complex)
    ms = np.empty(ua.shape, dtype=complex)
    if smooth.any():
        A = ua[smooth][..., None]
        D = d[smooth][..., None]
        u = A + D * _GS
        f = np.exp(1j * a / u) * u**power * (_GW * D)
        m0[smooth] = f.sum(-1)
        ms[smooth] = (f * _GS).sum(-1)
    rest = ~smooth
    if rest.any():
        anti = _antiderivatives if power == -0.5 else _antiderivatives_m32
        a0, a1 = anti(ua[rest], a)
        b0, b1 = anti(ub[rest], a)
        m0[rest] = b0 - a0
        ms[rest] = (b1 - a1 - ua[rest] * (b0 - a0)) / d[rest]
    return m0, ms


def node_weights(tm: float, nodes: np.ndarray, a: float = 0.0, power: float = -0.5) -> np.ndarray:
    """w with int_0^{nodes[-1]} k(tm - tau) q(tau) dtau = w @ q(nodes) for piecewise-linear q.

    k(u) = e^{ia/u} u^power; requires tm >= nodes[-1].
    """
    ua = tm - nodes[1:]
    ub = tm - nodes[:-1]
    m0, ms = interval_moments(ua, ub, a, power)
    w = np.zeros(len(nodes), dtype=complex)
    w[:-1] += ms
    w[1:] += m0 - ms
    return w


@dataclass(frozen=True)
class ConvolutionKernel:
    """scale * e^{ia/u} u^{-1/2}; a = 0 is the Abel weight."""

    a: float = 0.0
    scale: complex = 1.0

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        out = np.zeros(s.shape, dtype=complex)
        m = s > 0
        out[m] = self.scale * np.exp(1j * self.a / s[m]) / np.sqrt(s[m])
        return out

    def uniform_moments(self, h: float, n: int):
        k = np.arange(n)
        m0, ms = interval_moments(k * h, (k + 1) * h, self.a)
        return self.scale * m0, self.scale * ms

    def node_weights(self, tm: float, nodes: np.ndarray) -> np.ndarray:
        return self.scale * node_weights(tm, nodes, self.a)


ABEL = ConvolutionKernel(0.0, 1.0)


@dataclass(frozen=True)
class CrossKernelTable:
    grid: TimeGrid
    r: float
    values: np.ndarray
    kernel: ConvolutionKernel


def cross_kernel(r: float) -> ConvolutionKernel:
    return ConvolutionKernel(r * r / 4.0, -1j / (4.0 * math.pi * r))


def precompute_cross_kernel(params: ModelParams, grid: TimeGrid) -> CrossKernelTable:
    """Samples of K on the grid, K(0) = 0 (empty integration range).

    The closed form replaces nested quadrature; the samples are for
    inspection, the march integrates K exactly through its moments.
    """
    if params.r <= 0:
        raise ValueError("r must be positive")
    ker = cross_kernel(params.r)
    vals = ker(grid.nodes)
    if not np.all(np.isfinite(vals)):
        bad = int(np.argmin(np.isfinite(vals)))
        raise ConvergenceError("cross kernel not finite", node=bad)
    return CrossKernelTable(grid, params.r, vals, ker)


# ---------------------------------------------------------------- forcing

class Forcing(Protocol):
    descriptor: str

    def values(self, times: np.ndarray) -> tuple[np.ndarray, np.ndarray]: ...


@dataclass(frozen=True)
class ZeroForcing:
    descriptor: str = "zero"

    def values(self, times):
        z = np.zeros(len(times), dtype=complex)
        return z, z.copy()


@dataclass(frozen=True)
class BoundStateForcing:
    """Abel-convolved free evolution of c e^{-|x|}/|x| at the two centers, in closed form.

    f1(t) = 4 sqrt(pi i) int_0^t (U0(tau) psi0)(0) (t - tau)^(-1/2) dtau = 4 pi c w(i sqrt(it))
    and f2 likewise at distance r.
    """

    r: float
    state: BoundState = BoundState()
    descriptor: str = "bound-state"

    def values(self, times):
        t = np.asarray(times, dtype=float)
        c = self.state.constant
        r = self.r
        f1 = 4.0 * math.pi * c * wofz(1j * principal_sqrt(1j * t))
        f2 = np.zeros(t.shape, dtype=complex)
        m = t > 0
        x = t[m]
        B = principal_sqrt(1j * x)
        Ar = r / (2.0 * B)
        ph = np.exp(1j * r * r / (4.0 * x))
        f2[m] = (2.0 * math.pi * c / r) * (
            2.0 * math.exp(-r) * (np.exp(1j * x) - wofz(1j * B))
            - ph * wofz(1j * (Ar - B))
            + ph * wofz(1j * (Ar + B))
        )
        return f1, f2


def abel_convolve(g: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    """int_0^{t_i} g(tau) (t_i - tau)^(-1/2) dtau at every node, g piecewise linear."""
    out = np.zeros(len(nodes), dtype=complex)
    for i in range(1, len(nodes)):
        out[i] = np.sum(node_weights(nodes[i], nodes[: i + 1]) * g[: i + 1])
    return out


@dataclass(frozen=True)
class PacketForcing:
    """Forcing from a free Gaussian packet (kept away from both centers), by product integration."""

    packet: GaussianPacket
    r: float
    descriptor: str = "gaussian-packet"

    def values(self, times):
        t = np.asarray(times, dtype=float)
        g1 = self.packet.at_point(t, (0.0, 0.0, 0.0))
        g2 = self.packet.at_point(t, (0.0, 0.0, self.r))
        k = ABEL_Q2
        return k * abel_convolve(g1, t), k * abel_convolve(g2, t)


def forcing_from_initial_state(state, grid_or_times, params: ModelParams | None = None):
    """Forcing arrays on a TimeGrid (or explicit node array) for a supported initial datum."""
    times = grid_or_times.nodes if isinstance(grid_or_times, TimeGrid) else np.asarray(grid_or_times)
    return make_forcing(state, params).values(times)


def make_forcing(state, params: ModelParams | None = None) -> Forcing:
    if state is None or state == "zero":
        return ZeroForcing()
    if isinstance(state, (ZeroForcing, BoundStateForcing, PacketForcing)):
        return state
    if params is None:
        raise ValueError("params needed to place the second center")
    if isinstance(state, BoundState):
        return BoundStateForcing(params.r, state)
    if isinstance(state, GaussianPacket):
        return PacketForcing(state, params.r)
    raise TypeError(f"unsupported initial state {type(state).__name__}")


# ---------------------------------------------------------------- march

@dataclass
class ChargeTrajectory:
    grid: TimeGrid
    q1: np.ndarray
    q2: np.ndarray
    forcing_id: str
    params: ModelParams
    start_nodes: np.ndarray = field(default_factory=lambda: np.zeros(1))
    start_q1: np.ndarray = field(default_factory=lambda: np.zeros(1, complex))
    start_q2: np.ndarray = field(default_factory=lambda: np.zeros(1, complex))

    @property
    def t(self) -> np.ndarray:
        return self.grid.nodes

    def fine(self):
        """All march nodes (start window plus uniform) and the charges on them."""
        if len(self.start_nodes) < 2:
            return self.t, self.q1, self.q2
        s = int(round(self.start_nodes[-1] / self.grid.h))
        x = np.concatenate([self.start_nodes, self.t[s + 1 :]])
        return (x, np.concatenate([self.start_q1, self.q1[s + 1 :]]),
                np.concatenate([self.start_q2, self.q2[s + 1 :]]))

    def laplace(self, p: complex):
        """Transforms of both charges and an upper bound on the omitted tail beyond t_max.

        Exact for the piecewise-linear interpolant on the march nodes; the
        tail bound assumes |q(t)| <= |q(t_max)| (t_max/t)^(3/2).
        """
        x, q1, q2 = self.fine()
        v1 = laplace_linear(x, q1, p)
        v2 = laplace_linear(x, q2, p)
        T = x[-1]
        tail = max(abs(q1[-1]), abs(q2[-1])) * math.exp(-p.real * T) / max(p.real, 1e-300)
        return v1, v2, tail

    def to_csv(self, path) -> None:
        write_charges_csv(path, self.t, self.q1, self.q2)


def laplace_linear(x: np.ndarray, q: np.ndarray, p: complex) -> complex:
    """int e^{-pt} q(t) dt for q linear between the nodes x."""
    p = complex(p)
    h = np.diff(x)
    z = p * h
    em = np.exp(-z)
    I0 = -np.expm1(-z) / p
    small = np.abs(z) < 1e-3
    I1 = np.empty_like(z)
    zs = z[~small]
    I1[~small] = (1.0 - em[~small] - zs * em[~small]) / (p * zs)
    zz = z[small]
    # h * (1/2 - z/3 + z^2/8 - z^3/30)
    I1[small] = h[small] * (0.5 - zz / 3.0 + zz * zz / 8.0 - zz**3 / 30.0)
    e = np.exp(-p * x[:-1])
    return complex(np.sum(e * ((I0 - I1) * q[:-1] + I1 * q[1:])))


def write_charges_csv(path, t, q1, q2) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "re_q1", "im_q1", "abs_q1", "re_q2", "im_q2", "abs_q2"])
        for row in zip(t, q1, q2):
            ti, a, b = row
            w.writerow([f"{x:.17g}" for x in (ti, a.real, a.imag, abs(a), b.real, b.imag, abs(b))])


def read_charges_csv(path):
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    t = data[:, 0]
    return t, data[:, 1] + 1j * data[:, 2], data[:, 4] + 1j * data[:, 5]


def _start_mesh(grid: TimeGrid, window: float, nodes: int, grade: float = 3.0):
    h = grid.h
    s = int(math.ceil(min(window, grid.t_max) / h - 1e-9))
    Ts = s * h
    g = Ts * (np.arange(nodes + 1) / nodes) ** grade
    u = grid.nodes[: s + 1]
    spacing = np.gradient(g)
    near = np.min(np.abs(g[:, None] - u[None, :]), axis=1) < 0.25 * spacing
    tau = np.union1d(g[~near], u)
    return s, tau, np.searchsorted(tau, u)


def _local_solve(m, B1, B2, A, d, dk, alpha_m, rhs):
    M = np.array([[1.0 - B1 * d, A * dk], [A * dk, 1.0 + B2 * d * alpha_m]])
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    if abs(det) < 1e-14 * np.abs(M).max() ** 2:
        raise ConvergenceError("local 2x2 system singular", step=m, matrix=M.tolist())
    return np.linalg.solve(M, rhs)


def solve_charges(
    params: ModelParams,
    kernel: CrossKernelTable | None,
    forcing,
    grid: TimeGrid,
    start_window: float = 0.1,
    start_nodes: int = 96,
) -> ChargeTrajectory:
    """March both charges on `grid`.

    At every node the two unknowns are coupled through the diagonal
    weights and found from a 2x2 complex solve.  `start_window` = 0
    disables the graded start.
    """
    if kernel is None:
        kernel = precompute_cross_kernel(params, grid)
    if kernel.grid != grid:
        raise ValueError("kernel table and grid differ")
    forcing = make_forcing(forcing, params) if not hasattr(forcing, "values") else forcing
    K = kernel.kernel
    A = cross_coefficient(params.convention)
    B1, B2 = ABEL_Q1, ABEL_Q2
    n, h = grid.n_steps, grid.h
    t = grid.nodes
    f1, f2 = forcing.values(t)
    al = np.asarray(alpha_at(params.alpha, t), dtype=float)
    if al.min() < 0:
        # the second center binds while alpha < 0, with energy (4 pi alpha)^2
        phase = h * (4.0 * math.pi * al.min()) ** 2
        if phase > 0.05:
            log.warning("alpha(t) < 0 binds at the second center; phase %.3g per step is coarse, "
                        "refine the grid", phase)
    q1 = np.zeros(n + 1, dtype=complex)
    q2 = np.zeros(n + 1, dtype=complex)

    s = 0
    tau = np.zeros(1)
    Q1 = np.zeros(1, dtype=complex)
    Q2 = np.zeros(1, dtype=complex)
    Y2 = np.zeros(1, dtype=complex)
    if start_window > 0 and start_nodes > 0:
        s, tau, idx = _start_mesh(grid, start_window, start_nodes)
        g1, g2 = forcing.values(tau)
        als = np.asarray(alpha_at(params.alpha, tau), dtype=float)
        Q1 = np.zeros(len(tau), dtype=complex)
        Q2 = np.zeros(len(tau), dtype=complex)
        Q1[0], Q2[0] = g1[0], g2[0]
        for i in range(1, len(tau)):
            wA = ABEL.node_weights(tau[i], tau[: i + 1])
            wK = K.node_weights(tau[i], tau[: i + 1])
            rhs = np.array([
                g1[i] - A * np.sum(wK[:-1] * Q2[:i]) + B1 * np.sum(wA[:-1] * Q1[:i]),
                g2[i] - A * np.sum(wK[:-1] * Q1[:i]) - B2 * np.sum(wA[:-1] * als[:i] * Q2[:i]),
            ])
            Q1[i], Q2[i] = _local_solve(i, B1, B2, A, wA[-1], wK[-1], als[i], rhs)
            if not (np.isfinite(Q1[i]) and np.isfinite(Q2[i])):
                raise ConvergenceError("non-finite charge in start window", node=i, t=float(tau[i]))
        q1[: s + 1] = Q1[idx]
        q2[: s + 1] = Q2[idx]
        Y2 = als * Q2
    else:
        q1[0], q2[0] = f1[0], f2[0]

    mA0, mAs = ABEL.uniform_moments(h, n)
    mK0, mKs = K.uniform_moments(h, n)

    def combined(m0, ms):
        o = np.empty(n + 1, dtype=complex)
        o[0] = m0[0] - ms[0]
        o[1:n] = m0[1:] - ms[1:] + ms[:-1]
        o[n] = ms[n - 1]
        return o

    oA = combined(mA0, mAs)
    oK = combined(mK0, mKs)
    y2 = al * q2
    dA, dK = oA[0], oK[0]
    for m in range(s + 1, n + 1):
        wA = oA[m - s : 0 : -1].copy()
        wA[0] = mAs[m - s - 1]
        wK = oK[m - s : 0 : -1].copy()
        wK[0] = mKs[m - s - 1]
        hA1 = np.sum(wA * q1[s:m])
        hA2 = np.sum(wA * y2[s:m])
        hK1 = np.sum(wK * q1[s:m])
        hK2 = np.sum(wK * q2[s:m])
        if s > 0:
            sA = ABEL.node_weights(t[m], tau)
            sK = K.node_weights(t[m], tau)
            # the last start node is q[s], already counted on the uniform side for its right half
            hA1 += np.sum(sA * Q1)
            hA2 += np.sum(sA * Y2)
            hK1 += np.sum(sK * Q1)
            hK2 += np.sum(sK * Q2)
        rhs = np.array([f1[m] - A * hK2 + B1 * hA1, f2[m] - A * hK1 - B2 * hA2])
        q1[m], q2[m] = _local_solve(m, B1, B2, A, dA, dK, al[m], rhs)
        if not (np.isfinite(q1[m]) and np.isfinite(q2[m])):
            raise ConvergenceError("non-finite charge", step=m, t=float(t[m]))
        y2[m] = al[m] * q2[m]
    log.debug("march done: n=%d start nodes=%d", n, len(tau))
    return ChargeTrajectory(grid, q1, q2, forcing.descriptor, params, tau, Q1, Q2)


def run(params: ModelParams, t_max: float = 60.0, n_steps: int = 6000, state=None, **kw) -> ChargeTrajectory:
    """Bound-state (default) trajectory on a fresh grid."""
    grid = TimeGrid(t_max, n_steps)
    st = params.bound_state if state is None else state
    return solve_charges(params, precompute_cross_kernel(params, grid), make_forcing(st, params), grid, **kw)
