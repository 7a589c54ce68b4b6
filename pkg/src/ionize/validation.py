"""End-to-end acceptance checks.

Each `criterion_k` returns a `Criterion` with the measured quantities and a
verdict; `run_all` runs them in order.  The heavy trajectories are shared
through a small cache keyed by the parameters.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ionize import dynamics, spectral
from ionize.alpha import AlphaProfile, genericity_residual
from ionize.asymptotics import amplitude_bridge, fit_power_law
from ionize.model import ModelParams, make_params
from ionize.volterra import run

log = logging.getLogger(__name__)

DUALITY_POINTS = (1.5 + 0.4j, 2.0 + 0.0j, 1.0 + 0.9j)


@dataclass
class Criterion:
    number: int
    title: str
    passed: bool
    measured: dict = field(default_factory=dict)
    detail: str = ""
    seconds: float = 0.0

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"criterion {self.number:2d} [{tag}] {self.title}: {self.detail}"

    def to_json(self) -> dict:
        return {"number": self.number, "title": self.title, "pass": bool(self.passed),
                "detail": self.detail, "measured": jsonable(self.measured),
                "seconds": round(self.seconds, 2)}


def jsonable(x):
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, np.ndarray):
        return jsonable(x.tolist())
    if isinstance(x, np.generic):
        return jsonable(x.item())
    return x


class Context:
    """Base parameters, run settings and a trajectory cache."""

    def __init__(self, params: ModelParams | None = None, t_max: float = 60.0, n_steps: int = 6000,
                 N: int = 64, seed: int = 0, threads: int = 1):
        self.params = params or make_params()
        self.t_max = t_max
        self.n_steps = n_steps
        self.N = N
        self.seed = seed
        self.threads = threads
        self._cache: dict = {}
        self.march_seconds: dict = {}

    def trajectory(self, params: ModelParams | None = None, t_max=None, n_steps=None):
        params = params or self.params
        t_max = self.t_max if t_max is None else t_max
        n_steps = self.n_steps if n_steps is None else n_steps
        key = (params, t_max, n_steps)
        if key not in self._cache:
            t0 = time.perf_counter()
            self._cache[key] = run(params, t_max, n_steps)
            self.march_seconds[key] = time.perf_counter() - t0
        return self._cache[key]


def criterion_1(ctx: Context) -> Criterion:
    t0 = time.perf_counter()
    traj = ctx.trajectory()
    march = time.perf_counter() - t0
    window = (15.0, min(60.0, ctx.t_max))
    fq = fit_power_law(traj.t, np.abs(traj.q2), window, "envelope")
    theta = dynamics.survival_amplitude(traj)
    ft = fit_power_law(theta.t, np.abs(theta.theta), window, "raw-regression")
    ok_q = -1.8 <= fq.exponent <= -1.2
    ok_t = -1.8 <= ft.exponent <= -1.2
    ok_time = march <= 300.0
    return Criterion(1, "decay law", ok_q and ok_t and ok_time,
                     {"q2_exponent": fq.exponent, "theta_exponent": ft.exponent, "march_seconds": march,
                      "q2_fit": fq.to_json(), "theta_fit": ft.to_json()},
                     f"q2 exponent {fq.exponent:.4f}, |theta| exponent {ft.exponent:.4f} "
                     f"(target [-1.8, -1.2]); march {march:.1f} s")


def criterion_2(ctx: Context) -> Criterion:
    traj = ctx.trajectory()
    errs = []
    for p in DUALITY_POINTS:
        sol = spectral.build_and_solve(p, ctx.N, ctx.params)
        s1, s2 = sol.component(0)
        v1, v2, tail = traj.laplace(p)
        e1 = (abs(s1 - v1) + tail) / abs(s1)
        e2 = (abs(s2 - v2) + tail) / abs(s2)
        errs.append((p, e1, e2, tail))
    worst = max(max(e1, e2) for _, e1, e2, _ in errs)
    return Criterion(2, "Laplace duality", worst <= 1e-3,
                     {"errors": [[p, e1, e2, t] for p, e1, e2, t in errs], "convention": ctx.params.convention},
                     f"worst relative error {worst:.2e} (target 1e-3), convention {ctx.params.convention}")


def criterion_3(ctx: Context) -> Criterion:
    rng = np.random.default_rng(ctx.seed)
    kappa2 = (2.0 * math.pi) ** -3
    v31 = 0
    count31 = 0
    for r in (0.5, 1.0, 2.0):
        for omega in (0.5, 1.0, 3.0):
            n = rng.integers(-50, 51, size=10_000)
            p = rng.uniform(0.0, 10.0, 10_000) + 1j * rng.uniform(0.0, omega, 10_000)
            p.real[p.real == 0] = 1e-12
            val = spectral.sign_lemma_value(n, p, r, omega)
            v31 += int(np.sum(~(val < 0)))
            count31 += n.size
    v41 = 0
    for _ in range(1000):
        r = rng.choice([0.5, 1.0, 2.0])
        omega = rng.choice([0.5, 1.0, 3.0])
        a0 = rng.uniform(0.0, 2.0)
        n = int(rng.integers(-50, 0))
        p = 1j * rng.uniform(0.0, omega)
        s = spectral.lattice_sqrt(n, p, omega)
        c = s + kappa2 * np.exp(-2.0 * r * s) / (r * r * (1.0 - s))
        if not np.imag(4.0 * math.pi * a0 + c) > 0:
            v41 += 1
    return Criterion(3, "sign lemmas", v31 == 0 and v41 == 0,
                     {"violations_3_1": v31, "samples_3_1": count31, "violations_4_1": v41, "samples_4_1": 1000},
                     f"{v31} violations in {count31} samples; {v41} in 1000 on the axis")


def criterion_4(ctx: Context) -> Criterion:
    rng = np.random.default_rng(ctx.seed + 1)
    bad = []
    for _ in range(50):
        r = rng.uniform(0.3, 3.0)
        omega = rng.uniform(0.3, 5.0)
        a0 = rng.uniform(0.0, 2.0)
        params = ctx.params.with_(r=r, omega=omega, alpha=AlphaProfile.from_dict({0: a0}, omega))
        try:
            pole = spectral.find_pole(params)
            if len(pole.lambda_roots) != 1 or max(pole.residuals) >= 1e-12:
                bad.append((r, omega, a0, len(pole.lambda_roots)))
        except Exception as exc:  # noqa: BLE001 - any failure counts against the criterion
            bad.append((r, omega, a0, str(exc)))
    counts = {0: 0, 1: 0, 2: 0}
    for r in (0.5, 1.0, 2.0):
        for a0 in np.linspace(-0.5, -0.005, 40):
            params = ctx.params.with_(r=r, alpha=AlphaProfile.from_dict({0: float(a0)}, ctx.params.omega))
            try:
                counts[len(spectral.find_pole(params).lambda_roots)] += 1
            except Exception:  # noqa: BLE001
                counts[0] += 1
    ok = not bad and counts[0] == 0 and counts[2] > 0
    return Criterion(4, "pole uniqueness", ok, {"bad_positive": bad, "negative_counts": counts},
                     f"{50 - len(bad)}/50 unique roots for alpha0 >= 0; alpha0 < 0 root counts {counts}")


def criterion_5(ctx: Context) -> Criterion:
    target = 1j * math.sqrt(2.0 * math.pi)
    out = {}
    for conv in ("physical", "printed"):
        params = ctx.params.with_(paper_literal_normalization=True, convention=conv)
        lim = spectral.limit_at_i(params, N=64)
        out[conv] = {"value": lim.value, "error": abs(lim.value - target), "converged": lim.converged}
    err = out[ctx.params.convention]["error"]
    val = out[ctx.params.convention]["value"]
    return Criterion(5, "removable singularity", err < 1e-3, out,
                     f"limit {val.real:.5f}{val.imag:+.5f}i vs 2.50663i, error {err:.3g} "
                     f"({ctx.params.convention}); printed convention error {out['printed']['error']:.3g}")


def criterion_6(ctx: Context) -> Criterion:
    rows = {}
    ok = True
    for label, omega in (("non-resonant", ctx.params.omega), ("resonant", 0.5)):
        params = ctx.params if label == "non-resonant" else ctx.params.with_(
            omega=omega, alpha=AlphaProfile(ctx.params.alpha.coefficients, omega), resonant_N=2)
        fit = spectral.branch_fit_at_origin(params, N=ctx.N, eps=1e-3)["q2"]
        t_max = max(ctx.t_max, 40.0 * 2.0 * math.pi / omega)
        h = ctx.t_max / ctx.n_steps
        traj = ctx.trajectory(params, t_max, int(round(t_max / h)))
        try:
            df = fit_power_law(traj.t, np.abs(traj.q2), (t_max / 4.0, t_max), "envelope")
            bridge = amplitude_bridge(df, fit.d)
            rows[label] = {"d": fit.d, "fit_residual": fit.residual,
                           "threshold": 1e-4 * abs(fit.d) * math.sqrt(1e-3), "fit_accepted": fit.accepted,
                           "exponent": df.exponent, "ratio": bridge.ratio, "bridge_pass": bridge.passed}
            ok = ok and fit.accepted and bridge.passed
        except ValueError as exc:
            rows[label] = {"d": fit.d, "fit_residual": fit.residual, "fit_accepted": fit.accepted,
                           "error": str(exc)}
            ok = False
    detail = "; ".join(
        f"{k}: |d|={abs(v['d']):.3g}, fit {'ok' if v['fit_accepted'] else 'rejected'}, "
        + (f"ratio {v['ratio']:.3g}" if "ratio" in v else v.get("error", ""))
        for k, v in rows.items())
    return Criterion(6, "branch structure", ok, rows, detail)


def criterion_7(ctx: Context) -> Criterion:
    const = genericity_residual(AlphaProfile.from_dict({0: 1.0}, 1.0), M=25).residual
    quarter = genericity_residual(AlphaProfile.from_dict({0: 0.0, 1: 0.25}, 1.0), M=25).residual
    blaschke = genericity_residual(AlphaProfile.from_dict({1: -0.5, 2: 1.0}, 1.0), M=200).residual
    ok = const == 1.0 and quarter < 1e-10 and abs(blaschke - 0.8660) <= 0.005
    return Criterion(7, "genericity residuals", ok,
                     {"constant": const, "quarter": quarter, "blaschke": blaschke},
                     f"constant {const}, alpha1=1/4 {quarter:.2e}, Blaschke {blaschke:.6f}")


def criterion_8(ctx: Context) -> Criterion:
    traj = ctx.trajectory()
    times = np.arange(0.0, min(60.0, ctx.t_max) + 1e-9, 1.0)
    series = dynamics.ionization_average(traj, 2.0, times, threads=ctx.threads)
    avg = series.running_average
    k5 = int(np.searchsorted(times, 5.0))
    steps = np.diff(avg[k5:])
    mono = bool(np.all(steps <= 1e-3))
    drop = float(avg[-1] / avg[k5])
    return Criterion(8, "scattering diagnostic", mono and drop < 0.5,
                     {"max_step": float(steps.max()), "final_over_t5": drop, "final_slope": series.final_slope(),
                      "flags": series.flags},
                     f"max step {steps.max():.2e} (tol 1e-3), final/at-5 = {drop:.4f} (target < 0.5)")


def criterion_9(ctx: Context) -> Criterion:
    traj = ctx.trajectory()
    norms = {t: dynamics.norm_squared(traj, t) for t in (1.0, 2.0, 5.0)}
    p0 = dynamics.inside_probability(traj, 0.0, 2.0)
    exact = 1.0 - math.exp(-4.0)
    ok = all(0.98 <= v <= 1.02 for v in norms.values()) and abs(p0 - exact) <= 1e-6
    return Criterion(9, "unitarity budget", ok, {"norms": norms, "inside_t0": p0},
                     "norms " + ", ".join(f"t={t:g}: {v:.6f}" for t, v in norms.items())
                     + f"; inside(0) error {abs(p0 - exact):.1e}")


def criterion_10(ctx: Context) -> Criterion:
    n = ctx.n_steps
    runs = [ctx.trajectory(n_steps=m) for m in (n // 2, n, 2 * n)]
    diffs = []
    for a, b in zip(runs, runs[1:]):
        step = (len(b.t) - 1) // (len(a.t) - 1)
        diffs.append(max(np.max(np.abs(a.q1 - b.q1[::step])), np.max(np.abs(a.q2 - b.q2[::step]))))
    order = math.log2(diffs[0] / diffs[1]) if diffs[1] > 0 else math.inf
    drift = 0.0
    for p in DUALITY_POINTS:
        c32 = spectral.build_and_solve(p, 32, ctx.params).component(0)
        c64 = spectral.build_and_solve(p, 64, ctx.params).component(0)
        drift = max(drift, abs(c32[0] - c64[0]), abs(c32[1] - c64[1]))
    return Criterion(10, "convergence gates", order >= 1.0 and drift < 1e-8,
                     {"differences": diffs, "order": order, "spectral_drift": drift},
                     f"grid-halving order {order:.2f} (target >= 1), N=32->64 drift {drift:.1e}")


CRITERIA: dict[int, Callable[[Context], Criterion]] = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
    6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10,
}


def evaluate(number: int, ctx: Context) -> Criterion:
    t0 = time.perf_counter()
    try:
        c = CRITERIA[number](ctx)
    except Exception as exc:  # noqa: BLE001 - a crash is a failed criterion, reported as such
        log.exception("criterion %d raised", number)
        c = Criterion(number, CRITERIA[number].__name__, False, {"exception": repr(exc)}, f"raised {exc!r}")
    c.seconds = time.perf_counter() - t0
    return c


def run_all(ctx: Context, numbers=None, report: Callable[[Criterion], None] | None = None) -> list[Criterion]:
    out = []
    for k in numbers or sorted(CRITERIA):
        c = evaluate(k, ctx)
        if report:
            report(c)
        out.append(c)
    return out
