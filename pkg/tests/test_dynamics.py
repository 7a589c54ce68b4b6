import csv
import dataclasses
import math

import numpy as np
import pytest

from ionize import dynamics
from ionize.model import make_params
from ionize.propagator import autocorrelation
from ionize.volterra import run


@pytest.fixture(scope="module")
def survival(short_traj):
    return dynamics.survival_amplitude(short_traj)


def test_survival_starts_at_one(survival):
    assert abs(survival.theta[0] - 1.0) < 1e-15
    assert np.array_equal(survival.t, np.linspace(0, 10, 1001))


def test_survival_bounded(survival):
    assert np.max(np.abs(survival.theta)) <= 1 + 1e-6


def test_survival_matches_momentum_route(short_traj, survival):
    for t in (1.0, 4.0):
        k = int(round(t / short_traj.grid.h))
        # the momentum cut at 40 leaves about 2e-5
        assert abs(survival.theta[k] - dynamics.survival_momentum(short_traj, t, kmax=40, nk=40001)) < 5e-5


def test_free_part_is_autocorrelation(short_traj):
    # with both charges switched off only the free evolution of psi0 remains
    z = dataclasses.replace(
        short_traj,
        q1=np.zeros_like(short_traj.q1), q2=np.zeros_like(short_traj.q2),
        start_q1=np.zeros_like(short_traj.start_q1), start_q2=np.zeros_like(short_traj.start_q2),
    )
    s = dynamics.survival_amplitude(z)
    ref = autocorrelation(s.t, short_traj.params.bound_state) / short_traj.params.bound_state.norm2
    assert np.max(np.abs(s.theta - ref)) < 1e-6


def test_survival_requires_bound_state():
    traj = run(make_params(), 1.0, 50, state="zero")
    with pytest.raises(ValueError):
        dynamics.survival_amplitude(traj)


def test_survival_second_order():
    p = make_params()
    ref = dynamics.survival_amplitude(run(p, 2.0, 1600)).theta[-1]
    e = [abs(dynamics.survival_amplitude(run(p, 2.0, n)).theta[-1] - ref) for n in (100, 200)]
    assert math.log2(e[0] / e[1]) > 1.7


@pytest.mark.parametrize("t", [1.0, 2.0])
def test_norm_conserved(short_traj, t):
    assert abs(dynamics.norm_squared(short_traj, t) - 1.0) < 1e-4


def test_inside_probability_at_zero(short_traj):
    for R in (0.5, 2.0, 5.0):
        exact = 1.0 - math.exp(-2.0 * R)
        assert abs(dynamics.inside_probability(short_traj, 0.0, R) - exact) < 1e-14


def test_inside_probability_against_monte_carlo(short_traj):
    quad = dynamics.inside_probability(short_traj, 5.0, 2.0)
    mc, err = dynamics.inside_probability_mc(short_traj, 5.0, 2.0, samples=200_000, seed=3)
    assert abs(quad - mc) < 3.0 * err
    assert err < 0.01


def test_monte_carlo_seeded(short_traj):
    a = dynamics.inside_probability_mc(short_traj, 2.0, 2.0, samples=20_000, seed=7)
    b = dynamics.inside_probability_mc(short_traj, 2.0, 2.0, samples=20_000, seed=7)
    assert a == b


def test_large_ball_holds_everything(short_traj):
    # at t = 2 almost nothing has left a ball of radius 40
    inside = dynamics.inside_probability(short_traj, 2.0, 40.0)
    assert abs(inside - dynamics.norm_squared(short_traj, 2.0)) < 0.02


def test_wavefunction_initial(short_traj):
    st = short_traj.params.bound_state
    assert dynamics.wavefunction(0.0, [0.3, 0.4, 0.0], short_traj) == pytest.approx(st(0.5))
    with pytest.raises(ValueError):
        dynamics.wavefunction(1.0, [0, 0, 0], short_traj)


def test_wavefunction_sums_profiles(short_traj):
    x = np.array([0.2, -0.1, 0.7])
    A, _ = dynamics.radial_profiles(short_traj, 3.0, [np.linalg.norm(x)])
    _, B = dynamics.radial_profiles(short_traj, 3.0, [np.linalg.norm(x - [0, 0, 1.0])])
    assert dynamics.wavefunction(3.0, x, short_traj) == pytest.approx(complex(A[0] + B[0]))


def test_profiles_need_nodes(short_traj):
    with pytest.raises(ValueError):
        dynamics.radial_profiles(short_traj, 3.00001, [1.0])


def test_running_average_arithmetic(short_traj, tmp_path):
    times = np.array([0.0, 1.0, 2.0, 3.0])
    series = dynamics.ionization_average(short_traj, 2.0, times, threads=2)
    p = series.inside_prob
    assert series.running_average[0] == p[0]
    assert series.running_average[2] == pytest.approx((0.5 * p[0] + p[1] + 0.5 * p[2]) / 2.0)
    assert not series.flags
    f = tmp_path / "ion.csv"
    series.to_csv(f)
    rows = list(csv.reader(open(f)))
    assert rows[0] == ["t", "R", "inside_prob", "running_avg"] and len(rows) == 5


def test_ionization_rejects_unsorted(short_traj):
    with pytest.raises(ValueError):
        dynamics.ionization_average(short_traj, 2.0, [0.0, 2.0, 1.0])


def test_survival_csv(survival, tmp_path):
    f = tmp_path / "s.csv"
    survival.to_csv(f)
    data = np.loadtxt(f, delimiter=",", skiprows=1)
    assert np.array_equal(data[:, 1] + 1j * data[:, 2], survival.theta)
