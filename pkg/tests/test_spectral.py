import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ionize import spectral
from ionize.model import ConvergenceError, ValidationError, make_params
from ionize.spectral import SingularCoefficient

PRINTED = (2 * math.pi) ** -1.5


def static_branch(r, a, k=1.0):
    """sqrt(p) coefficient of the second charge for constant alpha, a = 4 pi alpha0, over 4 pi c e^{i pi/4}.

    Worked out symbolically from the closed-form 2x2 resolvent.
    """
    er = math.exp(r)
    num = k**2 * (2 * a * r - a + 1) * (k * er - er + 1) + (a * r**2 + k**2) * (a * r * (1 - k) * er - k * er + er - 1)
    return r * num * math.exp(-r) / (a * (a * r**2 + k**2) ** 2)


@settings(max_examples=200, deadline=None)
@given(st.integers(-20, 20), st.floats(0.01, 10), st.floats(-30, 30), st.floats(0.1, 5), st.floats(0.2, 6))
def test_vectorized_coefficient_matches_direct(n, re, im, r, omega):
    p = make_params(r=r, omega=omega, alpha=[[0, 1, 0]])
    z = complex(re, im)
    if abs(omega * n - 1j * z - 1) < 1e-6:
        return
    a = complex(spectral.c_n(n, z, p))
    b = spectral.c_n_direct(n, z, p)
    assert abs(a - b) <= 1e-12 * max(1.0, abs(b))


def test_coefficient_singular_point():
    with pytest.raises(SingularCoefficient):
        spectral.c_n(0, 1j, make_params())


@settings(max_examples=300, deadline=None)
@given(st.integers(-30, 30), st.floats(1e-6, 20), st.floats(-60, 60), st.floats(0.05, 10), st.floats(0.1, 10))
def test_sign_lemma_printed_coupling(n, re, im, r, omega):
    # the imaginary part stays negative on the open right half plane
    assert spectral.sign_lemma_value(n, complex(re, im), r, omega) < 0


@settings(max_examples=100, deadline=None)
@given(st.integers(-30, -1), st.floats(-60, 60), st.floats(0.05, 10), st.floats(0.1, 10))
def test_negative_index_root_imaginary_on_axis(n, im, r, omega):
    # on the imaginary axis omega n - i p = omega n + Im p; a negative value has a purely imaginary root
    s = spectral.lattice_sqrt(n, 1j * im, omega)
    if omega * n + im < 0:
        assert abs(complex(s).real) < 1e-12


def test_default_pole_unique():
    pole = spectral.find_pole(make_params())
    assert len(pole.lambda_roots) == 1
    lam = pole.lambda_roots[0]
    assert lam > 1.0
    assert pole.residuals[0] < 1e-12
    assert 0 <= pole.p0.imag < 3.0


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 2.0), st.floats(0.1, 5.0), st.floats(0.2, 6.0))
def test_pole_unique_for_nonnegative_alpha0(a0, r, omega):
    pole = spectral.find_pole(make_params(r=r, omega=omega, alpha=[[0, a0, 0]]))
    assert len(pole.lambda_roots) == 1
    f = spectral.pole_function(pole.lambda_roots[0], make_params(r=r, omega=omega, alpha=[[0, a0, 0]]))
    assert abs(f) < 1e-10


def test_static_pole_matches_bound_energy():
    # the root lambda gives the static bound-state energy -lambda^2; at r -> large it tends to 1
    pole = spectral.find_pole(make_params(r=30.0, alpha=[[0, 1.0, 0]]))
    assert pole.lambda_roots[0] == pytest.approx(1.0, abs=1e-12)


def test_solve_guards():
    p = make_params()
    with pytest.raises(SingularCoefficient):
        spectral.build_and_solve(1j, 16, p)
    with pytest.raises(ValidationError):
        spectral.build_and_solve(-0.1 + 0j, 16, p)
    with pytest.raises(ValidationError):
        spectral.build_and_solve(1 + 0j, 4, p)
    p0 = spectral.find_pole(p).p0
    with pytest.raises(ConvergenceError):
        spectral.build_and_solve(p0 + 3j, 16, p)


def test_truncation_converges():
    p = make_params()
    a = spectral.build_and_solve(0.8 + 0.3j, 32, p).component(0)
    b = spectral.build_and_solve(0.8 + 0.3j, 64, p).component(0)
    assert abs(a[0] - b[0]) < 1e-10 and abs(a[1] - b[1]) < 1e-10


def test_solution_residual_small():
    sol = spectral.build_and_solve(1.2 + 0.5j, 32, make_params())
    assert sol.residual < 1e-12
    assert sol.to_json()["N"] == 32


def test_fit_branch_synthetic():
    pts = spectral.branch_sample_points(1e-3)
    sp = np.sqrt(pts.astype(complex))
    vals = (2 - 1j) + 0.3 * pts + (0.7 + 0.2j) * sp - 0.1 * pts * sp
    fit = spectral.fit_branch(pts, vals, terms=2)
    assert abs(fit.c - (2 - 1j)) < 1e-12 and abs(fit.d - (0.7 + 0.2j)) < 1e-10
    assert fit.accepted


@pytest.mark.parametrize("r,a0", [(0.5, 1.0), (2.0, 0.3)])
def test_static_branch_coefficient(r, a0):
    p = make_params(r=r, alpha=[[0, a0, 0]])
    fit = spectral.branch_fit_at_origin(p, N=16, terms=4)["q2"]
    expected = cmath.exp(0.25j * math.pi) * p.bound_state.charge * static_branch(r, 4 * math.pi * a0)
    assert abs(fit.d - expected) < 1e-6 * abs(expected)


def test_static_branch_vanishes_at_unit_separation():
    # the symbolic coefficient carries a factor (r - 1)^2 at kappa = 1
    assert static_branch(1.0, 4 * math.pi) == 0.0
    fit = spectral.branch_fit_at_origin(make_params(alpha=[[0, 1.0, 0]]), N=16, terms=4)
    assert abs(fit["q2"].d) < 1e-8 and abs(fit["q1"].d) < 1e-8


def test_limit_at_i_is_finite():
    lim = spectral.limit_at_i(make_params(), N=32)
    assert np.isfinite(lim.value)
    assert len(lim.samples) == 4


@pytest.mark.parametrize("literal", [False, True])
def test_removability_condition_at_i(literal):
    # regularity of q1 at p = i ties q2(i) to the bound-state amplitude
    out = spectral.residue_identity(make_params(paper_literal_normalization=literal), N=64)
    assert abs(out["lhs"] - out["rhs"]) < 1e-5 * abs(out["rhs"])
    expected = math.sqrt(2 * math.pi) / (math.sqrt(2) if literal else 1.0)
    assert out["rhs"] == pytest.approx(1j * expected)
