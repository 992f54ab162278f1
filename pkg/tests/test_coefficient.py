import math
import pickle

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from inls.coefficient import (
    PiecewisePlateau,
    ProblemParams,
    PurePower,
    Rational,
    Rescaled,
    Tabulated,
    Zero,
    check_conditions,
    make_coefficient,
)
from inls.errors import ParameterDomainError

from conftest import B_SET

b_values = st.floats(min_value=0.05, max_value=1.3)


@pytest.mark.parametrize("b", [0.0, -0.1, 4 / 3, 2.0, math.nan])
def test_params_reject_out_of_range_b(b):
    with pytest.raises(ParameterDomainError):
        ProblemParams(b)


def test_params_exponents():
    prm = ProblemParams(1.0)
    assert prm.p == 3.0 and prm.p0 == 1.0


@pytest.mark.parametrize("b", B_SET)
def test_pure_power_report(b):
    params = ProblemParams(b)
    rep = check_conditions(PurePower(b), params)
    assert rep.scaling_ok and rep.variational_ok and rep.rigidity_ok and rep.virial_ok
    assert rep.gi == rep.gs == rep.gs_eff == 1.0
    assert rep.g0 == pytest.approx(params.p0, abs=1e-14)
    assert rep.kg == pytest.approx(0.0, abs=1e-14)
    assert rep.margins["rigidity"] == 0.0
    assert rep.rho_max == pytest.approx(b / (params.p + 1), abs=1e-12)
    # the virial condition holds up to rho_max and fails beyond it
    at = check_conditions(PurePower(b), params, rho=rep.rho_max)
    beyond = check_conditions(PurePower(b), params, rho=rep.rho_max + 1e-3)
    assert at.virial_ok and not beyond.virial_ok


def test_rational_inconsistent_example_fails_variational():
    rep = check_conditions(Rational(0.5, 1.0, 0.0, 1.0), ProblemParams(0.5))
    assert rep.gi == 0.0 and rep.gs == 1.0
    assert rep.g0 == pytest.approx(2.5)
    assert rep.variational_ok is False
    assert rep.kg is None and rep.virial_ok is None and rep.rho_max is None
    assert rep.rigidity_ok  # h = r/(r+1) is increasing


def test_rational_formulas():
    c = Rational(1.0, 2.0, 0.5, 1.5)
    r = np.array([0.1, 1.0, 7.0])
    assert np.allclose(c(r), 2.0 * (r + 0.5) / (r + 1.5) / r)
    # derivative by complex step on the profile
    eps = 1e-20
    h = lambda x: 2.0 * (x + 0.5) / (x + 1.5)  # noqa: E731
    assert np.allclose(c.profile_deriv(r), np.imag(h(r + 1j * eps)) / eps, rtol=1e-14)
    assert c.gi == pytest.approx(2.0 / 3.0) and c.gs == 2.0
    with pytest.raises(ParameterDomainError):
        Rational(1.0, 1.0, 2.0, 1.0)  # d > c


def test_plateau_sits_on_the_variational_boundary():
    for a in (0.5, 1.0, 1.5):
        rep = check_conditions(PiecewisePlateau(1.0, a), ProblemParams(1.0))
        assert rep.g0 == pytest.approx(1.0, rel=1e-12)
        assert rep.variational_ok
    plateau = PiecewisePlateau(1.0, 1.0)
    assert plateau.gi == plateau.gs == 1.0
    assert check_conditions(PiecewisePlateau(1.0, 0.5), ProblemParams(1.0)).rigidity_ok


def test_plateau_is_c4_at_the_joins():
    c = PiecewisePlateau(0.6, 0.4)
    for x in (1.0, 2.0):
        lo, hi = c.profile(x - 1e-7), c.profile(x + 1e-7)
        assert abs(hi - lo) < 1e-12
        assert abs(c.profile_deriv(x - 1e-7) - c.profile_deriv(x + 1e-7)) < 1e-10


def test_tabulated_tracks_sampled_pure_power():
    radii = np.logspace(-3, 3, 400)
    tab = Tabulated(1.0, radii, 1.0 / radii)
    r = np.logspace(-2.5, 2.5, 50)
    assert np.allclose(tab(r), 1.0 / r, rtol=1e-10)
    rep = check_conditions(tab, ProblemParams(1.0))
    assert rep.tol == 1e-8
    assert rep.variational_ok and rep.rigidity_ok
    assert rep.grid["r_min"] == pytest.approx(1e-3) and rep.grid["r_max"] == pytest.approx(1e3)


def test_tabulated_refuses_to_extrapolate():
    tab = Tabulated(1.0, [1.0, 2.0, 3.0], [1.0, 0.5, 0.3])
    with pytest.raises(ParameterDomainError):
        tab(10.0)
    with pytest.raises(ParameterDomainError):
        Tabulated(1.0, [1.0, 1.0], [1.0, 1.0])


def test_zero_coefficient():
    z = Zero(1.0)
    assert np.all(z(np.array([0.5, 2.0])) == 0.0)


def test_factory_and_equality():
    prm = ProblemParams(0.5)
    c = make_coefficient("Rational", {"a": 1.0, "d": 0.0, "c": 1.0}, prm)
    assert c == Rational(0.5, 1.0, 0.0, 1.0)
    assert hash(c) == hash(Rational(0.5, 1.0, 0.0, 1.0))
    assert pickle.loads(pickle.dumps(c)) == c
    with pytest.raises(ParameterDomainError):
        make_coefficient("Nope", {}, prm)
    with pytest.raises(ParameterDomainError):
        make_coefficient("Rational", {"a": 1.0}, prm)


def test_sample_count_floor():
    with pytest.raises(ParameterDomainError):
        check_conditions(PurePower(1.0), ProblemParams(1.0), n_samples=100)


@given(b=b_values, lam=st.floats(min_value=0.01, max_value=100.0))
def test_rescaling_keeps_profile_bounds(b, lam):
    base = Rational(b, 1.3, 0.2, 0.7)
    scaled = base.rescaled(lam)
    assert isinstance(scaled, Rescaled)
    assert scaled.gi == pytest.approx(base.gi) and scaled.gs == pytest.approx(base.gs)
    r = np.array([0.3, 1.0, 4.0])
    assert np.allclose(scaled(r), lam**b * base(lam * r), rtol=1e-12)


@given(b=b_values, lam=st.floats(min_value=0.01, max_value=100.0))
def test_pure_power_is_scale_invariant(b, lam):
    c = PurePower(b)
    assert c.rescaled(lam) is c


@given(b=b_values, a=st.floats(0.1, 5.0), d=st.floats(0.0, 1.0), c=st.floats(1.0, 5.0))
def test_report_invariants(b, a, d, c):
    coef = Rational(b, a, d, c)
    rep = check_conditions(coef, ProblemParams(b), n_samples=10_000)
    assert rep.gi <= rep.gs
    assert rep.gs_eff == pytest.approx(rep.gs ** (1 / (2 - b)))
    assert rep.variational_ok == (rep.g0 <= 2 - b + rep.tol)
    if rep.kg is not None:
        assert rep.kg < 1.0
        if 0 <= rep.g0 <= 2 - b:
            assert rep.kg <= (2 - b) / (3 - b) + 1e-12
    assert rep.rigidity_ok  # d <= c makes h increasing


@given(b=b_values, r=st.floats(1e-4, 1e4))
def test_flux_matches_derivative(b, r):
    coef = Rational(b, 1.0, 0.3, 2.0)
    assert coef.radial_flux(r) == pytest.approx(r * coef.deriv(r), rel=1e-12)
