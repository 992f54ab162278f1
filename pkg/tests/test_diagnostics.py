import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from inls.coefficient import ProblemParams, PurePower, Zero
from inls.diagnostics import (
    CSV_COLUMNS,
    UNBOUNDED,
    VirialWeight,
    energy,
    grad_norm_sq,
    lvirial_rhs,
    lvirial_terms,
    mass,
    potential,
    read_csv,
    record,
    strauss_ratio,
    weighted_mass,
    write_csv,
    z_prime,
)
from inls.errors import ParameterDomainError, UnsupportedWeight
from inls.evolution import SplitStepper
from inls.state import RadialGrid, RadialState, prepare_initial


def gaussian(params, A=0.5, sigma=1.0, r_max=40.0, n=4096):
    return prepare_initial("Gaussian", {"A": A, "sigma": sigma}, RadialGrid(r_max, n), params)


def test_potential_oracle(params1, pure1):
    # int |x|^-1 A^4 e^{-4 r^2} dx = pi A^4 / 2
    st = gaussian(params1)
    assert potential(st, pure1, 3.0) == pytest.approx(math.pi * 0.5**4 / 2, rel=1e-4)


def test_energy_is_kinetic_minus_potential(params1, pure1):
    st = gaussian(params1, A=0.9)
    assert energy(st, pure1, 3.0) == pytest.approx(0.5 * grad_norm_sq(st) - potential(st, pure1, 3.0) / 4)


def test_zero_state_diagnostics_vanish(params1, pure1):
    st = gaussian(params1, A=0.0, n=255)
    rec = record(st, pure1)
    assert all(v == 0.0 for k, v in zip(CSV_COLUMNS, rec.as_row()) if k != "t")


def test_record_rejects_negative_window(params1, pure1):
    with pytest.raises(ParameterDomainError):
        record(gaussian(params1, n=63), pure1, window=-1.0)


@pytest.mark.parametrize("b", [0.3, 1.0, 1.25])
def test_unbounded_identity_is_exact_for_pure_power(b):
    # with a = r^2 the four terms collapse to 8 (|grad u|^2 - int g |u|^{p+1})
    params = ProblemParams(b)
    coef = PurePower(b)
    st = gaussian(params, A=0.7, n=2047)
    rhs = lvirial_rhs(st, coef, UNBOUNDED, params.p)
    assert rhs == pytest.approx(8 * (grad_norm_sq(st) - potential(st, coef, params.p)), rel=1e-12)
    hess, nonlin, flux, bilap = lvirial_terms(st, coef, UNBOUNDED, params.p)
    assert flux == pytest.approx(-8 * b / (params.p + 1) * potential(st, coef, params.p), rel=1e-12)
    assert bilap == 0.0


@pytest.mark.parametrize("b", [0.5, 1.0])
def test_smooth_beta_flux_term_for_pure_power(b):
    # a' = r where the data live, so the flux term is -4b/(p+1) times the potential
    params = ProblemParams(b)
    coef = PurePower(b)
    st = gaussian(params, A=0.7, n=2047)
    weight = VirialWeight("SmoothBeta", scale=25.0)
    flux = lvirial_terms(st, coef, weight, params.p)[2]
    assert flux == pytest.approx(-4 * b / (params.p + 1) * potential(st, coef, params.p), rel=1e-10)


@pytest.mark.parametrize("kind", ["QuadraticCutoff", "SmoothBeta"])
def test_weight_is_c4_and_flat_outside(kind):
    w = VirialWeight(kind, scale=2.0)
    for x in (2.0, 20.0):
        for k in range(5):
            lo, hi = w.derivative(x * (1 - 1e-12), k), w.derivative(x * (1 + 1e-12), k)
            assert abs(lo - hi) < 1e-7 * max(1.0, abs(lo))
    r = np.linspace(20.5, 40, 10)
    for k in range(1, 5):
        assert np.all(w.derivative(r, k) == 0)


@pytest.mark.parametrize("kind", ["QuadraticCutoff", "SmoothBeta"])
def test_weight_derivatives_are_consistent(kind):
    w = VirialWeight(kind, scale=1.5)
    r = np.linspace(0.3, 16.0, 400)
    h = 1e-5
    for k in range(4):
        fd = (w.derivative(r + h, k) - w.derivative(r - h, k)) / (2 * h)
        assert np.allclose(fd, w.derivative(r, k + 1), rtol=1e-5, atol=1e-5)


def test_smooth_beta_profile():
    w = VirialWeight("SmoothBeta")
    s = np.linspace(0, 1, 11)
    assert np.allclose(w.beta(s), s)
    assert np.all(w.beta(np.array([10.0, 12.0])) == 0)
    grid = np.linspace(0, 12, 20001)
    slope = w.derivative(grid, 2)  # beta' for scale 1
    assert slope.max() <= 1 + 1e-12
    # beta cannot stay below 1 once it equals s on [0, 1]; record its size
    assert 1.0 < w.beta(grid).max() < 3.5
    with pytest.raises(UnsupportedWeight):
        UNBOUNDED.beta(s)


def test_weight_rejects_unknown_kind_and_order():
    with pytest.raises(UnsupportedWeight):
        VirialWeight("Morawetz")
    with pytest.raises(UnsupportedWeight):
        UNBOUNDED.derivative(1.0, 5)


def test_laplacians_of_unbounded():
    r = np.array([0.5, 2.0])
    assert np.allclose(UNBOUNDED.laplacian(r), 6.0)
    assert np.allclose(UNBOUNDED.bilaplacian(r), 0.0)


@pytest.mark.parametrize("weight", [UNBOUNDED, VirialWeight("SmoothBeta", 3.0)])
def test_z_prime_is_time_derivative_of_weighted_mass(weight):
    params = ProblemParams(1.0)
    st = gaussian(params, A=0.5, sigma=1.5, r_max=30.0, n=1023)
    st = RadialState(st.grid, st.w * np.exp(1j * 0.3 * st.grid.nodes**2))  # give it momentum
    stepper = SplitStepper(st.grid, Zero(1.0))
    dt = 1e-4
    plus = RadialState(st.grid, stepper.linear(st.w, dt))
    minus = RadialState(st.grid, stepper.linear(st.w, -dt))
    fd = (weighted_mass(plus, weight) - weighted_mass(minus, weight)) / (2 * dt)
    assert fd == pytest.approx(z_prime(st, weight), rel=1e-7)


def test_strauss_ratio_bounded_for_gaussian(params1):
    # radial functions obey r |u|^2 <= C |u|_2 |grad u|_2
    st = gaussian(params1, A=1.0, n=2047)
    assert 0 < strauss_ratio(st) < 1


def test_csv_round_trip(tmp_path, params1, pure1):
    recs = [record(gaussian(params1, A=a, n=255), pure1, window=0.1 * a) for a in (0.2, 0.4)]
    path = tmp_path / "d.csv"
    write_csv(path, recs, header_comment="config_hash=abc")
    lines = path.read_text().splitlines()
    assert lines[0] == "# config_hash=abc"
    assert lines[1] == ",".join(CSV_COLUMNS)
    assert read_csv(path) == recs


@given(amp=st.floats(0.0, 2.0), phase=st.floats(-3.0, 3.0))
def test_mass_scales_quadratically(amp, phase):
    params = ProblemParams(1.0)
    base = gaussian(params, A=1.0, n=127, r_max=10.0)
    scaled = RadialState(base.grid, base.w * amp * np.exp(1j * phase))
    assert mass(scaled) == pytest.approx(amp**2 * mass(base), rel=1e-12, abs=1e-300)
    assert grad_norm_sq(scaled) == pytest.approx(amp**2 * grad_norm_sq(base), rel=1e-12, abs=1e-300)
