import math

import numpy as np
import pytest

from inls.diagnostics import grad_norm_sq, mass
from inls.errors import ParameterDomainError, TruncationError
from inls.state import RadialGrid, RadialState, prepare_initial, tail_mass_fraction, taper

from conftest import GRAD_B1


def gaussian_grad_oracle(A, sigma=1.0):
    # 4 pi int |d/dr (A e^{-r^2/s^2})|^2 r^2 dr = 16 pi A^2 / s^4 int r^4 e^{-2 r^2/s^2} dr
    return 16 * math.pi * A**2 * (3 / 8) * math.sqrt(math.pi) * 2 ** (-2.5) * sigma


def gaussian_mass_oracle(A, sigma=1.0):
    return A**2 * math.pi**1.5 * sigma**3 / 2**1.5


def test_grid_geometry():
    g = RadialGrid(10.0, 9)
    assert g.dr == 1.0
    assert np.array_equal(g.nodes, np.arange(1, 10, dtype=float))
    assert g.midpoints.size == 10 and g.midpoints[0] == 0.5
    fine = g.refined()
    assert fine.n == 19 and fine.dr == 0.5 and fine.r_max == g.r_max


@pytest.mark.parametrize("n", [0, -3, 2.5])
def test_grid_rejects_bad_n(n):
    with pytest.raises(ParameterDomainError):
        RadialGrid(10.0, n)


def test_state_shape_checked():
    with pytest.raises(ParameterDomainError):
        RadialState(RadialGrid(1.0, 4), np.zeros(3))


def test_gaussian_matches_moment_oracles(params1):
    st = prepare_initial("Gaussian", {"A": 0.5, "sigma": 1.0}, RadialGrid(40.0, 4096), params1)
    assert grad_norm_sq(st) == pytest.approx(gaussian_grad_oracle(0.5), rel=1e-4)
    assert grad_norm_sq(st) == pytest.approx(1.4763, abs=5e-4)
    assert mass(st) == pytest.approx(gaussian_mass_oracle(0.5), rel=1e-10)
    assert st.meta["tail_mass_fraction"] < 1e-12


def test_zero_amplitude_gives_zero_state(params1):
    st = prepare_initial("Gaussian", {"A": 0.0}, RadialGrid(10.0, 99), params1)
    assert not np.any(st.w)
    assert mass(st) == 0.0 and tail_mass_fraction(st) == 0.0


def test_tapered_ground_state_close_to_threshold_gradient(params1):
    grid = RadialGrid(2048.0, 16383)
    st = prepare_initial("ScaledGroundState", {"c": 1.0, "lam": 1.0, "taper": 100.0, "taper_width": 900.0},
                         grid, params1)
    # the roll-off adds a small positive amount; the discretization error is far smaller
    ratio = grad_norm_sq(st) / GRAD_B1
    assert 1.0 < ratio < 1.02


def test_untapered_ground_state_is_rejected(params1):
    with pytest.raises(TruncationError):
        prepare_initial("ScaledGroundState", {"c": 1.0}, RadialGrid(50.0, 999), params1)


def test_wide_gaussian_is_rejected(params1):
    with pytest.raises(TruncationError):
        prepare_initial("Gaussian", {"A": 1.0, "sigma": 30.0}, RadialGrid(40.0, 399), params1)
    st = prepare_initial("Gaussian", {"A": 1.0, "sigma": 30.0}, RadialGrid(40.0, 399), params1,
                         check_tail=False)
    assert st.meta["tail_mass_fraction"] > 0.01


def test_tabulated_profile_interpolates(params1):
    radii = np.linspace(0.0, 5.0, 501)
    vals = np.exp(-radii**2) * (1 + 0.5j)
    st = prepare_initial("Tabulated", {"radii": radii, "values": vals}, RadialGrid(10.0, 99), params1)
    r = st.grid.nodes
    inside = r < 5
    assert np.allclose(st.u[inside], np.exp(-r[inside] ** 2) * (1 + 0.5j), atol=1e-4)
    assert np.all(st.u[r > 5] == 0)


def test_profile_parameter_checks(params1):
    grid = RadialGrid(10.0, 99)
    with pytest.raises(ParameterDomainError):
        prepare_initial("Gaussian", {"A": 1.0, "sigma": -1.0}, grid, params1)
    with pytest.raises(ParameterDomainError):
        prepare_initial("Sawtooth", {}, grid, params1)
    with pytest.raises(ParameterDomainError):
        prepare_initial("ScaledGroundState", {"c": 1.0}, grid, None)


def test_taper_shape():
    r = np.array([0.0, 1.0, 1.5, 2.0, 3.0])
    t = taper(r, 1.0)
    assert t[0] == t[1] == 1.0 and t[3] == t[4] == 0.0 and t[2] == pytest.approx(0.5)
