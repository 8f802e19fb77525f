"""Bath spectral densities and correlation kernels.

Expected values here come from two independent routes: elementary
antiderivatives evaluated by hand (frozen below as literals) and scipy
quadrature with oscillatory weights.  Agreement between routes is the
point of several tests.
"""

import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qbmlab.bath import (
    CorrelationKernel,
    CutoffKind,
    PhysicalConstants,
    QuadratureWarning,
    SpectralDensity,
    ThermalBathSpec,
    ValidityWarning,
    delta_limit_strength,
    eval_correlation,
    eval_spectral_density,
    high_temperature_closed_form,
    im_closed_form,
    _correlation_im,
    _correlation_re,
    _omega_coth,
)


def make_bath(m=1.0, gamma=1.0, Omega=5.0, T=1.0, kind=CutoffKind.SHARP):
    return ThermalBathSpec(SpectralDensity(m, gamma, Omega, kind), T=T)


# ---------------------------------------------------------------- J(omega)

def test_spectral_density_sharp_at_pi():
    sd = SpectralDensity(m=1.0, gamma=1.0, Omega=10.0)
    assert eval_spectral_density(sd, np.pi) == pytest.approx(2.0, rel=1e-14)


def test_spectral_density_exponential_example():
    sd = SpectralDensity(1.0, 1.0, 2.0, CutoffKind.EXPONENTIAL)
    expected = (4.0 / np.pi) * np.exp(-1.0)  # = 0.46839865219455334
    assert eval_spectral_density(sd, 2.0) == pytest.approx(expected, rel=1e-14)


def test_spectral_density_vanishes_beyond_sharp_cutoff():
    sd = SpectralDensity(2.0, 0.5, 3.0)
    assert eval_spectral_density(sd, 3.5) == 0.0
    out = eval_spectral_density(sd, np.array([1.0, 2.9, 3.1, 30.0]))
    assert out[2] == 0.0 and out[3] == 0.0 and out[0] > 0.0


def test_spectral_density_rejects_negative_frequency():
    sd = SpectralDensity(1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        eval_spectral_density(sd, -0.1)


@given(gamma=st.floats(0.01, 5.0), omega=st.floats(0.0, 40.0),
       m=st.floats(0.1, 10.0))
def test_spectral_density_linear_in_gamma_and_m(gamma, omega, m):
    sd1 = SpectralDensity(m, gamma, 7.0, CutoffKind.DRUDE)
    sd2 = SpectralDensity(m, 2.0 * gamma, 7.0, CutoffKind.DRUDE)
    assert eval_spectral_density(sd2, omega) == pytest.approx(
        2.0 * eval_spectral_density(sd1, omega), abs=1e-300)


def test_parameter_validation():
    with pytest.raises(ValueError):
        SpectralDensity(-1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        SpectralDensity(1.0, -0.1, 1.0)
    with pytest.raises(ValueError):
        SpectralDensity(1.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        ThermalBathSpec(SpectralDensity(1.0, 1.0, 1.0), T=-2.0)
    with pytest.raises(ValueError):
        PhysicalConstants(hbar=0.0)


# ------------------------------------------------------- odd part D_im(tau)

def test_sharp_im_at_unit_time():
    # -(2/pi) * (sin 5 - 5 cos 5) with m = gamma = hbar = 1, Omega = 5
    bath = make_bath(Omega=5.0)
    expected = -(2.0 / np.pi) * (np.sin(5.0) - 5.0 * np.cos(5.0))
    assert expected == pytest.approx(1.513394933148244, rel=1e-12)
    d = eval_correlation(bath, 1.0)
    assert d.imag == pytest.approx(expected, rel=1e-9)
    assert im_closed_form(bath, 1.0) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("kind", list(CutoffKind))
@pytest.mark.parametrize("tau", [0.02, 0.3, 1.0, 4.0])
def test_im_quadrature_matches_closed_form(kind, tau):
    bath = make_bath(m=1.3, gamma=0.7, Omega=3.0, T=2.0, kind=kind)
    q = _correlation_im(bath, tau, 1e-10)
    cf = im_closed_form(bath, tau)
    assert q == pytest.approx(cf, rel=1e-7, abs=1e-12)


def test_im_vanishes_at_zero_and_is_odd():
    bath = make_bath(kind=CutoffKind.EXPONENTIAL)
    assert eval_correlation(bath, 0.0).imag == 0.0
    d_plus = eval_correlation(bath, 0.8)
    d_minus = eval_correlation(bath, -0.8)
    assert d_minus.imag == pytest.approx(-d_plus.imag, rel=1e-12)
    assert d_minus.real == pytest.approx(d_plus.real, rel=1e-12)


def test_sharp_im_small_tau_series_branch():
    # series branch (|Omega tau| < 1e-3) must join the generic branch
    bath = make_bath(Omega=5.0)
    t_series, t_generic = 1.9e-4, 2.1e-4
    ratio = im_closed_form(bath, t_series) / t_series
    ratio2 = im_closed_form(bath, t_generic) / t_generic
    assert ratio == pytest.approx(ratio2, rel=1e-6)
    # and both agree with quadrature
    assert im_closed_form(bath, t_series) == pytest.approx(
        _correlation_im(bath, t_series, 1e-12), rel=1e-6)


def test_im_independent_of_temperature():
    hot = make_bath(T=100.0, kind=CutoffKind.DRUDE)
    cold = make_bath(T=0.01, kind=CutoffKind.DRUDE)
    assert eval_correlation(hot, 0.7).imag == pytest.approx(
        eval_correlation(cold, 0.7).imag, rel=1e-10)


# ------------------------------------------------------ even part D_re(tau)

def test_re_high_temperature_value_at_zero():
    # T = 100, Omega = 10: quantum corrections are ~1e-4 relative
    bath = make_bath(Omega=10.0, T=100.0)
    d0 = eval_correlation(bath, 0.0).real
    assert d0 == pytest.approx(4000.0 / np.pi, rel=1e-2)
    assert d0 == pytest.approx(high_temperature_closed_form(bath, 0.0), rel=1e-3)


@pytest.mark.parametrize("tau", [0.1, 0.3, 1.0])
def test_re_quadrature_vs_high_temperature_form(tau):
    bath = make_bath(m=1.0, gamma=0.3, Omega=10.0, T=200.0)
    q = _correlation_re(bath, tau, 1e-10)
    assert q == pytest.approx(high_temperature_closed_form(bath, tau), rel=5e-3)


def test_high_temperature_form_warns_outside_regime():
    bath = make_bath(Omega=10.0, T=1.0)  # hbar*Omega / kB T = 10
    with pytest.warns(ValidityWarning):
        high_temperature_closed_form(bath, 0.5)


def test_high_temperature_form_requires_sharp_cutoff():
    bath = make_bath(T=100.0, kind=CutoffKind.DRUDE)
    with pytest.raises(ValueError):
        high_temperature_closed_form(bath, 0.1)


def test_drude_re_at_zero_warns_about_divergence():
    bath = make_bath(Omega=4.0, kind=CutoffKind.DRUDE)
    with pytest.warns(ValidityWarning, match="diverges"):
        v = eval_correlation(bath, 0.0)
    assert np.isfinite(v.real) and v.real > 0.0


def test_re_positive_at_zero_for_all_cutoffs():
    for kind in CutoffKind:
        bath = make_bath(T=3.0, kind=kind)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ValidityWarning)
            assert eval_correlation(bath, 0.0).real > 0.0


def test_delta_limit_strength_matches_kernel_area():
    # integrating the high-T kernel over ~10 oscillation periods on each
    # side recovers the delta weight 4 m gamma kB T to better than 1%
    bath = make_bath(m=1.2, gamma=0.4, Omega=50.0, T=500.0)
    w = 10.5 * np.pi / 50.0
    tau = np.linspace(-w, w, 20001)
    area = np.trapezoid(high_temperature_closed_form(bath, tau), tau)
    assert area == pytest.approx(delta_limit_strength(bath), rel=1e-2)
    assert delta_limit_strength(bath) == pytest.approx(4 * 1.2 * 0.4 * 500.0)


def test_quad_tol_tightening_is_consistent():
    bath = make_bath(m=0.8, gamma=1.1, Omega=6.0, T=4.0,
                     kind=CutoffKind.EXPONENTIAL)
    loose = eval_correlation(bath, 0.9, quad_tol=1e-6)
    tight = eval_correlation(bath, 0.9, quad_tol=1e-12)
    assert abs(loose - tight) <= 1e-5 * abs(tight)


# -------------------------------------------------------- coth evaluation

def test_omega_coth_series_joins_generic_branch():
    a = 0.5
    for x in (0.9e-4, 1.1e-4):
        w = x / a
        exact = w / np.tanh(x)
        assert _omega_coth(w, a) == pytest.approx(exact, rel=1e-12)


def test_omega_coth_limits():
    # w -> 0 gives 2 kB T / hbar = 1/a; large w gives w itself
    assert _omega_coth(0.0, 0.25) == pytest.approx(4.0, rel=1e-12)
    assert _omega_coth(100.0, 1.0) == pytest.approx(100.0, rel=1e-12)


@given(T=st.floats(0.5, 50.0), omega=st.floats(1e-6, 30.0))
def test_omega_coth_exceeds_classical_value(T, omega):
    # quantum fluctuations only ever add on top of 2 kB T / hbar
    a = 1.0 / (2.0 * T)
    assert _omega_coth(omega, a) >= 2.0 * T - 1e-9


# --------------------------------------------------------- parity property

@given(m=st.floats(0.1, 5.0), gamma=st.floats(0.05, 2.0),
       Omega=st.floats(0.5, 20.0), T=st.floats(0.2, 50.0),
       tau=st.floats(0.01, 3.0),
       kind=st.sampled_from(list(CutoffKind)))
def test_correlation_is_hermitian_in_tau(m, gamma, Omega, T, tau, kind):
    bath = ThermalBathSpec(SpectralDensity(m, gamma, Omega, kind), T=T)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", QuadratureWarning)
        d = eval_correlation(bath, tau, quad_tol=1e-8)
        dm = eval_correlation(bath, -tau, quad_tol=1e-8)
    assert dm == pytest.approx(np.conj(d), rel=1e-9, abs=1e-12)


def test_high_temperature_convergence_of_re():
    # D_re(0) / (4 m gamma kB T Omega / pi) -> 1 as T grows
    ratios = []
    for T in (10.0, 100.0, 1e4):
        bath = make_bath(Omega=5.0, T=T)
        d0 = eval_correlation(bath, 0.0).real
        ratios.append(d0 / (4.0 * T * 5.0 / np.pi))
    assert abs(ratios[-1] - 1.0) < 1e-4
    assert abs(ratios[-1] - 1.0) < abs(ratios[0] - 1.0)


# ------------------------------------------------------- tabulated kernels

def test_kernel_from_bath_matches_pointwise_eval():
    bath = make_bath(Omega=10.0, T=100.0)
    grid = np.linspace(0.0, 2.0, 41)
    k = CorrelationKernel.from_bath(bath, grid)
    direct = eval_correlation(bath, grid[17])
    assert k.at(grid[17]) == pytest.approx(direct, rel=1e-10)
    assert k.at(-grid[17]) == pytest.approx(np.conj(direct), rel=1e-10)
    # interpolation error at a midpoint is second order in the spacing
    mid = 0.5 * (grid[3] + grid[4])
    assert k.at(mid) == pytest.approx(eval_correlation(bath, mid),
                                      rel=5e-3, abs=1e-9)


def test_kernel_grid_validation():
    good = np.linspace(0.0, 1.0, 11)
    vals = np.ones(11)
    odd = np.linspace(0.0, 1.0, 11)
    with pytest.raises(ValueError, match="start at tau = 0"):
        CorrelationKernel.from_samples(good + 0.5, vals, odd * 0.0)
    with pytest.raises(ValueError, match="uniform"):
        CorrelationKernel.from_samples(np.sqrt(good), vals, odd * 0.0)
    with pytest.raises(ValueError, match="vanish at tau = 0"):
        CorrelationKernel.from_samples(good, vals, np.ones(11))
    with pytest.raises(ValueError, match="shape"):
        CorrelationKernel.from_samples(good, np.ones(10), np.zeros(11))
    k = CorrelationKernel.from_samples(good, vals, np.zeros(11))
    with pytest.raises(ValueError, match="beyond tabulated range"):
        k.at(1.5)


def test_kernel_scaled_by_coupling_factor():
    grid = np.linspace(0.0, 1.0, 11)
    k = CorrelationKernel.from_samples(grid, np.cos(grid), np.sin(grid) * 0.1)
    k2 = k.scaled(4.0)
    assert k2.at(0.3) == pytest.approx(4.0 * k.at(0.3), rel=1e-14)
    assert k2.bath is None


def test_zero_coupling_kernel_is_allowed():
    grid = np.linspace(0.0, 1.0, 5)
    k = CorrelationKernel.from_samples(grid, np.zeros(5), np.zeros(5))
    assert k.at(0.5) == 0.0
