"""Tests for noise models, decay functions, and spectral moments."""

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from dephasing_metrology import noise
from dephasing_metrology.errors import (
    DivergentMoment,
    FitAmbiguous,
    InvalidParameter,
    SpectrumUndefined,
)


# --- chi_time_domain ---------------------------------------------------------

def test_white_chi_is_linear():
    model = noise.white(chi0=1.0, omega_c=1.0)
    assert noise.chi_time_domain(model, 0.5) == pytest.approx(0.5, abs=1e-14)


def test_chi_vanishes_at_zero_time():
    for model in (noise.white(), noise.ornstein_uhlenbeck(), noise.brownian(),
                  noise.gaussian_cutoff()):
        assert noise.chi_time_domain(model, 0.0) == 0.0


def test_ou_chi_closed_form():
    model = noise.ornstein_uhlenbeck(sigma2=1.0, omega_c=1.0)
    # double integral of e^{-|tau|} over [0,1]^2 = 2(t - 1 + e^{-t}) at t=1
    assert noise.chi_time_domain(model, 1.0) == pytest.approx(
        2.0 * math.exp(-1.0), rel=1e-12)


def test_ou_chi_matches_direct_quadrature():
    model = noise.ornstein_uhlenbeck(sigma2=0.7, omega_c=2.3)
    t = 0.8
    direct, _ = integrate.dblquad(
        lambda s2, s1: 0.7 * math.exp(-2.3 * abs(s1 - s2)),
        0.0, t, lambda _: 0.0, lambda _: t, epsabs=1e-12)
    # dblquad carries ~1e-9 error across the |s1 - s2| kink
    assert noise.chi_time_domain(model, t) == pytest.approx(direct, rel=1e-7)


def test_brownian_chi_is_cubic():
    model = noise.brownian(chi0=1.0, omega_c=1.0)
    assert noise.chi_time_domain(model, 0.3) == pytest.approx(0.018, rel=1e-12)


def test_negative_time_rejected():
    with pytest.raises(InvalidParameter):
        noise.chi_time_domain(noise.white(), -1.0)


# --- chi_spectrum_domain -----------------------------------------------------

def test_flat_spectrum_gives_linear_chi():
    model = noise.white(chi0=1.0, omega_c=1.0)
    assert noise.chi_spectrum_domain(model, 2.0) == pytest.approx(2.0, rel=1e-12)


def test_two_route_consistency_gaussian_cutoff():
    model = noise.gaussian_cutoff(alpha=1.0, s=1.0, omega_c=1.0)
    a = noise.chi_time_domain(model, 0.1)
    b = noise.chi_spectrum_domain(model, 0.1)
    assert abs(a - b) <= 1e-6 * max(1.0, a)


@pytest.mark.parametrize("t", np.geomspace(0.01, 5.0, 6))
def test_two_route_consistency_ou(t):
    model = noise.ornstein_uhlenbeck(sigma2=1.3, omega_c=0.8)
    a = noise.chi_time_domain(model, float(t))
    b = noise.chi_spectrum_domain(model, float(t))
    assert abs(a - b) <= 1e-6 * max(1.0, a)


@pytest.mark.parametrize("t", [0.05, 0.5, 2.0])
def test_two_route_consistency_one_over_f(t):
    model = noise.one_over_f(alpha=0.5, omega_ir=1e-2, omega_c=2.0)
    a = noise.chi_time_domain(model, t)
    b = noise.chi_spectrum_domain(model, t)
    assert abs(a - b) <= 1e-6 * max(1.0, a)


def test_spectrum_route_rejects_nonstationary():
    with pytest.raises(SpectrumUndefined):
        noise.chi_spectrum_domain(noise.brownian(), 1.0)


# --- chi_integrated_process ---------------------------------------------------

def test_integrated_flat_spectrum_reproduces_cubic():
    eta = noise.white(chi0=1.0, omega_c=1.0)
    assert noise.chi_integrated_process(eta, 0.3) == pytest.approx(0.018, rel=1e-12)


def test_integrated_ou_matches_nested_quadrature():
    eta = noise.ornstein_uhlenbeck(sigma2=1.0, omega_c=1.0)
    t = 0.01
    via_filter = noise.chi_integrated_process(eta, t)
    model = noise.integrated_stationary(eta)
    brute = noise.chi_time_domain(model, t)  # 4-fold nested quadrature
    assert via_filter == pytest.approx(brute, rel=1e-5)


def test_integrated_model_dispatch():
    eta = noise.ornstein_uhlenbeck(sigma2=2.0, omega_c=1.5)
    model = noise.integrated_stationary(eta)
    assert noise.chi(model, 0.2) == pytest.approx(
        noise.chi_integrated_process(eta, 0.2), rel=1e-12)


# --- filter functions -----------------------------------------------------------

def test_first_order_filter_low_frequency_limit():
    t = 1.7
    assert noise.first_order_filter(t, 1e-6) == pytest.approx(t * t, rel=1e-9)


def test_second_order_filter_low_frequency_limit():
    t = 1.7
    assert noise.second_order_filter(t, 1e-6) == pytest.approx(
        t ** 4 / 4.0, rel=1e-9)


def test_filters_match_series_and_direct_branches():
    import mpmath

    t = 0.9
    for w in (1e-5, 1e-3, 0.1):
        direct1 = (2.0 * math.sin(w * t / 2.0) / w) ** 2
        assert noise.first_order_filter(t, w) == pytest.approx(direct1, rel=1e-7)
        # high-precision reference: the float expression cancels badly at small w
        with mpmath.workdps(50):
            th = mpmath.mpf(w) * t
            num = (1 - mpmath.cos(th)) ** 2 + (th - mpmath.sin(th)) ** 2
            ref = float(num / mpmath.mpf(w) ** 4)
        assert noise.second_order_filter(t, w) == pytest.approx(ref, rel=1e-6)


# --- short-time law ----------------------------------------------------------------

def test_fit_white_is_linear():
    law = noise.fit_short_time_law(noise.white(chi0=0.8, omega_c=2.0))
    assert law.n == 1
    assert law.chi0 == pytest.approx(0.8, rel=1e-6)


def test_fit_ou_is_quadratic_with_c0_amplitude():
    model = noise.ornstein_uhlenbeck(sigma2=1.0, omega_c=1.0)
    law = noise.fit_short_time_law(model)
    assert law.n == 2
    assert law.chi0 * law.omega_c ** 2 == pytest.approx(1.0, rel=0.02)


def test_fit_brownian_is_cubic():
    law = noise.fit_short_time_law(noise.brownian(chi0=1.0, omega_c=1.0))
    assert law.n == 3
    assert law.chi0 == pytest.approx(2.0 / 3.0, rel=1e-6)


def test_fit_gaussian_cutoff_is_quadratic():
    model = noise.gaussian_cutoff(alpha=1.0, s=1.0, omega_c=1.0)
    law = noise.fit_short_time_law(model)
    c0 = 2.0 * noise.spectral_moment(model, 0)
    assert law.n == 2
    assert law.chi0 * law.omega_c ** 2 == pytest.approx(c0, rel=0.02)


def test_fit_rejects_grid_outside_window():
    with pytest.raises(InvalidParameter):
        noise.fit_short_time_law(noise.white(), t_grid=[0.1, 0.2])


def test_fit_rejects_non_power_law():
    # correlator that changes sign within the window breaks the power-law fit
    taus = np.linspace(0.0, 1.0, 2001)
    vals = np.cos(4000.0 * taus)
    model = noise.tabulated(taus, vals, omega_c=1.0)
    with pytest.raises((FitAmbiguous, InvalidParameter)):
        noise.fit_short_time_law(model)


def test_short_time_law_analytic_matches_fit():
    for model in (noise.white(chi0=0.5, omega_c=3.0),
                  noise.ornstein_uhlenbeck(sigma2=2.0, omega_c=1.2),
                  noise.brownian(chi0=1.5, omega_c=0.7),
                  noise.gaussian_cutoff(alpha=0.9, s=2.0, omega_c=1.1)):
        analytic = noise.short_time_law(model)
        fitted = noise.fit_short_time_law(model)
        assert analytic.n == fitted.n
        assert analytic.chi0 == pytest.approx(fitted.chi0, rel=0.02)


# --- spectral moments ---------------------------------------------------------------

def test_gaussian_cutoff_moment_zero():
    model = noise.gaussian_cutoff(alpha=1.0, s=1.0, omega_c=1.0)
    assert noise.spectral_moment(model, 0) == pytest.approx(
        1.0 / (4.0 * math.pi), rel=1e-12)


def test_gaussian_cutoff_moment_one():
    model = noise.gaussian_cutoff(alpha=1.0, s=1.0, omega_c=1.0)
    # A * Gamma(2) with gamma = 1
    assert noise.spectral_moment(model, 1) == pytest.approx(
        1.0 / (4.0 * math.pi), rel=1e-12)


def test_gaussian_cutoff_moment_matches_quadrature():
    model = noise.gaussian_cutoff(alpha=0.7, s=2.0, omega_c=1.4)
    for n in (0, 1, 3):
        direct, _ = integrate.quad(
            lambda w: noise.spectrum(model, w) * w ** (2 * n) / (2.0 * math.pi),
            0.0, 30.0, epsabs=1e-14, limit=400)
        assert noise.spectral_moment(model, n) == pytest.approx(direct, rel=1e-8)


def test_moment_linearity_in_amplitude():
    m1 = noise.gaussian_cutoff(alpha=1.0, s=1.0, omega_c=1.0)
    m3 = noise.gaussian_cutoff(alpha=3.0, s=1.0, omega_c=1.0)
    assert noise.spectral_moment(m3, 2) == pytest.approx(
        3.0 * noise.spectral_moment(m1, 2), rel=1e-12)


@given(n=st.integers(min_value=0, max_value=8),
       s=st.sampled_from([0.0, 0.5, 1.0, 2.0]),
       wc=st.floats(min_value=0.3, max_value=3.0))
@settings(max_examples=40, deadline=None)
def test_moment_recursion(n, s, wc):
    model = noise.gaussian_cutoff(alpha=1.0, s=s, omega_c=wc)
    g = (s + 1.0) / 2.0
    ratio = noise.spectral_moment(model, n + 1) / noise.spectral_moment(model, n)
    assert ratio == pytest.approx((n + g) * wc ** 2, rel=1e-8)


def test_divergent_moments():
    with pytest.raises(DivergentMoment):
        noise.spectral_moment(noise.white(), 0)
    with pytest.raises(DivergentMoment):
        noise.spectral_moment(noise.ornstein_uhlenbeck(), 1)
    assert noise.spectral_moment(noise.ornstein_uhlenbeck(sigma2=2.0), 0) \
        == pytest.approx(1.0, rel=1e-12)


def test_moment_series_collects_orders():
    model = noise.gaussian_cutoff(alpha=1.0, s=1.0, omega_c=1.0)
    series = noise.moment_series(model, 3)
    assert len(series) == 4
    assert series[0] == pytest.approx(1.0 / (4.0 * math.pi), rel=1e-12)


# --- invariants (property-based) ------------------------------------------------------

_MODELS = st.sampled_from([
    noise.white(chi0=0.5, omega_c=2.0),
    noise.ornstein_uhlenbeck(sigma2=1.1, omega_c=0.9),
    noise.brownian(chi0=0.3, omega_c=1.7),
    noise.gaussian_cutoff(alpha=1.0, s=1.0, omega_c=1.0),
])


@given(model=_MODELS, t=st.floats(min_value=0.0, max_value=5.0))
@settings(max_examples=50, deadline=None)
def test_chi_nonnegative(model, t):
    assert noise.chi(model, t) >= 0.0


@given(t1=st.floats(min_value=0.0, max_value=5.0),
       t2=st.floats(min_value=0.0, max_value=5.0),
       shift=st.floats(min_value=0.0, max_value=3.0))
@settings(max_examples=50, deadline=None)
def test_stationary_correlation_shift_invariant(t1, t2, shift):
    model = noise.ornstein_uhlenbeck(sigma2=1.0, omega_c=1.3)
    a = noise.correlation(model, t1, t2)
    b = noise.correlation(model, t1 + shift, t2 + shift)
    assert a == pytest.approx(b, abs=1e-12)


@given(w=st.floats(min_value=0.0, max_value=20.0))
@settings(max_examples=50, deadline=None)
def test_gaussian_cutoff_spectrum_nonnegative(w):
    model = noise.gaussian_cutoff(alpha=1.0, s=1.0, omega_c=1.0)
    assert noise.spectrum(model, w) >= 0.0


def test_positive_parameters_enforced():
    with pytest.raises(InvalidParameter):
        noise.white(chi0=-1.0)
    with pytest.raises(InvalidParameter):
        noise.ornstein_uhlenbeck(omega_c=0.0)


# --- tabulated correlators ----------------------------------------------------------

def test_tabulated_matches_ou_closed_form():
    taus = np.linspace(0.0, 20.0, 40001)
    vals = np.exp(-taus)
    model = noise.tabulated(taus, vals, omega_c=1.0)
    ou = noise.ornstein_uhlenbeck(sigma2=1.0, omega_c=1.0)
    assert noise.chi_time_domain(model, 1.0) == pytest.approx(
        noise.chi_time_domain(ou, 1.0), rel=1e-6)


def test_tabulated_extrapolation_is_error():
    model = noise.tabulated([0.0, 1.0], [1.0, 0.5])
    with pytest.raises(InvalidParameter):
        noise.correlation(model, 0.0, 2.0)


def test_tabulated_requires_sorted_grid():
    with pytest.raises(InvalidParameter):
        noise.tabulated([0.0, 2.0, 1.0], [1.0, 0.5, 0.2])


def test_tabulated_from_csv_roundtrip(tmp_path):
    path = tmp_path / "corr.csv"
    taus = np.linspace(0.0, 3.0, 301)
    np.savetxt(path, np.column_stack([taus, np.exp(-taus)]), delimiter=",")
    model = noise.tabulated_from_csv(str(path))
    assert noise.correlation(model, 0.0, 1.0) == pytest.approx(
        math.exp(-1.0), rel=1e-4)


# --- serialization -------------------------------------------------------------------

def test_json_roundtrip_simple():
    model = noise.ornstein_uhlenbeck(sigma2=1.4, omega_c=0.6)
    back = noise.model_from_json(noise.model_to_json(model))
    assert back.kind == model.kind
    assert dict(back.params) == dict(model.params)
    assert back.stationarity == model.stationarity


def test_json_roundtrip_nested_and_tabulated():
    inner = noise.ornstein_uhlenbeck(sigma2=1.0, omega_c=2.0)
    model = noise.integrated_stationary(inner)
    back = noise.model_from_json(noise.model_to_json(model))
    assert back.eta is not None and back.eta.kind == inner.kind

    tab = noise.tabulated([0.0, 1.0, 2.0], [1.0, 0.4, 0.1])
    back = noise.model_from_json(noise.model_to_json(tab))
    assert back.table == tab.table


def test_json_document_shape():
    doc = json.loads(noise.model_to_json(noise.white()))
    assert set(doc) == {"kind", "params", "stationarity"}
    assert doc["kind"] == "White"


# --- DecayLaw ----------------------------------------------------------------------

def test_decay_law_evaluation():
    law = noise.DecayLaw(n=2, chi0=0.5, omega_c=2.0)
    assert law.chi(0.1) == pytest.approx(0.5 * 0.2 ** 2, rel=1e-14)


def test_decay_law_validation():
    with pytest.raises(InvalidParameter):
        noise.DecayLaw(n=0, chi0=1.0, omega_c=1.0)
    with pytest.raises(InvalidParameter):
        noise.DecayLaw(n=2, chi0=-1.0, omega_c=1.0)
