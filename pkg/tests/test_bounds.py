"""Tests for purification bounds, time optimization, and GHZ closed forms."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dephasing_metrology import bounds, dicke
from dephasing_metrology.errors import InvalidDecay, InvalidParameter
from dephasing_metrology.noise import DecayLaw


def law(n, chi0=1.0, omega_c=1.0):
    return DecayLaw(n=n, chi0=chi0, omega_c=omega_c)


# --- purification bound ---------------------------------------------------------

def test_noiseless_limit():
    assert bounds.purification_qfi_bound(7.0, 0.0, 2.0) == pytest.approx(
        4.0 * 4.0 * 7.0, rel=1e-14)


def test_reference_point():
    # varJz = N^2/4 with N=10, chi=0.01, t=1
    assert bounds.purification_qfi_bound(25.0, 0.01, 1.0) == pytest.approx(
        50.0, rel=1e-14)


def test_strong_noise_limit():
    assert bounds.purification_qfi_bound(25.0, 1e12, 1.0) < 1e-10


@given(v=st.floats(min_value=0.1, max_value=100.0),
       t=st.floats(min_value=0.1, max_value=5.0),
       chi1=st.floats(min_value=0.0, max_value=5.0),
       dchi=st.floats(min_value=1e-6, max_value=5.0))
@settings(max_examples=50, deadline=None)
def test_bound_monotone_in_chi(v, t, chi1, dchi):
    a = bounds.purification_qfi_bound(v, chi1, t)
    b = bounds.purification_qfi_bound(v, chi1 + dchi, t)
    assert b < a


# --- purification moments --------------------------------------------------------

def test_moments_zeta_extremes():
    v, chi, t = 25.0, 0.01, 1.3
    _, _, q0 = bounds.purification_moments(0.0, v, chi, t)
    assert q0 == pytest.approx(4.0 * t ** 2 * v, rel=1e-14)
    _, _, q1 = bounds.purification_moments(1.0, v, chi, t)
    assert q1 == pytest.approx(t ** 2 / chi, rel=1e-14)


def test_zeta_opt_closed_form():
    assert bounds.zeta_opt(25.0, 0.01) == pytest.approx(0.5, rel=1e-14)
    v, chi, t = 25.0, 0.01, 1.0
    _, _, q = bounds.purification_moments(bounds.zeta_opt(v, chi), v, chi, t)
    assert q == pytest.approx(bounds.purification_qfi_bound(v, chi, t), rel=1e-13)


def test_moments_mean_tracks_gauge():
    mean, second, _ = bounds.purification_moments(0.3, 4.0, 0.1, 2.0, mean_jz=1.5)
    assert mean == pytest.approx(2.0 * 0.7 * 1.5, rel=1e-14)
    assert second >= mean ** 2


@given(v=st.floats(min_value=0.5, max_value=50.0),
       chi=st.floats(min_value=1e-3, max_value=1.0),
       zeta=st.floats(min_value=-0.5, max_value=1.5))
@settings(max_examples=50, deadline=None)
def test_zeta_quadratic_convex_with_unique_minimum(v, chi, zeta):
    t, h = 1.0, 1e-3
    q = [bounds.purification_moments(z, v, chi, t)[2]
         for z in (zeta - h, zeta, zeta + h)]
    assert q[0] + q[2] - 2.0 * q[1] > 0.0  # convex
    zopt = bounds.zeta_opt(v, chi)
    qopt = bounds.purification_moments(zopt, v, chi, t)[2]
    assert q[1] >= qopt * (1.0 - 1e-12)


# --- time optimization -----------------------------------------------------------

def test_markovian_supremum():
    for N in (1, 10, 1000):
        t_star, f = bounds.optimal_time_and_bound(
            bounds.BoundQuery(N=N, T=1.0, decay=law(1)))
        assert math.isinf(t_star)
        assert f == 1.0  # exact equality across N


def test_colored_reference_point():
    t_star, f = bounds.optimal_time_and_bound(
        bounds.BoundQuery(N=100, T=1.0, decay=law(2)))
    assert t_star == pytest.approx(0.01, rel=1e-14)
    assert f == pytest.approx(50.0, rel=1e-14)


def test_cubic_scaling_exponent():
    f = {}
    for N in (1000, 2000):
        _, f[N] = bounds.optimal_time_and_bound(
            bounds.BoundQuery(N=N, T=1.0, decay=law(3)))
    slope = math.log(f[2000] / f[1000]) / math.log(2.0)
    assert slope == pytest.approx(4.0 / 3.0, rel=1e-12)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
@pytest.mark.parametrize("N", [10, 100, 1000])
def test_analytic_vs_numeric_optimum(n, N):
    q = bounds.BoundQuery(N=N, T=1.0, decay=law(n, chi0=0.7, omega_c=1.3))
    t_star, f = bounds.optimal_time_and_bound(q)

    def f_tot(t):
        chi = q.decay.chi(t)
        return (q.T / t) * bounds.purification_qfi_bound(q.var_jz, chi, t)

    t_num, f_num = bounds.numeric_optimal_time(f_tot, t_star / 50, t_star * 50,
                                               tol=1e-12)
    assert t_num == pytest.approx(t_star, rel=1e-8)
    assert f_num == pytest.approx(f, rel=1e-8)


def test_precision_bound_consistency():
    q = bounds.BoundQuery(N=100, T=1.0, decay=law(2))
    _, f = bounds.optimal_time_and_bound(q)
    assert bounds.precision_lower_bound(q) == 1.0 / f
    assert bounds.precision_lower_bound(q) == pytest.approx(0.02, rel=1e-14)


def test_g_prefactor():
    assert bounds.g_exponent_prefactor(2) == pytest.approx(2.0, rel=1e-14)
    with pytest.raises(InvalidDecay):
        bounds.g_exponent_prefactor(1)


def test_query_validation():
    with pytest.raises(InvalidParameter):
        bounds.BoundQuery(N=0, T=1.0, decay=law(2))
    with pytest.raises(InvalidParameter):
        bounds.BoundQuery(N=4, T=1.0, decay=law(2), varJz=100.0)


# --- GHZ protocol ------------------------------------------------------------------

def test_ghz_reference_point():
    t_star, f, prec = bounds.ghz_optimal(
        bounds.BoundQuery(N=100, T=1.0, decay=law(2)))
    assert t_star == pytest.approx(0.005, rel=1e-14)
    assert f == pytest.approx(50.0 * math.exp(-0.5), rel=1e-14)
    assert prec == pytest.approx(1.0 / f, rel=1e-14)


def test_ghz_noiseless_sentinel():
    t_star, f, prec = bounds.ghz_optimal(None)
    assert math.isinf(t_star) and math.isinf(f) and prec == 0.0


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_ghz_analytic_vs_numeric(n):
    q = bounds.BoundQuery(N=30, T=2.0, decay=law(n, chi0=0.9, omega_c=1.1))
    t_star, f, _ = bounds.ghz_optimal(q)

    def f_tot(t):
        return q.T * q.N ** 2 * t * math.exp(-2.0 * q.N ** 2 * q.decay.chi(t))

    t_num, f_num = bounds.numeric_optimal_time(f_tot, t_star / 50, t_star * 50,
                                               tol=1e-12)
    assert t_num == pytest.approx(t_star, rel=1e-8)
    assert f_num == pytest.approx(f, rel=1e-8)


@pytest.mark.parametrize("N", [4, 16, 64, 256])
def test_ghz_below_state_independent_bound(N):
    q = bounds.BoundQuery(N=N, T=1.0, decay=law(2))
    _, f_ghz, _ = bounds.ghz_optimal(q)
    _, f_bound = bounds.optimal_time_and_bound(q)
    assert f_ghz <= f_bound * (1.0 + 1e-12)


# --- dominance against the exact Dicke computation ------------------------------------

@given(N=st.integers(min_value=2, max_value=10),
       chi=st.floats(min_value=0.0, max_value=0.5),
       t=st.floats(min_value=0.1, max_value=2.0),
       seed=st.integers(min_value=0, max_value=10 ** 6))
@settings(max_examples=40, deadline=None)
def test_qfi_dominated_by_purification_bound(N, chi, t, seed):
    rng = np.random.default_rng(seed)
    state = dicke.random_symmetric_state(N, rng)
    out = dicke.evolve(state, 0.4, chi, t)
    qfi = dicke.qfi_and_sld(out, dicke.drho_db(out)).qfi
    _, _, jz = dicke.collective_ops(N)
    v = dicke.variance(state.rho, jz)
    assert qfi <= bounds.purification_qfi_bound(v, chi, t) * (1.0 + 1e-9) + 1e-9
