import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from cktcs.core import Regime, make_params
from cktcs.dynamics import trajectory, variational
from cktcs.observables import (
    NoSolutionError,
    PreconditionError,
    UnsupportedRegimeError,
    expectations_cs,
    expectations_tcs,
    g_from_wz,
    g_function,
    g_overdamped,
    g_underdamped,
    minimization_times,
    solve_mu_for_time,
    uncertainty_products,
    variance_closed_theta_mu,
)
from cktcs.verify import battery_times


def _signed_brace(theta, mu, omega, t, regime):
    """Re(z* w) / Im b for the run with these (theta, mu, omega), m = 1."""
    if regime is Regime.UNDERDAMPED:
        omega0 = omega * math.sqrt(1 + theta ** 2)
    else:
        omega0 = omega * math.sqrt(theta ** 2 - 1)
    p = make_params(1.0, 2 * theta * omega, omega0, 1.0, 1j * mu * omega, 0.0, 0.0)
    w, z, _ = variational(p, t)
    return (z.conjugate() * w).real / p.b.imag


def test_means_follow_trajectory(damped):
    for n in (0, 3):
        o = expectations_tcs(damped, n, 2.2)
        assert (o.mean_x, o.mean_p) == trajectory(damped, 2.2)


def test_coherent_vacuum_means(damped):
    o = expectations_cs(damped, 0, 1.0)
    assert (o.mean_x, o.mean_p) == pytest.approx(trajectory(damped, 1.0), abs=0)


def test_three_routes_agree(battery_params):
    for p in battery_params:
        if p.regime is Regime.CRITICAL:
            continue
        for t in battery_times(p, 25):
            w, z, _ = variational(p, t)
            for n in (None, 0, 2):
                k = p.hbar * ((0.5 if n is None else n + 0.5)) / p.b.imag
                vx, vp = k * abs(z) ** 2, k * abs(w) ** 2
                tx, tp = variance_closed_theta_mu(p, t, n)
                assert tx == pytest.approx(vx, rel=1e-12)
                assert tp == pytest.approx(vp, rel=1e-12)
            rep = uncertainty_products(p, 0, t)
            assert rep.route_gap < 1e-12
            assert rep.g_value == pytest.approx(g_from_wz(p, t), rel=1e-10, abs=1e-14)


def test_product_minimal_at_t0(battery_params):
    for p in battery_params:
        rep = uncertainty_products(p, 0, 0.0)
        assert rep.product_cs == 0.25 * p.hbar ** 2
        assert expectations_tcs(p, 0, 0.0).product == pytest.approx(0.25, rel=1e-15)


def test_product_never_below_bound(battery_params):
    for p in battery_params:
        for t in battery_times(p, 61):
            assert uncertainty_products(p, 0, t).product_cs >= 0.25 * (1 - 1e-12)


def test_undamped_g_vanishes_only_for_matched_width():
    t = np.linspace(0, 7, 29)
    np.testing.assert_allclose(g_underdamped(0.0, 1.0, 1.0, t), 0.0, atol=1e-30)
    assert np.max(g_underdamped(0.0, 2.0, 1.0, t)) > 0.5


def test_minimization_instants_are_zeros_of_g():
    for theta in (0.2, 0.7, 1.5):
        for mu in (0.5, 1.0, 2.0):
            res = minimization_times(theta, mu, 1.3, Regime.UNDERDAMPED, k_max=3)
            assert 0.0 in res.times
            for t in res:
                assert g_underdamped(theta, mu, 1.3, t) < 1e-12
    for theta, mu in ((1.2, 0.5), (2.0, 1.0), (1.1, 0.3)):
        res = minimization_times(theta, mu, 0.8, Regime.OVERDAMPED)
        assert res.times[0] == 0.0
        for t in res:
            assert g_overdamped(theta, mu, 0.8, t) < 1e-12


def test_overdamped_second_zero_status():
    res = minimization_times(0.5, 0.1, 1.0, Regime.OVERDAMPED)
    assert res.times == (0.0,) and "outside" in res.status


def test_undamped_matched_width_is_degenerate():
    res = minimization_times(0.0, 1.0, 1.0, Regime.UNDERDAMPED)
    assert res.status.startswith("degenerate")


@pytest.mark.parametrize("regime", [Regime.UNDERDAMPED, Regime.OVERDAMPED])
def test_solve_mu_against_bisection(regime):
    thetas = (0.3, 0.8) if regime is Regime.UNDERDAMPED else (1.2, 2.5)
    solved = 0
    for theta in thetas:
        for t in np.linspace(0.05, 3.0, 12):
            try:
                mu = solve_mu_for_time(theta, 1.0, t, regime)
            except NoSolutionError:
                continue
            f = lambda m_: _signed_brace(theta, m_, 1.0, t, regime)
            lo, hi = mu / 4, mu * 4
            assert f(lo) * f(hi) < 0
            ref = brentq(f, lo, hi, xtol=1e-14, rtol=1e-14)
            assert mu == pytest.approx(ref, rel=1e-10)
            assert g_function(theta, mu, 1.0, t, regime) < 1e-12
            solved += 1
    assert solved > 5


@settings(max_examples=80, deadline=None)
@given(st.floats(0.01, 3), st.floats(0.01, 6))
def test_underdamped_refusal_matches_condition(theta, t):
    q = abs(theta * math.tan(t))
    assume(abs(q - 1) > 1e-9)
    if q < 1:
        assert solve_mu_for_time(theta, 1.0, t, Regime.UNDERDAMPED) > 0
    else:
        with pytest.raises(NoSolutionError, match="underdamped solvability condition"):
            solve_mu_for_time(theta, 1.0, t, Regime.UNDERDAMPED)


@settings(max_examples=80, deadline=None)
@given(st.floats(0.05, 4), st.floats(0.01, 4))
def test_overdamped_refusal_matches_condition(theta, t):
    q = abs(theta * math.tanh(t))
    assume(abs(q - 1) > 1e-9 and abs(theta - 1) > 1e-6)
    ok = q < 1 if theta > 1 else q > 1
    if ok:
        assert solve_mu_for_time(theta, 1.0, t, Regime.OVERDAMPED) > 0
    else:
        with pytest.raises(NoSolutionError, match="overdamped solvability condition"):
            solve_mu_for_time(theta, 1.0, t, Regime.OVERDAMPED)


def test_continuation_identity_lattice():
    th, mu, t = np.meshgrid(np.linspace(0.1, 3, 10), np.linspace(0.1, 3, 10),
                            np.linspace(0, 2, 10), indexing="ij")
    over = g_overdamped(th, mu, 1.0, t)
    cont = g_underdamped(-1j * th, -1j * mu, 1j, t)
    assert np.max(np.abs(cont - over) / np.maximum(1, np.abs(over))) < 1e-10


def test_g_function_guards():
    with pytest.raises(ValueError):
        g_function(0.5, 0.0, 1.0, 1.0, Regime.UNDERDAMPED)
    with pytest.raises(UnsupportedRegimeError):
        g_function(0.5, 1.0, 1.0, 1.0, Regime.CRITICAL)


def test_closed_forms_need_real_b_and_noncritical(critical, damped):
    with pytest.raises(PreconditionError):
        variance_closed_theta_mu(damped.replace(b=0.1 + 0.9j), 1.0)
    with pytest.raises(UnsupportedRegimeError):
        variance_closed_theta_mu(critical, 1.0)
    assert uncertainty_products(damped.replace(b=0.1 + 0.9j), 0, 1.0).g_value is None
