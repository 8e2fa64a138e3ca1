"""Conditioned-walk ladder: psi_j(x) family, weak/strict q recursions, and
the U_j expansion against the killed DP table."""

import math

import numpy as np
import pytest

from fluctuator import conditioned, oracle

N = 1 << 12
X_MAX = 8


@pytest.fixture(scope="module")
def ws_lazy(lazy):
    return conditioned.make_workspace(lazy, x_max=X_MAX, N=N)


@pytest.fixture(scope="module")
def ws_skewed(skewed):
    return conditioned.make_workspace(skewed, x_max=X_MAX, N=N)


def test_psi_odd_are_theta_values(ws_skewed):
    px = conditioned.psi_x(ws_skewed, 3, j_max=3)
    assert px[1] == pytest.approx(float(ws_skewed.thetas[1](3)), rel=1e-12)
    assert px[3] == pytest.approx(float(ws_skewed.thetas[2](3)), rel=1e-12)


def test_psi_minus_one_is_theta0(ws_lazy):
    px = conditioned.psi_x(ws_lazy, 2, j_max=0)
    assert px[-1] == pytest.approx(ws_lazy.theta0, rel=1e-14)


def test_weak_q0_is_renewal_increment(ws_lazy):
    lad = conditioned.q_ladder(ws_lazy, L=1, strict=False)
    # lazy walk: V(x) = x exactly, so q_0(x) = 1 for x >= 1
    np.testing.assert_allclose(lad.V[1:], np.arange(1, X_MAX + 1), rtol=1e-7)
    np.testing.assert_allclose(lad.q[0, 1:], 1.0, rtol=1e-6)


def test_strict_q0_from_ladder_renewal(ws_lazy, ws_skewed):
    for ws in (ws_lazy, ws_skewed):
        lad = conditioned.q_ladder(ws, L=1, strict=True)
        want = oracle.ladder_renewal(ws.law, X_MAX, N)
        np.testing.assert_allclose(lad.q[0], want, rtol=1e-12)
        np.testing.assert_allclose(lad.V, np.cumsum(want), rtol=1e-12)


def test_q1_proportional_to_renewal(ws_skewed):
    lad = conditioned.q_ladder(ws_skewed, L=1, strict=False)
    np.testing.assert_allclose(
        lad.q[1, 1:], -2.0 * ws_skewed.theta0 * lad.V[1:], rtol=1e-12
    )


def test_u_expansion_one_term_slope(ws_skewed):
    """One-term ladder signature: |b_n(x) - U_1(x) a_n^(2)| decays ~ n^(-5/2)."""
    lad = conditioned.q_ladder(ws_skewed, L=1, strict=False)
    n_grid = np.unique(np.geomspace(N // 8, N, 40).astype(int))
    for x in (1, 4):
        res = conditioned.u_expansion_eval(ws_skewed, lad, x, n_grid, J=1)
        assert res["decay_exponent"] > 2.2


def test_u_expansion_two_terms_improve(ws_skewed):
    lad = conditioned.q_ladder(ws_skewed, L=3, strict=False)
    n_grid = np.unique(np.geomspace(N // 8, N, 40).astype(int))
    for x in (1, 4):
        one = conditioned.u_expansion_eval(ws_skewed, lad, x, n_grid, J=1)
        two = conditioned.u_expansion_eval(ws_skewed, lad, x, n_grid, J=2)
        assert two["decay_exponent"] > one["decay_exponent"] + 0.5


def test_gf_fit_cross_check(ws_lazy):
    lad = conditioned.q_ladder(ws_lazy, L=3, strict=False)
    gaps = conditioned.gf_fit_check(ws_lazy, lad, x=2)
    # GF fit near s = 1 is ill-conditioned; only the leading entries bind
    assert abs(gaps[0]) < 5e-3 and abs(gaps[1]) < 0.1


def test_ladder_needs_enough_thetas(ws_lazy):
    with pytest.raises(oracle.TailNotDecayed):
        conditioned.psi_x(ws_lazy, 1, j_max=12)
