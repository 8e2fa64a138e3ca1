"""DP oracles: exact pmf tables, killed tables, identity checkers, tail
closure, ladder renewal, and the MC estimator."""

from fractions import Fraction

import numpy as np
import pytest

from fluctuator import basis, oracle, walk


def test_pmf_mass_conservation(lazy, skewed):
    for law in (lazy, skewed):
        frame = oracle.pmf(law, 12)
        assert sum(frame.mass.values()) == 1


def test_pmf_lazy_known_values(lazy):
    # one step: P(S_1 = 0) = 1/2
    m = oracle.pmf(lazy, 1).mass
    assert m[0] == Fraction(1, 2) and m[1] == Fraction(1, 4)


def test_delta_table_symmetric_lazy(lazy):
    # symmetric walk: Delta_n = 1/2 - P(S_n <= 0) = -P(S_n = 0)/2
    deltas, traces = oracle.delta_table(lazy, 40, xs=(0,))
    p0 = traces[0]
    np.testing.assert_allclose(deltas[1:], -p0[1:] / 2, atol=1e-15)


def test_conditioned_tables_weak_vs_strict(lazy):
    weak = oracle.conditioned_table(lazy, 30, x_max=4, strict=False)
    strict = oracle.conditioned_table(lazy, 30, x_max=4, strict=True)
    # strict keeps state 0 alive: dominates weak everywhere
    assert (strict >= weak - 1e-15).all()
    assert strict[:, 0].max() > 0 and weak[2:, 0].max() == 0


def test_tau_tail_monotone_and_exact_mode(lazy):
    tail = oracle.tau_tail(lazy, 2, 50, mode="rational")
    assert tail[0] == 1
    assert all(tail[n + 1] <= tail[n] for n in range(50))
    flt = oracle.tau_tail(lazy, 2, 50, mode="float")
    np.testing.assert_allclose(flt, [float(v) for v in tail], rtol=1e-14)


def test_identity_checkers(lazy, skewed):
    assert oracle.spitzer_check(lazy, 64, mode="rational") == 0
    assert oracle.spitzer_check(skewed, 64, mode="rational") == 0
    assert oracle.spitzer_check(lazy, 256, mode="float") < 1e-13
    assert oracle.leftcont_check(lazy, 4, 64) == 0
    for law in (lazy, skewed):
        for x in (1, 3):
            assert oracle.duality_check(law, x, 64) == 0


def test_leftcont_rejects_big_down_jumps(skewed):
    rev = skewed.reverse()  # support {-2, 0, 1}
    with pytest.raises(oracle.NotLeftContinuous):
        oracle.leftcont_check(rev, 2, 16)


def test_recurrence_gap_zero(lazy, skewed):
    for law in (lazy, skewed):
        for strict in (False, True):
            for n in (5, 12):
                assert oracle.recurrence_gap(law, n, x=3, strict=strict) == 0


def test_series_tail_sum_recovers_known_tail():
    N = 512
    summand = basis.a_float(3, N)[1:]
    got, err, slope = oracle.series_tail_sum(summand, first_n=1)
    want = float(basis.tail_sum(3, N + 1))
    assert got == pytest.approx(want, rel=1e-6)
    assert 2.0 < slope < 3.0


def test_ladder_renewal_lazy_flat(lazy):
    u = oracle.ladder_renewal(lazy, 20)
    np.testing.assert_allclose(u, 4.0, rtol=1e-11)


def test_ladder_renewal_matches_strict_green(skewed):
    # q-bar_0(x) = sum_n P(S_n = x, taubar_0 > n) read from the DP table
    N = 4096
    table = oracle.conditioned_table(skewed, N, x_max=3, strict=True)
    u = oracle.ladder_renewal(skewed, 3)
    for x in range(4):
        direct = (1.0 if x == 0 else 0.0) + table[1:, x].sum()
        tail, _, _ = oracle.series_tail_sum(table[1:, x], first_n=1)
        assert u[x] == pytest.approx(direct + tail, rel=1e-8)


def test_ladder_height_dist_is_probability(lazy, skewed):
    for law in (lazy, skewed, skewed.reverse()):
        F = oracle.ladder_height_dist(law)
        assert (F >= 0).all()
        assert F.sum() == pytest.approx(1.0, abs=1e-12)


def test_mc_reproducible_and_covers(lazy):
    kern = sorted(lazy.atoms.items())
    vals = np.array([float(v) for v, _ in kern])
    probs = np.array([float(p) for _, p in kern])

    def sampler(rng, size):
        return rng.choice(vals, size=size, p=probs)

    n = 16
    est1 = oracle.mc_tau_tail(sampler, 0, n, paths=40_000, seed=7)
    est2 = oracle.mc_tau_tail(sampler, 0, n, paths=40_000, seed=7)
    assert est1.estimate == est2.estimate  # counter-based streams
    truth = float(oracle.tau_tail(lazy, 0, n, mode="rational")[n])
    assert est1.covers(truth, widths=4.0)
