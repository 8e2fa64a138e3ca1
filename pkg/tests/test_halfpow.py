"""Half-power series ring: extraction is a homomorphism, sqrt division and
exponentiation shift indices as the calculus says, classification recovers
planted classes."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fluctuator import basis, halfpow

N = 256


def _rand_series(rng, n=N):
    poly = {
        int(i): float(rng.uniform(-2, 2))
        for i in rng.choice(np.arange(-1, 6), size=rng.integers(1, 4), replace=False)
    }
    rem = rng.normal(size=n + 1) * (np.arange(n + 1) + 1.0) ** -3.0
    return halfpow.HalfPowSeries(poly_part=poly, remainder=rem, class_tag=(3, 0))


def test_kappa_odd_indices_are_a_basis():
    for i in (1, 3, 5):
        np.testing.assert_allclose(
            halfpow.kappa(i, 64), basis.a_float((i + 3) // 2, 64), rtol=1e-13
        )


def test_kappa_even_nonneg_terminates():
    k = halfpow.kappa(2, 64)  # (1-s)^1
    assert k[0] == 1 and k[1] == -1 and not k[2:].any()


def test_extract_respects_poly_plus_remainder_split():
    rng = np.random.default_rng(0)
    A = _rand_series(rng)
    only_poly = halfpow.HalfPowSeries(
        poly_part=A.poly_part, remainder=np.zeros(N + 1), class_tag=None
    )
    np.testing.assert_allclose(
        halfpow.extract(A), halfpow.extract(only_poly) + A.remainder, atol=1e-14
    )


@settings(deadline=None, max_examples=15)
@given(st.integers(0, 2**32 - 1))
def test_extract_ring_homomorphism(seed):
    """coeffs(A*B) = coeffs(A) (*) coeffs(B) (Cauchy convolution)."""
    rng = np.random.default_rng(seed)
    A, B = _rand_series(rng), _rand_series(rng)
    ca, cb = halfpow.extract(A), halfpow.extract(B)
    want = np.convolve(ca, cb)[: N + 1]
    got = halfpow.extract(halfpow.mul(A, B))
    np.testing.assert_allclose(got, want, atol=1e-10 * max(1.0, np.abs(want).max()))


def test_div_sqrt_inverts_multiplication_by_sqrt():
    rng = np.random.default_rng(3)
    A = _rand_series(rng)
    sqrt1ms = halfpow.from_poly({1: 1.0}, N)
    B = halfpow.div_sqrt(halfpow.mul(A, sqrt1ms))
    np.testing.assert_allclose(
        halfpow.extract(B), halfpow.extract(A), atol=1e-12
    )


def test_exp_poly_matches_scalar_exp_on_constants():
    A = halfpow.from_poly({0: 0.3}, 64)
    E = halfpow.exp_poly(A, order=4)
    assert E.poly_part[0] == pytest.approx(np.exp(0.3), rel=1e-14)


def test_exp_poly_series_identity():
    """exp(t1 u + p1 u^2) coefficients against the closed forms."""
    t1, p1 = 0.7, -0.4
    E = halfpow.exp_poly(halfpow.from_poly({1: t1, 2: p1}, 128), order=4)
    c0 = E.poly_part[0]
    assert E.poly_part[1] / c0 == pytest.approx(t1, rel=1e-12)
    assert E.poly_part[2] / c0 == pytest.approx(p1 + t1**2 / 2, rel=1e-12)
    assert E.poly_part[3] / c0 == pytest.approx(p1 * t1 + t1**3 / 6, rel=1e-12)


def test_classify_recovers_planted_class():
    n = 2048
    for m in (0, 1, 2):
        rem = 0.8 * np.arange(1, n + 1, dtype=float) ** (-(m + 3) / 2)
        A = halfpow.HalfPowSeries(
            poly_part={}, remainder=np.concatenate([[0.0], rem]), class_tag=None
        )
        est = halfpow.classify(A)
        assert est.m == m


def test_mul_tag_propagation():
    A = halfpow.from_poly({-1: 1.0}, 64, class_tag=(2, 0))
    B = halfpow.from_poly({0: 1.0}, 64, class_tag=(3, 1))
    C = halfpow.mul(A, B)
    m, r = C.class_tag
    assert m <= 2 and r >= 1  # class can only degrade under mul


def test_length_mismatch_raises():
    A = halfpow.from_poly({0: 1.0}, 64)
    B = halfpow.from_poly({0: 1.0}, 65)
    with pytest.raises(halfpow.TruncationMismatch):
        halfpow.mul(A, B)
