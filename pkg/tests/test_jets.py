"""Truncated Taylor arithmetic against exact and finite-difference oracles."""

import numpy as np
import pytest

from lwsrhd.jets import jconst, jdiv, jet, jmul, jsqrt, time_average


def test_polynomial_square():
    a = jet([1.0, 1.0, 0.0])
    assert np.allclose(jmul(a, a), [1.0, 2.0, 1.0])


def test_sqrt_inverts_square():
    assert np.allclose(jsqrt(jet([1.0, 2.0, 1.0])), [1.0, 1.0, 0.0], atol=1e-14)


def test_div_self_is_one():
    rng = np.random.default_rng(0)
    for _ in range(20):
        a = jet(rng.uniform(-1, 1, 5))
        a[0] = rng.uniform(0.5, 2.0)
        r = jdiv(a, a)
        assert np.allclose(r, [1, 0, 0, 0, 0], atol=1e-13)


def test_mul_div_inverse():
    rng = np.random.default_rng(1)
    a = jet(rng.uniform(-1, 1, 5))
    b = jet(rng.uniform(-1, 1, 5))
    b[0] = 1.7
    assert np.allclose(jmul(jdiv(a, b), b), a, atol=1e-13)


def test_sqrt_error_on_nonpositive():
    with pytest.raises(ValueError):
        jsqrt(jet([-1.0, 0.0]))
    with pytest.raises(ZeroDivisionError):
        jdiv(jet([1.0, 0.0]), jet([0.0, 1.0]))


def _dd_taylor_mp(fun_mp, coeffs, K, h="1e-3"):
    """Taylor coefficients of fun(poly(t)) at t=0 by central divided
    differences in 50-digit arithmetic (roundoff-free oracle)."""
    import mpmath as mp
    mp.mp.dps = 50
    h = mp.mpf(h)

    def path(t):
        return sum(mp.mpf(float(c)) * t ** m for m, c in enumerate(coeffs))

    def F(t):
        return fun_mp(path(t))

    def deriv(m, hh):
        if m == 1:
            return (F(hh) - F(-hh)) / (2 * hh)
        if m == 2:
            return (F(hh) - 2 * F(0) + F(-hh)) / hh ** 2
        if m == 3:
            return (F(2 * hh) - 2 * F(hh) + 2 * F(-hh) - F(-2 * hh)) / (2 * hh ** 3)
        if m == 4:
            return (F(2 * hh) - 4 * F(hh) + 6 * F(0) - 4 * F(-hh) + F(-2 * hh)) / hh ** 4
        raise ValueError(m)

    out = [float(F(0))]
    fact = 1
    for m in range(1, K + 1):
        fact *= m
        d = (4 * deriv(m, h / 2) - deriv(m, h)) / 3  # stencils are O(h^2)
        out.append(float(d) / fact)
    return np.array(out)


def test_composed_functions_match_divided_differences():
    # F(u) = sqrt(u^2 + 2) / (u + 3) on a degree-4 path, orders <= 4
    import mpmath as mp
    rng = np.random.default_rng(5)
    coeffs = rng.uniform(-0.5, 0.5, 5)
    coeffs[0] = 1.3

    K = 4
    uj = jet(coeffs)  # Taylor coefficients of the path itself
    two = jconst(2.0, K)
    three = jconst(3.0, K)
    fj = jdiv(jsqrt(jmul(uj, uj) + two), uj + three)
    oracle = _dd_taylor_mp(lambda u: mp.sqrt(u * u + 2) / (u + 3), coeffs, K)
    assert np.max(np.abs(fj - oracle)) / np.max(np.abs(oracle)) < 1e-8


def test_time_average():
    assert time_average(jet([3.0, 0.0, 0.0])) == pytest.approx(3.0)
    assert time_average(jet([0.0, 1.0, 0.0, 0.0])) == pytest.approx(0.5)
    # oracle: integral of 1 + t + t^2 + t^3 over [0, 1]
    assert time_average(jet([1.0, 1.0, 1.0, 1.0])) == pytest.approx(25.0 / 12.0, rel=1e-15)
    # cross-check by quadrature of the Taylor polynomial
    t, w = np.polynomial.legendre.leggauss(6)
    t = 0.5 * (t + 1.0)
    quad = 0.5 * np.dot(w, 1.0 + t + t ** 2 + t ** 3)
    assert time_average(jet([1.0, 1.0, 1.0, 1.0])) == pytest.approx(quad, rel=1e-13)


def test_jet_broadcasting():
    a = np.zeros((3, 4))
    a[0] = 2.0
    a[1] = 1.0
    b = jmul(a, a)
    assert b.shape == (3, 4)
    assert np.allclose(b[0], 4.0) and np.allclose(b[1], 4.0) and np.allclose(b[2], 1.0)
