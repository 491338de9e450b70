import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from randmult.analytic import (
    DirichletPolynomial,
    compute_I0,
    estimate_I0_low_moment,
    euler_expectation_check,
    euler_product_F0,
    parseval_check,
    parseval_lhs,
    simpson,
)
from randmult.errors import InvalidArgument, UnsupportedMethod
from randmult.primes import build_prime_table
from randmult.rmf import sample_model, values_up_to
from randmult.sums import psi_sum

_T = build_prime_table(5000)


def test_dirichlet_polynomial_basics():
    P = DirichletPolynomial({1: 1, 2: 0.5})
    assert P[2] == 0.5 and P[3] == 0
    assert P.evaluate(0.0, 0.0)[0] == pytest.approx(1.5)
    assert P.evaluate(1.0, 0.0)[0] == pytest.approx(1.25)
    with pytest.raises(InvalidArgument):
        DirichletPolynomial({0: 1})


def test_from_euler_expansion():
    P = DirichletPolynomial.from_euler({2: [1, 1, 1], 3: [1, -1]}, 20)
    assert dict(P.coefficients) == {1: 1, 2: 1, 4: 1, 3: -1, 6: -1, 12: -1}


def test_simpson_exact_on_cubics():
    x = np.linspace(0, 2, 11)
    assert simpson(x**3 - x, 0.2) == pytest.approx(4 - 2)
    with pytest.raises(InvalidArgument):
        simpson(np.ones(4), 1.0)


def test_parseval_lhs_closed_form():
    # a_1 = 1 only: int_1^inf x^(-1-2s) dx = 1/(2s)
    assert parseval_lhs(DirichletPolynomial({1: 1}), 0.5) == pytest.approx(1.0)


@given(st.integers(0, 1000))
@settings(max_examples=10, deadline=None)
def test_parseval_random_polynomials(seed):
    g = np.random.default_rng(seed)
    n = g.choice(np.arange(1, 60), size=8, replace=False)
    P = DirichletPolynomial({int(k): complex(g.normal(), g.normal()) for k in n})
    r = parseval_check(P, 0.5, 60, 200, 0.02)
    assert r.rel_err <= 0.01
    assert abs(r.rhs - r.lhs) <= r.tail_bound + 0.01 * r.lhs


def test_parseval_support_check():
    with pytest.raises(InvalidArgument):
        parseval_check(DirichletPolynomial({100: 1}), 0.5, 50, 10, 0.1)


@pytest.mark.parametrize("mode", ["steinhaus", "rademacher"])
def test_i0_matches_mellin_identity(mode):
    # int_1^inf |Psi(z, y0)|^2 dz / z^2 equals (1/(2 pi)) int |F0(1/2+it)|^2 / (1/4+t^2) dt
    y0 = 5
    m = sample_model(mode, 3, 100, _T)
    res = compute_I0(m, _T, y0, 200, 0.02)
    ps = _T.primes_in(0, y0)
    from randmult.sums import supported_integers, values_from_exponents
    from randmult.stepint import step_integral

    d, _, exps = supported_integers(ps, 10**9)
    w = values_from_exponents(m, ps, exps)
    direct = step_integral(d.astype(float), np.full(d.size, np.inf), w, 1, np.inf)
    assert 2 * math.pi * direct / math.log(y0) == pytest.approx(res.value, rel=0.02)


def test_i0_empty_product_closed_form():
    m = sample_model("steinhaus", 0, 10, _T)
    y0 = 1.5
    r = compute_I0(m, _T, y0, 200, 0.01)
    assert r.value == pytest.approx(4 * math.atan(400) / math.log(y0), rel=1e-6)
    with pytest.raises(InvalidArgument):
        compute_I0(m, _T, 1.0, 10, 0.1)


def test_euler_product_F0():
    m = sample_model("rademacher", 2, 100, _T)
    want = np.prod([1 + m.prime_values[p] / math.sqrt(p) for p in (2, 3, 5, 7)])
    assert euler_product_F0(m, _T, 7, 0.0) == pytest.approx(want)
    s = sample_model("steinhaus", 2, 100, _T)
    # Steinhaus: geometric local factors, so F0 is the series over smooth n
    from randmult.sums import supported_integers, values_from_exponents

    ps = _T.primes_in(0, 3)
    d, _, exps = supported_integers(ps, 10**14)
    series = np.sum(values_from_exponents(s, ps, exps) / np.sqrt(d.astype(float)))
    assert euler_product_F0(s, _T, 3, 0.0) == pytest.approx(series, abs=1e-5)


def test_euler_expectation_exact_and_mc():
    r = euler_expectation_check("rademacher", [2, 3, 5, 7], 1.3, "exact")
    assert r.err <= 1e-12
    mc = euler_expectation_check("steinhaus", [2, 3, 5], 0.7, "monte_carlo", trials=200_000, seed=1)
    assert mc.err <= 3 * mc.std_error + 1e-3
    with pytest.raises(UnsupportedMethod):
        euler_expectation_check("steinhaus", [2], 0.0, "exact")
    with pytest.raises(InvalidArgument):
        euler_expectation_check("steinhaus", [], 0.0, "monte_carlo", trials=10)


def test_low_moment_estimate_runs():
    e = estimate_I0_low_moment("rademacher", _T, 7, 50, 0.05, 100, seed=0)
    assert e.mean_pow_2_3 > 0 and e.std_error >= 0
