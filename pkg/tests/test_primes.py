import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from randmult.errors import InvalidArgument
from randmult.primes import (
    build_prime_table,
    divisor_tau,
    factorize,
    is_squarefree,
    largest_prime_factor,
    mertens_sum,
    squarefree_mask,
    tau_array,
    tau_sum_bound_check,
    tau_sum_bound_scan,
)


def trial_division(n):
    out, p = [], 2
    while p * p <= n:
        a = 0
        while n % p == 0:
            n //= p
            a += 1
        if a:
            out.append((p, a))
        p += 1
    if n > 1:
        out.append((n, 1))
    return out


def test_small_tables():
    assert build_prime_table(10).primes.tolist() == [2, 3, 5, 7]
    assert build_prime_table(2).primes.tolist() == [2]
    assert build_prime_table(30).spf[15] == 3


def test_table_invariants(small_table):
    t = small_table
    n = np.arange(2, t.limit + 1)
    assert np.all(n % t.spf[2:] == 0)
    assert np.array_equal(t.primes, n[t.spf[2:] == n])
    for k in range(2, 400):
        assert t.spf[k] == trial_division(k)[0][0]
        assert t.lpf[k] == trial_division(k)[-1][0]
    layered = np.sort(np.concatenate(t.layers))
    assert np.array_equal(layered, n)


def test_factorize_examples(small_table):
    assert factorize(small_table, 12) == [(2, 2), (3, 1)]
    assert factorize(small_table, 1) == []
    assert factorize(small_table, 97) == [(97, 1)]
    with pytest.raises(InvalidArgument):
        factorize(small_table, 0)


@given(st.integers(1, 20_000))
@settings(max_examples=200)
def test_factorize_matches_trial_division(n):
    t = _shared()
    assert factorize(t, n) == trial_division(n)


_T = {}


def _shared():
    if "t" not in _T:
        _T["t"] = build_prime_table(20_000)
    return _T["t"]


def test_lpf_and_squarefree(small_table):
    t = small_table
    assert largest_prime_factor(t, 1) == 1
    assert largest_prime_factor(t, 12) == 3
    assert largest_prime_factor(t, 1024) == 2
    assert is_squarefree(t, 6) and not is_squarefree(t, 12) and is_squarefree(t, 1)
    mask = squarefree_mask(t, 1000)
    brute = [all(a == 1 for _, a in trial_division(k)) for k in range(1, 1001)]
    assert mask[1:].tolist() == brute


def test_mertens(small_table):
    assert mertens_sum(small_table, 1, 10) == pytest.approx(1 / 2 + 1 / 3 + 1 / 5 + 1 / 7, abs=1e-15)
    assert mertens_sum(small_table, 7, 7) == 0
    assert mertens_sum(small_table, 2, 3) == pytest.approx(1 / 3)


def test_divisor_tau(small_table):
    assert all(divisor_tau(small_table, 1, n) == 1 for n in range(1, 100))
    assert divisor_tau(small_table, 2, 12) == 6
    assert divisor_tau(small_table, 3, 4) == 6
    arr = tau_array(small_table, 3, 500)
    for n in range(1, 501):
        brute = sum(1 for a in range(1, n + 1) if n % a == 0 for b in range(1, n // a + 1) if (n // a) % b == 0)
        assert arr[n] == brute == divisor_tau(small_table, 3, n)


def test_tau_sum_examples(small_table):
    s, b, ok = tau_sum_bound_check(small_table, 10, 2)
    assert (s, ok) == (27, True) and b == pytest.approx(46.0517, abs=1e-3)
    s, b, ok = tau_sum_bound_check(small_table, 3, 2)
    assert (s, ok) == (5, True) and b == pytest.approx(6.5917, abs=1e-3)
    with pytest.raises(InvalidArgument):
        tau_sum_bound_check(small_table, 10, 1)


def test_tau_scan_matches_pointwise(small_table):
    for m in (2, 4):
        ok, worst = tau_sum_bound_scan(small_table, 2000, m)
        assert ok
        s, b, _ = tau_sum_bound_check(small_table, worst, m)
        assert s <= b
