import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from randmult.errors import InvalidArgument
from randmult.primes import build_prime_table
from randmult.rmf import sample_model, value, values_up_to
from randmult.sums import (
    blocked_cumsum,
    build_prefix_series,
    fluctuation_normalizer,
    mf_sum,
    normalizer_from_log,
    psi_range_sum,
    psi_sum,
    restricted_sum,
    smooth_count,
    smooth_sum_enumerated,
    supported_integers,
)

_T = build_prime_table(20_000)
_MODELS = {m: sample_model(m, 4, _T.limit, _T) for m in ("steinhaus", "rademacher")}


def brute_psi(mode, x, y, strict=False):
    m, t = _MODELS[mode], _T
    tot = 0
    for n in range(1, math.floor(x) + 1):
        P = t.lpf[n]
        if (P < y) if strict else (P <= y):
            tot += value(m, t, n)
    return tot


@pytest.mark.parametrize("mode", ["steinhaus", "rademacher"])
def test_psi_sum_brute(mode):
    m = _MODELS[mode]
    for x, y in [(50, 7), (200.5, 13), (1000, 2), (300, 300), (10, 1)]:
        for strict in (False, True):
            assert psi_sum(m, _T, x, y, strict) == pytest.approx(brute_psi(mode, x, y, strict), abs=1e-9)


def test_psi_sum_edges():
    m = _MODELS["rademacher"]
    assert psi_sum(m, _T, 0.5, 10) == 0
    assert psi_sum(m, _T, 10, 1) == 1  # only n = 1
    with pytest.raises(InvalidArgument):
        psi_sum(m, _T, 10, 0.5)


@pytest.mark.parametrize("mode", ["steinhaus", "rademacher"])
def test_enumerated_matches_sieve(mode):
    m = _MODELS[mode]
    for x, y in [(5000, 11), (19_000, 31)]:
        assert smooth_sum_enumerated(m, x, y, False, _T) == pytest.approx(psi_sum(m, _T, x, y), abs=1e-9)
        assert smooth_sum_enumerated(m, x, y, True, _T) == pytest.approx(psi_sum(m, _T, x, y, strict=True), abs=1e-9)


def test_psi_beyond_sieve_uses_enumeration():
    t = build_prime_table(100)
    m = sample_model("rademacher", 1, 100, t)
    big = build_prime_table(10**5)
    mb = sample_model("rademacher", 1, 10**5, big)
    assert psi_sum(m, t, 10**5, 7) == psi_sum(mb, big, 10**5, 7)


def test_psi_range_sum():
    m = _MODELS["steinhaus"]
    f = values_up_to(m, _T, 2000)
    brute = sum(f[n] for n in range(101, 2001) if _T.lpf[n] < 17)
    assert psi_range_sum(m, _T, 2000, 100, 17) == pytest.approx(brute, abs=1e-9)
    assert psi_range_sum(m, _T, 100, 100, 17) == 0
    with pytest.raises(InvalidArgument):
        psi_range_sum(m, _T, 10, 20, 5)


def test_prefix_series():
    for mode, m in _MODELS.items():
        s = build_prefix_series(m, _T, 5000)
        assert s.exact == (mode == "rademacher")
        f = values_up_to(m, _T, 5000)
        for x in (1, 2, 77.9, 5000):
            assert mf_sum(s, x) == pytest.approx(f[: math.floor(x) + 1].sum(), abs=1e-9)
        with pytest.raises(InvalidArgument):
            mf_sum(s, 5001)


def test_blocked_cumsum_accuracy():
    g = np.random.default_rng(0)
    v = g.normal(size=300_000) + 1j * g.normal(size=300_000)
    ref = np.cumsum(v.astype(np.clongdouble))
    err = np.max(np.abs(blocked_cumsum(v) - ref))
    assert err < 1e-9
    iv = g.integers(-1, 2, 1000)
    assert np.array_equal(blocked_cumsum(iv), np.cumsum(iv))


@given(st.integers(1, 3000), st.sampled_from([2, 3, 5, 7, 11, 13]))
@settings(max_examples=80, deadline=None)
def test_supported_integers_enumeration(x, y):
    ps = _T.primes_in(0, y)
    d, top, exps = supported_integers(ps, x)
    brute = [n for n in range(1, x + 1) if _T.lpf[n] <= y]
    assert sorted(d.tolist()) == brute
    assert smooth_count(_T, x, y) == len(brute)


def test_supported_integers_top_exponent():
    ps = _T.primes_in(0, 5)
    d, top, exps = supported_integers(ps, 100, d_min=10)
    assert d.min() > 10
    for n, t in zip(d.tolist(), top.tolist()):
        P = _T.lpf[n]
        a = 0
        while n % P == 0:
            n //= P
            a += 1
        assert t == a


def test_restricted_sum():
    m = _MODELS["steinhaus"]
    f = values_up_to(m, _T, 5000)

    def ok(n, lo, hi):
        return all(lo < p <= hi for p in _prime_factors(n))

    brute = sum(f[n] for n in range(2, 5001) if ok(n, 10, 40))
    assert restricted_sum(m, _T, 5000, 10, 40, d_min=1) == pytest.approx(brute, abs=1e-9)
    rep = sum(f[n] for n in range(101, 5001) if ok(n, 10, 40) and (n % (_T.lpf[n] ** 2) == 0))
    assert restricted_sum(m, _T, 5000, 10, 40, d_min=100, require_repeated_top=True) == pytest.approx(rep, abs=1e-9)
    with pytest.raises(InvalidArgument):
        restricted_sum(m, _T, 5000, 40, 10)


def _prime_factors(n):
    out = set()
    while n > 1:
        p = int(_T.spf[n])
        out.add(p)
        n //= p
    return out


def test_normalizer():
    assert fluctuation_normalizer(math.exp(math.e), 0.5) == pytest.approx(1.0)
    x = 1e8
    assert fluctuation_normalizer(x, 0.25) == pytest.approx(math.log(math.log(x)) ** 0.5)
    assert normalizer_from_log(math.exp(16), 0.25) == pytest.approx(16**0.5)
    with pytest.raises(InvalidArgument):
        fluctuation_normalizer(2.0, 0.1)
    with pytest.raises(InvalidArgument):
        fluctuation_normalizer(100, 0)
