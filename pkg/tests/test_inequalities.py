import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from randmult.analytic import DirichletPolynomial
from randmult.errors import InvalidArgument, InvalidProcess, UnsupportedMethod
from randmult.inequalities import (
    MdsProcess,
    SupermartingaleFamily,
    conditional_moment_Nij_check,
    doob2d_check,
    fourier_lower_bound_check,
    gaussian_walk_check,
    hoeffding_conditioned_check,
    hoeffding_tail_check,
    hypercontractivity_check,
    lognormal_family,
    mixed_process,
    scaled_sign_process,
    submartingale_absXq_check,
)
from randmult.primes import build_prime_table
from randmult.rmf import sample_model
from randmult.schedule import build_schedule

_T = build_prime_table(20_000)


@pytest.mark.parametrize("mode", ["steinhaus", "rademacher"])
def test_hypercontractivity_m1_is_parseval(mode):
    P = DirichletPolynomial({1: 1, 6: 2j, 10: -1, 15: 0.5})
    r = hypercontractivity_check(mode, _T, P, 1)
    assert r.lhs == pytest.approx(r.rhs, rel=1e-12)


@given(st.integers(0, 10**6), st.integers(2, 4))
@settings(max_examples=20, deadline=None)
def test_hypercontractivity_exact(seed, m):
    g = np.random.default_rng(seed)
    support = [n for n in range(1, 61) if _T.lpf[n] <= 5]
    pick = g.choice(support, size=6, replace=False)
    P = DirichletPolynomial({int(k): complex(g.normal(), g.normal()) for k in pick})
    for mode in ("steinhaus", "rademacher"):
        assert hypercontractivity_check(mode, _T, P, m).ok


def test_hypercontractivity_monte_carlo_agrees_with_exact():
    P = DirichletPolynomial({2: 1, 3: 1, 6: 1, 4: 1})
    ex = hypercontractivity_check("steinhaus", _T, P, 2)
    mc = hypercontractivity_check("steinhaus", _T, P, 2, "monte_carlo", 200_000, seed=3)
    assert abs(mc.lhs - ex.lhs) <= 4 * mc.std_error


def test_hoeffding_unconditional():
    proc = scaled_sign_process(32, 4.0)
    rows = hoeffding_tail_check(proc, [1, 2, 4, 6], 20_000, seed=1)
    assert all(r["ok"] for r in rows)
    with pytest.raises(InvalidProcess):
        hoeffding_tail_check(mixed_process(32, 4.0), [1], 1000)


def test_hoeffding_conditioned():
    rows = hoeffding_conditioned_check(mixed_process(32, 4.0), [1, 3, 6], 20_000, seed=2)
    assert all(r["ok"] for r in rows)


def test_predictability_guard():
    scaled_sign_process(16, 2.0).check_predictable(0)
    calls = {"n": 0}

    def stateful(n, past):
        # not a function of the past alone: changes between regenerations
        calls["n"] += 1
        return np.full(past.shape[0], 1.0 if calls["n"] <= 8 else 0.5)

    with pytest.raises(InvalidProcess):
        MdsProcess(8, 8.0, stateful).check_predictable(0)


def test_validate_rejects_budget_overrun():
    proc = MdsProcess(4, 1.0, lambda n, past: np.full(past.shape[0], 2.0))
    with pytest.raises(InvalidProcess):
        proc.validate(np.ones((1, 4)), np.full((1, 4), 2.0))
    with pytest.raises(InvalidProcess):
        proc.validate(np.full((1, 4), 3.0), np.full((1, 4), 2.0))


def _jump_family(K, lam):
    """X_0 = 1; each column jumps to lam with probability 1/lam at step 1, else 0, then stays."""
    def xi(g, B, n, k):
        out = np.ones((B, n, k))
        out[:, 0, :] = np.where(g.random((B, k)) < 1 / lam, lam, 0.0)
        return out

    return SupermartingaleFamily(K, 2, x0=lambda g, B: np.ones(B), xi=xi, condition=lambda x0: x0 > 0, xi_mean=1.0)


def test_two_parameter_doob_counterexample():
    # lam P[sup > lam'] for lam' just below lam tends to lam (1 - (1 - 1/lam)^K),
    # which exceeds 2 E X_0 = 2 once K >= 3, lam = 4
    K, lam = 3, 4.0
    exact = lam * (1 - (1 - 1 / lam) ** K)
    assert exact > 2
    rows = doob2d_check(_jump_family(K, lam), [lam - 1e-9], 200_000, seed=5)
    assert rows[0]["lhs"] == pytest.approx(exact, rel=0.02)
    assert not rows[0]["ok"]


def test_doob_single_column_holds():
    rows = doob2d_check(lognormal_family(K=1, N=16), [1.5, 3, 6], 50_000, seed=1)
    assert all(r["ok"] for r in rows)


def test_supermartingale_family_validation():
    fam = lognormal_family(drift=-0.5)
    with pytest.raises(InvalidProcess):
        doob2d_check(fam, [2], 100)


def test_fourier_lower_bound():
    assert fourier_lower_bound_check([1, 0.5, 0.5j], 64).ok
    r = fourier_lower_bound_check([1, 1], 64)
    assert r.integral == pytest.approx(4 / math.pi, abs=1e-3)
    with pytest.raises(InvalidArgument):
        fourier_lower_bound_check([1, 1, 1], 8)


def test_gaussian_walk_rows():
    rows = gaussian_walk_check(400, [1, 5, 40], np.ones(400), 2000, seed=0)
    probs = [r["prob"] for r in rows]
    assert probs == sorted(probs)
    assert rows[2]["comparator"] == 1.0
    with pytest.raises(InvalidArgument):
        gaussian_walk_check(10, 0.5, np.ones(10), 10)
    with pytest.raises(InvalidArgument):
        gaussian_walk_check(10, 1, np.full(10, 100.0), 10)


@pytest.mark.parametrize("mode", ["steinhaus", "rademacher"])
def test_submartingale_absXq(mode):
    m = sample_model(mode, 2, _T.limit, _T)
    x, X = 20_000, 50.0
    z = 150.0
    window = (x / (z * (1 + 1 / X)), x / z)
    r = submartingale_absXq_check(m, _T, z, window, x, X)
    assert r.ok


def test_nij_moment():
    S = build_schedule(20_000, 3, 12.5, 2.0, 1e-3, 2, y0=10)
    m = sample_model("steinhaus", 1, _T.limit, _T)
    r = conditional_moment_Nij_check(m, _T, S, 20_000, 1, 2, 2000, seed=3)
    assert r.ok
    with pytest.raises(UnsupportedMethod):
        conditional_moment_Nij_check(sample_model("rademacher", 1, _T.limit, _T), _T, S, 20_000, 1, 2, 2000)
