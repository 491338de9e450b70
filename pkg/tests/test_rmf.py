import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from randmult import rng
from randmult.errors import InvalidArgument, MissingPrimeValue
from randmult.rmf import (
    Mode,
    RmfModel,
    block_values_batch,
    model_from_descriptor,
    replace_values,
    resample_block,
    sample_model,
    value,
    values_up_to,
)


@pytest.fixture(scope="module", params=["steinhaus", "rademacher"])
def model(request, small_table):
    return sample_model(request.param, 7, small_table.limit, small_table)


def test_a_f():
    t = None
    assert RmfModel(Mode.RADEMACHER, 0, 1, np.zeros(2)).a_f == 1
    assert RmfModel(Mode.STEINHAUS, 0, 1, np.zeros(2)).a_f == -1


def test_determinism_and_descriptor(model, small_table):
    again = model_from_descriptor(model.to_json(), small_table)
    assert np.array_equal(again.prime_values, model.prime_values)


def test_prime_values_range(model, small_table):
    ps = small_table.primes
    if model.mode is Mode.RADEMACHER:
        assert set(np.unique(model.prime_values[ps])) <= {-1, 1}
    else:
        vals = np.array([model.prime_value(int(p)) for p in ps[:200]])
        assert np.allclose(np.abs(vals), 1)


def test_value_examples(model, small_table):
    assert value(model, small_table, 1) == 1
    v6 = value(model, small_table, 6)
    assert v6 == pytest.approx(value(model, small_table, 2) * value(model, small_table, 3), abs=1e-12)
    if model.mode is Mode.RADEMACHER:
        assert value(model, small_table, 4) == 0
        arr = values_up_to(model, small_table, 10)
        assert arr[8] == 0 and arr[9] == 0


def test_values_up_to_spot_check(model, small_table):
    arr = values_up_to(model, small_table, small_table.limit)
    assert values_up_to(model, small_table, 1)[1:].tolist() == [1]
    g = np.random.default_rng(0)
    for n in g.integers(1, small_table.limit + 1, 100):
        assert arr[n] == pytest.approx(value(model, small_table, int(n)), abs=1e-12)


@given(st.integers(2, 140), st.integers(2, 140))
@settings(max_examples=100, deadline=None)
def test_complete_multiplicativity_steinhaus(a, b):
    t = _table()
    m = sample_model("steinhaus", 3, t.limit, t)
    assert value(m, t, a * b) == pytest.approx(value(m, t, a) * value(m, t, b), abs=1e-12)


_CACHE = {}


def _table():
    from randmult.primes import build_prime_table

    if "t" not in _CACHE:
        _CACHE["t"] = build_prime_table(20_000)
    return _CACHE["t"]


def test_missing_prime(small_table):
    m = sample_model("rademacher", 1, 100, small_table)
    with pytest.raises(MissingPrimeValue):
        value(m, small_table, 101)
    with pytest.raises(MissingPrimeValue):
        values_up_to(m, small_table, 200)
    assert values_up_to(m, small_table, 100).size == 101


def test_sample_model_validation(small_table):
    with pytest.raises(InvalidArgument):
        sample_model("gaussian", 1, 100, small_table)
    with pytest.raises(InvalidArgument):
        sample_model("steinhaus", 1, small_table.limit + 1, small_table)


def test_prefix_consistency(small_table):
    # values at small primes do not depend on prime_limit
    a = sample_model("steinhaus", 5, 100, small_table)
    b = sample_model("steinhaus", 5, 10_000, small_table)
    assert np.array_equal(a.prime_values[:101], b.prime_values[:101])


def test_resample_block(model, small_table):
    assert resample_block(model, small_table, 24, 28, 9) is model  # no primes in (24, 28]
    r1 = resample_block(model, small_table, 100, 200, 1)
    r2 = resample_block(model, small_table, 100, 200, 2)
    ps = small_table.primes_in(100, 200)
    keep = small_table.primes_in(0, 100)
    assert np.array_equal(r1.prime_values[keep], model.prime_values[keep])
    assert np.array_equal(r1.prime_values[small_table.primes_in(200, 1000)], model.prime_values[small_table.primes_in(200, 1000)])
    differ = np.mean(r1.prime_values[ps] != r2.prime_values[ps])
    assert differ > (0.99 if model.mode is Mode.STEINHAUS else 0.3)


def test_block_batch_matches_resample(model, small_table):
    seeds = [11, 12, 13]
    rows = block_values_batch(model, small_table, 24, 90, seeds, 5000)
    for s, row in zip(seeds, rows):
        ref = values_up_to(resample_block(model, small_table, 24, 90, s), small_table, 5000)
        assert np.array_equal(row, ref)


def test_replace_values(small_table):
    m = sample_model("steinhaus", 2, 1000, small_table)
    r = replace_values(m, [2, 3], [0.25, 0.5])
    assert r.prime_value(2) == pytest.approx(1j, abs=1e-15)
    assert r.prime_value(3) == pytest.approx(-1, abs=1e-15)
    with pytest.raises(InvalidArgument):
        replace_values(sample_model("rademacher", 2, 1000, small_table), [2], [0])


def test_seed_derivation_is_stable():
    assert rng.derive_seed(1, "a", 2) == rng.derive_seed(1, "a", 2)
    assert rng.derive_seed(1, "a", 2) != rng.derive_seed(1, "a", 3)
    w = rng.hash_words(5, np.arange(10))
    assert np.array_equal(w, rng.hash_words(5, np.arange(10)))
