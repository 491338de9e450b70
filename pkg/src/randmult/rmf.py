"""Steinhaus and Rademacher random multiplicative functions.

Steinhaus values are stored as angles in fixed point: a word ``w`` in
``[0, 2**64)`` stands for ``f(p) = exp(2*pi*i * w / 2**64)``.  Angle addition
modulo ``2**64`` is exact, so complete multiplicativity holds bit-for-bit and
``|f(n)| = 1`` by construction.  Rademacher values are int8 signs.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .errors import InvalidArgument, MissingPrimeValue
from .primes import PrimeTable, factorize

_TWO_PI_OVER_2_64 = 2.0 * np.pi / 2.0**64


class Mode(str, enum.Enum):
    STEINHAUS = "steinhaus"
    RADEMACHER = "rademacher"

    @classmethod
    def parse(cls, value: "Mode | str") -> "Mode":
        if isinstance(value, Mode):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise InvalidArgument(f"unknown mode {value!r}") from None


@dataclass(frozen=True)
class RmfModel:
    """One realisation of f.  ``prime_values`` is dense over 0..prime_limit.

    Entries at non-primes are meaningless; for Steinhaus the dtype is uint64
    (angle words), for Rademacher int8 (signs).
    """

    mode: Mode
    seed: int
    prime_limit: int
    prime_values: np.ndarray = field(repr=False, compare=False)

    @property
    def a_f(self) -> int:
        return 1 if self.mode is Mode.RADEMACHER else -1

    def angle(self, p: int) -> float:
        """Angle in [0, 1) of a Steinhaus prime value."""
        return float(self.prime_values[p]) / 2.0**64

    def prime_value(self, p: int) -> complex | int:
        self._check_prime_covered(p)
        if self.mode is Mode.RADEMACHER:
            return int(self.prime_values[p])
        return complex(np.exp(1j * _TWO_PI_OVER_2_64 * float(self.prime_values[p])))

    def descriptor(self) -> dict:
        return {"mode": self.mode.value, "seed": int(self.seed), "prime_limit": int(self.prime_limit)}

    def to_json(self) -> str:
        return json.dumps(self.descriptor(), sort_keys=True)

    def _check_prime_covered(self, p: int) -> None:
        if p > self.prime_limit:
            raise MissingPrimeValue(f"no value sampled for prime {p} > prime_limit {self.prime_limit}")


def _words_to_values(mode: Mode, words: np.ndarray) -> np.ndarray:
    if mode is Mode.STEINHAUS:
        return words
    # top bit picks the sign
    return np.where(words >> np.uint64(63), 1, -1).astype(np.int8)


def sample_model(mode: Mode | str, seed: int, prime_limit: int, table: PrimeTable) -> RmfModel:
    mode = Mode.parse(mode)
    prime_limit = int(prime_limit)
    if prime_limit > table.limit:
        raise InvalidArgument(f"prime_limit {prime_limit} exceeds table limit {table.limit}")
    if prime_limit < 1:
        raise InvalidArgument("prime_limit must be >= 1")
    ps = table.primes_in(0, prime_limit)
    words = rng.hash_words(seed, ps)
    dtype = np.uint64 if mode is Mode.STEINHAUS else np.int8
    values = np.zeros(prime_limit + 1, dtype=dtype)
    values[ps] = _words_to_values(mode, words)
    values.setflags(write=False)
    return RmfModel(mode, int(seed), prime_limit, values)


def model_from_descriptor(desc: dict | str, table: PrimeTable) -> RmfModel:
    if isinstance(desc, str):
        desc = json.loads(desc)
    return sample_model(desc["mode"], desc["seed"], desc["prime_limit"], table)


def replace_values(model: RmfModel, primes, values) -> RmfModel:
    """Copy of ``model`` with the given primes set to explicit values.

    Steinhaus values are angles in [0, 1) (floats) or raw uint64 words;
    Rademacher values are signs.
    """
    primes = np.atleast_1d(np.asarray(primes, dtype=np.int64))
    if primes.size and primes.max() > model.prime_limit:
        raise MissingPrimeValue(f"prime {int(primes.max())} beyond prime_limit")
    new = model.prime_values.copy()
    vals = np.atleast_1d(np.asarray(values))
    if model.mode is Mode.STEINHAUS:
        if vals.dtype != np.uint64:
            vals = angles_to_words(vals.astype(np.float64))
        new[primes] = vals
    else:
        if np.any((vals != 1) & (vals != -1)):
            raise InvalidArgument("Rademacher values must be +-1")
        new[primes] = vals.astype(np.int8)
    new.setflags(write=False)
    return RmfModel(model.mode, model.seed, model.prime_limit, new)


def angles_to_words(theta: np.ndarray) -> np.ndarray:
    frac = np.mod(np.asarray(theta, dtype=np.float64), 1.0)
    # 2**64 * frac can round up to 2**64 for frac just below 1
    return np.minimum(np.floor(frac * 2.0**64), 2.0**64 - 2048).astype(np.uint64)


def words_to_complex(words: np.ndarray) -> np.ndarray:
    return np.exp(1j * _TWO_PI_OVER_2_64 * np.asarray(words).astype(np.float64))


def value(model: RmfModel, table: PrimeTable, n: int) -> complex | int:
    """f(n).  Rademacher returns an int in {-1, 0, 1}; Steinhaus a unit complex."""
    fac = factorize(table, n)
    if fac and fac[-1][0] > model.prime_limit:
        raise MissingPrimeValue(f"prime factor {fac[-1][0]} of {n} beyond prime_limit {model.prime_limit}")
    if model.mode is Mode.RADEMACHER:
        out = 1
        for p, a in fac:
            if a > 1:
                return 0
            out *= int(model.prime_values[p])
        return out
    w = sum(int(model.prime_values[p]) * a for p, a in fac) % 2**64
    return complex(words_to_complex(np.array([w], dtype=np.uint64))[0])


def _check_bulk(model: RmfModel, table: PrimeTable, x: int) -> None:
    if x < 1 or x > table.limit:
        raise InvalidArgument(f"x={x} outside [1, {table.limit}]")
    if x > model.prime_limit:
        # a prime in (prime_limit, x] would be needed
        if table.prime_count(x) > table.prime_count(model.prime_limit):
            raise MissingPrimeValue(f"primes up to {x} needed, model covers {model.prime_limit}")


def angle_words_up_to(model: RmfModel, table: PrimeTable, x: int) -> np.ndarray:
    """Steinhaus angle words of f(0..x); entry 0 is unused."""
    if model.mode is not Mode.STEINHAUS:
        raise InvalidArgument("angle words exist only for Steinhaus models")
    x = int(x)
    _check_bulk(model, table, x)
    w = np.zeros(x + 1, dtype=np.uint64)
    pv = model.prime_values
    for layer in table.layers:
        layer = layer[layer <= x]
        if not layer.size:
            break
        w[layer] = w[table.cofactor[layer]] + pv[table.spf[layer]]
    return w


def values_up_to(model: RmfModel, table: PrimeTable, x: int) -> np.ndarray:
    """Dense f(0..x) with f(0) = 0.

    Rademacher: int64 in {-1, 0, 1}.  Steinhaus: complex128.
    """
    x = int(x)
    _check_bulk(model, table, x)
    if model.mode is Mode.STEINHAUS:
        out = words_to_complex(angle_words_up_to(model, table, x))
        out[0] = 0
        return out
    s = np.zeros(x + 1, dtype=np.int64)
    s[1] = 1
    pv = model.prime_values
    for layer in table.layers:
        layer = layer[layer <= x]
        if not layer.size:
            break
        sq_free_step = table.spf_exponent[layer] == 1
        s[layer] = s[table.cofactor[layer]] * pv[table.spf[layer]] * sq_free_step
    return s


def resample_block(model: RmfModel, table: PrimeTable, p_lo: float, p_hi: float, block_seed: int) -> RmfModel:
    """Redraw the values at primes in (p_lo, p_hi] from the stream of ``block_seed``."""
    if not p_lo < p_hi or p_hi > model.prime_limit:
        raise InvalidArgument(f"need p_lo < p_hi <= prime_limit, got ({p_lo}, {p_hi}]")
    ps = table.primes_in(p_lo, p_hi)
    if not ps.size:
        return model
    words = rng.hash_words(block_seed, ps)
    return replace_values(model, ps, _words_to_values(model.mode, words))


def _dense_values(model: RmfModel, x: int) -> np.ndarray:
    pv = model.prime_values[: x + 1]
    if pv.size < x + 1:
        pv = np.concatenate([pv, np.zeros(x + 1 - pv.size, dtype=pv.dtype)])
    return pv


def block_values_batch(
    model: RmfModel, table: PrimeTable, p_lo: float, p_hi: float, block_seeds, x: int
) -> np.ndarray:
    """f(0..x) for many block resamplings at once, one row per block seed.

    Row t equals ``values_up_to(resample_block(model, ..., block_seeds[t]), x)``.
    """
    x = int(x)
    _check_bulk(model, table, x)
    seeds = [int(s) for s in block_seeds]
    ps = table.primes_in(p_lo, min(p_hi, x))
    B = len(seeds)
    if model.mode is Mode.STEINHAUS:
        pv = np.broadcast_to(_dense_values(model, x), (B, x + 1)).copy()
        for t, s in enumerate(seeds):
            pv[t, ps] = rng.hash_words(s, ps)
        w = np.zeros((B, x + 1), dtype=np.uint64)
        for layer in table.layers:
            layer = layer[layer <= x]
            if not layer.size:
                break
            w[:, layer] = w[:, table.cofactor[layer]] + pv[:, table.spf[layer]]
        out = words_to_complex(w)
        out[:, 0] = 0
        return out
    pv = np.broadcast_to(_dense_values(model, x), (B, x + 1)).astype(np.int64)
    for t, s in enumerate(seeds):
        pv[t, ps] = _words_to_values(model.mode, rng.hash_words(s, ps))
    out = np.zeros((B, x + 1), dtype=np.int64)
    out[:, 1] = 1
    for layer in table.layers:
        layer = layer[layer <= x]
        if not layer.size:
            break
        step = (table.spf_exponent[layer] == 1).astype(np.int64)
        out[:, layer] = out[:, table.cofactor[layer]] * pv[:, table.spf[layer]] * step
    return out
