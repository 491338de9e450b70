"""Partial sums of f: M_f(x), smooth sums Psi_f, windowed sums and counts.

Real-valued bounds are floored once on entry.  Intervals are half-open,
``(z, x]``, as everywhere else in the package.  Rademacher sums are carried
in Python/NumPy integers and are exact; Steinhaus sums are complex128.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument, MissingPrimeValue
from .primes import PrimeTable
from .rmf import Mode, RmfModel, values_up_to, words_to_complex

_BLOCK = 1024
_INT64_LIMIT = 2**62


@dataclass(frozen=True)
class PrefixSumSeries:
    x_max: int
    f_values: np.ndarray  # index 0..x_max, f(0) = 0
    cumulative: np.ndarray  # cumulative[n] = M_f(n)

    @property
    def exact(self) -> bool:
        return self.f_values.dtype.kind == "i"


def blocked_cumsum(values: np.ndarray) -> np.ndarray:
    """Running sums with rounding error growing like sqrt-blocks, not n.

    Integer input is summed exactly.
    """
    values = np.asarray(values)
    if values.dtype.kind in "iu":
        return np.cumsum(values.astype(np.int64))
    n = values.size
    pad = (-n) % _BLOCK
    v = np.concatenate([values, np.zeros(pad, dtype=values.dtype)]).reshape(-1, _BLOCK)
    inner = np.cumsum(v, axis=1)
    totals = v.sum(axis=1)  # pairwise summation inside each block
    offsets = np.concatenate([[0], np.cumsum(totals)[:-1]])
    return (inner + offsets[:, None]).ravel()[:n]


def build_prefix_series(model: RmfModel, table: PrimeTable, x_max: int) -> PrefixSumSeries:
    f = values_up_to(model, table, x_max)
    return PrefixSumSeries(int(x_max), f, blocked_cumsum(f))


def _floor_x(x: float, hi: int, lo: int = 0) -> int:
    xi = math.floor(x)
    if xi < lo or xi > hi:
        raise InvalidArgument(f"x={x} outside [{lo}, {hi}]")
    return xi


def _scalar(v):
    if isinstance(v, (np.integer, int)):
        return int(v)
    return complex(v)


def mf_sum(series: PrefixSumSeries, x: float):
    xi = _floor_x(x, series.x_max, 1)
    return _scalar(series.cumulative[xi])


def _f_array(model: RmfModel, table: PrimeTable, x: int, f: np.ndarray | None) -> np.ndarray:
    if f is not None and f.size > x:
        return f
    return values_up_to(model, table, max(x, 1))


def _masked_sum(vals: np.ndarray):
    if vals.dtype.kind == "i":
        return int(vals.sum())
    return complex(vals.sum())


def psi_sum(model: RmfModel, table: PrimeTable, x: float, y: float, strict: bool = False, f: np.ndarray | None = None):
    """Sum of f(n) over n <= x with P(n) <= y (or P(n) < y when ``strict``)."""
    if y < 1:
        raise InvalidArgument(f"y must be >= 1, got {y}")
    xi = math.floor(x)
    if xi < 1:
        return 0 if model.mode is Mode.RADEMACHER else 0j
    if xi > table.limit:
        return smooth_sum_enumerated(model, x, y, strict, table)
    fv = _f_array(model, table, xi, f)[: xi + 1]
    lpf = table.lpf[: xi + 1]
    mask = lpf < y if strict else lpf <= y
    mask[0] = False
    return _masked_sum(fv[mask])


def psi_range_sum(model: RmfModel, table: PrimeTable, x: float, z: float, y: float, f: np.ndarray | None = None):
    """Sum of f(n) over z < n <= x with P(n) < y."""
    if z < 0 or z > x:
        raise InvalidArgument(f"need 0 <= z <= x, got z={z}, x={x}")
    xi = _floor_x(x, table.limit)
    zi = math.floor(z)
    if xi <= zi:
        return 0 if model.mode is Mode.RADEMACHER else 0j
    fv = _f_array(model, table, xi, f)
    sl = slice(zi + 1, xi + 1)
    mask = table.lpf[sl] < y
    return _masked_sum(fv[sl][mask])


def supported_integers(primes, x_max: float, d_min: float = 0):
    """All d in (d_min, x_max] whose prime factors lie in ``primes``.

    Returns ``(d, top_exponent, exponents)`` where ``top_exponent`` is the
    exponent of the largest prime factor (0 for d = 1) and ``exponents`` is a
    list of ``{prime_index: exponent}`` dicts.  Depth-first generation over
    the (ascending) primes; the cost is proportional to the output size.
    """
    ps = [int(p) for p in primes]
    xm = math.floor(x_max)
    if xm >= _INT64_LIMIT:
        raise InvalidArgument(f"x_max={x_max} too large for int64 enumeration")
    out_d: list[int] = []
    out_top: list[int] = []
    out_exp: list[dict] = []
    if xm >= 1 and d_min < 1:
        out_d.append(1)
        out_top.append(0)
        out_exp.append({})
    stack = [(1, 0, {})]
    while stack:
        d, start, exps = stack.pop()
        for i in range(start, len(ps)):
            p = ps[i]
            if d * p > xm:
                break
            dk, k = d * p, 1
            while dk <= xm:
                e = dict(exps)
                e[i] = k
                if dk > d_min:
                    out_d.append(dk)
                    out_top.append(k)
                    out_exp.append(e)
                stack.append((dk, i + 1, e))
                dk *= p
                k += 1
    order = np.argsort(np.asarray(out_d, dtype=np.int64), kind="stable")
    d_arr = np.asarray(out_d, dtype=np.int64)[order]
    top = np.asarray(out_top, dtype=np.int64)[order]
    exps = [out_exp[i] for i in order]
    return d_arr, top, exps


def values_from_exponents(model: RmfModel, primes, exps) -> np.ndarray:
    """f(d) for integers given by exponent dicts over ``primes``."""
    ps = np.asarray(primes, dtype=np.int64)
    if ps.size and ps.max() > model.prime_limit:
        raise MissingPrimeValue(f"prime {int(ps.max())} beyond prime_limit {model.prime_limit}")
    pv = model.prime_values
    if model.mode is Mode.RADEMACHER:
        out = np.empty(len(exps), dtype=np.int64)
        for t, e in enumerate(exps):
            v = 1
            for i, k in e.items():
                if k > 1:
                    v = 0
                    break
                v *= int(pv[ps[i]])
            out[t] = v
        return out
    words = np.empty(len(exps), dtype=np.uint64)
    for t, e in enumerate(exps):
        words[t] = sum(int(pv[ps[i]]) * k for i, k in e.items()) % 2**64
    return words_to_complex(words)


def smooth_sum_enumerated(model: RmfModel, x: float, y: float, strict: bool, table: PrimeTable):
    """Psi_f(x, y) by enumerating y-smooth integers; works beyond the sieve limit."""
    ybound = math.ceil(y) - 1 if strict and float(y).is_integer() else math.floor(y)
    ps = table.primes_in(0, ybound)
    if ybound > table.limit:
        raise InvalidArgument(f"y={y} exceeds sieve limit")
    d, _, exps = supported_integers(ps, x)
    vals = values_from_exponents(model, ps, exps)
    return _masked_sum(vals)


def restricted_sum(
    model: RmfModel,
    table: PrimeTable,
    x: float,
    y_lo: float,
    y_hi: float,
    d_min: float = 0,
    require_repeated_top: bool = False,
):
    """Sum of f(d) over d_min < d <= x with every prime factor in (y_lo, y_hi].

    With ``require_repeated_top`` only d whose largest prime factor divides it
    at least twice are kept.
    """
    if not y_lo < y_hi:
        raise InvalidArgument(f"need y_lo < y_hi, got ({y_lo}, {y_hi}]")
    if d_min < 0:
        raise InvalidArgument("d_min must be >= 0")
    ps = table.primes_in(y_lo, min(y_hi, x))
    d, top, exps = supported_integers(ps, x, d_min)
    if require_repeated_top:
        keep = top >= 2
        exps = [e for e, k in zip(exps, keep) if k]
    vals = values_from_exponents(model, ps, exps)
    return _masked_sum(vals)


def smooth_count(table: PrimeTable, x: float, y: float) -> int:
    """Number of n <= x with P(n) <= y."""
    xi = math.floor(x)
    if xi < 1:
        return 0
    if xi <= table.limit:
        return int(np.count_nonzero(table.lpf[1 : xi + 1] <= y))
    ps = table.primes_in(0, y)
    return int(supported_integers(ps, xi)[0].size)


def fluctuation_normalizer(x: float, eps: float) -> float:
    """(log log x)^(1/4 + eps)."""
    if not x > math.e:
        raise InvalidArgument(f"x={x} must exceed e")
    return normalizer_from_log(math.log(x), eps)


def normalizer_from_log(log_x: float, eps: float) -> float:
    """Same as :func:`fluctuation_normalizer` given log x, for x beyond float range."""
    if eps <= 0:
        raise InvalidArgument(f"eps must be > 0, got {eps}")
    ll = math.log(log_x)
    if ll < 1 - 1e-12:
        raise InvalidArgument(f"log x={log_x} must be >= e so that log log x >= 1")
    return max(ll, 1.0) ** (0.25 + eps)


def psi_prime_at_primes(fv: np.ndarray, cumulative: np.ndarray, lpf: np.ndarray, x: int, primes) -> np.ndarray:
    """Psi'_f(x/p, p) for each prime p (sum over n <= x/p with P(n) < p).

    For p*p > x every n <= x/p < p qualifies, so the prefix sum is read
    directly; smaller p use a masked sum.
    """
    primes = np.asarray(primes, dtype=np.int64)
    out = np.zeros(primes.size, dtype=fv.dtype if fv.dtype.kind == "c" else np.int64)
    q = x // primes
    big = primes * primes > x
    out[big] = cumulative[q[big]]
    for t in np.flatnonzero(~big):
        qi = int(q[t])
        mask = lpf[1 : qi + 1] < primes[t]
        out[t] = fv[1 : qi + 1][mask].sum()
    return out
