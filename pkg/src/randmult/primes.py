"""Sieve tables and elementary arithmetic functions.

The table stores the smallest prime factor of every integer up to ``limit``
together with a few derived arrays (cofactor, exponent of the smallest prime,
largest prime factor, and the integers grouped by their number of prime
factors).  The grouping lets multiplicative functions be evaluated for all
``n <= limit`` with a couple of dozen vectorised passes instead of a Python
loop over ``n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument

_INT64_MAX = 2**63 - 1


@dataclass(frozen=True)
class PrimeTable:
    """Smallest-prime-factor sieve up to ``limit``.

    Index 0 is unused; index 1 holds the conventions ``spf[1] = lpf[1] = 1``.
    """

    limit: int
    spf: np.ndarray
    primes: np.ndarray
    cofactor: np.ndarray  # n // spf[n]
    spf_exponent: np.ndarray  # v_{spf(n)}(n)
    lpf: np.ndarray  # largest prime factor, lpf[1] = 1
    layers: tuple = field(repr=False)  # integers >= 2 grouped by Omega(n), ascending

    def check_range(self, n: int) -> int:
        n = int(n)
        if n < 1 or n > self.limit:
            raise InvalidArgument(f"n={n} outside [1, {self.limit}]")
        return n

    def is_prime(self, n: int) -> bool:
        n = int(n)
        return 2 <= n <= self.limit and int(self.spf[n]) == n

    def primes_in(self, lo: float, hi: float) -> np.ndarray:
        """Primes p with lo < p <= hi (clipped to the table)."""
        a = np.searchsorted(self.primes, math.floor(lo), side="right") if lo >= 0 else 0
        b = np.searchsorted(self.primes, math.floor(min(hi, self.limit)), side="right")
        return self.primes[a:b]

    def prime_count(self, y: float) -> int:
        if y < 2:
            return 0
        return int(np.searchsorted(self.primes, math.floor(min(y, self.limit)), side="right"))


def build_prime_table(limit: int) -> PrimeTable:
    limit = int(limit)
    if limit < 2:
        raise InvalidArgument(f"limit must be >= 2, got {limit}")
    spf = np.zeros(limit + 1, dtype=np.int64)
    for p in range(2, math.isqrt(limit) + 1):
        if spf[p] == 0:
            seg = spf[p * p :: p]
            seg[seg == 0] = p
    idx = np.arange(limit + 1, dtype=np.int64)
    unset = spf == 0
    spf[unset] = idx[unset]
    spf[0] = 0
    spf[1] = 1
    primes = np.flatnonzero(spf == idx)[2:].astype(np.int64)

    cofactor = np.zeros(limit + 1, dtype=np.int64)
    cofactor[1:] = idx[1:] // spf[1:]

    # Omega(n) by repeatedly stripping the smallest prime factor.
    omega = np.zeros(limit + 1, dtype=np.int64)
    cur = idx.copy()
    active = np.flatnonzero(cur > 1)
    while active.size:
        omega[active] += 1
        cur[active] = cofactor[cur[active]]
        active = active[cur[active] > 1]

    order = np.argsort(omega[2:], kind="stable") + 2
    counts = np.bincount(omega[2:])
    bounds = np.cumsum(counts)
    layers = tuple(
        order[bounds[k - 1] : bounds[k]] for k in range(1, len(counts)) if counts[k]
    )

    spf_exponent = np.zeros(limit + 1, dtype=np.int64)
    spf_exponent[1] = 0
    lpf = np.zeros(limit + 1, dtype=np.int64)
    lpf[1] = 1
    for layer in layers:
        c = cofactor[layer]
        same = spf[c] == spf[layer]
        spf_exponent[layer] = np.where(same, spf_exponent[c] + 1, 1)
        lpf[layer] = np.where(c > 1, lpf[c], spf[layer])

    for arr in (spf, primes, cofactor, spf_exponent, lpf):
        arr.setflags(write=False)
    for layer in layers:
        layer.setflags(write=False)
    return PrimeTable(limit, spf, primes, cofactor, spf_exponent, lpf, layers)


def factorize(table: PrimeTable, n: int) -> list[tuple[int, int]]:
    n = table.check_range(n)
    out: list[tuple[int, int]] = []
    while n > 1:
        p = int(table.spf[n])
        a = 0
        while n % p == 0:
            n //= p
            a += 1
        out.append((p, a))
    return out


def largest_prime_factor(table: PrimeTable, n: int) -> int:
    return int(table.lpf[table.check_range(n)])


def is_squarefree(table: PrimeTable, n: int) -> bool:
    return all(a == 1 for _, a in factorize(table, n))


def squarefree_mask(table: PrimeTable, x: int | None = None) -> np.ndarray:
    """Boolean array over 0..x; entry n is True iff n is squarefree (n >= 1)."""
    x = table.limit if x is None else int(x)
    mask = np.zeros(x + 1, dtype=bool)
    mask[1] = True
    for layer in table.layers:
        layer = layer[layer <= x]
        c = table.cofactor[layer]
        mask[layer] = mask[c] & (table.spf_exponent[layer] == 1)
    return mask


def mertens_sum(table: PrimeTable, a: float, b: float) -> float:
    """Exact sum of 1/p over primes a < p <= b."""
    if a < 0 or b < a:
        raise InvalidArgument(f"need 0 <= a <= b, got a={a}, b={b}")
    if b > table.limit:
        raise InvalidArgument(f"b={b} exceeds sieve limit {table.limit}")
    ps = table.primes_in(a, b)
    return math.fsum(1.0 / ps.astype(np.float64))


def divisor_tau(table: PrimeTable, m: int, n: int) -> int:
    """m-fold divisor function: ordered m-tuples with product n."""
    if m < 1:
        raise InvalidArgument(f"m must be >= 1, got {m}")
    out = 1
    for _, a in factorize(table, n):
        out *= math.comb(a + m - 1, m - 1)
    if out > _INT64_MAX:
        raise OverflowError(f"tau_{m}({n}) exceeds 64-bit range")
    return out


def tau_array(table: PrimeTable, m: int, x: int | None = None) -> np.ndarray:
    """tau_m(n) for n = 0..x (entry 0 is 0), int64, via the multiplicative recurrence."""
    if m < 1:
        raise InvalidArgument(f"m must be >= 1, got {m}")
    x = table.limit if x is None else int(x)
    if x > table.limit:
        raise InvalidArgument(f"x={x} exceeds sieve limit {table.limit}")
    tau = np.zeros(x + 1, dtype=np.int64)
    tau[1] = 1
    with np.errstate(over="raise"):
        for layer in table.layers:
            layer = layer[layer <= x]
            a = table.spf_exponent[layer]
            # tau_m(p^a r) / tau_m(p^(a-1) r) = (a + m - 1) / a
            tau[layer] = tau[table.cofactor[layer]] * (a + m - 1) // a
    return tau


def tau_sum_bound_check(table: PrimeTable, x: float, m: int) -> tuple[int, float, bool]:
    """Compare sum_{n<=x} tau_m(n) with x (2 log x)^(m-1)."""
    if m < 2:
        raise InvalidArgument(f"m must be >= 2, got {m}")
    if x < 3 or x > table.limit:
        raise InvalidArgument(f"x={x} outside [3, {table.limit}]")
    total = int(tau_array(table, m, math.floor(x))[1:].sum())
    bound = x * (2.0 * math.log(x)) ** (m - 1)
    return total, bound, total <= bound


def tau_sum_bound_scan(table: PrimeTable, x_max: int, m: int) -> tuple[bool, int]:
    """Check the divisor-sum bound at every integer 3 <= x <= x_max.

    The partial sum is constant on [n, n+1) while the bound increases, so
    integer points are the worst case.  Returns (all ok, worst x by ratio).
    """
    tau = tau_array(table, m, x_max)
    partial = np.cumsum(tau)
    xs = np.arange(3, x_max + 1, dtype=np.float64)
    bound = xs * (2.0 * np.log(xs)) ** (m - 1)
    ratio = partial[3:] / bound
    worst = int(np.argmax(ratio)) + 3
    return bool(np.all(partial[3:] <= bound)), worst
