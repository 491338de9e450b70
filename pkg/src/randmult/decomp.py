"""Decomposition of M_f by largest prime factor and the functionals built on it.

Notation: ``Psi'(z, p)`` is the sum of f(n) over n <= z with P(n) < p, and
``h = 1 + 1/X`` with X the schedule's smoothing parameter.  All z- and
t-integrals are integrals of squared step functions and go through
:mod:`randmult.stepint`, so they are exact up to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng
from .errors import InvalidArgument, UnsupportedMethod
from .primes import PrimeTable
from .rmf import Mode, RmfModel, _dense_values, block_values_batch, replace_values, values_up_to
from .schedule import Schedule, g_function  # noqa: F401  (re-exported)
from .stepint import step_integral, step_integral_batch
from .sums import blocked_cumsum, psi_prime_at_primes, supported_integers, values_from_exponents

CSV_HEADER = ("x", "seed", "mode", "psi0_re", "psi0_im", "m1_re", "m1_im", "m2_re", "m2_im", "residual")


def _zero(model: RmfModel):
    return 0 if model.mode is Mode.RADEMACHER else 0j


def _as_scalar(v):
    if isinstance(v, (int, np.integer)):
        return int(v)
    return complex(v)


def _check_x(table: PrimeTable, schedule: Schedule, x: int) -> int:
    xi = int(math.floor(x))
    if xi < 1 or xi > table.limit:
        raise InvalidArgument(f"x={x} outside the sieve range [1, {table.limit}]")
    if xi > schedule.y_grid[-1]:
        raise InvalidArgument(f"x={x} beyond y_J={schedule.y_grid[-1]}; schedule does not cover it")
    return xi


@dataclass
class _PointData:
    x: int
    f: np.ndarray
    cum: np.ndarray
    lpf: np.ndarray


def _point(model: RmfModel, table: PrimeTable, x: int, f: np.ndarray | None = None) -> _PointData:
    if f is None or f.size <= x:
        f = values_up_to(model, table, x)
    f = f[: x + 1]
    return _PointData(x, f, blocked_cumsum(f), table.lpf[: x + 1])


@dataclass(frozen=True)
class DecompositionReport:
    x: int
    seed: int
    mode: str
    psi0: complex
    m1: complex
    m2: complex
    total: complex
    mf: complex
    residual: float

    def csv_row(self) -> list:
        z = [complex(self.psi0), complex(self.m1), complex(self.m2)]
        row = [self.x, self.seed, self.mode]
        for v in z:
            row += [repr(v.real), repr(v.imag)]
        row.append(repr(self.residual))
        return row


@dataclass(frozen=True)
class VarianceReport:
    x: int
    V: float
    per_block: tuple


def _window_primes(table: PrimeTable, schedule: Schedule, x: int, j: int) -> np.ndarray:
    return table.primes_in(schedule.y_grid[j - 1], min(schedule.y_grid[j], x))


def _nij_terms(table: PrimeTable, schedule: Schedule, pt: _PointData, j: int, model: RmfModel):
    """(d, f(d), Psi(x/d, y_{j-1}), exponents, primes) over the N_ij range."""
    x = pt.x
    ylo = schedule.y_grid[j - 1]
    ps = _window_primes(table, schedule, x, j)
    ps = ps[ps * ps <= x]
    d, top, exps = supported_integers(ps, x, d_min=ylo * ylo)
    keep = top >= 2
    d = d[keep]
    exps = [e for e, k in zip(exps, keep) if k]
    if d.size == 0:
        empty = np.zeros(0, dtype=pt.f.dtype)
        return d, empty, empty, exps, ps
    fd = values_from_exponents(model, ps, exps)
    q = x // d
    smooth = pt.f[: int(q.max()) + 1] * (pt.lpf[: int(q.max()) + 1] <= ylo)
    psi = blocked_cumsum(smooth)[q]
    return d, fd, psi, exps, ps


def decompose(model: RmfModel, table: PrimeTable, schedule: Schedule, x: int, f: np.ndarray | None = None) -> DecompositionReport:
    x = _check_x(table, schedule, x)
    pt = _point(model, table, x, f)
    y0 = schedule.y0
    mask0 = pt.lpf <= y0
    mask0[0] = False
    psi0 = _as_scalar(pt.f[mask0].sum())
    ps = table.primes_in(y0, min(schedule.y_grid[-1], x))
    if ps.size:
        yp = pt.f[ps] * psi_prime_at_primes(pt.f, pt.cum, pt.lpf, x, ps)
        m1 = _as_scalar(yp.sum())
    else:
        m1 = _zero(model)
    m2 = _zero(model)
    for j in range(1, schedule.J + 1):
        if schedule.y_grid[j - 1] ** 2 >= x:
            break
        _, fd, psi, _, _ = _nij_terms(table, schedule, pt, j, model)
        m2 = m2 + _as_scalar((fd * psi).sum())
    total = psi0 + m1 + m2
    mf = _as_scalar(pt.cum[x])
    return DecompositionReport(x, model.seed, model.mode.value, psi0, m1, m2, total, mf, float(abs(total - mf)))


def n_ij(model: RmfModel, table: PrimeTable, schedule: Schedule, x: int, j: int, f: np.ndarray | None = None):
    schedule.check_block(j)
    x = _check_x(table, schedule, x)
    pt = _point(model, table, x, f)
    _, fd, psi, _, _ = _nij_terms(table, schedule, pt, j, model)
    return _as_scalar((fd * psi).sum()) if fd.size else _zero(model)


def tau_from_exponents(m: int, exps) -> np.ndarray:
    """tau_m(d) = prod C(a + m - 1, m - 1) over the exponents a of d."""
    out = np.ones(len(exps), dtype=np.float64)
    for t, e in enumerate(exps):
        for a in e.values():
            out[t] *= math.comb(a + m - 1, m - 1)
    return out


def x_ij_weight(model: RmfModel, table: PrimeTable, schedule: Schedule, x: int, j: int, m: int, f: np.ndarray | None = None) -> float:
    schedule.check_block(j)
    if m < 1:
        raise InvalidArgument("m must be >= 1")
    x = _check_x(table, schedule, x)
    pt = _point(model, table, x, f)
    d, _, psi, exps, _ = _nij_terms(table, schedule, pt, j, model)
    if d.size == 0:
        return 0.0
    tau = tau_from_exponents(2 * m - 1, exps)
    return float(np.sum(tau * np.abs(psi) ** 2))


def variance_V(model: RmfModel, table: PrimeTable, schedule: Schedule, x: int, f: np.ndarray | None = None) -> VarianceReport:
    x = _check_x(table, schedule, x)
    pt = _point(model, table, x, f)
    per_block = []
    for j in range(1, schedule.J + 1):
        ps = _window_primes(table, schedule, x, j)
        if ps.size == 0:
            per_block.append(0.0)
            continue
        v = psi_prime_at_primes(pt.f, pt.cum, pt.lpf, x, ps)
        per_block.append(float(np.sum(np.abs(v).astype(np.float64) ** 2)))
    return VarianceReport(x, math.fsum(per_block), tuple(per_block))


def martingale_increment(model: RmfModel, table: PrimeTable, x: int, p: int, f: np.ndarray | None = None):
    """Y_p = f(p) Psi'(x/p, p)."""
    if not table.is_prime(p):
        raise InvalidArgument(f"{p} is not prime")
    x = int(x)
    if p > x:
        raise InvalidArgument(f"need p <= x, got p={p}, x={x}")
    if x > table.limit:
        raise InvalidArgument(f"x={x} beyond sieve limit")
    pt = _point(model, table, x, f)
    v = psi_prime_at_primes(pt.f, pt.cum, pt.lpf, x, [p])[0]
    return _as_scalar(pt.f[p] * v)


def conditional_mean_increment(model: RmfModel, table: PrimeTable, x: int, p: int, nodes: int = 64):
    """Average of Y_p over f(p), other values held fixed.

    Rademacher: the two signs.  Steinhaus: ``nodes`` equally spaced angles,
    which integrates e^(2 pi i k theta) exactly for 0 < |k| < nodes.
    """
    if model.mode is Mode.RADEMACHER:
        vals = [martingale_increment(replace_values(model, [p], [s]), table, x, p) for s in (1, -1)]
    else:
        vals = [martingale_increment(replace_values(model, [p], [k / nodes]), table, x, p) for k in range(nodes)]
    return sum(vals) / len(vals)


# ----------------------------------------------------------------------------
# smoothed functionals


def _psi_prime_pieces(pt: _PointData, p: int, lo: float, hi: float):
    """Step representation of z -> Psi'(z, p) on [lo, hi] (lo >= 1)."""
    ilo = math.floor(lo)
    ihi = math.floor(hi)
    if ilo < p:
        base = pt.cum[ilo]
    else:
        m = pt.lpf[1 : ilo + 1] < p
        base = pt.f[1 : ilo + 1][m].sum()
    ns = np.arange(ilo + 1, ihi + 1)
    ns = ns[pt.lpf[ns] < p]
    starts = np.concatenate([[lo], ns.astype(np.float64)])
    ends = np.full(starts.size, np.inf)
    weights = np.concatenate([[base], pt.f[ns]])
    return starts, ends, weights


@dataclass(frozen=True)
class SmoothedFunctionals:
    x: int
    L1: float
    L12: float
    L2: float
    W: float
    L: float  # unnormalised sum over p of (X/p) int_p^{ph} |Psi'(x/t, p)|^2 dt


def _active_blocks(schedule: Schedule, x: int):
    return [j for j in range(1, schedule.J + 1) if x >= schedule.y_grid[j - 1]]


def smoothed_functionals(model: RmfModel, table: PrimeTable, schedule: Schedule, x: int, f: np.ndarray | None = None) -> SmoothedFunctionals:
    x = _check_x(table, schedule, x)
    pt = _point(model, table, x, f)
    X = schedule.smoothing_X
    h = schedule.h
    ys = schedule.y_grid
    y0 = ys[0]
    blocks = _active_blocks(schedule, x)
    in_l1 = {j: math.log(x) / math.log(ys[j - 1]) <= schedule.block_threshold for j in blocks}

    L1 = L12 = L2 = W = L = 0.0
    # every prime whose window (x/(ph), x/p] meets [x/y_J, x/y_0]
    for p in table.primes_in(y0 / h, min(ys[-1], x)):
        p = int(p)
        lo, hi = max(x / (p * h), 1.0), x / p
        if hi < 1:
            continue
        s, e, w = _psi_prime_pieces(pt, p, lo, hi)
        coef = X / p
        for j in blocks:
            a, b = max(lo, x / ys[j]), min(hi, x / ys[j - 1])
            if b > a:
                v = coef * step_integral(s, e, w, a, b)
                if in_l1[j]:
                    L1 += v
                else:
                    L12 += v
        j = schedule.block_of(p)
        if p > y0 and 1 <= j <= schedule.J:
            b = min(hi, x / ys[j])
            if b > lo:
                L2 += coef * step_integral(s, e, w, lo, b)
            L += x * coef * step_integral(s, e, w, lo, hi)
            # W in the t variable: n in (x/(ph), x/p] switches on at t = x/n
            ns = np.arange(math.floor(x / (p * h)) + 1, x // p + 1)
            ns = ns[pt.lpf[ns] < p]
            if ns.size:
                W += coef * step_integral(x / ns, np.full(ns.size, np.inf), pt.f[ns], p, p * h, "lebesgue")
    return SmoothedFunctionals(x, L1, L12, L2, W, L)


# ----------------------------------------------------------------------------
# lambda functionals


def lambda_k(model: RmfModel, table: PrimeTable, schedule: Schedule, x: int, j: int, k: int, f: np.ndarray | None = None) -> float:
    schedule.check_block(j)
    if k not in (1, 2, 3):
        raise InvalidArgument(f"k must be 1, 2 or 3, got {k}")
    x = _check_x(table, schedule, x)
    pt = _point(model, table, x, f)
    yj, yprev = schedule.y_grid[j], schedule.y_grid[j - 1]
    A, B = x / yj, x / yprev
    if B <= 1:
        return 0.0
    A = max(A, 1.0)
    ns = np.arange(1, math.floor(B) + 1)
    P = pt.lpf[ns].astype(np.float64)
    h = schedule.h
    if k == 1:
        val = step_integral(ns.astype(np.float64), x / P, pt.f[ns], A, B)
    elif k == 3:
        starts = np.maximum(ns, x / (P * h))
        val = step_integral(starts, x / P, pt.f[ns], A, B)
    else:
        val = _lambda2_integral(pt, table, x, A, B, h)
    return val / math.log(yj)


def _lambda2_integral(pt: _PointData, table: PrimeTable, x: int, A: float, B: float, h: float) -> float:
    """int_A^B sup_q |sum_{n<=z, x/(zh) < P(n) < q} f(n)|^2 dz/z^2, q prime in (x/(zh), x/z]."""
    qs = table.primes_in(x / (B * h) - 1, x / A + 1)
    if qs.size == 0:
        return 0.0
    pts = {A, B}
    for n in range(math.ceil(A), math.floor(B) + 1):
        pts.add(float(n))
    for q in qs:
        pts.update((x / q, x / (q * h)))
    grid = np.array(sorted(v for v in pts if A <= v <= B))
    mids = 0.5 * (grid[:-1] + grid[1:])
    widths = 1.0 / grid[:-1] - 1.0 / grid[1:]
    # n <= B grouped by largest prime factor, prefix sums per prime
    nmax = math.floor(B)
    ns = np.arange(1, nmax + 1)
    P = pt.lpf[ns]
    groups = {}
    for q in qs:
        sel = ns[P == q]
        groups[int(q)] = (sel, np.cumsum(pt.f[sel]))
    zero = pt.f[:1].sum() * 0
    total = 0.0
    for z, wdt in zip(mids, widths):
        lo_p, hi_p = x / (z * h), x / z
        window = [int(q) for q in qs if lo_p < q <= hi_p]
        best = 0.0
        run = zero
        for q in window:
            # sup over q includes the empty sum (q = smallest window prime)
            best = max(best, float(abs(run) ** 2))
            sel, cs = groups[q]
            c = np.searchsorted(sel, z, side="right")
            if c:
                run = run + cs[c - 1]
        total += best * wdt
    return total


# ----------------------------------------------------------------------------
# supermartingale U


def _u_prefactor(schedule: Schedule, j: int) -> float:
    ly = math.log(schedule.y_grid[j])
    return (1.0 / ly) * (ly / math.log(schedule.y0)) ** (-1.0 / schedule.ell**schedule.bigK)


def _u_array_intervals(table: PrimeTable, schedule: Schedule, x: int, j: int, nmax: int):
    """Intervals of z -> Psi(z, g_j(z)) contributed by n <= nmax."""
    y0, yj = schedule.y0, schedule.y_grid[j]
    ns = np.arange(1, nmax + 1)
    P = table.lpf[ns].astype(np.float64)
    ends = np.where(P <= y0, np.inf, x / P)
    keep = (P <= yj) & (ns <= ends)
    return ns[keep], ns[keep].astype(np.float64), ends[keep]


def smooth_tail_bound(table: PrimeTable, y0: float, z_cap: float) -> float:
    """Bound for int_{z_cap}^inf Psi_1(z, y0)^2 dz/z^2.

    Each y0-smooth n <= z has exponent a_p <= log z/log p at each p <= y0, so
    Psi_1(z, y0) <= prod_{p<=y0} (1 + log z/log p) =: Q(log z), a polynomial
    of degree pi(y0).  With u = log z the tail is int_c^inf Q(u)^2 e^{-u} du,
    and int_c^inf u^k e^{-u} du = e^{-c} sum_{i<=k} k!/i! c^i.
    """
    ps = table.primes_in(0, y0)
    poly = np.polynomial.Polynomial([1.0])
    for p in ps:
        poly = poly * np.polynomial.Polynomial([1.0, 1.0 / math.log(p)])
    sq = (poly * poly).coef
    c = math.log(z_cap)
    total = 0.0
    for k, a in enumerate(sq):
        # e^{-c} * sum_i k!/i! c^i computed term by term
        term, acc = 1.0, 1.0
        for i in range(k, 0, -1):
            term *= i / c if c > 0 else 0.0
            acc += term
        total += a * acc * c**k
    return total * math.exp(-c)


def _smooth_tail_integral(model: RmfModel, table: PrimeTable, y0: float, a: float, b: float) -> float:
    """int_a^b |Psi(z, y0)|^2 dz/z^2 by enumerating y0-smooth n <= b."""
    ps = table.primes_in(0, y0)
    d, _, exps = supported_integers(ps, b)
    w = values_from_exponents(model, ps, exps)
    return step_integral(d.astype(np.float64), np.full(d.size, np.inf), w, a, b)


def supermartingale_U(
    model: RmfModel, table: PrimeTable, schedule: Schedule, x: int, j: int, z_cap: float, f: np.ndarray | None = None
) -> tuple[float, float]:
    if not 0 <= j <= schedule.J:
        raise InvalidArgument(f"j={j} outside 0..{schedule.J}")
    x = _check_x(table, schedule, x)
    y0 = schedule.y0
    split = x / y0
    if z_cap < split:
        raise InvalidArgument(f"z_cap={z_cap} below x/y0={split}")
    nmax = math.floor(split)
    f = values_up_to(model, table, max(nmax, 1)) if f is None or f.size <= nmax else f
    idx, s, e = _u_array_intervals(table, schedule, x, j, nmax)
    head = step_integral(s, e, f[idx], 1.0, split) if nmax >= 1 else 0.0
    tail = _smooth_tail_integral(model, table, y0, split, z_cap)
    pref = _u_prefactor(schedule, j)
    return pref * (head + tail), pref * smooth_tail_bound(table, y0, z_cap)


@dataclass(frozen=True)
class SupermartingaleStep:
    lhs_estimate: float
    std_error: float
    rhs: float
    b: float
    u_prev: float
    trials: int
    method: str
    ok: bool


def supermartingale_b(table: PrimeTable, schedule: Schedule, j: int) -> float:
    ylo, yhi = schedule.y_grid[j - 1], schedule.y_grid[j]
    if yhi > table.limit:
        raise InvalidArgument(f"y_{j}={yhi} beyond the sieve limit; b needs every prime in the block")
    ps = table.primes_in(ylo, yhi)
    log_prod = -float(np.sum(np.log1p(-1.0 / ps.astype(np.float64))))
    ell = schedule.ell
    return math.exp(log_prod - 1.0 / ell - 1.0 / ell ** (schedule.bigK + 1))


def check_supermartingale_step(
    model: RmfModel,
    table: PrimeTable,
    schedule: Schedule,
    x: int,
    j: int,
    trials: int,
    seed: int = 0,
    method: str = "auto",
    z_cap: float | None = None,
    batch: int = 128,
) -> SupermartingaleStep:
    """Compare E[U_j | F_{y_{j-1}}] with b U_{j-1} by resampling block j.

    Values at primes <= y_{j-1} stay frozen.  Only block primes up to
    x/y_{j-1} can reach U_j; for Rademacher, if there are at most 16 of them,
    ``method="auto"`` enumerates all sign patterns instead of sampling.
    """
    schedule.check_block(j)
    if trials < 100:
        raise InvalidArgument("trials must be >= 100")
    x = _check_x(table, schedule, x)
    ylo, yhi = schedule.y_grid[j - 1], schedule.y_grid[j]
    z_cap = z_cap if z_cap is not None else x / schedule.y0
    b = supermartingale_b(table, schedule, j)
    u_prev, _ = supermartingale_U(model, table, schedule, x, j - 1, z_cap)

    split = x / ylo  # U_j's integrand depends on the block only for z < x/y_{j-1}
    nvar = math.floor(min(split, x / schedule.y0))
    pref = _u_prefactor(schedule, j)
    full, _ = supermartingale_U(model, table, schedule, x, j, z_cap)
    block_ps = table.primes_in(ylo, min(yhi, nvar))
    if nvar < 1 or block_ps.size == 0:
        ok = full <= b * u_prev
        return SupermartingaleStep(full, 0.0, b * u_prev, b, u_prev, 0, "deterministic", ok)

    base = values_up_to(model, table, nvar)
    idx, s, e = _u_array_intervals(table, schedule, x, j, nvar)
    # the part of U_j not touched by the block: full minus the variable range
    var_base = step_integral(s, e, base[idx], 1.0, split) if s.size else 0.0
    fixed = full / pref - var_base

    if method == "auto":
        method = "exact" if model.mode is Mode.RADEMACHER and block_ps.size <= 16 else "monte_carlo"
    if method == "exact":
        if model.mode is not Mode.RADEMACHER:
            raise UnsupportedMethod("exact block enumeration is only available for Rademacher")
        k = block_ps.size
        signs = 1 - 2 * ((np.arange(2**k)[:, None] >> np.arange(k)[None, :]) & 1)
        rows = _rademacher_rows(model, table, block_ps, signs, nvar)
        vals = step_integral_batch(s, e, rows[:, idx], 1.0, split)
        lhs = pref * (fixed + float(vals.mean()))
        return SupermartingaleStep(lhs, 0.0, b * u_prev, b, u_prev, 2**k, "exact", lhs <= b * u_prev)

    seeds = [rng.derive_seed(seed, "super-step", j, t) for t in range(trials)]
    acc = []
    for start in range(0, trials, batch):
        rows = block_values_batch(model, table, ylo, yhi, seeds[start : start + batch], nvar)
        acc.append(step_integral_batch(s, e, rows[:, idx], 1.0, split))
    vals = pref * (fixed + np.concatenate(acc))
    lhs = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(trials))
    rhs = b * u_prev
    return SupermartingaleStep(lhs, se, rhs, b, u_prev, trials, "monte_carlo", lhs <= rhs + 3 * se)


def _rademacher_rows(model: RmfModel, table: PrimeTable, primes: np.ndarray, signs: np.ndarray, x: int) -> np.ndarray:
    """f(0..x) for each row of explicit signs at ``primes``."""
    B = signs.shape[0]
    pv = np.broadcast_to(_dense_values(model, x), (B, x + 1)).astype(np.int64)
    pv[:, primes] = signs
    out = np.zeros((B, x + 1), dtype=np.int64)
    out[:, 1] = 1
    for layer in table.layers:
        layer = layer[layer <= x]
        if not layer.size:
            break
        step = (table.spf_exponent[layer] == 1).astype(np.int64)
        out[:, layer] = out[:, table.cofactor[layer]] * pv[:, table.spf[layer]] * step
    return out
