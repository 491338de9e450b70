"""Simulation harnesses for the martingale and moment inequalities.

Every harness validates the invariants of the process it is handed on each
trial; a violation raises :class:`InvalidProcess` instead of being skipped.
Monte Carlo verdicts are one-sided with 3 standard errors of slack.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from . import rng
from .analytic import DirichletPolynomial
from .decomp import _check_x, _nij_terms, _point, x_ij_weight
from .errors import InsufficientConditioningMass, InvalidArgument, InvalidProcess, UnsupportedMethod
from .primes import PrimeTable, divisor_tau, factorize
from .rmf import Mode, RmfModel
from .schedule import Schedule

_TOL = 1e-12


def binomial_se(p: float, trials: int) -> float:
    return max(math.sqrt(p * (1 - p) / trials), 1.0 / trials)


def verdict(name: str, params: dict, estimates: dict, ok: bool, errors: dict | None = None) -> dict:
    """JSON-ready record shared by every check."""
    return {"check_name": name, "params": params, "estimates": estimates, "errors": errors or {}, "ok": bool(ok)}


# ----------------------------------------------------------------------------
# hypercontractivity


@dataclass(frozen=True)
class MomentComparison:
    lhs: float
    rhs: float
    ok: bool
    std_error: float = 0.0
    method: str = "exact"


def _support_structure(table: PrimeTable, n: np.ndarray):
    facs = [factorize(table, int(k)) for k in n]
    primes = sorted({p for f in facs for p, _ in f})
    index = {p: i for i, p in enumerate(primes)}
    E = np.zeros((n.size, len(primes)), dtype=np.int64)
    for r, f in enumerate(facs):
        for p, a in f:
            E[r, index[p]] = a
    return np.array(primes, dtype=np.int64), E


def hypercontractivity_check(
    mode, table: PrimeTable, poly: DirichletPolynomial, m: int, method: str = "exact", trials: int = 0, seed: int = 0
) -> MomentComparison:
    """E|sum a_n f(n)|^(2m) against (sum |a_n|^2 tau_{2m-1}(n))^m.

    ``exact`` enumerates sign patterns (Rademacher) or averages over a torus
    grid with more than m*max_exponent points per prime (Steinhaus), which
    integrates the trigonometric polynomial |.|^(2m) without error.
    """
    mode = Mode.parse(mode)
    if m < 1:
        raise InvalidArgument("m must be >= 1")
    n, a = poly.arrays()
    if n.size == 0:
        return MomentComparison(0.0, 0.0, True, 0.0, method)
    tau = np.array([divisor_tau(table, 2 * m - 1, int(k)) for k in n], dtype=np.float64)
    rhs = float(np.sum(np.abs(a) ** 2 * tau)) ** m
    primes, E = _support_structure(table, n)
    k = primes.size
    if method == "exact":
        if mode is Mode.RADEMACHER:
            if k > 20:
                raise UnsupportedMethod("exact Rademacher enumeration limited to 20 primes")
            sqfree = (E <= 1).all(axis=1)
            signs = 1 - 2 * ((np.arange(2**k)[:, None] >> np.arange(k)[None, :]) & 1)
            # f(n) = prod over p | n of s_p, zero unless squarefree
            fn = np.where(E[None, :, :] == 1, signs[:, None, :], 1).prod(axis=2) * sqfree[None, :]
            lhs = float(np.mean(np.abs(fn @ a) ** (2 * m)))
        else:
            M = m * int(E.max()) + 1
            if M**k > 2_000_000:
                raise UnsupportedMethod(f"torus grid of {M}^{k} points is too large")
            grid = np.array(list(itertools.product(range(M), repeat=k)), dtype=np.float64) / M
            phase = np.exp(2j * math.pi * (grid @ E.T.astype(np.float64)))
            lhs = float(np.mean(np.abs(phase @ a) ** (2 * m)))
        return MomentComparison(lhs, rhs, lhs <= rhs * (1 + _TOL) + _TOL, 0.0, "exact")
    if method != "monte_carlo":
        raise UnsupportedMethod(f"unknown method {method!r}")
    if trials < 2:
        raise InvalidArgument("trials must be >= 2")
    g = rng.generator(seed, "hyper")
    if mode is Mode.RADEMACHER:
        s = g.choice([-1.0, 1.0], size=(trials, k))
        fn = np.where(E[None, :, :] == 1, s[:, None, :], 1).prod(axis=2) * (E <= 1).all(axis=1)[None, :]
    else:
        th = g.random((trials, k))
        fn = np.exp(2j * math.pi * (th @ E.T.astype(np.float64)))
    v = np.abs(fn @ a) ** (2 * m)
    lhs = float(v.mean())
    se = float(v.std(ddof=1) / math.sqrt(trials))
    return MomentComparison(lhs, rhs, lhs - 3 * se <= rhs, se, "monte_carlo")


# ----------------------------------------------------------------------------
# martingale difference processes


@dataclass
class MdsProcess:
    """Z_n = S_n * xi_n with S_n a function of Z_1..Z_{n-1} and |xi_n| <= 1, E xi_n = 0.

    ``scale(n, past)`` receives the B x (n-1) array of earlier Z's and
    returns S_n for every row.  The innovations of step n come from a stream
    keyed by (trial seed, n), so altering the seeds of later steps must leave
    S_n unchanged; :meth:`check_predictable` verifies exactly that.
    """

    N: int
    T: float
    scale: Callable[[int, np.ndarray], np.ndarray]
    innovation: str = "rademacher"
    unconditional: bool = True

    def _xi(self, seed: int, n: int, B: int) -> np.ndarray:
        g = rng.generator(seed, "mds", n)
        if self.innovation == "rademacher":
            return g.choice([-1.0, 1.0], size=B)
        if self.innovation == "steinhaus":
            return np.exp(2j * math.pi * g.random(B))
        raise InvalidArgument(f"unknown innovation {self.innovation!r}")

    def generate(self, seed: int, B: int, alter_from: int | None = None):
        dtype = np.complex128 if self.innovation == "steinhaus" else np.float64
        Z = np.zeros((B, self.N), dtype=dtype)
        S = np.zeros((B, self.N))
        for n in range(1, self.N + 1):
            S[:, n - 1] = self.scale(n, Z[:, : n - 1])
            s = seed if alter_from is None or n < alter_from else rng.derive_seed(seed, "altered")
            Z[:, n - 1] = S[:, n - 1] * self._xi(s, n, B)
        return Z, S

    def validate(self, Z: np.ndarray, S: np.ndarray) -> None:
        if np.any(S < 0):
            raise InvalidProcess("negative scale S_n")
        if np.any(np.abs(Z) > S * (1 + 1e-12) + 1e-15):
            raise InvalidProcess("|Z_n| exceeds S_n")
        if self.unconditional and np.any(np.sum(S**2, axis=1) > self.T * (1 + 1e-12)):
            raise InvalidProcess("sum of S_n^2 exceeds T for an unconditional process")

    def check_predictable(self, seed: int, B: int = 64, cuts=None) -> None:
        Z, S = self.generate(seed, B)
        for c in cuts or sorted({2, self.N // 2, self.N}):
            _, S2 = self.generate(seed, B, alter_from=c)
            if not np.array_equal(S[:, :c], S2[:, :c]):
                raise InvalidProcess(f"S_{c} depends on innovations at or after step {c}")


def scaled_sign_process(N: int, T: float) -> MdsProcess:
    """S_n = b (1 + tanh(Re sum_{m<n} Z_m)/2) / 1.5 with b = sqrt(T/N); sum S^2 <= T."""
    b = math.sqrt(T / N)

    def scale(n, past):
        return b * (1 + 0.5 * np.tanh(past.real.sum(axis=1))) / 1.5

    return MdsProcess(N, T, scale)


def mixed_process(N: int, T: float) -> MdsProcess:
    """About half the trials (those with Z_1 > 0) blow the budget sum S^2 <= T."""
    b = math.sqrt(T / N)

    def scale(n, past):
        if n == 1:
            return np.full(past.shape[0], b)
        return np.where(past[:, 0].real > 0, 2 * b, b * 0.9)

    return MdsProcess(N, T, scale, unconditional=False)


def _bound(eps: float, T: float) -> float:
    return 2 * math.exp(-eps * eps / (10 * T)) if T > 0 else 0.0


def _simulate(proc: MdsProcess, trials: int, seed: int, chunk: int):
    sums, budgets = [], []
    for c, start in enumerate(range(0, trials, chunk)):
        B = min(chunk, trials - start)
        Z, S = proc.generate(rng.derive_seed(seed, "chunk", c), B)
        proc.validate(Z, S)
        sums.append(np.abs(Z.sum(axis=1)))
        budgets.append(np.sum(S**2, axis=1))
    return np.concatenate(sums), np.concatenate(budgets)


def hoeffding_tail_check(proc: MdsProcess, eps_grid, trials: int, seed: int = 0, chunk: int = 20000) -> list[dict]:
    if not proc.unconditional:
        raise InvalidProcess("the unconditional tail bound needs a process with sum S^2 <= T surely")
    proc.check_predictable(seed)
    sums, _ = _simulate(proc, trials, seed, chunk)
    rows = []
    for eps in eps_grid:
        p = float(np.mean(sums >= eps))
        bound = _bound(eps, proc.T)
        se = binomial_se(p, trials)
        rows.append({"eps": float(eps), "empirical": p, "bound": bound, "std_error": se, "ok": p <= bound + 3 * se})
    return rows


def hoeffding_conditioned_check(proc: MdsProcess, eps_grid, trials: int, seed: int = 0, chunk: int = 20000) -> list[dict]:
    proc.check_predictable(seed)
    checker = MdsProcess(proc.N, proc.T, proc.scale, proc.innovation, unconditional=False)
    sums, budgets = _simulate(checker, trials, seed, chunk)
    inside = budgets <= proc.T * (1 + 1e-12)
    rows = []
    for eps in eps_grid:
        p = float(np.mean((sums >= eps) & inside))
        bound = _bound(eps, proc.T)
        se = binomial_se(p, trials)
        rows.append({"eps": float(eps), "empirical_joint": p, "bound": bound, "std_error": se, "ok": p <= bound + 3 * se})
    return rows


# ----------------------------------------------------------------------------
# two-parameter Doob


@dataclass
class SupermartingaleFamily:
    """X_{n,k} = X_0 prod_{m<=n} xi_{m,k} with xi >= 0 and E xi <= 1.

    ``x0(g, B)`` draws the common start, ``xi(g, B, N, K)`` the factors, and
    ``condition(x0)`` is the event S_0 as a mask.  ``xi_mean`` is the
    declared E xi, checked to be <= 1.
    """

    K_count: int
    N_count: int
    x0: Callable
    xi: Callable
    condition: Callable
    xi_mean: float = 1.0

    def generate(self, g: np.random.Generator, B: int):
        if self.xi_mean > 1 + 1e-12:
            raise InvalidProcess("factors must have mean <= 1")
        X0 = np.asarray(self.x0(g, B), dtype=np.float64)
        xi = np.asarray(self.xi(g, B, self.N_count, self.K_count), dtype=np.float64)
        if np.any(X0 < 0) or np.any(xi < 0):
            raise InvalidProcess("family must be nonnegative")
        X = X0[:, None, None] * np.cumprod(xi, axis=1)
        return X0, X


def lognormal_family(K: int = 8, N: int = 64, sigma: float = 0.3, drift: float = 0.0, c: float = 2.0) -> SupermartingaleFamily:
    """X_0 ~ Exp(1) conditioned on X_0 <= c; lognormal factors with mean e^(-drift)."""
    return SupermartingaleFamily(
        K, N,
        x0=lambda g, B: g.exponential(1.0, B),
        xi=lambda g, B, n, k: np.exp(sigma * g.standard_normal((B, n, k)) - sigma**2 / 2 - drift),
        condition=lambda x0: x0 <= c,
        xi_mean=math.exp(-drift),
    )


def doob2d_check(family: SupermartingaleFamily, lambda_grid, trials: int, seed: int = 0, chunk: int = 5000) -> list[dict]:
    lam = np.asarray(lambda_grid, dtype=np.float64)
    kept = 0
    x0_sum = x0_sq = 0.0
    hits = np.zeros(lam.size)
    for c, start in enumerate(range(0, trials, chunk)):
        B = min(chunk, trials - start)
        X0, X = family.generate(rng.generator(seed, "doob2d", c), B)
        mask = np.asarray(family.condition(X0), dtype=bool)
        if not mask.any():
            continue
        sup = np.maximum(X0[mask], X[mask].reshape(int(mask.sum()), -1).max(axis=1))
        kept += int(mask.sum())
        x0_sum += float(X0[mask].sum())
        x0_sq += float(np.dot(X0[mask], X0[mask]))
        hits += (sup[:, None] > lam[None, :]).sum(axis=0)
    if kept == 0:
        raise InsufficientConditioningMass("no trial satisfied the conditioning event")
    mean0 = x0_sum / kept
    se0 = math.sqrt(max(x0_sq / kept - mean0**2, 0.0) / kept)
    rows = []
    for l, h in zip(lam, hits):
        p = h / kept
        se = binomial_se(p, kept)
        lhs, rhs = l * p, 2 * mean0
        slack = 3 * (l * se + 2 * se0)
        rows.append({"lambda": float(l), "lhs": lhs, "rhs": rhs, "slack": slack, "kept": kept, "ok": lhs <= rhs + slack})
    return rows


# ----------------------------------------------------------------------------
# deterministic bounds


@dataclass(frozen=True)
class FourierBound:
    integral: float
    floor: float
    tolerance: float
    ok: bool


def fourier_lower_bound_check(b, quad_steps: int) -> FourierBound:
    """int_0^1 |b_0 + sum_k b_k e(k theta)| d theta against |b_0|.

    Midpoint rule at ``quad_steps`` and twice that; the gap between the two
    is the reported quadrature tolerance.
    """
    b = np.asarray(b, dtype=np.complex128)
    if quad_steps < 8 * b.size:
        raise InvalidArgument("quad_steps must be >= 8 * len(b)")

    def rule(M):
        th = (np.arange(M) + 0.5) / M
        vals = np.exp(2j * math.pi * np.outer(th, np.arange(b.size))) @ b
        return float(np.mean(np.abs(vals)))

    i1, i2 = rule(quad_steps), rule(2 * quad_steps)
    tol = abs(i2 - i1) + 1e-12
    floor = float(abs(b[0])) if b.size else 0.0
    return FourierBound(i2, floor, tol, i2 >= floor - tol)


def gaussian_walk_maxima(n: int, variance_profile, trials: int, seed: int = 0, chunk: int = 500) -> np.ndarray:
    """Per trial, max_k (S_k - 2 log k) for the walk with the given variances."""
    var = np.asarray(variance_profile, dtype=np.float64)
    if var.shape != (n,):
        raise InvalidArgument(f"variance profile must have length {n}")
    if np.any(var < 1 / 20) or np.any(var > 20):
        raise InvalidArgument("variances must lie in [1/20, 20]")
    sd = np.sqrt(var)
    curve = 2 * np.log(np.arange(1, n + 1))
    out = np.empty(trials)
    for c, start in enumerate(range(0, trials, chunk)):
        B = min(chunk, trials - start)
        g = rng.generator(seed, "gauss-walk", c)
        S = np.cumsum(g.standard_normal((B, n)) * sd, axis=1)
        out[start : start + B] = (S - curve).max(axis=1)
    return out


def gaussian_walk_check(n: int, a, variance_profile, trials: int, seed: int = 0, slack: float = 0.0) -> list[dict]:
    """P[S_k <= a + 2 log k + slack for all k <= n] against min(1, a/sqrt n).

    ``a`` may be a list; all values share one set of simulated walks.
    """
    avals = np.atleast_1d(np.asarray(a, dtype=np.float64))
    if np.any(avals < 1):
        raise InvalidArgument("a must be >= 1")
    D = gaussian_walk_maxima(n, variance_profile, trials, seed)
    rows = []
    for av in avals:
        prob = float(np.mean(D <= av + slack))
        comp = min(1.0, av / math.sqrt(n))
        rows.append({"a": float(av), "prob": prob, "comparator": comp, "ratio": prob / comp,
                     "std_error": binomial_se(prob, trials)})
    return rows


# ----------------------------------------------------------------------------
# arithmetic checks


@dataclass(frozen=True)
class SubmartingaleSteps:
    primes: tuple
    lhs: tuple  # E[|X_p(z)| | F_p]
    rhs: tuple  # |X_q(z)|
    ok_per_step: tuple

    @property
    def ok(self) -> bool:
        return all(self.ok_per_step)


def submartingale_absXq_check(
    model: RmfModel, table: PrimeTable, z: float, prime_window, x: float, smoothing_X: float, nodes: int = 64
) -> SubmartingaleSteps:
    """E[|X_p(z)| | F_p] >= |X_q(z)| for consecutive window primes q < p.

    X_q(z) sums f(n) over n <= z with lower < P(n) <= q, lower = x/(z(1+1/X)).
    Integers with P(n) = p are n = p^k m with P(m) < p, so
    X_p(z) = X_q(z) + sum_k f(p)^k Psi(z/p^k, q); the average over f(p)
    uses both signs (Rademacher) or ``nodes`` equally spaced angles
    (Steinhaus), exact for |k| < nodes.
    """
    lo_w, hi_w = prime_window
    lower = x / (z * (1 + 1 / smoothing_X))
    if lo_w < lower - 1e-9 or hi_w > x / z + 1e-9:
        raise InvalidArgument("prime window must lie inside (x/(z(1+1/X)), x/z]")
    zi = math.floor(z)
    if zi < 1 or zi > table.limit:
        raise InvalidArgument(f"z={z} outside the sieve range")
    ps = table.primes_in(max(lo_w, lower), hi_w)
    if ps.size < 2:
        return SubmartingaleSteps(tuple(int(p) for p in ps), (), (), ())
    f = _point(model, table, zi).f
    lpf = table.lpf[: zi + 1]
    ns = np.arange(zi + 1)
    lhs, rhs, oks = [], [], []
    for q, p in zip(ps[:-1], ps[1:]):
        q, p = int(q), int(p)
        Xq = f[(lpf > lower) & (lpf <= q) & (ns >= 1)].sum()
        C = []
        pk = p
        while pk <= zi:
            lim = zi // pk
            C.append(f[1 : lim + 1][lpf[1 : lim + 1] <= q].sum())
            pk *= p
        C = np.array(C, dtype=np.complex128)
        if model.mode is Mode.RADEMACHER:
            c1 = C[0] if C.size else 0
            avg = 0.5 * (abs(Xq + c1) + abs(Xq - c1))
        else:
            th = np.arange(nodes) / nodes
            kk = np.arange(1, C.size + 1)
            vals = Xq + np.exp(2j * math.pi * np.outer(th, kk)) @ C if C.size else np.full(nodes, Xq)
            avg = float(np.mean(np.abs(vals)))
        lhs.append(float(avg))
        rhs.append(float(abs(Xq)))
        oks.append(avg >= abs(Xq) - 1e-8)
    return SubmartingaleSteps(tuple(int(p) for p in ps), tuple(lhs), tuple(rhs), tuple(oks))


@dataclass(frozen=True)
class NijMoment:
    lhs_estimate: float
    std_error: float
    rhs: float
    trials: int
    ok: bool


def conditional_moment_Nij_check(
    model: RmfModel, table: PrimeTable, schedule: Schedule, x: int, j: int, m: int, trials: int, seed: int = 0
) -> NijMoment:
    """E[|N_ij|^(2m) | F_{y_{j-1}}] against X_ij^m by resampling block j."""
    if model.mode is not Mode.STEINHAUS:
        raise UnsupportedMethod("N_ij vanishes identically for Rademacher; the check needs Steinhaus")
    if trials < 1000:
        raise InvalidArgument("trials must be >= 1000")
    schedule.check_block(j)
    x = _check_x(table, schedule, x)
    pt = _point(model, table, x)
    d, _, psi, exps, ps = _nij_terms(table, schedule, pt, j, model)
    rhs = x_ij_weight(model, table, schedule, x, j, m) ** m
    if d.size == 0:
        return NijMoment(0.0, 0.0, rhs, trials, True)
    E = np.zeros((d.size, ps.size), dtype=np.uint64)
    for r, e in enumerate(exps):
        for i, k in e.items():
            E[r, i] = k
    words = np.stack([rng.hash_words(rng.derive_seed(seed, "nij", j, t), ps) for t in range(trials)])
    dwords = words @ E.T  # wraps modulo 2^64, i.e. angle addition
    fd = np.exp(1j * (2 * math.pi / 2.0**64) * dwords.astype(np.float64))
    v = np.abs(fd @ psi) ** (2 * m)
    lhs = float(v.mean())
    se = float(v.std(ddof=1) / math.sqrt(trials))
    return NijMoment(lhs, se, rhs, trials, lhs - 3 * se <= rhs)


def as_record(obj) -> dict:
    return asdict(obj)
