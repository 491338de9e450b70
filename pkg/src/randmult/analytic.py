"""Euler products on the critical line, the I0 integral and a Parseval check."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .errors import InvalidArgument, NumericSingularity, UnsupportedMethod
from .primes import PrimeTable
from .rmf import Mode, RmfModel, _TWO_PI_OVER_2_64, sample_model

_SINGULAR = 1e-14
_T_CHUNK = 4096


@dataclass(frozen=True)
class DirichletPolynomial:
    """Finite Dirichlet polynomial A(s) = sum a_n n^(-s)."""

    coefficients: dict = field(default_factory=dict)

    def __post_init__(self):
        for n in self.coefficients:
            if int(n) != n or n < 1:
                raise InvalidArgument(f"support must be positive integers, got {n}")

    def __getitem__(self, n: int) -> complex:
        return complex(self.coefficients.get(n, 0))

    @property
    def support(self) -> np.ndarray:
        return np.array(sorted(k for k, v in self.coefficients.items() if v != 0), dtype=np.int64)

    def arrays(self):
        n = self.support
        a = np.array([complex(self.coefficients[int(k)]) for k in n], dtype=np.complex128)
        return n, a

    @classmethod
    def from_euler(cls, local: dict, n_max: int) -> "DirichletPolynomial":
        """Expand prod_p (sum_k c_{p,k} p^(-ks)) truncated to n <= n_max.

        ``local`` maps a prime to its coefficient list [c_0, c_1, ...].
        """
        coeffs = {1: 1 + 0j}
        for p, cs in sorted(local.items()):
            nxt: dict = {}
            for n, a in coeffs.items():
                pk = 1
                for k, c in enumerate(cs):
                    if n * pk > n_max:
                        break
                    if c != 0:
                        nxt[n * pk] = nxt.get(n * pk, 0) + a * c
                    pk *= p
            coeffs = nxt
        return cls({n: a for n, a in coeffs.items() if a != 0})

    def evaluate(self, sigma: float, t) -> np.ndarray:
        """A(sigma + it) for an array of t."""
        t = np.atleast_1d(np.asarray(t, dtype=np.float64))
        n, a = self.arrays()
        if n.size == 0:
            return np.zeros(t.size, dtype=np.complex128)
        logn = np.log(n.astype(np.float64))
        amp = a * np.exp(-sigma * logn)
        out = np.empty(t.size, dtype=np.complex128)
        for s in range(0, t.size, _T_CHUNK):
            tt = t[s : s + _T_CHUNK]
            out[s : s + _T_CHUNK] = np.exp(-1j * np.outer(tt, logn)) @ amp
        return out


def simpson(values: np.ndarray, step: float) -> float:
    """Composite Simpson rule on an odd number of equally spaced samples."""
    if values.size % 2 == 0:
        raise InvalidArgument("Simpson needs an odd number of samples")
    w = np.ones(values.size)
    w[1:-1:2] = 4
    w[2:-1:2] = 2
    return float(step / 3 * np.dot(w, values))


def _grid(t_max: float, quad_step: float):
    if t_max <= 0 or quad_step <= 0:
        raise InvalidArgument("t_max and quad_step must be positive")
    n = math.ceil(2 * t_max / quad_step)
    n += n % 2
    return np.linspace(-t_max, t_max, n + 1), 2 * t_max / n


def _prime_values_complex(model: RmfModel, ps: np.ndarray) -> np.ndarray:
    v = model.prime_values[ps]
    if model.mode is Mode.RADEMACHER:
        return v.astype(np.float64).astype(np.complex128)
    return np.exp(1j * _TWO_PI_OVER_2_64 * v.astype(np.float64))


def _euler_product(fp: np.ndarray, ps: np.ndarray, a_f: int, t: np.ndarray) -> np.ndarray:
    """prod_p (1 + a_f f(p) p^(-1/2-it))^(a_f) for rows of t."""
    out = np.ones(t.size, dtype=np.complex128)
    if ps.size == 0:
        return out
    logp = np.log(ps.astype(np.float64))
    amp = a_f * fp * np.exp(-0.5 * logp)
    for s in range(0, t.size, _T_CHUNK):
        tt = t[s : s + _T_CHUNK]
        fac = 1 + amp[None, :] * np.exp(-1j * np.outer(tt, logp))
        if a_f < 0:
            if np.abs(fac).min() < _SINGULAR:
                raise NumericSingularity("local Euler factor vanishes to working precision")
            out[s : s + _T_CHUNK] = 1.0 / np.prod(fac, axis=1)
        else:
            out[s : s + _T_CHUNK] = np.prod(fac, axis=1)
    return out


def euler_product_F0(model: RmfModel, table: PrimeTable, y0: float, t):
    if y0 > model.prime_limit and table.prime_count(y0) > table.prime_count(model.prime_limit):
        raise InvalidArgument(f"y0={y0} beyond prime_limit {model.prime_limit}")
    ps = table.primes_in(0, y0)
    tt = np.atleast_1d(np.asarray(t, dtype=np.float64))
    out = _euler_product(_prime_values_complex(model, ps), ps, model.a_f, tt)
    return complex(out[0]) if np.ndim(t) == 0 else out


@dataclass(frozen=True)
class I0Result:
    value: float
    t_max: float
    quad_step: float
    tail_bound: float  # crude bound on the discarded |t| > t_max part

    def truncation_note(self) -> dict:
        return {"t_max": self.t_max, "quad_step": self.quad_step, "tail_bound": self.tail_bound}


def _sup_bound(mode: Mode, ps: np.ndarray) -> float:
    r = 1.0 / np.sqrt(ps.astype(np.float64))
    if mode is Mode.STEINHAUS:
        return float(np.prod(1.0 / (1.0 - r)))
    return float(np.prod(1.0 + r))


def _i0_from_values(fp, ps, mode: Mode, y0: float, t_max: float, quad_step: float) -> I0Result:
    if y0 <= 1:
        raise InvalidArgument("y0 must exceed 1 so that log y0 > 0")
    t, step = _grid(t_max, quad_step)
    a_f = 1 if mode is Mode.RADEMACHER else -1
    F = _euler_product(fp, ps, a_f, t)
    integrand = np.abs(F) ** 2 / (0.25 + t**2)
    ly = math.log(y0)
    M = _sup_bound(mode, ps)
    # int_{|t|>T} dt/(1/4+t^2) = 4 (pi/2 - arctan 2T)
    tail = M * M * 4 * (math.pi / 2 - math.atan(2 * t_max)) / ly
    return I0Result(simpson(integrand, step) / ly, float(t_max), float(quad_step), tail)


def compute_I0(model: RmfModel, table: PrimeTable, y0: float, t_max: float, quad_step: float) -> I0Result:
    ps = table.primes_in(0, y0)
    return _i0_from_values(_prime_values_complex(model, ps), ps, model.mode, y0, t_max, quad_step)


@dataclass(frozen=True)
class LowMomentEstimate:
    mean_pow_2_3: float
    std_error: float
    trials: int


def estimate_I0_low_moment(
    mode, table: PrimeTable, y0: float, t_max: float, quad_step: float, trials: int, seed: int = 0
) -> LowMomentEstimate:
    mode = Mode.parse(mode)
    if trials < 100:
        raise InvalidArgument("trials must be >= 100")
    ps = table.primes_in(0, y0)
    vals = np.empty(trials)
    limit = max(int(math.floor(y0)), 2)
    for k in range(trials):
        if ps.size == 0 and k > 0:
            vals[k] = vals[0]
            continue
        model = sample_model(mode, rng.derive_seed(seed, "i0", k), limit, table)
        fp = _prime_values_complex(model, ps)
        vals[k] = _i0_from_values(fp, ps, mode, y0, t_max, quad_step).value ** (2 / 3)
    se = 0.0 if ps.size == 0 else float(vals.std(ddof=1) / math.sqrt(trials))
    return LowMomentEstimate(float(vals.mean()), se, trials)


@dataclass(frozen=True)
class ParsevalResult:
    lhs: float
    rhs: float
    rel_err: float
    rhs_truncated: float
    tail_bound: float
    sigma: float
    t_max: float
    quad_step: float


def parseval_lhs(poly: DirichletPolynomial, sigma: float) -> float:
    """int_1^inf |sum_{n<=x} a_n|^2 x^(-1-2 sigma) dx, piece by piece."""
    n, a = poly.arrays()
    if n.size == 0:
        return 0.0
    S = np.cumsum(a)
    lo = n.astype(np.float64)
    hi = np.append(lo[1:], np.inf)
    # int_lo^hi x^(-1-2s) dx = (lo^(-2s) - hi^(-2s)) / (2s)
    mu = (lo ** (-2 * sigma) - np.where(np.isinf(hi), 0.0, hi ** (-2 * sigma))) / (2 * sigma)
    return float(np.sum(np.abs(S) ** 2 * mu))


def parseval_check(poly: DirichletPolynomial, sigma: float, x_max: float, t_max: float, quad_step: float) -> ParsevalResult:
    """Compare the exact x-integral with (1/2pi) int |A(s)/s|^2 dt on Re s = sigma.

    The t-integral is Simpson on [-t_max, t_max] plus the tail of the
    diagonal (mean-value) part, D * 2 (pi/2 - arctan(t_max/sigma)) / (2 pi sigma)
    with D = sum |a_n|^2 n^(-2 sigma); the off-diagonal tail is bounded in
    ``tail_bound`` together with everything else.
    """
    if sigma <= 0:
        raise InvalidArgument(f"sigma must be > 0, got {sigma}")
    n, a = poly.arrays()
    if n.size and n.max() > x_max:
        raise InvalidArgument(f"support reaches {int(n.max())} > x_max={x_max}")
    lhs = parseval_lhs(poly, sigma)
    t, step = _grid(t_max, quad_step)
    A = poly.evaluate(sigma, t)
    trunc = simpson(np.abs(A) ** 2 / (sigma**2 + t**2), step) / (2 * math.pi)
    w = math.pi / 2 - math.atan(t_max / sigma)
    nf = n.astype(np.float64)
    D = float(np.sum(np.abs(a) ** 2 * nf ** (-2 * sigma))) if n.size else 0.0
    B = float(np.sum(np.abs(a) * nf ** (-sigma))) if n.size else 0.0
    rhs = trunc + D * 2 * w / (2 * math.pi * sigma)
    tail_bound = B * B * 2 * w / (2 * math.pi * sigma)
    rel = abs(lhs - rhs) / lhs if lhs > 0 else abs(rhs)
    return ParsevalResult(lhs, rhs, rel, trunc, tail_bound, float(sigma), float(t_max), float(quad_step))


@dataclass(frozen=True)
class EulerExpectation:
    estimate: float
    target: float
    err: float
    std_error: float
    method: str
    trials: int


def euler_expectation_check(
    mode, prime_set, t: float, method: str = "exact", trials: int = 0, seed: int = 0, chunk: int = 1 << 16
) -> EulerExpectation:
    """E prod_p |1 + a_f f(p) p^(-1/2-it)|^(2 a_f) against prod_p (1 + a_f/p)^(a_f)."""
    mode = Mode.parse(mode)
    ps = np.array(sorted(set(int(p) for p in prime_set)), dtype=np.int64)
    if ps.size == 0:
        raise InvalidArgument("prime_set must be nonempty")
    a_f = 1 if mode is Mode.RADEMACHER else -1
    target = float(np.prod((1 + a_f / ps.astype(np.float64)) ** a_f))
    c = np.exp(-(0.5 + 1j * t) * np.log(ps.astype(np.float64)))
    if method == "exact":
        if mode is not Mode.RADEMACHER:
            raise UnsupportedMethod("exact enumeration needs Rademacher values")
        if ps.size > 20:
            raise UnsupportedMethod("exact enumeration limited to 20 primes")
        k = ps.size
        signs = 1 - 2 * ((np.arange(2**k)[:, None] >> np.arange(k)[None, :]) & 1)
        vals = np.prod(np.abs(1 + signs * c[None, :]) ** 2, axis=1)
        est = float(np.mean(vals))
        return EulerExpectation(est, target, abs(est - target), 0.0, "exact", 2**k)
    if method != "monte_carlo":
        raise UnsupportedMethod(f"unknown method {method!r}")
    if trials < 2:
        raise InvalidArgument("Monte Carlo needs trials >= 2")
    g = rng.generator(seed, "euler-expectation")
    total = total_sq = 0.0
    done = 0
    while done < trials:
        b = min(chunk, trials - done)
        if mode is Mode.STEINHAUS:
            f = np.exp(2j * math.pi * g.random((b, ps.size)))
        else:
            f = g.choice([-1.0, 1.0], size=(b, ps.size))
        v = np.prod(np.abs(1 + a_f * f * c[None, :]) ** (2 * a_f), axis=1)
        total += float(v.sum())
        total_sq += float(np.dot(v, v))
        done += b
    est = total / trials
    var = max(total_sq / trials - est * est, 0.0) * trials / (trials - 1)
    return EulerExpectation(est, target, abs(est - target), math.sqrt(var / trials), "monte_carlo", trials)
