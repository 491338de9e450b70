"""Seeded experiment suites, scans and report persistence."""

from __future__ import annotations

import configparser
import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__, rng
from .analytic import DirichletPolynomial, estimate_I0_low_moment, euler_expectation_check, parseval_check
from .decomp import (
    CSV_HEADER,
    check_supermartingale_step,
    decompose,
    n_ij,
    smoothed_functionals,
    variance_V,
)
from .errors import InvalidArgument
from .inequalities import (
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
from .primes import PrimeTable, build_prime_table, tau_sum_bound_scan
from .rmf import Mode, sample_model, values_up_to
from .schedule import Schedule, build_schedule
from .sums import blocked_cumsum, fluctuation_normalizer

ASSERTING = (
    "decompose", "variance", "euler", "parseval", "hyper", "hoeffding", "hoeffding-cond", "doob2d",
    "fourier", "gaussian", "submartingale", "super-step", "nij-moment", "tau-bound",
)
EXPLORATORY = ("fluctuation", "moments", "variance-event", "i0")
ALL_SUITES = ASSERTING + EXPLORATORY


def _floats(text: str) -> tuple:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _ints(text: str) -> tuple:
    return tuple(int(float(v)) for v in text.split(",") if v.strip())


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str = "steinhaus"
    base_seed: int = 0
    x_max: int = 100_000
    # schedule
    ell: int = 3
    bigK: float = 12.5
    eps: float = 2.0
    c0: float = 1e-3
    r_param: int = 2
    desk_scale: bool = True
    y0: float = 10.0
    x_cap: float = 50.0
    block_threshold: float = 0.0  # 0 selects the default split
    x_ratio: float = 2.0
    # trial counts
    decomp_seeds: int = 10
    variance_seeds: int = 20
    scan_seeds: int = 100
    moment_seeds: int = 200
    mc_trials: int = 100_000
    euler_trials: int = 1_000_000
    super_trials: int = 10_000
    nij_trials: int = 2_000
    gaussian_trials: int = 100_000
    i0_trials: int = 100
    # grids
    moment_x: tuple = (1_000, 10_000, 100_000, 1_000_000)
    eps_grid: tuple = tuple(round(0.3 * k, 10) for k in range(1, 11))
    lambda_grid: tuple = (0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0)
    gaussian_a: tuple = (1.0, 10.0, 100.0)
    gaussian_n: int = 10_000
    gaussian_slack: float = 0.0
    i0_y0: tuple = (10.0, 30.0, 100.0)
    variance_threshold_scales: tuple = (0.0, 0.5, 1.0, 2.0, math.inf)
    nij_x: int = 10_000
    tau_x: int = 1_000_000
    # T(ell) = ell^t_power; only its growth matters, so the power is configurable
    t_power: float = 6.0
    # tolerances and quadrature
    residual_factor: float = 1e-9
    euler_rel_tol: float = 0.01
    parseval_tol: float = 1e-3
    t_max: float = 200.0
    quad_step: float = 0.02
    i0_t_max: float = 50.0
    i0_quad_step: float = 0.02
    gaussian_band: tuple = (0.2, 5.0)
    out_dir: str = "out"
    jobs: int = 1

    def __post_init__(self):
        Mode.parse(self.mode)
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name.endswith(("_seeds", "_trials")) and int(v) <= 0:
                raise InvalidArgument(f"{f.name} must be positive")
        for name in ("residual_factor", "euler_rel_tol", "parseval_tol", "t_max", "quad_step"):
            if getattr(self, name) <= 0:
                raise InvalidArgument(f"{name} must be positive")
        if self.jobs < 1:
            raise InvalidArgument("jobs must be >= 1")

    @property
    def T_ell(self) -> float:
        return float(self.ell) ** self.t_power

    @property
    def T1_ell(self) -> float:
        return self.T_ell / (self.ell * math.log(self.ell)) if self.ell > 1 else math.inf

    def schedule(self) -> Schedule:
        return build_schedule(
            self.x_max, self.ell, self.bigK, self.eps, self.c0, self.r_param, self.desk_scale,
            y0=self.y0, x_cap=self.x_cap, block_threshold=self.block_threshold or None, x_ratio=self.x_ratio,
        )

    def to_text(self) -> str:
        cp = configparser.ConfigParser()
        cp.optionxform = str
        sec = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                sec[f.name] = ",".join(repr(float(a)) if isinstance(a, float) else str(a) for a in v)
            elif isinstance(v, bool):
                sec[f.name] = str(v).lower()
            elif isinstance(v, float):
                sec[f.name] = repr(v)
            else:
                sec[f.name] = str(v)
        cp["experiment"] = sec
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        cp = configparser.ConfigParser()
        cp.optionxform = str
        cp.read_string(text)
        if "experiment" not in cp:
            raise InvalidArgument("config needs an [experiment] section")
        return cls.from_mapping(dict(cp["experiment"]))

    @classmethod
    def from_mapping(cls, raw: dict) -> "ExperimentConfig":
        defaults = cls()
        kw = {}
        known = {f.name: f for f in fields(cls)}
        for key, text in raw.items():
            if key not in known:
                raise InvalidArgument(f"unknown config key {key!r}")
            cur = getattr(defaults, key)
            text = str(text)
            if isinstance(cur, bool):
                kw[key] = text.strip().lower() in ("1", "true", "yes", "on")
            elif isinstance(cur, tuple):
                kw[key] = _floats(text) if cur and isinstance(cur[0], float) else _ints(text)
            elif isinstance(cur, int):
                kw[key] = int(float(text))
            elif isinstance(cur, float):
                kw[key] = float(text)
            else:
                kw[key] = text
        return cls(**kw)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            return cls.from_text(Path(path).read_text())
        except OSError as exc:
            raise OSError(f"cannot read config {path}: {exc}") from exc

    def to_dict(self) -> dict:
        d = asdict(self)
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in d.items()}


@dataclass
class SuiteResult:
    name: str
    asserting: bool
    ok: bool
    header: list
    rows: list
    summary: dict = field(default_factory=dict)


@dataclass
class RunReport:
    config: dict
    version: str
    suites: list
    wall_clock: float
    passed: bool

    def to_json(self) -> str:
        body = {
            "config": self.config,
            "version": self.version,
            "wall_clock_s": self.wall_clock,
            "passed": self.passed,
            "suites": [
                {"name": s.name, "asserting": s.asserting, "ok": s.ok, "summary": s.summary, "rows": len(s.rows)}
                for s in self.suites
            ],
        }
        return json.dumps(body, indent=2, sort_keys=True, default=_json_default)


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.bool_,)):
        return bool(o)
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(type(o))


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, complex):
        return f"{v.real!r}{v.imag:+}j"
    return str(v)


def table_limit(config: ExperimentConfig, suites) -> int:
    lim = config.x_max
    if "moments" in suites:
        lim = max(lim, max(config.moment_x))
    if "tau-bound" in suites:
        lim = max(lim, config.tau_x)
    if "nij-moment" in suites:
        lim = max(lim, config.nij_x)
    return int(lim)


# ----------------------------------------------------------------------------
# scans


def geometric_grid(x_min: float, x_max: int, ratio: float) -> list[int]:
    pts = set()
    v = float(x_min)
    while v <= x_max:
        pts.add(int(math.ceil(v)))
        v *= ratio
    pts.add(int(x_max))
    return sorted(p for p in pts if p <= x_max)


def fluctuation_scan(config: ExperimentConfig, table: PrimeTable):
    """Per seed, sup over a geometric grid of |M_f(x)| / (sqrt(x) R(x))."""
    if config.x_max < 1000:
        raise InvalidArgument("fluctuation scan needs x_max >= 1000")
    grid = np.array(geometric_grid(16, config.x_max, config.x_ratio))
    R = np.array([fluctuation_normalizer(x, config.eps) for x in grid])
    rows, trace = [], []
    for k in range(config.scan_seeds):
        seed = rng.derive_seed(config.base_seed, "fluctuation", k)
        model = sample_model(config.mode, seed, config.x_max, table)
        cum = blocked_cumsum(values_up_to(model, table, config.x_max))
        stat = np.abs(cum[grid]) / (np.sqrt(grid) * R)
        i = int(np.argmax(stat))
        rows.append({"seed": seed, "sup_statistic": float(stat[i]), "argmax_x": int(grid[i])})
        trace.extend({"seed": seed, "x": int(x), "statistic": float(s)} for x, s in zip(grid, stat))
    return rows, trace


def moment_scan(config: ExperimentConfig, table: PrimeTable):
    """Mean |M_f(x)| over seeds on the moment grid, with common seeds across x."""
    if config.moment_seeds < 50:
        raise InvalidArgument("moment scan needs at least 50 seeds")
    xs = np.array(sorted(config.moment_x), dtype=np.int64)
    top = int(xs.max())
    vals = np.empty((config.moment_seeds, xs.size))
    for k in range(config.moment_seeds):
        seed = rng.derive_seed(config.base_seed, "moments", k)
        model = sample_model(config.mode, seed, top, table)
        vals[k] = np.abs(blocked_cumsum(values_up_to(model, table, top))[xs])
    rows = []
    for i, x in enumerate(xs):
        mean = float(vals[:, i].mean())
        se = float(vals[:, i].std(ddof=1) / math.sqrt(config.moment_seeds))
        norm = mean * math.log(math.log(x)) ** 0.25 / math.sqrt(x)
        rows.append({"x": int(x), "mean_abs": mean, "std_error": se, "normalized": norm})
    return rows


def moment_trend(rows) -> dict:
    """Least-squares slope of log(mean/sqrt x) against log log log x."""
    x = np.array([r["x"] for r in rows], dtype=np.float64)
    y = np.log(np.array([r["mean_abs"] for r in rows]) / np.sqrt(x))
    u = np.log(np.log(np.log(x)))
    slope, intercept = np.polyfit(u, y, 1)
    norm = [r["normalized"] for r in rows]
    decreasing = all(b < a for a, b in zip(norm, norm[1:]))
    return {"slope": float(slope), "intercept": float(intercept), "normalized_decreasing": decreasing}


def variance_event_scan(config: ExperimentConfig, table: PrimeTable, schedule: Schedule | None = None):
    """Fraction of seeds with V(x) above scale * T(ell) x / ell^(K/2)."""
    schedule = schedule or config.schedule()
    base = config.T_ell / config.ell ** (config.bigK / 2)
    xs = [x for x in schedule.x_points if x <= table.limit]
    V = np.empty((config.variance_seeds, len(xs)))
    for k in range(config.variance_seeds):
        seed = rng.derive_seed(config.base_seed, "variance-event", k)
        model = sample_model(config.mode, seed, max(xs), table)
        f = values_up_to(model, table, max(xs))
        for i, x in enumerate(xs):
            V[k, i] = variance_V(model, table, schedule, x, f).V
    rows = []
    for i, x in enumerate(xs):
        for scale in config.variance_threshold_scales:
            thr = scale * base * x
            rows.append({"x": int(x), "scale": float(scale), "threshold": float(thr),
                         "fraction_exceeding": float(np.mean(V[:, i] > thr))})
    return rows


# ----------------------------------------------------------------------------
# suites


def _suite_decompose(config, table, schedule):
    rows, ok = [], True
    x = config.x_max
    for mode in ("rademacher", "steinhaus"):
        for k in range(config.decomp_seeds):
            seed = rng.derive_seed(config.base_seed, "decompose", k)
            model = sample_model(mode, seed, x, table)
            f = values_up_to(model, table, x)
            r = decompose(model, table, schedule, x, f)
            if mode == "rademacher":
                nij = [n_ij(model, table, schedule, x, j, f) for j in range(1, schedule.J + 1)]
                ok &= r.residual == 0 and r.m2 == 0 and all(v == 0 for v in nij)
            else:
                ok &= r.residual <= config.residual_factor * math.sqrt(x)
            rows.append(dict(zip(CSV_HEADER, r.csv_row())))
    return SuiteResult("decompose", True, bool(ok), list(CSV_HEADER), rows)


def _suite_variance(config, table, schedule):
    rows, ok = [], True
    x = config.x_max
    for k in range(config.decomp_seeds):
        seed = rng.derive_seed(config.base_seed, "variance", k)
        model = sample_model(config.mode, seed, x, table)
        f = values_up_to(model, table, x)
        v = variance_V(model, table, schedule, x, f)
        sf = smoothed_functionals(model, table, schedule, x, f)
        c1 = abs(v.V - math.fsum(v.per_block)) <= 1e-9 * max(v.V, 1.0)
        # Cauchy-Schwarz consequences that hold exactly
        c2 = v.V <= (2 * sf.L + 2 * sf.W) * (1 + 1e-9)
        c3 = sf.L <= x * (sf.L1 + sf.L12 + sf.L2) * (1 + 1e-9)
        ok &= c1 and c2 and c3
        rows.append({"seed": seed, "x": x, "V": v.V, "L": sf.L, "W": sf.W, "L1": sf.L1, "L12": sf.L12,
                     "L2": sf.L2, "ok": c1 and c2 and c3})
    return SuiteResult("variance", True, bool(ok), list(rows[0]), rows)


def _suite_euler(config, table, schedule):
    rows, ok = [], True
    for t in (0.0, 1.0):
        r = euler_expectation_check("rademacher", [2, 3, 5, 7], t, "exact")
        good = r.err <= 1e-12
        ok &= good
        rows.append({"mode": "rademacher", "t": t, "method": "exact", "estimate": r.estimate, "target": r.target,
                     "std_error": 0.0, "ok": good})
    for t in (0.0, 1.0):
        seed = rng.derive_seed(config.base_seed, "euler", repr(t))
        r = euler_expectation_check("steinhaus", [2, 3, 5, 7], t, "monte_carlo", config.euler_trials, seed)
        good = r.err <= 3 * r.std_error and r.err / r.target <= config.euler_rel_tol
        ok &= good
        rows.append({"mode": "steinhaus", "t": t, "method": "monte_carlo", "estimate": r.estimate,
                     "target": r.target, "std_error": r.std_error, "ok": good})
    return SuiteResult("euler", True, bool(ok), list(rows[0]), rows)


def _suite_parseval(config, table, schedule):
    cases = [
        ("single", DirichletPolynomial({1: 1}), 1e-6),
        ("indicator50", DirichletPolynomial({n: 1 for n in range(1, 51)}), config.parseval_tol),
    ]
    rows, ok = [], True
    for name, poly, tol in cases:
        r = parseval_check(poly, 1.0, 50, config.t_max, config.quad_step)
        good = abs(r.lhs - r.rhs) <= tol if name == "single" else r.rel_err <= tol
        if name == "single":
            good &= abs(r.lhs - 0.5) <= tol
        ok &= good
        rows.append({"case": name, "lhs": r.lhs, "rhs": r.rhs, "rel_err": r.rel_err, "rhs_truncated": r.rhs_truncated,
                     "tail_bound": r.tail_bound, "ok": good})
    return SuiteResult("parseval", True, bool(ok), list(rows[0]), rows)


FIVE_SMOOTH_30 = (1, 2, 3, 4, 5, 6, 8, 9, 10, 12, 15, 16, 18, 20, 24, 25, 27, 30)


def _suite_hyper(config, table, schedule):
    rows, ok = [], True
    sq = DirichletPolynomial({n: 1 for n in (1, 2, 3, 5, 6, 10, 15, 30)})
    for m in (1, 2, 3):
        r = hypercontractivity_check("rademacher", table, sq, m, "exact")
        ok &= r.ok
        rows.append({"mode": "rademacher", "m": m, "lhs": r.lhs, "rhs": r.rhs, "ok": r.ok})
    g = rng.generator(config.base_seed, "hyper-coeffs")
    poly = DirichletPolynomial({n: complex(*g.standard_normal(2)) for n in FIVE_SMOOTH_30})
    r = hypercontractivity_check("steinhaus", table, poly, 1, "exact")
    good = abs(r.lhs - r.rhs) <= 1e-12 * r.rhs
    ok &= good
    rows.append({"mode": "steinhaus", "m": 1, "lhs": r.lhs, "rhs": r.rhs, "ok": good})
    for m in (2, 3):
        r = hypercontractivity_check("steinhaus", table, poly, m, "exact")
        ok &= r.ok
        rows.append({"mode": "steinhaus", "m": m, "lhs": r.lhs, "rhs": r.rhs, "ok": r.ok})
    return SuiteResult("hyper", True, bool(ok), list(rows[0]), rows)


def _suite_hoeffding(config, table, schedule):
    seed = rng.derive_seed(config.base_seed, "hoeffding")
    rows = hoeffding_tail_check(scaled_sign_process(64, 1.0), config.eps_grid, config.mc_trials, seed)
    return SuiteResult("hoeffding", True, all(r["ok"] for r in rows), list(rows[0]), rows)


def _suite_hoeffding_cond(config, table, schedule):
    seed = rng.derive_seed(config.base_seed, "hoeffding-cond")
    rows = hoeffding_conditioned_check(mixed_process(64, 1.0), config.eps_grid, config.mc_trials, seed)
    return SuiteResult("hoeffding-cond", True, all(r["ok"] for r in rows), list(rows[0]), rows)


def _suite_doob2d(config, table, schedule):
    seed = rng.derive_seed(config.base_seed, "doob2d")
    rows = doob2d_check(lognormal_family(K=8, N=64), config.lambda_grid, config.mc_trials, seed)
    return SuiteResult("doob2d", True, all(r["ok"] for r in rows), list(rows[0]), rows)


def _suite_fourier(config, table, schedule):
    g = rng.generator(config.base_seed, "fourier")
    cases = [np.array([1.0 + 0j] + [0j] * 7), np.array([0j, 1.0 + 0j])]
    cases += [g.standard_normal(8) + 1j * g.standard_normal(8) for _ in range(8)]
    rows, ok = [], True
    for i, b in enumerate(cases):
        r = fourier_lower_bound_check(b, 64 * max(b.size, 1))
        ok &= r.ok
        rows.append({"case": i, "integral": r.integral, "floor": r.floor, "tolerance": r.tolerance, "ok": r.ok})
    return SuiteResult("fourier", True, bool(ok), list(rows[0]), rows)


def _suite_gaussian(config, table, schedule):
    seed = rng.derive_seed(config.base_seed, "gaussian")
    rows = gaussian_walk_check(config.gaussian_n, config.gaussian_a, np.ones(config.gaussian_n),
                               config.gaussian_trials, seed, config.gaussian_slack)
    lo, hi = config.gaussian_band
    for r in rows:
        r["ok"] = lo <= r["ratio"] <= hi
    return SuiteResult("gaussian", True, all(r["ok"] for r in rows), list(rows[0]), rows)


def _suite_submartingale(config, table, schedule):
    rows, ok = [], True
    x = config.x_max
    X = schedule.smoothing_X
    for mode in ("rademacher", "steinhaus"):
        for k in range(3):
            seed = rng.derive_seed(config.base_seed, "submartingale", mode, k)
            model = sample_model(mode, seed, x, table)
            for z in (5.0, 10.0, 20.0, 50.0):
                lower = x / (z * (1 + 1 / X))
                r = submartingale_absXq_check(model, table, z, (lower, x / z), x, X)
                ok &= r.ok
                rows.append({"mode": mode, "seed": seed, "z": z, "steps": len(r.ok_per_step), "ok": r.ok})
    return SuiteResult("submartingale", True, bool(ok), list(rows[0]), rows)


def _suite_super_step(config, table, schedule):
    rows, ok = [], True
    x = config.x_max
    model = sample_model("steinhaus", rng.derive_seed(config.base_seed, "super-step", "model"), table.limit, table)
    for j in range(1, schedule.J + 1):
        if schedule.y_grid[j] > table.limit or schedule.y_grid[j - 1] >= x:
            continue
        seed = rng.derive_seed(config.base_seed, "super-step", j)
        r = check_supermartingale_step(model, table, schedule, x, j, config.super_trials, seed)
        ok &= r.ok
        rows.append({"j": j, "lhs_estimate": r.lhs_estimate, "std_error": r.std_error, "rhs": r.rhs, "b": r.b,
                     "method": r.method, "trials": r.trials, "ok": r.ok})
    return SuiteResult("super-step", True, bool(ok), list(rows[0]) if rows else ["j"], rows)


def _suite_nij(config, table, schedule):
    x = config.nij_x
    sched = build_schedule(max(x, 100), config.ell, config.bigK, config.eps, config.c0, config.r_param,
                           y0=config.y0, x_cap=config.x_cap)
    model = sample_model("steinhaus", rng.derive_seed(config.base_seed, "nij", "model"), x, table)
    rows, ok = [], True
    for j in range(1, sched.J + 1):
        for m in (1, 2):
            seed = rng.derive_seed(config.base_seed, "nij", j, m)
            r = conditional_moment_Nij_check(model, table, sched, x, j, m, config.nij_trials, seed)
            ok &= r.ok
            rows.append({"j": j, "m": m, "lhs_estimate": r.lhs_estimate, "std_error": r.std_error, "rhs": r.rhs,
                         "ok": r.ok})
    return SuiteResult("nij-moment", True, bool(ok), list(rows[0]), rows)


def _suite_tau(config, table, schedule):
    rows, ok = [], True
    for m in range(2, 7):
        good, worst = tau_sum_bound_scan(table, config.tau_x, m)
        ok &= good
        rows.append({"m": m, "x_max": config.tau_x, "holds": good, "worst_x": worst})
    return SuiteResult("tau-bound", True, bool(ok), list(rows[0]), rows)


def _suite_fluctuation(config, table, schedule):
    rows, trace = fluctuation_scan(config, table)
    sup = [r["sup_statistic"] for r in rows]
    return SuiteResult("fluctuation", False, True, list(rows[0]), rows,
                       {"median_sup": float(np.median(sup)), "max_sup": float(np.max(sup)), "trace_rows": len(trace)})


def _suite_moments(config, table, schedule):
    rows = moment_scan(config, table)
    return SuiteResult("moments", False, True, list(rows[0]), rows, moment_trend(rows))


def _suite_variance_event(config, table, schedule):
    rows = variance_event_scan(config, table, schedule)
    return SuiteResult("variance-event", False, True, list(rows[0]), rows)


def _suite_i0(config, table, schedule):
    rows = []
    for y0 in config.i0_y0:
        seed = rng.derive_seed(config.base_seed, "i0", repr(y0))
        r = estimate_I0_low_moment(config.mode, table, y0, config.i0_t_max, config.i0_quad_step, config.i0_trials, seed)
        rows.append({"y0": y0, "mean_pow_2_3": r.mean_pow_2_3, "std_error": r.std_error, "trials": r.trials})
    return SuiteResult("i0", False, True, list(rows[0]), rows)


SUITES = {
    "decompose": _suite_decompose,
    "variance": _suite_variance,
    "euler": _suite_euler,
    "parseval": _suite_parseval,
    "hyper": _suite_hyper,
    "hoeffding": _suite_hoeffding,
    "hoeffding-cond": _suite_hoeffding_cond,
    "doob2d": _suite_doob2d,
    "fourier": _suite_fourier,
    "gaussian": _suite_gaussian,
    "submartingale": _suite_submartingale,
    "super-step": _suite_super_step,
    "nij-moment": _suite_nij,
    "tau-bound": _suite_tau,
    "fluctuation": _suite_fluctuation,
    "moments": _suite_moments,
    "variance-event": _suite_variance_event,
    "i0": _suite_i0,
}

_WORKER_TABLE: dict = {}


def _worker_run(config: ExperimentConfig, name: str, limit: int) -> SuiteResult:
    table = _WORKER_TABLE.get(limit)
    if table is None:
        table = _WORKER_TABLE[limit] = build_prime_table(limit)
    return SUITES[name](config, table, config.schedule())


def run_single(config: ExperimentConfig, name: str, table: PrimeTable | None = None) -> SuiteResult:
    if name not in SUITES:
        raise InvalidArgument(f"unknown suite {name!r}")
    table = table or build_prime_table(table_limit(config, [name]))
    return SUITES[name](config, table, config.schedule())


def write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(r.get(h, "")) for h in header])
    try:
        path.write_text(buf.getvalue())
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def run_suite(config: ExperimentConfig, suite_selector=None, out_dir: str | Path | None = None,
              table: PrimeTable | None = None) -> RunReport:
    """Run the selected suites, write one CSV per suite plus report.json.

    Only asserting suites affect ``passed``; exploratory scans never fail.
    """
    names = list(ALL_SUITES) if suite_selector is None else list(suite_selector)
    for n in names:
        if n not in SUITES:
            raise InvalidArgument(f"unknown suite {n!r}")
    start = time.perf_counter()
    results: list[SuiteResult] = []
    if names:
        limit = table_limit(config, names)
        if config.jobs > 1 and len(names) > 1:
            with ProcessPoolExecutor(max_workers=config.jobs) as ex:
                futs = [ex.submit(_worker_run, config, n, limit) for n in names]
                results = [f.result() for f in futs]
        else:
            if table is None or table.limit < limit:
                table = build_prime_table(limit)
            schedule = config.schedule()
            results = [SUITES[n](config, table, schedule) for n in names]
    passed = all(r.ok for r in results if r.asserting)
    report = RunReport(config.to_dict(), __version__, results, time.perf_counter() - start, passed)
    out = Path(out_dir if out_dir is not None else config.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    for r in results:
        header = list(r.header)
        if "seed" not in header:
            header = ["base_seed"] + header
            for row in r.rows:
                row.setdefault("base_seed", config.base_seed)
        write_csv(out / f"{r.name}.csv", header, r.rows)
    (out / "report.json").write_text(report.to_json())
    return report
