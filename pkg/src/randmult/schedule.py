"""Parameter schedule: test points, the geometric log-y grid, J and smoothing X.

The full-scale parameters (``X_l = exp(2**(l**K))`` and friends) are
representable only for toy ``l``, so a desk-scale mode keeps the two
relations the identities rely on: ``log y_j / log y_{j-1} = e^(1/l)`` and
``J`` minimal with ``y_J >= max(x_points)``.
"""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass

from .errors import InfeasibleParameters, InvalidArgument

DEFAULT_Y0 = 10.0
DEFAULT_X_CAP = 50.0
_EXP_LIMIT = 700.0


@dataclass(frozen=True)
class Schedule:
    ell: int
    bigK: float
    eps: float
    c0: float
    x_points: tuple
    y_grid: tuple
    J: int
    smoothing_X: float
    r_param: int
    desk_scale: bool
    x_uncapped_log: float = 0.0  # log of (log x_max)^(8r^2-8r+4) before capping
    x_capped: bool = False
    block_threshold: float = 1.0
    x_max: int = 0

    @property
    def y0(self) -> float:
        return self.y_grid[0]

    @property
    def h(self) -> float:
        return 1.0 + 1.0 / self.smoothing_X

    def y(self, j: int) -> float:
        if not 0 <= j <= self.J:
            raise InvalidArgument(f"j={j} outside 0..{self.J}")
        return self.y_grid[j]

    def check_block(self, j: int) -> None:
        if not 1 <= j <= self.J:
            raise InvalidArgument(f"block index j={j} outside 1..{self.J}")

    def block_of(self, p: float) -> int:
        """j with y_{j-1} < p <= y_j, or 0 if p <= y_0, or J+1 beyond y_J."""
        for j in range(1, self.J + 1):
            if p <= self.y_grid[j]:
                return j if p > self.y_grid[0] else 0
        return self.J + 1

    def to_text(self) -> str:
        cp = configparser.ConfigParser()
        cp.optionxform = str
        cp["schedule"] = {
            "ell": str(self.ell),
            "bigK": repr(self.bigK),
            "eps": repr(self.eps),
            "c0": repr(self.c0),
            "x_points": ",".join(str(int(v)) for v in self.x_points),
            "y_grid": ",".join(repr(float(v)) for v in self.y_grid),
            "J": str(self.J),
            "smoothing_X": repr(self.smoothing_X),
            "r_param": str(self.r_param),
            "desk_scale": str(self.desk_scale).lower(),
            "x_uncapped_log": repr(self.x_uncapped_log),
            "x_capped": str(self.x_capped).lower(),
            "block_threshold": repr(self.block_threshold),
            "x_max": str(self.x_max),
        }
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_text(cls, text: str) -> "Schedule":
        cp = configparser.ConfigParser()
        cp.optionxform = str
        cp.read_string(text)
        s = cp["schedule"]
        return cls(
            ell=int(s["ell"]),
            bigK=float(s["bigK"]),
            eps=float(s["eps"]),
            c0=float(s["c0"]),
            x_points=tuple(int(v) for v in s["x_points"].split(",")),
            y_grid=tuple(float(v) for v in s["y_grid"].split(",")),
            J=int(s["J"]),
            smoothing_X=float(s["smoothing_X"]),
            r_param=int(s["r_param"]),
            desk_scale=s.getboolean("desk_scale"),
            x_uncapped_log=float(s["x_uncapped_log"]),
            x_capped=s.getboolean("x_capped"),
            block_threshold=float(s["block_threshold"]),
            x_max=int(s["x_max"]),
        )

    def as_dict(self) -> dict:
        return {
            "ell": self.ell, "bigK": self.bigK, "eps": self.eps, "c0": self.c0,
            "x_points": list(self.x_points), "y_grid": list(self.y_grid), "J": self.J,
            "smoothing_X": self.smoothing_X, "r_param": self.r_param, "desk_scale": self.desk_scale,
            "x_capped": self.x_capped, "block_threshold": self.block_threshold, "x_max": self.x_max,
        }


def y_grid_from(y0: float, ell: int, target: float) -> tuple:
    """y_j = exp(e^(j/ell) log y0) for j = 0..J, J >= 1 minimal with y_J >= target."""
    ly0 = math.log(y0)
    ys = [y0]
    j = 0
    while True:
        j += 1
        # exp(e^(j/ell) * log y0) >= target  <=>  e^(j/ell) * log y0 >= log target
        ly = math.exp(j / ell) * ly0
        ys.append(math.exp(ly) if ly < _EXP_LIMIT else math.inf)
        if ly >= math.log(target) * (1 - 1e-15):
            return tuple(ys)


def geometric_points(x_max: int, ratio: float = 2.0, x_min: int = 100) -> tuple:
    pts = []
    v = float(x_max)
    while v >= x_min:
        pts.append(int(v))
        v /= ratio
    return tuple(sorted(set(pts)))


def test_points(c0: float, lo: float, hi: float) -> tuple:
    """Distinct values floor(e^(i^c0)), i >= 1, in (lo, hi]."""
    out = []
    for v in range(max(2, math.floor(lo) + 1), math.floor(hi) + 1):
        # need an integer i with log v <= i^c0 < log(v+1)
        la = math.log(math.log(v)) / c0 if v > 2 else -math.inf
        lb = math.log(math.log(v + 1)) / c0
        if lb > 50:
            width_log = la + math.log(math.expm1(lb - la)) if la > -math.inf else lb
            if width_log >= 0:
                out.append(v)
                continue
        a = math.exp(la) if la > -math.inf else 0.0
        b = math.exp(lb)
        i = max(1, math.ceil(a))
        if i < b:
            out.append(v)
    return tuple(out)


def build_schedule(
    x_max: int,
    ell: int,
    bigK: float,
    eps: float,
    c0: float,
    r_param: int,
    desk_scale: bool = True,
    y0: float = DEFAULT_Y0,
    x_cap: float = DEFAULT_X_CAP,
    block_threshold: float | None = None,
    x_ratio: float = 2.0,
) -> Schedule:
    if x_max < 100:
        raise InvalidArgument(f"x_max must be >= 100, got {x_max}")
    if ell < 1 or bigK <= 0 or eps <= 0 or x_cap <= 0:
        raise InvalidArgument("ell, bigK, eps and x_cap must be positive")
    if not 0 < c0 <= 1e-3:
        raise InvalidArgument(f"c0 must lie in (0, 1/1000], got {c0}")
    if r_param < 2:
        raise InvalidArgument(f"r_param must be an integer > 1, got {r_param}")
    x_max = int(x_max)

    if desk_scale:
        if not 1 < y0 < x_max:
            raise InvalidArgument(f"desk y0 must lie in (1, x_max), got {y0}")
        points = geometric_points(x_max, x_ratio)
    else:
        if abs(bigK * eps - 25) > 1e-9 * 25:
            raise InfeasibleParameters(f"full-scale mode needs K*eps = 25, got {bigK * eps}")
        log2_logX = ell**bigK  # log X_l = 2^(l^K)
        if log2_logX * math.log(2) > math.log(_EXP_LIMIT):
            raise InfeasibleParameters(f"X_l = exp(2^({ell}^{bigK})) is unrepresentable")
        log_X = 2.0**log2_logX
        if log_X > math.log(x_max):
            raise InfeasibleParameters(f"X_l = e^{log_X:.6g} exceeds x_max = {x_max}")
        log_X_prev = 2.0 ** ((ell - 1) ** bigK) if ell > 1 else 1.0
        y0 = math.exp(log_X ** (1 - bigK / ell))
        points = test_points(c0, math.exp(log_X_prev), math.exp(log_X))
        if not points:
            raise InfeasibleParameters("no test points in (X_{l-1}, X_l]")
        if y0 > points[-1]:
            raise InfeasibleParameters(f"full-scale y0 = {y0:.6g} exceeds the largest test point")
        if y0 <= 1:
            raise InfeasibleParameters(f"full-scale y0 = {y0!r} is not > 1 in floating point")

    ys = y_grid_from(y0, ell, max(points))
    J = len(ys) - 1
    expo = 8 * r_param**2 - 8 * r_param + 4
    lx = math.log(math.log(x_max)) * expo
    capped = lx > math.log(x_cap)
    X = x_cap if capped else math.exp(lx)
    if block_threshold is None:
        block_threshold = math.sqrt(math.log(x_max) / math.log(ys[0]))
    return Schedule(
        ell=int(ell), bigK=float(bigK), eps=float(eps), c0=float(c0),
        x_points=tuple(int(p) for p in points), y_grid=ys, J=J, smoothing_X=float(X),
        r_param=int(r_param), desk_scale=bool(desk_scale), x_uncapped_log=lx,
        x_capped=capped, block_threshold=float(block_threshold), x_max=x_max,
    )


def g_function(schedule: Schedule, x: float, j: int, z: float) -> float:
    """y_j for z <= x/y_j, x/z up to x/y_0, then y_0."""
    if z <= 0:
        raise InvalidArgument("z must be positive")
    yj = schedule.y(j)
    y0 = schedule.y0
    if z <= x / yj:
        return yj
    if z <= x / y0:
        return x / z
    return y0
