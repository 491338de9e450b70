"""Exact integrals of squared step functions.

Every z- or t-integral in the smoothing and supermartingale functionals has
the form ``int_a^b |S(u)|^2 dmu(u)`` where ``S(u) = sum_i w_i 1[s_i <= u < e_i]``
is piecewise constant.  Sorting the 2m breakpoints and integrating each piece
in closed form gives the value exactly, up to floating-point rounding.
"""

from __future__ import annotations

import numpy as np

MEASURES = ("inv_sq", "lebesgue")


def _piece_measure(lo: np.ndarray, hi: np.ndarray, measure: str) -> np.ndarray:
    if measure == "inv_sq":
        # int_lo^hi du/u^2; pieces with lo = 0 only occur where S = 0
        with np.errstate(divide="ignore"):
            inv_lo = np.where(lo > 0, 1.0 / np.where(lo > 0, lo, 1.0), np.inf)
        inv_hi = np.where(np.isinf(hi), 0.0, 1.0 / np.where(hi > 0, hi, 1.0))
        out = inv_lo - inv_hi
        return np.where(hi > lo, out, 0.0)
    if measure == "lebesgue":
        return np.where(hi > lo, hi - lo, 0.0)
    raise ValueError(f"unknown measure {measure!r}")


def _prepare(starts, ends, a: float, b: float):
    s = np.clip(np.asarray(starts, dtype=np.float64), a, b)
    e = np.clip(np.asarray(ends, dtype=np.float64), a, b)
    keep = e > s
    return s, e, keep


def _check_origin(s: np.ndarray, measure: str) -> None:
    if measure == "inv_sq" and s.size and s.min() <= 0:
        raise ValueError("du/u^2 is not integrable at 0; intervals must start at u > 0")


def step_integral(starts, ends, weights, a: float, b: float, measure: str = "inv_sq") -> float:
    """``int_a^b |sum_i w_i 1[s_i <= u < e_i]|^2 dmu(u)`` for one weight vector."""
    w = np.asarray(weights)
    return float(step_integral_batch(starts, ends, w[None, :], a, b, measure)[0])


def step_integral_batch(starts, ends, weights, a: float, b: float, measure: str = "inv_sq") -> np.ndarray:
    """Vectorised over rows of ``weights`` (shape B x m) sharing the same intervals."""
    if not b > a:
        return np.zeros(np.asarray(weights).shape[0])
    s, e, keep = _prepare(starts, ends, a, b)
    w = np.asarray(weights)[:, keep]
    s, e = s[keep], e[keep]
    _check_origin(s, measure)
    if s.size == 0:
        return np.zeros(w.shape[0])
    pos = np.concatenate([s, e])
    order = np.argsort(pos, kind="stable")
    pos = pos[order]
    delta = np.concatenate([w, -w], axis=1)[:, order]
    level = np.cumsum(delta, axis=1)[:, :-1]
    mu = _piece_measure(pos[:-1], pos[1:], measure)
    sq = level.real**2 + level.imag**2 if np.iscomplexobj(level) else level.astype(np.float64) ** 2
    return sq @ mu


def expanded_square_integral(starts, ends, weights, a: float, b: float, measure: str = "inv_sq") -> float:
    """Same integral via sum_{i,j} w_i conj(w_j) mu(I_i & I_j & [a, b]); O(m^2) reference."""
    s, e, keep = _prepare(starts, ends, a, b)
    s, e = s[keep], e[keep]
    _check_origin(s, measure)
    w = np.asarray(weights)[keep].astype(np.complex128)
    lo = np.maximum.outer(s, s)
    hi = np.minimum.outer(e, e)
    mu = _piece_measure(lo.ravel(), hi.ravel(), measure).reshape(lo.shape)
    return float(np.real(w @ mu @ np.conj(w)))
