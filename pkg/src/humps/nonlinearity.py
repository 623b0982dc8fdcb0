"""Nonlinearity g and its envelope functionals.

Every kernel is extended by zero for ``s <= 0``.  Envelopes are located by a
dense pre-scan followed by golden-section refinement of the best bracket.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import optimize as spo
from scipy.interpolate import PchipInterpolator

from .errors import NonPositiveInput

SCAN_POINTS = 2048
BRACKET_TOL = 1e-12


@dataclass(frozen=True)
class Nonlinearity:
    """Scalar map ``g`` with an analytic derivative ``dg`` when available."""

    kind: str
    param_items: tuple
    func: Callable[[float], float] = field(compare=False, repr=False)
    deriv: Optional[Callable[[float], float]] = field(default=None, compare=False, repr=False)
    lipschitz: bool = True
    # zero extension on s <= 0; only the linear test kernel turns it off
    extend_zero: bool = True

    def __call__(self, s: float) -> float:
        return self.func(s) if s > 0.0 or not self.extend_zero else 0.0

    def dg(self, s: float) -> Optional[float]:
        if self.deriv is None:
            return None
        return self.deriv(s) if s > 0.0 or not self.extend_zero else 0.0

    def params(self) -> dict:
        return dict(self.param_items)

    def ratio(self, s: float) -> float:
        """``g(s)/s`` for ``s > 0``."""
        return self(s) / s

    def check_limits(self, s_ref: float = 1.0, tol: float = 1e-3) -> list:
        """Probe ``g(s)/s`` near zero and infinity; return warning messages."""
        msgs = []
        for label, s in (("zero", 1e-6 * s_ref), ("infinity", 1e6 * s_ref)):
            if not self.ratio(s) < tol:
                msgs.append(f"g(s)/s = {self.ratio(s):.3e} at s = {s:.1e}: no vanishing ratio near {label}")
        for msg in msgs:
            warnings.warn(msg, stacklevel=2)
        return msgs


# ----------------------------------------------------------------------------
# named kernels
# ----------------------------------------------------------------------------


def rational_square() -> Nonlinearity:
    """``s^2 / (1 + s^2)``."""
    return Nonlinearity(
        "rational_square",
        (),
        lambda s: s * s / (1.0 + s * s),
        lambda s: 2.0 * s / (1.0 + s * s) ** 2,
    )


def arctan_cube() -> Nonlinearity:
    """``arctan(s^3)``."""
    return Nonlinearity(
        "arctan_cube",
        (),
        lambda s: math.atan(s**3),
        lambda s: 3.0 * s * s / (1.0 + s**6),
    )


def power_blend(alpha: float, beta: float) -> Nonlinearity:
    """``s^alpha / (1 + s^(alpha - beta))`` with ``alpha > 1 > beta > 0``."""
    if not (alpha > 1.0 and 0.0 < beta < 1.0):
        raise ValueError("power_blend needs alpha > 1 and 0 < beta < 1")
    d = alpha - beta

    def f(s):
        return s**alpha / (1.0 + s**d)

    def df(s):
        den = 1.0 + s**d
        return (alpha * s ** (alpha - 1.0) * den - s**alpha * d * s ** (d - 1.0)) / (den * den)

    return Nonlinearity("power_blend", (("alpha", alpha), ("beta", beta)), f, df)


def linear() -> Nonlinearity:
    """``g(s) = s`` on the whole line; violates the limit hypotheses, used as a test kernel."""
    return Nonlinearity("linear", (), lambda s: s, lambda s: 1.0, extend_zero=False)


def tabulated(s_values, g_values) -> Nonlinearity:
    """Monotone cubic spline through ``(s, g)`` samples, starting at ``(0, 0)``.

    Accuracy of envelopes is bounded by the table density.
    """
    s = np.asarray(s_values, dtype=float)
    gv = np.asarray(g_values, dtype=float)
    if s.ndim != 1 or s.shape != gv.shape or len(s) < 3:
        raise ValueError("tabulated g needs matching 1-D arrays of length >= 3")
    if s[0] != 0.0 or gv[0] != 0.0:
        raise ValueError("tabulated g must start at (0, 0)")
    if np.any(np.diff(s) <= 0) or np.any(gv[1:] <= 0):
        raise ValueError("tabulated g needs increasing s and positive g for s > 0")
    spline = PchipInterpolator(s, gv, extrapolate=False)
    dspline = spline.derivative()
    s_max, g_last = float(s[-1]), float(gv[-1])

    def f(x):
        return float(spline(x)) if x <= s_max else g_last

    def df(x):
        return float(dspline(x)) if x <= s_max else 0.0

    return Nonlinearity(
        "tabulated", (("s", tuple(s.tolist())), ("g", tuple(gv.tolist()))), f, df
    )


def make_nonlinearity(kind: str, **params) -> Nonlinearity:
    if kind == "rational_square":
        _no_params(kind, params)
        return rational_square()
    if kind == "arctan_cube":
        _no_params(kind, params)
        return arctan_cube()
    if kind == "power_blend":
        if set(params) != {"alpha", "beta"}:
            raise ValueError("power_blend takes alpha and beta")
        return power_blend(float(params["alpha"]), float(params["beta"]))
    if kind == "tabulated":
        if set(params) != {"s", "g"}:
            raise ValueError("tabulated takes s and g")
        return tabulated(params["s"], params["g"])
    if kind == "linear":
        _no_params(kind, params)
        return linear()
    raise ValueError(f"unknown nonlinearity kind {kind!r}")


def _no_params(kind, params):
    if params:
        raise ValueError(f"{kind} takes no parameters, got {sorted(params)}")


# ----------------------------------------------------------------------------
# envelopes
# ----------------------------------------------------------------------------


def extremum(f, lo: float, hi: float, find_max: bool) -> float:
    """Max (or min) of ``f`` on ``[lo, hi]`` by dense scan plus bounded Brent refinement."""
    if hi <= lo:
        return float(f(lo))
    sign = 1.0 if find_max else -1.0
    xs = np.linspace(lo, hi, SCAN_POINTS)
    vals = np.array([sign * f(x) for x in xs])
    k = int(np.argmax(vals))
    best = float(vals[k] * sign)
    # endpoints are exact candidates; refine the neighbouring bracket either way
    a = xs[max(k - 1, 0)]
    b = xs[min(k + 1, SCAN_POINTS - 1)]
    res = spo.minimize_scalar(
        lambda x: -sign * f(x), bounds=(a, b), method="bounded", options={"xatol": BRACKET_TOL * max(1.0, abs(a))}
    )
    v = float(f(res.x))
    return max(best, v) if find_max else min(best, v)


def _check_pos(*xs):
    for x in xs:
        if not (x > 0 and math.isfinite(x)):
            raise NonPositiveInput(f"argument must be positive and finite, got {x!r}")


def zeta(g: Nonlinearity, d: float) -> float:
    """Max of ``g(s)/s`` on ``[d/2, d]``."""
    _check_pos(d)
    return extremum(g.ratio, d / 2.0, d, True)


def gamma_env(g: Nonlinearity, d: float) -> float:
    """Min of ``g(s)/s`` on ``[d/2, d]``."""
    _check_pos(d)
    return extremum(g.ratio, d / 2.0, d, False)


def g_star(g: Nonlinearity, d: float) -> float:
    """Max of ``g`` on ``[0, d]``."""
    _check_pos(d)
    return extremum(g, 0.0, d, True)


def g_lower(g: Nonlinearity, d: float, D: float) -> float:
    """Min of ``g`` on ``[d, D]``."""
    _check_pos(d, D)
    if D < d:
        raise NonPositiveInput(f"g_lower needs d <= D, got d={d}, D={D}")
    return extremum(g, d, D, False)


def ratio_min(g: Nonlinearity, lo: float, hi: float) -> float:
    """Min of ``g(s)/s`` on ``[lo, hi]``."""
    _check_pos(lo, hi)
    return extremum(g.ratio, lo, hi, False)
