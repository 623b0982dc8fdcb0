"""Certified parameter thresholds for the indefinite problem.

Indices are 0-based.  In periodic mode neighbours wrap around cyclically.  In
interval mode (Neumann/Dirichlet windows) a term whose neighbouring interval
does not exist is reported as NaN and left out of the maxima.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import optimize as spo

from .errors import DegenerateHump, EpsilonOutOfRange, EpsilonTooLarge, NoAdmissibleR
from .nonlinearity import Nonlinearity, extremum, g_lower, g_star, gamma_env, ratio_min
from .weight import Weight

AUTO_EPS_POINTS = 64
RR_TOL = 1e-6
_SUP_SCAN = 2048


# ----------------------------------------------------------------------------
# lambda*
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class LambdaStar:
    value: float
    eps: float
    nu: float
    eta: float


def _lambda_star_at(w: Weight, g: Nonlinearity, rho: float, eps: float) -> LambdaStar:
    plus = w.decomposition.plus
    lengths = [hi - lo for lo, hi in plus]
    if not 0 < eps < min(lengths) / 2:
        raise EpsilonTooLarge(f"eps={eps} must lie in (0, {min(lengths) / 2})")
    nu = min(w.moment(lo + eps, hi - eps, +1) for lo, hi in plus)
    if not nu > 0:
        raise DegenerateHump(f"no positive mass inside the humps shrunk by eps={eps}")
    eta = g_lower(g, eps * rho / max(lengths), rho)
    return LambdaStar(2 * rho / (eps * nu * eta), eps, nu, eta)


def lambda_star_terms(w: Weight, g: Nonlinearity, rho: float, eps: Optional[float] = None) -> LambdaStar:
    """``2 rho / (eps nu_eps eta_{eps,rho})``; ``eps=None`` minimises over ``eps``.

    The minimum is located on a log grid and refined by a bounded scalar search.
    """
    if eps is not None:
        return _lambda_star_at(w, g, rho, eps)
    half = min(hi - lo for lo, hi in w.decomposition.plus) / 2
    grid = np.geomspace(half * 1e-3, half * (1 - 1e-6), AUTO_EPS_POINTS)
    best, k_best = None, None
    for k, e in enumerate(grid):
        try:
            cand = _lambda_star_at(w, g, rho, float(e))
        except DegenerateHump:
            continue
        if best is None or cand.value < best.value:
            best, k_best = cand, k
    if best is None:
        raise DegenerateHump("nu_eps vanishes for every grid eps")
    # refine inside the neighbouring grid cells
    lo, hi = grid[max(k_best - 1, 0)], grid[min(k_best + 1, len(grid) - 1)]

    def value(e):
        try:
            return _lambda_star_at(w, g, rho, e).value
        except DegenerateHump:
            return math.inf

    res = spo.minimize_scalar(value, bounds=(lo, hi), method="bounded", options={"xatol": 1e-10 * half})
    if res.fun < best.value:
        best = _lambda_star_at(w, g, rho, float(res.x))
    return best


def lambda_star(w: Weight, g: Nonlinearity, rho: float, eps: Optional[float] = None) -> float:
    return lambda_star_terms(w, g, rho, eps).value


# ----------------------------------------------------------------------------
# admissible (r, R)
# ----------------------------------------------------------------------------


def rr_bound(w: Weight, lam: float) -> float:
    """Right-hand side of the smallness condition on ``g(s)/s``."""
    wi = w.integrals()
    worst = max(
        (lp + (lm or 0.0)) * npl for lp, lm, npl in zip(wi.len_plus, wi.len_minus, wi.norm_plus)
    )
    return 1.0 / (2.0 * lam * worst)


def sup_ratio(g: Nonlinearity, lo: float, hi: float) -> float:
    """Sup of ``g(s)/s`` on ``[lo, hi]`` via a log-spaced scan plus golden refinement."""
    xs = np.geomspace(lo, hi, _SUP_SCAN)
    vals = np.array([g.ratio(x) for x in xs])
    k = int(np.argmax(vals))
    a, b = xs[max(k - 1, 0)], xs[min(k + 1, _SUP_SCAN - 1)]
    return max(float(vals[k]), extremum(g.ratio, a, b, True))


# probe span standing in for the limits s -> 0 and s -> infinity
_TAIL = 1e8


def _small_ok(g, r, bound):
    return sup_ratio(g, r / _TAIL, r) < bound


def _large_ok(g, R, bound):
    return sup_ratio(g, R / 2, R * _TAIL) < bound


def admissible_rr(w: Weight, g: Nonlinearity, lam: float, rho: float) -> tuple[float, float]:
    """Largest ``r <= rho/2`` and smallest ``R >= 2 rho`` meeting the smallness condition.

    ``zeta(s) < bound`` for all ``0 < s <= r`` is the same as ``sup g(s)/s < bound``
    on ``(0, r]``; for all ``s >= R`` it is the sup over ``[R/2, inf)``.  The
    open ends are probed over eight decades, which is a heuristic certificate.
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    bound = rr_bound(w, lam)
    tol = RR_TOL * rho

    # r: bisection on the monotone predicate
    r_hi = rho / 2
    if _small_ok(g, r_hi, bound):
        r = r_hi
    else:
        r_lo = r_hi
        for _ in range(200):
            r_lo /= 2
            if _small_ok(g, r_lo, bound):
                break
        else:
            raise NoAdmissibleR("g(s)/s does not fall below the bound near zero")
        while r_hi - r_lo > tol:
            mid = 0.5 * (r_lo + r_hi)
            if _small_ok(g, mid, bound):
                r_lo = mid
            else:
                r_hi = mid
        r = r_lo

    R_lo = 2 * rho
    if _large_ok(g, R_lo, bound):
        R = R_lo
    else:
        R_hi = R_lo
        for _ in range(200):
            R_hi *= 2
            if _large_ok(g, R_hi, bound):
                break
        else:
            raise NoAdmissibleR("g(s)/s does not fall below the bound near infinity")
        while R_hi - R_lo > tol:
            mid = 0.5 * (R_lo + R_hi)
            if _large_ok(g, mid, bound):
                R_hi = mid
            else:
                R_lo = mid
        R = R_hi
    return r, R


# ----------------------------------------------------------------------------
# mu thresholds
# ----------------------------------------------------------------------------


@dataclass
class ParamSet:
    lam: float
    rho: float
    r: float
    R: float
    mu: Optional[float] = None
    c: float = 0.0
    eps: Optional[float] = None
    lambda_star: Optional[float] = None
    mu_sharp: float = math.nan
    mu_hat: list = field(default_factory=list)
    mu_check: list = field(default_factory=list)
    mu_tilde: list = field(default_factory=list)
    mu_bar: list = field(default_factory=list)
    mu_star_plus: list = field(default_factory=list)
    mu_star_minus: list = field(default_factory=list)
    mu_h1: float = math.nan
    mu_h3: float = math.nan
    mu_star: float = math.nan

    def __post_init__(self):
        if not 0 < self.r < self.rho < self.R:
            raise ValueError(f"need 0 < r < rho < R, got r={self.r}, rho={self.rho}, R={self.R}")

    def table(self) -> list:
        """``(name, value, formula)`` rows for reports."""
        rows = [
            ("lambda", self.lam, "input"),
            ("rho", self.rho, "input"),
            ("r", self.r, "largest r <= rho/2 with sup g(s)/s < bound on (0, r]"),
            ("R", self.R, "smallest R >= 2 rho with sup g(s)/s < bound on [R/2, inf)"),
        ]
        if self.lambda_star is not None:
            rows.append(("lambda_star", self.lambda_star, "2 rho / (eps nu_eps eta_eps_rho)"))
        if self.eps is not None:
            rows.append(("eps", self.eps, "hump margin used for lambda_star"))
        rows.append(("mu_sharp", self.mu_sharp, "lam * int a+ / int a-"))
        for name, vals, formula in (
            ("mu_hat", self.mu_hat, "2R / (r gamma(r) ||A_i||)"),
            ("mu_check", self.mu_check, "1 / (gamma(R) ||A_i||)"),
            ("mu_tilde", self.mu_tilde, "(1 + 2 lam |I+_{i+1}| ||a||_{+,i+1} g*(R)/r) / (gamma(r) ||A_i||)"),
            ("mu_bar", self.mu_bar, "(1 + 2 lam |I+_{i-1}| ||a||_{+,i-1} g*(R)/r) / (gamma(r) ||A_{i-1}||)"),
            ("mu_star_plus", self.mu_star_plus, "lam ||a||_{+,i+1} g*(R) / (||a||_{-,i} g_*(r,R))"),
            ("mu_star_minus", self.mu_star_minus, "lam ||a||_{+,i-1} g*(R) / (||a||_{-,i-1} g_*(r,R))"),
        ):
            for i, v in enumerate(vals):
                rows.append((f"{name}[{i + 1}]", v, formula))
        rows += [
            ("mu_H1", self.mu_h1, "max_i {mu_hat_i, mu_check_i}"),
            ("mu_H3", self.mu_h3, "max {max_i {mu_tilde, mu_bar, mu_star_plus, mu_star_minus, mu_check}, mu_sharp}"),
            ("mu_star", self.mu_star, "max {mu_H1, mu_H3}"),
        ]
        return rows


def _nanmax(vals) -> float:
    vals = [v for v in vals if v is not None and not math.isnan(v)]
    return max(vals) if vals else math.nan


def mu_sharp(w: Weight, lam: float) -> float:
    wi = w.integrals()
    return lam * wi.total_plus / wi.total_minus


def mu_thresholds(w: Weight, g: Nonlinearity, lam: float, rho: float, r: float, R: float) -> ParamSet:
    """Fill every mu threshold for the given ``(lam, rho, r, R)``."""
    ps = ParamSet(lam=lam, rho=rho, r=r, R=R)
    d = w.decomposition
    wi = w.integrals()
    m = d.m
    gam_r = gamma_env(g, r)
    gam_R = gamma_env(g, R)
    gs = g_star(g, R)
    gl = g_lower(g, r, R)
    nan = math.nan

    def nxt(i):
        # hump after negativity interval i
        if i + 1 < m:
            return i + 1
        return 0 if d.periodic else None

    def prv(i):
        # hump before hump i
        if i > 0:
            return i - 1
        return m - 1 if d.periodic else None

    for i in range(m):
        nA = wi.norm_A[i]
        ps.mu_hat.append(2 * R / (r * gam_r * nA) if nA else nan)
        ps.mu_check.append(1 / (gam_R * nA) if nA else nan)
        j = nxt(i)
        if nA and j is not None:
            ps.mu_tilde.append((1 + 2 * lam * wi.len_plus[j] * wi.norm_plus[j] * gs / r) / (gam_r * nA))
            ps.mu_star_plus.append(lam * wi.norm_plus[j] * gs / (wi.norm_minus[i] * gl))
        else:
            ps.mu_tilde.append(nan)
            ps.mu_star_plus.append(nan)
        k = prv(i)
        if k is not None and wi.norm_A[k]:
            ps.mu_bar.append((1 + 2 * lam * wi.len_plus[k] * wi.norm_plus[k] * gs / r) / (gam_r * wi.norm_A[k]))
            ps.mu_star_minus.append(lam * wi.norm_plus[k] * gs / (wi.norm_minus[k] * gl))
        else:
            ps.mu_bar.append(nan)
            ps.mu_star_minus.append(nan)

    ps.mu_sharp = mu_sharp(w, lam)
    ps.mu_h1 = _nanmax(ps.mu_hat + ps.mu_check)
    ps.mu_h3 = _nanmax(
        [_nanmax(ps.mu_tilde + ps.mu_bar + ps.mu_star_plus + ps.mu_star_minus + ps.mu_check), ps.mu_sharp]
    )
    ps.mu_star = _nanmax([ps.mu_h1, ps.mu_h3])
    return ps


# ----------------------------------------------------------------------------
# eps thresholds
# ----------------------------------------------------------------------------


def epsilon_thresholds(
    w: Weight, g: Nonlinearity, lam: float, r: float, R: float, eps: float, rho: Optional[float] = None
) -> tuple[float, float]:
    """``(mu_star_eps, mu_star_star_eps)`` for ``0 < eps <= r``.

    ``rho`` only serves the ``mu_star`` floor; it defaults to the geometric
    mean of ``r`` and ``R``, which does not enter any mu formula.
    """
    if not 0 < eps <= r:
        raise EpsilonOutOfRange(f"eps={eps} must lie in (0, r={r}]")
    if rho is None:
        rho = math.sqrt(r * R)
    base = mu_thresholds(w, g, lam, rho, r, R)
    d = w.decomposition
    wi = w.integrals()
    m = d.m
    gam_star = ratio_min(g, eps / 2, r)
    star = [2 * R / (eps * gam_star * nA) for nA in wi.norm_A if nA]
    mu_star_eps = max(max(star), base.mu_star)

    gs = g_star(g, R)
    gl = g_lower(g, eps / 2, R)
    kappa = [R / L + lam * npl * gs for L, npl in zip(wi.len_plus, wi.norm_plus)]
    terms = [base.mu_star]
    for i in range(m):
        if d.minus[i] is None:
            continue
        half = wi.len_minus[i] / 2
        delta = min(eps / (2 * kappa[i]), half)
        terms.append((R + kappa[i] * delta) / (gl * wi.int_A(i, delta)))
        j = i + 1 if i + 1 < m else (0 if d.periodic else None)
        if j is not None:
            dr = min(eps / (2 * kappa[j]), half)
            terms.append((R + kappa[j] * dr) / (gl * wi.int_B(i, dr)))
    return mu_star_eps, max(terms)


def certify(
    w: Weight, g: Nonlinearity, lam: float, rho: float, eps: Optional[float] = None
) -> ParamSet:
    """lambda*, admissible (r, R) and all mu thresholds in one call."""
    ls = lambda_star_terms(w, g, rho, eps)
    r, R = admissible_rr(w, g, lam, rho)
    ps = mu_thresholds(w, g, lam, rho, r, R)
    ps.lambda_star = ls.value
    ps.eps = ls.eps
    return ps
