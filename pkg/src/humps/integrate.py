"""Planar system ``u' = y, y' = -q(t) g(u) - c y`` with ``q = lam*a^+ - mu*a^-``.

Dormand-Prince 5(4) on scalar floats.  Every weight breakpoint and sign change
is a mandatory step endpoint, so the right-hand side is smooth inside each
step.  Dense output is the quintic Hermite interpolant built from ``u``,
``u'`` and the one-sided values of ``u''`` at both ends of a step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from .errors import NonFiniteState, StepSizeUnderflow
from .nonlinearity import Nonlinearity, g_star
from .weight import ConstantPiece, Weight

RTOL = 1e-10
ATOL = 1e-10
MAX_STEPS = 2_000_000
# finite-time blow-up is caught here instead of by the step budget
BLOWUP = 1e15

# Dormand-Prince 5(4) tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B = _A[6]
_E = (
    35 / 384 - 5179 / 57600,
    0.0,
    500 / 1113 - 7571 / 16695,
    125 / 192 - 393 / 640,
    -2187 / 6784 + 92097 / 339200,
    11 / 84 - 187 / 2100,
    -1 / 40,
)


@dataclass(frozen=True)
class Params:
    lam: float
    mu: float
    c: float = 0.0


# ----------------------------------------------------------------------------
# trajectory
# ----------------------------------------------------------------------------


def _hermite_coeffs(h, p0, p1, v0, v1, a0, a1):
    v0, v1 = h * v0, h * v1
    a0, a1 = h * h * a0, h * h * a1
    # work with the increment so short steps do not amplify rounding in u
    dp = p1 - p0
    c3 = 10 * dp - 6 * v0 - 4 * v1 - 1.5 * a0 + 0.5 * a1
    c4 = -15 * dp + 8 * v0 + 7 * v1 + 1.5 * a0 - a1
    c5 = 6 * dp - 3 * v0 - 3 * v1 - 0.5 * a0 + 0.5 * a1
    return p0, v0, 0.5 * a0, c3, c4, c5


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled solution with dense output.

    ``d2a[k]`` / ``d2b[k]`` hold ``u''`` at the start / end of step ``k``
    evaluated with the right-hand side of that step.
    """

    t: np.ndarray
    u: np.ndarray
    y: np.ndarray
    d2a: np.ndarray
    d2b: np.ndarray
    params: Params
    weight: Weight = field(repr=False)
    g: Nonlinearity = field(repr=False)
    bc_tag: str = "none"
    monodromy: Optional[np.ndarray] = None

    @property
    def t0(self) -> float:
        return float(self.t[0])

    @property
    def t1(self) -> float:
        return float(self.t[-1])

    @property
    def z_end(self) -> tuple:
        return float(self.u[-1]), float(self.y[-1])

    def _locate(self, ts):
        ts = np.clip(np.asarray(ts, dtype=float), self.t[0], self.t[-1])
        k = np.clip(np.searchsorted(self.t, ts, side="right") - 1, 0, len(self.t) - 2)
        return ts, k

    def _coeffs(self, k):
        h = self.t[k + 1] - self.t[k]
        return h, _hermite_coeffs(h, self.u[k], self.u[k + 1], self.y[k], self.y[k + 1], self.d2a[k], self.d2b[k])

    def sample(self, ts, derivs: int = 1):
        """Dense output at ``ts`` (clamped to the interval).

        Returns ``u`` and the first ``derivs`` derivatives, each an array.
        """
        ts, k = self._locate(ts)
        h, (c0, c1, c2, c3, c4, c5) = self._coeffs(k)
        s = (ts - self.t[k]) / h
        out = [c0 + s * (c1 + s * (c2 + s * (c3 + s * (c4 + s * c5))))]
        if derivs >= 1:
            out.append((c1 + s * (2 * c2 + s * (3 * c3 + s * (4 * c4 + s * 5 * c5)))) / h)
        if derivs >= 2:
            out.append((2 * c2 + s * (6 * c3 + s * (12 * c4 + s * 20 * c5))) / (h * h))
        return tuple(out)

    def __call__(self, t):
        u, y = self.sample(t)
        return u, y

    def rhs(self, ts, u, y):
        """``-q(t) g(u) - c y`` evaluated pointwise, choosing the step's side at breakpoints."""
        p = self.params
        out = np.empty(len(ts))
        for j, (tt, uu, yy) in enumerate(zip(ts, u, y)):
            out[j] = -self.weight.evaluate(tt, p.lam, p.mu) * self.g(uu) - p.c * yy
        return out

    @cached_property
    def residual(self) -> float:
        """Max collocation defect at 1/4, 1/2, 3/4 of every step, relative to max(1, max|u''|)."""
        frac = np.array([0.25, 0.5, 0.75])
        tk = self.t[:-1]
        h = np.diff(self.t)
        ts = (tk[:, None] + frac[None, :] * h[:, None]).ravel()
        u, y, upp = self.sample(ts, derivs=2)
        f = self.rhs(ts, u, y)
        scale = max(1.0, float(np.max(np.abs(self.d2a))), float(np.max(np.abs(self.d2b))))
        return float(np.max(np.abs(upp - f)) / scale)

    def max_on(self, lo: float, hi: float) -> float:
        """Exact max of the dense ``u`` over ``[lo, hi]`` (interior critical points included)."""
        lo = max(lo, self.t0)
        hi = min(hi, self.t1)
        cand = [float(self.sample(lo)[0]), float(self.sample(hi)[0])]
        k0 = int(np.searchsorted(self.t, lo, side="right")) - 1
        k1 = int(np.searchsorted(self.t, hi, side="left"))
        for k in range(max(k0, 0), min(k1, len(self.t) - 1)):
            a, b = self.t[k], self.t[k + 1]
            if b <= lo or a >= hi:
                continue
            if lo <= a:
                cand.append(float(self.u[k]))
            if self.y[k] * self.y[k + 1] <= 0 or self.y[k] > 0 >= self.y[k + 1]:
                h, c = self._coeffs(k)
                # roots of u' on the step
                dc = [c[1], 2 * c[2], 3 * c[3], 4 * c[4], 5 * c[5]]
                for r in np.roots(dc[::-1]):
                    if abs(r.imag) < 1e-12 and 0 <= r.real <= 1:
                        tt = a + r.real * h
                        if lo <= tt <= hi:
                            cand.append(float(self.sample(tt)[0]))
        return max(cand)

    def min_value(self) -> float:
        return float(min(np.min(self.u), self._interior_min()))

    def _interior_min(self):
        m = math.inf
        for k in np.nonzero(self.y[:-1] * self.y[1:] < 0)[0]:
            h, c = self._coeffs(k)
            dc = [c[1], 2 * c[2], 3 * c[3], 4 * c[4], 5 * c[5]]
            for r in np.roots(dc[::-1]):
                if abs(r.imag) < 1e-12 and 0 <= r.real <= 1:
                    m = min(m, float(self.sample(self.t[k] + r.real * h)[0]))
        return m

    def to_csv(self, path, n_min: int = 1000) -> None:
        """Write ``t,u,y`` rows with 17 significant digits on a mesh of at least ``n_min`` points."""
        ts = self.output_mesh(n_min)
        u, y = self.sample(ts)
        with open(path, "w", newline="") as fh:
            fh.write("t,u,y\n")
            for row in zip(ts, u, y):
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")

    def output_mesh(self, n_min: int = 1000) -> np.ndarray:
        if len(self.t) >= n_min:
            return self.t.copy()
        uniform = np.linspace(self.t0, self.t1, n_min)
        return np.unique(np.concatenate([self.t, uniform]))


# ----------------------------------------------------------------------------
# stepping
# ----------------------------------------------------------------------------


def _make_q(atom, shift, lam, mu):
    coef = lam if atom.sign > 0 else (mu if atom.sign < 0 else 0.0)
    piece = atom.piece
    if isinstance(piece, ConstantPiece) or coef == 0.0:
        val = coef * piece.value if isinstance(piece, ConstantPiece) else 0.0
        return None, val
    f = piece.func
    return (lambda t: coef * f(t - shift)), None


def integrate_ivp(
    w: Weight,
    g: Nonlinearity,
    params: Params,
    t0: float,
    z0,
    t1: float,
    *,
    rtol: float = RTOL,
    atol: float = ATOL,
    variational: bool = False,
    fixed_step: Optional[float] = None,
    bc_tag: str = "none",
    h_max: Optional[float] = None,
    h0: Optional[float] = None,
) -> Trajectory:
    """Integrate from ``z0 = (u0, y0)`` at ``t0`` to ``t1``.

    With ``variational`` the 2x2 fundamental matrix of the linearisation is
    carried along (and enters the error control) and stored as
    ``Trajectory.monodromy``.  ``h0`` overrides the initial step guess.
    """
    if not t1 > t0:
        raise ValueError("integrate_ivp needs t0 < t1")
    lam, mu, cdamp = params.lam, params.mu, params.c
    gf = g.func
    dgf = g.deriv
    floor = 0.0 if g.extend_zero else -math.inf
    if variational and dgf is None:
        return _fd_monodromy(w, g, params, t0, z0, t1, rtol=rtol, atol=atol, bc_tag=bc_tag)

    n = 6 if variational else 2
    z = [float(z0[0]), float(z0[1])]
    if variational:
        z += [1.0, 0.0, 0.0, 1.0]  # columns (du, dy) for e_u then e_y
    if not all(math.isfinite(v) for v in z):
        raise NonFiniteState("initial state is not finite")

    ts, us, ys, d2a, d2b = [t0], [z[0]], [z[1]], [], []
    t = t0
    h = h0
    steps = 0

    for lo, hi, atom, shift in w.segments(t0, t1):
        qfun, qconst = _make_q(atom, shift, lam, mu)

        if variational:

            def rhs(tt, s):
                q = qfun(tt) if qfun is not None else qconst
                u = s[0]
                gu, dgu = (gf(u), dgf(u)) if u > floor else (0.0, 0.0)
                k = -q * dgu
                return (
                    s[1],
                    -q * gu - cdamp * s[1],
                    s[3],
                    k * s[2] - cdamp * s[3],
                    s[5],
                    k * s[4] - cdamp * s[5],
                )

        else:

            def rhs(tt, s):
                q = qfun(tt) if qfun is not None else qconst
                u = s[0]
                gu = gf(u) if u > floor else 0.0
                return (s[1], -q * gu - cdamp * s[1])

        t = lo
        k1 = rhs(t, z)
        seg_len = hi - lo
        if fixed_step is not None:
            hs = fixed_step
        elif h is None:
            hs = _initial_step(rhs, t, z, k1, rtol, atol, seg_len)
        else:
            hs = h
        if h_max is not None:
            hs = min(hs, h_max)

        while t < hi:
            steps += 1
            if steps > MAX_STEPS:
                raise StepSizeUnderflow(f"step budget exhausted at t={t}")
            remaining = hi - t
            # stretch or split near the end so no sliver step is left over
            last = remaining <= 1.25 * hs
            if last:
                step = remaining
            elif remaining < 2.0 * hs:
                step = 0.5 * remaining
            else:
                step = hs
            # stages
            ks = [k1]
            for si in range(1, 7):
                arow = _A[si]
                zi = [z[j] + step * sum(arow[r] * ks[r][j] for r in range(si)) for j in range(n)]
                ks.append(rhs(t + _C[si] * step, zi))
            znew = [z[j] + step * sum(_B[r] * ks[r][j] for r in range(6)) for j in range(n)]
            if fixed_step is not None:
                err = 0.0
            else:
                acc = 0.0
                for j in range(n):
                    e = step * sum(_E[r] * ks[r][j] for r in range(7))
                    sc = atol + rtol * max(abs(z[j]), abs(znew[j]))
                    acc += (e / sc) ** 2
                err = math.sqrt(acc / n)
            if not math.isfinite(err) or not all(math.isfinite(v) for v in znew):
                if fixed_step is not None:
                    raise NonFiniteState(f"non-finite state at t={t}")
                hs = step * 0.2
                if hs < 1e-14 * max(1.0, abs(t)):
                    raise NonFiniteState(f"non-finite state at t={t}")
                continue
            if err <= 1.0:
                if abs(znew[0]) > BLOWUP or abs(znew[1]) > BLOWUP:
                    raise NonFiniteState(f"state exceeds {BLOWUP:.0e} at t={t + step}")
                t_new = hi if last else t + step
                d2a.append(k1[1])
                d2b.append(ks[6][1])
                ts.append(t_new)
                us.append(znew[0])
                ys.append(znew[1])
                t = t_new
                z = znew
                k1 = ks[6]
                if fixed_step is None:
                    fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
                    hs_next = step * fac
                    # the clipped last step says little about the natural size
                    hs = max(hs, hs_next) if last else hs_next
                    if h_max is not None:
                        hs = min(hs, h_max)
            else:
                hs = step * min(0.7, max(0.2, 0.9 * err ** -0.25))
                if hs < 1e-14 * max(1.0, abs(t)):
                    raise StepSizeUnderflow(f"step size underflow at t={t}")
        h = hs

    mono = None
    if variational:
        mono = np.array([[z[2], z[4]], [z[3], z[5]]])
    return Trajectory(
        np.array(ts), np.array(us), np.array(ys), np.array(d2a), np.array(d2b),
        params, w, g, bc_tag, mono,
    )


def _initial_step(rhs, t, z, f0, rtol, atol, span):
    n = len(z)
    sc = [atol + rtol * abs(v) for v in z]
    d0 = math.sqrt(sum((z[j] / sc[j]) ** 2 for j in range(n)) / n)
    d1 = math.sqrt(sum((f0[j] / sc[j]) ** 2 for j in range(n)) / n)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, span)
    z1 = [z[j] + h0 * f0[j] for j in range(n)]
    f1 = rhs(t + h0, z1)
    d2 = math.sqrt(sum(((f1[j] - f0[j]) / sc[j]) ** 2 for j in range(n)) / n) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, span)


def _fd_monodromy(w, g, params, t0, z0, t1, rtol, atol, bc_tag, delta=1e-7):
    base = integrate_ivp(w, g, params, t0, z0, t1, rtol=rtol, atol=atol, bc_tag=bc_tag)
    ze = np.array(base.z_end)
    cols = []
    for e in ((1.0, 0.0), (0.0, 1.0)):
        zp = (z0[0] + delta * e[0], z0[1] + delta * e[1])
        tp = integrate_ivp(w, g, params, t0, zp, t1, rtol=rtol, atol=atol)
        cols.append((np.array(tp.z_end) - ze) / delta)
    return Trajectory(
        base.t, base.u, base.y, base.d2a, base.d2b, params, w, g, bc_tag, np.column_stack(cols)
    )


# ----------------------------------------------------------------------------
# period map and a-priori bound
# ----------------------------------------------------------------------------


def poincare_map(w: Weight, g: Nonlinearity, params: Params, z0, periods: int = 1, **kw):
    """Flow map over ``periods`` periods starting at ``sigma_1``.

    Returns ``(z1, monodromy)``.
    """
    s1 = w.decomposition.plus[0][0]
    tr = integrate_ivp(w, g, params, s1, z0, s1 + periods * w.T, variational=True, **kw)
    return np.array(tr.z_end), tr.monodromy


def bound_k(w: Weight, g: Nonlinearity, params: Params, R: float) -> float:
    """``max_i (R/|I+_i| + lam * ||a||_{+,i} * g*(R))``."""
    wi = w.integrals()
    gs = g_star(g, R)
    return max(R / L + params.lam * npl * gs for L, npl in zip(wi.len_plus, wi.norm_plus))
