"""Boundary value problems by multiple shooting, symbol coding and the solution atlas.

Seeds come from the large-``mu`` limit: on every positivity hump the solution
approaches a one-hump Dirichlet solution (small or large), and it vanishes on
the negativity intervals and on humps coded ``0``.  Newton on the
multiple-shooting system then pulls the glued profile onto a true solution.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import optimize as spo
from scipy.integrate import solve_ivp

from .errors import AboveR, ConvergedToNegative, HumpsError, NoConvergence, OnBoundary
from .integrate import Params, Trajectory, bound_k, integrate_ivp
from .nonlinearity import Nonlinearity
from .weight import Weight

BC_TAGS = ("periodic", "neumann", "dirichlet", "mixedLR", "mixedRL")
NEWTON_TOL = 1e-10
NEWTON_MAX_ITER = 40
NEG_TOL = 1e-9
BOUNDARY_TOL = 1e-9
DISTINCT_TOL = 1e-3
SHOOT_RTOL = 1e-12
POLISH_STEPS = 2
LAYER_RATIO = 2.0
MIN_CONTINUATION_RATIO = 1.01
CONTINUATION_HALVINGS = 8
MAX_CONTINUATION_STAGES = 60


# ----------------------------------------------------------------------------
# data types
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class SymbolCode:
    digits: tuple

    def __post_init__(self):
        object.__setattr__(self, "digits", tuple(int(d) for d in self.digits))
        if any(d not in (0, 1, 2) for d in self.digits):
            raise ValueError(f"symbol digits must be 0, 1 or 2: {self.digits}")

    @classmethod
    def parse(cls, text: str) -> "SymbolCode":
        return cls(tuple(int(c) for c in text.strip().strip("()").replace(",", "").replace(" ", "")))

    def __str__(self) -> str:
        return "".join(map(str, self.digits))

    def __len__(self) -> int:
        return len(self.digits)

    @property
    def nonzero(self) -> bool:
        return any(self.digits)

    def shifted(self, blocks: int, m: int) -> "SymbolCode":
        """Cyclic left shift by ``blocks`` periods of ``m`` digits."""
        s = (blocks * m) % len(self.digits)
        return SymbolCode(self.digits[s:] + self.digits[:s])


@dataclass(frozen=True)
class Windows:
    r: float
    rho: float
    R: float

    def __post_init__(self):
        if not 0 < self.r < self.rho < self.R:
            raise ValueError(f"need 0 < r < rho < R, got {self}")


@dataclass
class AtlasEntry:
    code: Optional[SymbolCode]
    trajectory: Trajectory
    hump_maxima: tuple
    converged: bool
    bc_residual: float
    bc: str
    nodes: np.ndarray = field(repr=False)
    node_states: np.ndarray = field(repr=False)
    iterations: int = 0

    @property
    def distinctness_key(self) -> tuple:
        return self.hump_maxima

    @property
    def z0(self) -> tuple:
        return float(self.node_states[0, 0]), float(self.node_states[0, 1])


@dataclass
class MissReport:
    code: SymbolCode
    reason: str
    attempts: int


@dataclass
class Atlas:
    entries: list
    misses: list
    windows: Optional[Windows]
    extras: list = field(default_factory=list)

    @property
    def codes(self) -> list:
        return [e.code for e in self.entries]

    def summary(self) -> str:
        return f"found {len(self.entries)}, missed {len(self.misses)}"


@dataclass
class ValidationReport:
    checks: dict
    flags: list

    @property
    def ok(self) -> bool:
        return all(self.checks.values())


# ----------------------------------------------------------------------------
# geometry helpers
# ----------------------------------------------------------------------------


def bvp_window(w: Weight, bc: str, k: int = 1) -> tuple[float, float]:
    """Time window of the boundary value problem."""
    if bc == "periodic":
        s1 = w.decomposition.plus[0][0]
        return s1, s1 + k * w.T
    if k != 1:
        raise ValueError("unrolling is only defined for the periodic problem")
    return w.t_start, w.t_end


def humps_in(w: Weight, a: float, b: float) -> list:
    """Positivity humps (shifted by multiples of T) inside ``[a, b]``, in time order."""
    d = w.decomposition
    out = []
    if d.periodic:
        n0 = math.floor((a - d.plus[0][0]) / w.T) - 1
        n1 = math.ceil((b - d.plus[0][0]) / w.T) + 1
        for n in range(n0, n1 + 1):
            for lo, hi in d.plus:
                lo2, hi2 = lo + n * w.T, hi + n * w.T
                if lo2 >= a - 1e-12 and hi2 <= b + 1e-12:
                    out.append((lo2, hi2))
    else:
        out = [iv for iv in d.plus if iv[0] >= a - 1e-12 and iv[1] <= b + 1e-12]
    return sorted(out)


def shooting_nodes(w: Weight, a: float, b: float, max_seg: Optional[float] = None) -> np.ndarray:
    """Hump boundaries in ``[a, b]`` refined so no segment exceeds ``max_seg``."""
    pts = {a, b}
    d = w.decomposition
    n0 = math.floor((a - w.t_start) / w.T) - 1
    n1 = math.ceil((b - w.t_start) / w.T) + 1
    ivs = list(d.plus) + [iv for iv in d.minus if iv is not None]
    if d.head is not None:
        ivs.append(d.head)
    for n in range(n0, n1 + 1):
        for lo, hi in ivs:
            for p in (lo + n * w.T, hi + n * w.T):
                if a < p < b:
                    pts.add(p)
    pts = sorted(pts)
    if max_seg is None:
        return np.array(pts)
    out = [pts[0]]
    for lo, hi in zip(pts, pts[1:]):
        n = max(1, math.ceil((hi - lo) / max_seg - 1e-9))
        out += [lo + (hi - lo) * j / n for j in range(1, n)] + [hi]
    return np.array(out)


def classify(traj: Trajectory, windows: Windows, humps: Optional[Sequence] = None) -> SymbolCode:
    """Digit per hump: 0 below r, 1 in (r, rho), 2 in (rho, R)."""
    if humps is None:
        humps = humps_in(traj.weight, traj.t0, traj.t1)
    return classify_maxima([traj.max_on(lo, hi) for lo, hi in humps], windows)


def classify_maxima(maxima, windows: Windows) -> SymbolCode:
    digits = []
    for i, mx in enumerate(maxima):
        for edge in (windows.r, windows.rho, windows.R):
            if abs(mx - edge) <= BOUNDARY_TOL:
                raise OnBoundary(f"hump {i + 1} maximum {mx!r} on window edge {edge!r}")
        if mx >= windows.R:
            raise AboveR(f"hump {i + 1} maximum {mx!r} >= R={windows.R!r}")
        digits.append(0 if mx < windows.r else (1 if mx < windows.rho else 2))
    return SymbolCode(tuple(digits))


# ----------------------------------------------------------------------------
# multiple shooting
# ----------------------------------------------------------------------------


def _bc_rows(bc: str, z0, zend, M_last):
    """Boundary residual (2,) and its blocks w.r.t. z_0 and z_{K-1}."""
    eye = np.eye(2)
    if bc == "periodic":
        return zend - z0, -eye, M_last
    left = {"dirichlet": 0, "mixedLR": 0, "neumann": 1, "mixedRL": 1}[bc]
    right = {"dirichlet": 0, "mixedRL": 0, "neumann": 1, "mixedLR": 1}[bc]
    F = np.array([z0[left], zend[right]])
    A = np.zeros((2, 2))
    A[0, left] = 1.0
    B = np.zeros((2, 2))
    B[1, :] = M_last[right, :]
    return F, A, B


class Shooter:
    """Multiple-shooting residual on fixed nodes."""

    def __init__(self, w, g, params, bc, nodes, rtol=SHOOT_RTOL, atol=SHOOT_RTOL):
        if bc not in BC_TAGS:
            raise ValueError(f"unknown boundary condition {bc!r}")
        self.w, self.g, self.params, self.bc = w, g, params, bc
        self.nodes = np.asarray(nodes, dtype=float)
        self.K = len(self.nodes) - 1
        self.rtol, self.atol = rtol, atol

    def flows(self, Z, variational=True):
        trs, h0 = [], None
        for j in range(self.K):
            tr = integrate_ivp(
                self.w, self.g, self.params, self.nodes[j], Z[j], self.nodes[j + 1],
                rtol=self.rtol, atol=self.atol, variational=variational, bc_tag=self.bc, h0=h0,
            )
            # start the next segment at the step size reached here
            h0 = float(np.max(np.diff(tr.t[-3:])))
            trs.append(tr)
        return trs

    def residual(self, Z, trs):
        K = self.K
        F = np.empty(2 * K)
        for j in range(K - 1):
            F[2 * j : 2 * j + 2] = np.array(trs[j].z_end) - Z[j + 1]
        Fb, _, _ = _bc_rows(self.bc, Z[0], np.array(trs[-1].z_end), np.eye(2))
        F[2 * K - 2 :] = Fb
        return F

    def jacobian(self, Z, trs):
        K = self.K
        J = np.zeros((2 * K, 2 * K))
        for j in range(K - 1):
            J[2 * j : 2 * j + 2, 2 * j : 2 * j + 2] = trs[j].monodromy
            J[2 * j : 2 * j + 2, 2 * j + 2 : 2 * j + 4] = -np.eye(2)
        _, A, B = _bc_rows(self.bc, Z[0], np.array(trs[-1].z_end), trs[-1].monodromy)
        J[2 * K - 2 :, 0:2] += A
        J[2 * K - 2 :, 2 * K - 2 : 2 * K] += B
        return J

    def states_from_profile(self, profile) -> np.ndarray:
        return np.array([profile(t) for t in self.nodes[:-1]], dtype=float)

    def newton(self, Z0, tol=NEWTON_TOL, max_iter=NEWTON_MAX_ITER, max_halvings=30):
        """Damped Newton with step halving.  Returns ``(Z, trajectories, residual, iterations)``."""
        Z = np.array(Z0, dtype=float)
        trs = self.flows(Z)
        F = self.residual(Z, trs)
        nF = float(np.max(np.abs(F)))
        it = 0
        while nF >= tol and it < max_iter:
            it += 1
            J = self.jacobian(Z, trs)
            try:
                dX = np.linalg.solve(J, -F)
            except np.linalg.LinAlgError:
                dX = np.linalg.lstsq(J, -F, rcond=None)[0]
            if not np.all(np.isfinite(dX)):
                raise NoConvergence("non-finite Newton step")
            step = 1.0
            accepted = False
            for _ in range(max_halvings):
                Zt = Z + step * dX.reshape(-1, 2)
                try:
                    trs_t = self.flows(Zt)
                except HumpsError:
                    step *= 0.5
                    continue
                Ft = self.residual(Zt, trs_t)
                nFt = float(np.max(np.abs(Ft)))
                if math.isfinite(nFt) and (nFt < (1 - 1e-4 * step) * nF or nFt < tol):
                    accepted = True
                    break
                step *= 0.5
            if not accepted:
                raise NoConvergence(f"line search failed at residual {nF:.3e}")
            Z, trs, F, nF = Zt, trs_t, Ft, nFt
        if nF >= tol:
            raise NoConvergence(f"residual {nF:.3e} after {it} iterations")
        # node mismatches show up in the collocation defect; push them to rounding level
        for _ in range(POLISH_STEPS):
            dX = np.linalg.lstsq(self.jacobian(Z, trs), -F, rcond=None)[0]
            Zt = Z + dX.reshape(-1, 2)
            try:
                trs_t = self.flows(Zt)
            except HumpsError:
                break
            Ft = self.residual(Zt, trs_t)
            nFt = float(np.max(np.abs(Ft)))
            if not nFt < 0.5 * nF:
                break
            Z, trs, F, nF = Zt, trs_t, Ft, nFt
        return Z, trs, nF, it


def _stitch(trs) -> Trajectory:
    t = np.concatenate([trs[0].t] + [tr.t[1:] for tr in trs[1:]])
    u = np.concatenate([trs[0].u] + [tr.u[1:] for tr in trs[1:]])
    y = np.concatenate([trs[0].y] + [tr.y[1:] for tr in trs[1:]])
    d2a = np.concatenate([tr.d2a for tr in trs])
    d2b = np.concatenate([tr.d2b for tr in trs])
    f = trs[0]
    return Trajectory(t, u, y, d2a, d2b, f.params, f.weight, f.g, f.bc_tag, None)


def _finish(shooter: Shooter, Z, trs, nF, it, windows, humps, code_len=None) -> AtlasEntry:
    traj = _stitch(trs)
    umin = min(float(np.min(traj.u)), traj._interior_min())
    if umin < -NEG_TOL:
        raise ConvergedToNegative(f"solution dips to {umin:.3e}")
    maxima = tuple(traj.max_on(lo, hi) for lo, hi in humps)
    code = None
    if windows is not None:
        if any(mx >= windows.R for mx in maxima):
            raise NoConvergence(f"converged outside the window: maxima {maxima}")
        code = classify_maxima(maxima, windows)
    return AtlasEntry(code, traj, maxima, True, nF, shooter.bc, shooter.nodes.copy(), np.array(Z), it)


def solve_bvp(
    w: Weight,
    g: Nonlinearity,
    params: Params,
    bc: str,
    guess,
    *,
    windows: Optional[Windows] = None,
    k: int = 1,
    nodes: Optional[np.ndarray] = None,
    max_seg: Optional[float] = None,
    tol: float = NEWTON_TOL,
    max_iter: int = NEWTON_MAX_ITER,
) -> AtlasEntry:
    """Solve one boundary value problem from ``guess``.

    ``guess`` is an initial state ``(u0, y0)`` at the left end (spread to the
    nodes by one forward integration), a callable ``t -> (u, y)``, or an
    array of node states.
    """
    a, b = bvp_window(w, bc, k)
    if nodes is None:
        nodes = shooting_nodes(w, a, b, max_seg if max_seg is not None else _default_seg(w))
    sh = Shooter(w, g, params, bc, nodes)
    Z0 = _guess_states(sh, guess)
    Z, trs, nF, it = sh.newton(Z0, tol=tol, max_iter=max_iter)
    return _finish(sh, Z, trs, nF, it, windows, humps_in(w, a, b))


def _default_seg(w: Weight) -> float:
    return min(hi - lo for lo, hi in w.decomposition.plus) / 4


def _guess_states(sh: Shooter, guess) -> np.ndarray:
    if callable(guess):
        return sh.states_from_profile(guess)
    arr = np.asarray(guess, dtype=float)
    if arr.shape == (sh.K, 2):
        return arr
    if arr.shape != (2,):
        raise ValueError("guess must be a state pair, a profile callable or node states")
    if not np.all(np.isfinite(arr)):
        raise ValueError("guess must be finite")
    Z = np.zeros((sh.K, 2))
    z = arr
    for j in range(sh.K):
        Z[j] = z
        try:
            tr = integrate_ivp(sh.w, sh.g, sh.params, sh.nodes[j], z, sh.nodes[j + 1])
            z = np.array(tr.z_end)
        except HumpsError:
            z = np.zeros(2)
    return Z


# ----------------------------------------------------------------------------
# limit profiles
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class HumpProfile:
    """One-hump solution vanishing (or flat) at the hump ends."""

    lo: float
    hi: float
    start: tuple
    maximum: float
    trajectory: Trajectory = field(repr=False)

    def __call__(self, t):
        u, y = self.trajectory.sample(t)
        return float(u), float(y)


def hump_profiles(
    w: Weight, g: Nonlinearity, params: Params, lo: float, hi: float,
    left: str = "dirichlet", right: str = "dirichlet", grid=None,
) -> list:
    """All one-hump profiles on ``[lo, hi]`` found by bracketing over a log grid.

    The unknown is ``y(lo)`` for a Dirichlet left end and ``u(lo)`` for a
    Neumann one; the target is ``u(hi) = 0`` or ``y(hi) = 0``.  Sorted by maximum.
    """
    if grid is None:
        grid = np.geomspace(1e-6, 1e3, 97)
    li = 1 if left == "dirichlet" else 0
    ri = 0 if right == "dirichlet" else 1

    def start(s):
        z = [0.0, 0.0]
        z[li] = s
        return tuple(z)

    def target(s):
        tr = integrate_ivp(w, g, params, lo, start(s), hi, rtol=SHOOT_RTOL, atol=SHOOT_RTOL)
        return tr.z_end[ri]

    vals = [target(s) for s in grid]
    roots = []
    for s0, s1, f0, f1 in zip(grid, grid[1:], vals, vals[1:]):
        if f0 == 0.0:
            roots.append(s0)
        elif f0 * f1 < 0:
            roots.append(spo.brentq(target, s0, s1, xtol=1e-14, rtol=1e-14))
    out = []
    for s in roots:
        tr = integrate_ivp(w, g, params, lo, start(s), hi, rtol=SHOOT_RTOL, atol=SHOOT_RTOL)
        if tr.min_value() < -NEG_TOL:
            continue
        out.append(HumpProfile(lo, hi, start(s), tr.max_on(lo, hi), tr))
    return sorted(out, key=lambda p: p.maximum)


def _hump_end_types(bc: str, lo: float, hi: float, a: float, b: float) -> tuple[str, str]:
    left_n = bc in ("neumann", "mixedRL") and abs(lo - a) < 1e-12
    right_n = bc in ("neumann", "mixedLR") and abs(hi - b) < 1e-12
    return ("neumann" if left_n else "dirichlet"), ("neumann" if right_n else "dirichlet")


class ProfileBank:
    """Cached one-hump profiles for each hump of a problem window."""

    def __init__(self, w, g, params, bc, k=1):
        self.w, self.g, self.params, self.bc = w, g, params, bc
        self.a, self.b = bvp_window(w, bc, k)
        self.humps = humps_in(w, self.a, self.b)
        self._cache = {}
        self._connectors = {}

    def connector(self, lo, hi, left, right):
        key = (lo, hi, left, right)
        if key not in self._connectors:
            self._connectors[key] = connector(self.w, self.g, self.params, lo, hi, left, right)
        return self._connectors[key]

    def profiles(self, i: int) -> list:
        lo, hi = self.humps[i]
        m = self.w.m
        # humps repeat every period: reuse the base copy, shifted
        base = i % m if self.bc == "periodic" else i
        key = (base, *_hump_end_types(self.bc, lo, hi, self.a, self.b))
        if key not in self._cache:
            blo, bhi = self.humps[base]
            self._cache[key] = (blo, hump_profiles(self.w, self.g, self.params, blo, bhi, key[1], key[2]))
        blo, profs = self._cache[key]
        return [(lo - blo, p) for p in profs]

    def pick(self, i: int, digit: int, variant: int = 0):
        profs = self.profiles(i)
        if not profs or digit == 0:
            return None
        if digit == 1:
            order = profs
        else:
            order = profs[::-1]
        if len(profs) == 1 and digit == 2:
            return None
        return order[min(variant, len(order) - 1)]


def _first_root(target, grid):
    """Smallest grid bracket with a sign change, refined by ``brentq``."""
    prev_s, prev_f = None, None
    for s in grid:
        try:
            f = target(s)
        except HumpsError:
            f = math.inf
        if not math.isfinite(f):
            f = math.copysign(math.inf, f) if not math.isnan(f) else math.inf
        if f == 0.0:
            return s
        if prev_f is not None and prev_f * f < 0:

            def safe(x):
                try:
                    v = target(x)
                except HumpsError:
                    return 1e300
                return v if math.isfinite(v) else 1e300

            return spo.brentq(safe, prev_s, s, xtol=1e-16, rtol=1e-14)
        prev_s, prev_f = s, f
    return None


_CONNECT_GRID = np.concatenate([[0.0], np.geomspace(1e-14, 1e2, 81)])


def connector(w, g, params, lo, hi, left, right):
    """Solution on a negativity gap joining prescribed end conditions.

    ``left`` is ``("slope", y)`` (unknown ``u(lo) >= 0``), ``("dirichlet",)``
    (unknown ``y(lo) >= 0``) or ``("neumann",)`` (unknown ``u(lo) >= 0``).
    ``right`` is ``("slope", y)``, ``("dirichlet",)`` or ``("neumann",)``.
    Returns a trajectory, or ``None`` for the zero solution or no root.
    """
    if left[0] == "dirichlet":
        start = lambda s: (0.0, s)  # noqa: E731
    else:
        yl = left[1] if left[0] == "slope" else 0.0
        start = lambda s: (s, yl)  # noqa: E731
    if right[0] == "dirichlet":
        pick, goal = 0, 0.0
    else:
        pick, goal = 1, (right[1] if right[0] == "slope" else 0.0)
    if goal == 0.0 and (left[0] == "dirichlet" or start(0.0)[1] == 0.0):
        # a convex non-negative function flat or vanishing at both ends is zero
        return None

    def target(s):
        tr = integrate_ivp(w, g, params, lo, start(s), hi, rtol=1e-9, atol=1e-13)
        return tr.z_end[pick] - goal

    s = _first_root(target, _CONNECT_GRID)
    if s is not None:
        try:
            tr = integrate_ivp(w, g, params, lo, start(s), hi, rtol=SHOOT_RTOL, atol=SHOOT_RTOL)
        except HumpsError:
            tr = None
        # a bracket against a blow-up is not a root
        if tr is not None and abs(tr.z_end[pick] - goal) <= 1e-6 * max(1.0, abs(goal)):
            return tr
    if left[0] == "slope" and right[0] == "slope":
        return split_connector(w, g, params, lo, hi, left[1], right[1])
    return None


def _decay_piece(w, g, params, t_from, t_to, y0):
    """Solution leaving ``t_from`` with slope ``y0`` that decays towards zero.

    Integrates towards ``t_to`` (either direction).  The start value is
    bisected between solutions that cross zero and solutions that turn
    around.  Returns a dense solution and the time where it stops decaying.
    """
    if (t_to - t_from) * y0 >= 0.0:
        return None

    def rhs(t, z):
        gu = g(z[0]) if z[0] > 0.0 or not g.extend_zero else 0.0
        return (z[1], -params.c * z[1] - w.evaluate(t, params.lam, params.mu) * gu)

    def hit_zero(t, z):
        return z[0]

    def turn(t, z):
        return z[1]

    hit_zero.terminal = True
    turn.terminal = True

    def run(u0, dense=False):
        return solve_ivp(
            rhs, (t_from, t_to), (u0, y0), method="DOP853", rtol=1e-11, atol=1e-20,
            events=(hit_zero, turn), dense_output=dense,
        )

    def crosses(u0):
        return len(run(u0).t_events[0]) > 0

    lo_u, hi_u = 0.0, max(abs(y0) * abs(t_to - t_from), 1e-12)
    while crosses(hi_u):
        hi_u *= 4.0
        if hi_u > 1e12:
            return None
    for _ in range(200):
        mid = 0.5 * (lo_u + hi_u)
        if mid in (lo_u, hi_u):
            break
        if crosses(mid):
            lo_u = mid
        else:
            hi_u = mid
    sol = run(hi_u, dense=True)
    return sol.sol, float(sol.t[-1])


def split_connector(w, g, params, lo, hi, y_left, y_right):
    """Seed on a negativity gap at large ``mu``: two decaying end pieces glued by their max.

    Shooting across the whole gap is too ill-conditioned once the solution
    is nearly zero inside it; each end piece is well-conditioned on its own.
    """
    pieces = []
    for t_from, t_to, y0 in ((lo, hi, y_left), (hi, lo, y_right)):
        got = _decay_piece(w, g, params, t_from, t_to, y0)
        if got is not None:
            sol, t_stop = got
            pieces.append((min(t_from, t_stop), max(t_from, t_stop), sol))
    if not pieces:
        return None
    return _GluedPieces(pieces)


class _GluedPieces:
    """Pointwise max of dense pieces, each zero outside its own span."""

    def __init__(self, pieces):
        self.pieces = pieces

    def sample(self, t):
        best = (0.0, 0.0)
        for a_, b_, sol in self.pieces:
            if a_ <= t <= b_:
                u, y = sol(t)
                if u > best[0]:
                    best = (float(u), float(y))
        return best


def _gaps(bank: ProfileBank) -> list:
    """Stretches between humps as ``(lo, hi, hump_before, hump_after)``."""
    humps = bank.humps
    gaps = []
    if humps[0][0] > bank.a:
        gaps.append((bank.a, humps[0][0], None, 0))
    for i in range(len(humps) - 1):
        gaps.append((humps[i][1], humps[i + 1][0], i, i + 1))
    if humps[-1][1] < bank.b:
        gaps.append((humps[-1][1], bank.b, len(humps) - 1, 0 if bank.bc == "periodic" else None))
    return gaps


def layer_nodes(bank: ProfileBank, prof, nodes, extra: int = 0) -> np.ndarray:
    """Add nodes at doubling distances from gap ends where the seed decays steeply.

    The decay length at an end is ``u/|y|``; one long segment across such a
    layer amplifies rounding beyond what Newton can correct.
    """
    pts = set(np.asarray(nodes, dtype=float).tolist())
    for lo, hi, _, _ in _gaps(bank):
        half = 0.5 * (hi - lo)
        eps = 1e-9 * (hi - lo)
        for t_end, side in ((lo, 1.0), (hi, -1.0)):
            u, y = prof(t_end + side * eps)
            if not (u > 0.0 and side * y < 0.0):
                continue
            d = u / abs(y) / LAYER_RATIO**extra
            if d >= 0.25 * half:
                continue
            while d < half:
                pts.add(t_end + side * d)
                d *= LAYER_RATIO
    return np.array(sorted(pts))


def glued_profile(bank: ProfileBank, code: SymbolCode, variant: int = 0, scale=None):
    """Profile callable for ``code``.

    Coded humps carry the chosen one-hump solution, humps coded 0 are zero,
    and each negativity gap carries the convex connector matching the slopes
    of its neighbours.  Returns ``None`` when a required hump solution is missing.
    """
    humps = bank.humps
    chosen = []
    for i, d in enumerate(code.digits):
        ch = bank.pick(i, d, variant)
        if d != 0 and ch is None:
            return None
        sc = 1.0 if scale is None else float(scale[i])
        chosen.append(None if ch is None else (ch[0], ch[1], sc))

    def hump_state(i, t):
        if chosen[i] is None:
            return 0.0, 0.0
        shift, prof, sc = chosen[i]
        u, y = prof(t - shift)
        return sc * u, sc * y

    pieces = []
    for i, (lo, hi) in enumerate(humps):
        pieces.append((lo, hi, (lambda t, i=i: hump_state(i, t))))

    periodic = bank.bc == "periodic"
    gaps = _gaps(bank)
    left_bc = {"dirichlet": "dirichlet", "mixedLR": "dirichlet"}.get(bank.bc, "neumann")
    right_bc = {"dirichlet": "dirichlet", "mixedRL": "dirichlet"}.get(bank.bc, "neumann")
    for lo, hi, before, after in gaps:
        if before is None and not periodic:
            left = (left_bc,)
        else:
            left = ("slope", hump_state(before, humps[before][1])[1])
        if after is None:
            right = (right_bc,)
        else:
            right = ("slope", hump_state(after, humps[after][0])[1])
        tr = bank.connector(lo, hi, left, right)
        if tr is None:
            pieces.append((lo, hi, lambda t: (0.0, 0.0)))
        else:
            pieces.append((lo, hi, (lambda t, tr=tr: tuple(float(v) for v in tr.sample(t)))))
    pieces.sort(key=lambda p: p[0])

    def f(t):
        for lo, hi, fn in pieces:
            if lo <= t < hi:
                return fn(t)
        return pieces[-1][2](t)

    return f


# ----------------------------------------------------------------------------
# atlas
# ----------------------------------------------------------------------------


def all_codes(n: int) -> list:
    return [SymbolCode(c) for c in itertools.product((0, 1, 2), repeat=n) if any(c)]


def infer_windows(labelled) -> Optional[Windows]:
    """Window edges separating hump maxima grouped by intended digit.

    ``labelled`` is an iterable of ``(code, maxima)`` pairs.  Returns ``None``
    if the digit groups overlap.
    """
    groups = {0: [], 1: [], 2: []}
    for code, maxima in labelled:
        for d, mx in zip(code.digits, maxima):
            groups[d].append(mx)
    if not groups[1] or not groups[2]:
        return None

    def cut(lo_vals, hi_vals):
        a, b = max(lo_vals), min(hi_vals)
        if not a < b:
            return None
        return math.sqrt(a * b) if a > 0 else 0.5 * b

    r = cut(groups[0], groups[1]) if groups[0] else 0.5 * min(groups[1])
    rho = cut(groups[1], groups[2])
    if r is None or rho is None:
        return None
    return Windows(r, rho, 2.0 * max(groups[2]))


def _attempt_code(bank, code, windows, seed_rng, max_seg, attempts, nodes=None):
    """Try the glued seed, then jittered variants.  Returns (entry, tries) or (None, tries, reason)."""
    w, g, params, bc = bank.w, bank.g, bank.params, bank.bc
    a, b = bank.a, bank.b
    base_nodes = shooting_nodes(w, a, b, max_seg) if nodes is None else nodes
    reason = "no seed profile"
    tries = 0
    seeds = []
    for variant in range(3):
        prof = glued_profile(bank, code, variant)
        if prof is not None:
            seeds.append(prof)
    n = len(code)
    for _ in range(attempts):
        scale = 1.0 + 0.3 * (seed_rng.random(n) - 0.5)
        prof = glued_profile(bank, code, 0, scale)
        if prof is not None:
            seeds.append(prof)
    for prof in seeds:
        tries += 1
        sh = Shooter(w, g, params, bc, base_nodes if nodes is not None else layer_nodes(bank, prof, base_nodes))
        try:
            Z, trs, nF, it = sh.newton(sh.states_from_profile(prof))
            entry = _finish(sh, Z, trs, nF, it, windows, bank.humps)
        except (HumpsError, np.linalg.LinAlgError) as exc:
            reason = f"{type(exc).__name__}: {exc}"
            continue
        if windows is not None and entry.code != code:
            reason = f"converged to code {entry.code}"
            continue
        if not entry.code and windows is None and max(entry.hump_maxima) <= 0:
            reason = "converged to the trivial solution"
            continue
        return entry, tries, None
    return None, tries, reason


def build_atlas(
    w: Weight,
    g: Nonlinearity,
    params: Params,
    bc: str,
    *,
    windows: Optional[Windows] = None,
    k: int = 1,
    seed: int = 0,
    max_seg: Optional[float] = None,
    attempts: int = 4,
    codes: Optional[Sequence[SymbolCode]] = None,
) -> Atlas:
    """One converged solution per nonzero code, with a miss report for the rest.

    Without ``windows`` every code is first solved unclassified; the window
    edges are then placed between the digit groups of the hump maxima and
    each entry is classified against them.
    """
    rng = np.random.default_rng(seed)
    bank = ProfileBank(w, g, params, bc, k)
    n = len(bank.humps)
    if codes is None:
        codes = all_codes(n)
    if max_seg is None:
        max_seg = _default_seg(w)
    found, misses = {}, []
    for code in sorted(codes, key=lambda c: c.digits):
        entry, tries, reason = _attempt_code(bank, code, windows, rng, max_seg, attempts)
        if entry is None:
            misses.append(MissReport(code, reason, tries))
        else:
            if windows is None:
                entry.code = code
            found[code] = entry

    if windows is None and found:
        windows = infer_windows((c, e.hump_maxima) for c, e in found.items())
        if windows is None:
            for c, e in found.items():
                misses.append(MissReport(c, "hump maxima do not separate into digit clusters", 0))
            found = {}
        else:
            for c in list(found):
                try:
                    got = classify_maxima(found[c].hump_maxima, windows)
                except HumpsError as exc:
                    got = None
                    why = str(exc)
                if got != c:
                    misses.append(MissReport(c, why if got is None else f"classified as {got}", 0))
                    del found[c]

    entries, extras = [], []
    for c in sorted(found, key=lambda c: c.digits):
        e = found[c]
        if any(sup_distance(e, o) <= DISTINCT_TOL for o in entries):
            extras.append(e)
            misses.append(MissReport(c, "not distinct from an earlier entry", 0))
        else:
            entries.append(e)
    return Atlas(entries, sorted(misses, key=lambda m: m.code.digits), windows, extras)


def sup_distance(e1: AtlasEntry, e2: AtlasEntry, n: int = 4001) -> float:
    t0 = max(e1.trajectory.t0, e2.trajectory.t0)
    t1 = min(e1.trajectory.t1, e2.trajectory.t1)
    ts = np.linspace(t0, t1, n)
    return float(np.max(np.abs(e1.trajectory.sample(ts)[0] - e2.trajectory.sample(ts)[0])))


# ----------------------------------------------------------------------------
# subharmonics
# ----------------------------------------------------------------------------


def continue_in_mu(
    w: Weight,
    g: Nonlinearity,
    params: Params,
    bc: str,
    entry: AtlasEntry,
    *,
    k: int = 1,
    windows: Optional[Windows] = None,
    max_seg: Optional[float] = None,
    factor: float = 2.0,
    max_factor: float = 4.0,
    max_stages: int = MAX_CONTINUATION_STAGES,
    time_budget: Optional[float] = None,
) -> AtlasEntry:
    """Follow a converged entry from its own ``mu`` to ``params.mu``.

    Stages are geometric in ``mu``.  Each stage places nodes for the thinner
    decay layers, predicts the node states along the tangent
    ``dZ/dlog(mu)`` and corrects with Newton.  The stage ratio shrinks on
    failure and grows back on success.  On giving up, the raised
    ``NoConvergence`` carries the last converged entry as ``partial``.
    """
    mu, target = entry.trajectory.params.mu, params.mu
    deadline = None if time_budget is None else time.monotonic() + time_budget
    base = shooting_nodes(w, *bvp_window(w, bc, k), max_seg if max_seg is not None else _default_seg(w))
    current, f, stages = entry, factor, 0
    while mu != target:
        stages += 1
        if stages > max_stages:
            raise NoConvergence(f"continuation used {max_stages} stages and stopped at mu={mu:.6g}", current)
        if deadline is not None and time.monotonic() > deadline:
            raise NoConvergence(f"continuation ran out of time at mu={mu:.6g}", current)
        up = target > mu
        mu_next = min(mu * f, target) if up else max(mu / f, target)
        p = Params(params.lam, mu_next, params.c)
        bank = ProfileBank(w, g, p, bc, k)
        tr = current.trajectory

        def prof(t, tr=tr):
            u, y = tr.sample(t)
            return float(u), float(y)

        sh = Shooter(w, g, p, bc, layer_nodes(bank, prof, base, extra=2))
        try:
            Z0 = _tangent_predict(sh, Params(params.lam, mu, params.c), sh.states_from_profile(prof), mu_next)
            Z, trs, nF, it = sh.newton(Z0, max_halvings=CONTINUATION_HALVINGS)
            nxt = _finish(sh, Z, trs, nF, it, None, bank.humps)
            nxt.code = entry.code
        except (HumpsError, np.linalg.LinAlgError) as exc:
            f = math.sqrt(f)
            if f < MIN_CONTINUATION_RATIO:
                raise NoConvergence(f"continuation stalled at mu={mu:.6g}: {exc}", current) from exc
            continue
        current, mu, f = nxt, mu_next, min(f**1.5, max_factor)
    if windows is not None:
        if any(mx >= windows.R for mx in current.hump_maxima):
            raise NoConvergence(f"continued solution leaves the window: maxima {current.hump_maxima}")
        current.code = classify_maxima(current.hump_maxima, windows)
    return current


def _tangent_predict(sh: Shooter, p_old: Params, Z: np.ndarray, mu_next: float) -> np.ndarray:
    """Euler step in ``log(mu)`` from node states that solve the problem at ``p_old``."""
    old = Shooter(sh.w, sh.g, p_old, sh.bc, sh.nodes, sh.rtol, sh.atol)
    trs = old.flows(Z)
    F0 = old.residual(Z, trs)
    h = 1e-6
    bumped = Shooter(sh.w, sh.g, Params(p_old.lam, p_old.mu * (1.0 + h), p_old.c), sh.bc, sh.nodes, sh.rtol, sh.atol)
    dF = (bumped.residual(Z, bumped.flows(Z, variational=False)) - F0) / h
    dZ = -np.linalg.solve(old.jacobian(Z, trs), dF)
    return Z + math.log(mu_next / p_old.mu) * dZ.reshape(-1, 2)


def solve_code(
    w: Weight,
    g: Nonlinearity,
    params: Params,
    bc: str,
    code: SymbolCode,
    *,
    k: int = 1,
    windows: Optional[Windows] = None,
    seed: int = 0,
    max_seg: Optional[float] = None,
    attempts: int = 4,
    nodes: Optional[np.ndarray] = None,
    continue_from: Optional[float] = None,
) -> AtlasEntry:
    """One solution realising ``code``.

    Tries the glued seeds first.  If they all fail and ``continue_from`` is
    set, solves at ``mu = continue_from`` and follows that solution to
    ``params.mu``.
    """
    if not code.nonzero:
        raise ValueError("code must be nonzero")
    bank = ProfileBank(w, g, params, bc, k)
    if len(code) != len(bank.humps):
        raise ValueError(f"code length {len(code)} != number of humps {len(bank.humps)}")
    rng = np.random.default_rng(seed)
    seg = max_seg if max_seg is not None else _default_seg(w)
    entry, tries, reason = _attempt_code(bank, code, windows, rng, seg, attempts, nodes)
    if entry is None and continue_from is not None and continue_from != params.mu:
        start = solve_code(
            w, g, Params(params.lam, continue_from, params.c), bc, code,
            k=k, seed=seed, max_seg=max_seg, attempts=attempts, nodes=nodes,
        )
        entry = continue_in_mu(w, g, params, bc, start, k=k, windows=windows, max_seg=max_seg)
        if windows is not None and entry.code != code:
            raise NoConvergence(f"continuation of code {code} ended at code {entry.code}")
    if entry is None:
        raise NoConvergence(f"code {code}: {reason} after {tries} attempts")
    if windows is None:
        entry.code = code
    return entry


def subharmonic_solve(
    w: Weight,
    g: Nonlinearity,
    params: Params,
    code: SymbolCode,
    k: int,
    **kw,
) -> AtlasEntry:
    """kT-periodic solution with code of length ``k*m`` on ``[sigma_1, sigma_1 + kT]``."""
    if not w.periodic:
        raise ValueError("subharmonics need a periodic weight")
    if len(code) != k * w.m:
        raise ValueError(f"code length {len(code)} != k*m = {k * w.m}")
    return solve_code(w, g, params, "periodic", code, k=k, **kw)


# ----------------------------------------------------------------------------
# validation
# ----------------------------------------------------------------------------


def validate_solution(entry: AtlasEntry, params: Params, windows: Windows, mesh: int = 4001) -> ValidationReport:
    """Positivity, window separation, derivative bound and collocation residual."""
    tr = entry.trajectory
    flags = []
    ts = np.linspace(tr.t0, tr.t1, mesh)
    u, y = tr.sample(ts)
    inner = u[1:-1] if entry.bc == "dirichlet" else u
    if entry.bc in ("mixedLR",):
        inner = u[1:]
    elif entry.bc in ("mixedRL",):
        inner = u[:-1]
    positive = bool(np.all(inner > 0)) and bool(np.all(u < windows.R))
    if not positive:
        flags.append("NotPositive" if np.any(inner <= 0) else "AboveR")
    off_edges = all(
        abs(mx - e) > BOUNDARY_TOL for mx in entry.hump_maxima for e in (windows.r, windows.rho, windows.R)
    )
    if not off_edges:
        flags.append("OnBoundary")
    K = bound_k(tr.weight, tr.g, params, windows.R)
    bounded = float(np.max(np.abs(tr.y))) <= K + 1e-6 and float(np.max(np.abs(y))) <= K + 1e-6
    if not bounded:
        flags.append("DerivativeBound")
    res = tr.residual
    small = res < 1e-7
    if not small:
        flags.append("Residual")
    return ValidationReport(
        {"positive": positive, "off_edges": off_edges, "derivative_bound": bounded, "residual": small},
        flags,
    )


def reintegrate(entry: AtlasEntry, params: Params) -> tuple[Trajectory, float]:
    """Re-run the segment flows from the stored node states; return stitched trajectory and residual."""
    tr0 = entry.trajectory
    sh = Shooter(tr0.weight, tr0.g, params, entry.bc, entry.nodes)
    trs = sh.flows(entry.node_states, variational=False)
    return _stitch(trs), float(np.max(np.abs(sh.residual(entry.node_states, trs))))
