"""Radial solutions on an annulus via the change of variable ``t = h(r)``.

With ``h(r) = int_{R1}^r xi^(1-N) dxi`` the radial equation
``(r^(N-1) U')' + r^(N-1) Q(r) g(U) = 0`` becomes ``u'' + a(t) g(u) = 0`` with
``a(t) = r(t)^(2(N-1)) Q(r(t))`` and ``U(r) = u(h(r))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidRadii
from .integrate import Params, Trajectory
from .nonlinearity import Nonlinearity
from .weight import AnalyticPiece, ConstantPiece, Weight

RADIAL_BCS = ("neumann", "dirichlet")
LIFT_POINTS = 4001


@dataclass(frozen=True)
class AnnulusProblem:
    """``Q`` is given as ``[(r0, r1, piece), ...]`` covering ``[R1, R2]``."""

    N: int
    R1: float
    R2: float
    Q: tuple
    g: Nonlinearity
    bc: str = "dirichlet"

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise ValueError(f"dimension must be an integer >= 2, got {self.N}")
        if not (0.0 < self.R1 < self.R2) or not math.isfinite(self.R2):
            raise InvalidRadii(f"need 0 < R1 < R2, got R1={self.R1}, R2={self.R2}")
        if self.bc not in RADIAL_BCS:
            raise ValueError(f"bc must be one of {RADIAL_BCS}, got {self.bc!r}")
        object.__setattr__(self, "Q", tuple(self.Q))
        if not self.Q:
            raise ValueError("Q needs at least one piece")
        lo, hi = self.Q[0][0], self.Q[-1][1]
        if not (math.isclose(lo, self.R1, rel_tol=1e-14) and math.isclose(hi, self.R2, rel_tol=1e-14)):
            raise InvalidRadii(f"Q covers [{lo}, {hi}], not [{self.R1}, {self.R2}]")

    # -- change of variable ---------------------------------------------------

    def h(self, r):
        r = np.asarray(r, dtype=float)
        if self.N == 2:
            return np.log(r / self.R1)
        e = 2.0 - self.N
        return (self.R1**e - r**e) / (self.N - 2)

    def r_of(self, t):
        t = np.asarray(t, dtype=float)
        if self.N == 2:
            return self.R1 * np.exp(t)
        e = 2.0 - self.N
        return (self.R1**e - (self.N - 2) * t) ** (1.0 / e)

    def dh(self, r):
        return np.asarray(r, dtype=float) ** (1.0 - self.N)

    @property
    def T(self) -> float:
        if self.N == 2:
            return math.log(self.R2 / self.R1)
        e = 2.0 - self.N
        return (self.R1**e - self.R2**e) / (self.N - 2)

    def Q_at(self, r: float) -> float:
        for r0, r1, piece in self.Q:
            if r <= r1:
                return piece(r)
        return self.Q[-1][2](r)


def _compose(p: AnnulusProblem, piece) -> AnalyticPiece:
    k = 2 * (p.N - 1)
    r_of = p.r_of

    def f(t):
        r = float(r_of(t))
        return r**k * piece(r)

    if isinstance(piece, ConstantPiece):

        def zeros(lo, hi):
            return []

    elif piece.zeros is not None:

        def zeros(lo, hi):
            rs = piece.zeros(float(r_of(lo)), float(r_of(hi)))
            return sorted(float(p.h(z)) for z in rs)

    else:
        zeros = None
    items = (("N", p.N), ("R1", p.R1), ("inner", piece.kind)) + tuple(sorted(piece.params().items()))
    return AnalyticPiece("radial", items, f, zeros)


def reduce(p: AnnulusProblem) -> tuple[Weight, float]:
    """Weight ``a(t)`` on ``[0, T']`` and ``T'``; breakpoints map through ``h``."""
    pieces = []
    for r0, r1, piece in p.Q:
        t0 = 0.0 if r0 == p.Q[0][0] else float(p.h(r0))
        t1 = p.T if r1 == p.Q[-1][1] else float(p.h(r1))
        pieces.append((t0, t1, _compose(p, piece)))
    return Weight(pieces, periodic=False), p.T


# ----------------------------------------------------------------------------
# lifting
# ----------------------------------------------------------------------------


@dataclass
class RadialProfile:
    """Samples of ``U``, ``U'`` and the flux derivative ``(r^(N-1) U')'`` on a radius mesh."""

    r: np.ndarray
    U: np.ndarray
    dU: np.ndarray
    dflux: np.ndarray

    def scaled(self, c: float) -> "RadialProfile":
        return RadialProfile(self.r, c * self.U, c * self.dU, c * self.dflux)

    def max_on(self, lo: float, hi: float) -> float:
        mask = (self.r >= lo) & (self.r <= hi)
        return float(np.max(self.U[mask]))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("r,U,U'\n")
            for row in zip(self.r, self.U, self.dU):
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def lift_solution(traj: Trajectory, p: AnnulusProblem, n: int = LIFT_POINTS) -> RadialProfile:
    """``U(r) = u(h(r))``, ``U'(r) = u'(h(r)) h'(r)`` and ``(r^(N-1) U')' = u''(h(r)) h'(r)``."""
    r = np.linspace(p.R1, p.R2, n)
    t = np.clip(p.h(r), traj.t0, traj.t1)
    u, y, upp = traj.sample(t, derivs=2)
    dh = p.dh(r)
    return RadialProfile(r, u, y * dh, upp * dh)


def radial_residual(profile: RadialProfile, p: AnnulusProblem, params: Params) -> float:
    """Max defect of the radial equation, relative to ``max(1, max |(r^(N-1) U')'|)``."""
    r = profile.r
    q = np.array([p.Q_at(float(x)) for x in r])
    qlm = np.where(q > 0, params.lam * q, params.mu * q)
    gu = np.array([p.g(float(v)) for v in profile.U])
    defect = profile.dflux + r ** (p.N - 1) * qlm * gu
    scale = max(1.0, float(np.max(np.abs(profile.dflux))))
    return float(np.max(np.abs(defect)) / scale)


def radial_humps(p: AnnulusProblem, w: Weight) -> list:
    """Positivity humps of ``Q`` as radius intervals."""
    return [(float(p.r_of(lo)), float(p.r_of(hi))) for lo, hi in w.decomposition.plus]


def lifted_maxima(profile: RadialProfile, p: AnnulusProblem, w: Weight) -> tuple:
    return tuple(profile.max_on(lo, hi) for lo, hi in radial_humps(p, w))
