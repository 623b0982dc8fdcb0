"""Piecewise sign-changing weight a(t) and its hump decomposition.

A weight is given on one base window ``[t_start, t_start + T]`` as a list of
contiguous pieces.  Each piece is either a constant or a named analytic
kernel.  Analytic pieces are cut at their sign changes so that every atom has
a fixed sign, which lets the integrator treat ``lambda*a^+ - mu*a^-`` as a
smooth function on each atom.
"""

from __future__ import annotations

import bisect
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional, Sequence

import numpy as np
from scipy import integrate as spi
from scipy import optimize as spo

from .errors import InvalidSignPattern, QuadratureFailure

QUAD_RTOL = 1e-12
_SCAN = 256


# ----------------------------------------------------------------------------
# pieces
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class ConstantPiece:
    value: float

    kind = "const"

    def __call__(self, t: float) -> float:
        return self.value

    def params(self) -> dict:
        return {"value": self.value}


@dataclass(frozen=True)
class AnalyticPiece:
    """Named smooth kernel.

    ``zeros(lo, hi)`` may return the exact sign changes inside ``(lo, hi)``;
    when absent they are found by a sample scan followed by ``brentq``.
    """

    name: str
    param_items: tuple
    func: Callable[[float], float] = field(compare=False, repr=False)
    zeros: Optional[Callable[[float, float], list]] = field(default=None, compare=False, repr=False)

    @property
    def kind(self) -> str:
        return self.name

    def __call__(self, t: float) -> float:
        return self.func(t)

    def params(self) -> dict:
        return dict(self.param_items)


def sine_piece(amp: float = 1.0, omega: float = 1.0, phase: float = 0.0) -> AnalyticPiece:
    """``amp * sin(omega*t + phase)``."""
    if omega == 0.0:
        raise ValueError("omega must be nonzero")

    def f(t, amp=amp, omega=omega, phase=phase):
        return amp * math.sin(omega * t + phase)

    def zeros(lo, hi):
        a, b = sorted((omega * lo + phase, omega * hi + phase))
        k0 = math.floor(a / math.pi) + 1
        out = []
        k = k0
        while k * math.pi < b:
            out.append((k * math.pi - phase) / omega)
            k += 1
        return sorted(z for z in out if lo < z < hi)

    return AnalyticPiece("sine", (("amp", amp), ("omega", omega), ("phase", phase)), f, zeros)


def make_piece(kind: str, **params) -> ConstantPiece | AnalyticPiece:
    """Build a piece from a config-style kind name and parameter map."""
    if kind == "const":
        if set(params) != {"value"}:
            raise ValueError("const piece takes exactly one parameter: value")
        return ConstantPiece(float(params["value"]))
    if kind == "sine":
        unknown = set(params) - {"amp", "omega", "phase"}
        if unknown:
            raise ValueError(f"unknown sine parameters: {sorted(unknown)}")
        return sine_piece(**{k: float(v) for k, v in params.items()})
    raise ValueError(f"unknown piece kind {kind!r}")


# ----------------------------------------------------------------------------
# atoms and decomposition
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class Atom:
    """Sub-interval of one piece on which ``a`` has a fixed sign."""

    lo: float
    hi: float
    piece: ConstantPiece | AnalyticPiece
    sign: int


@dataclass(frozen=True)
class Decomposition:
    """Hump structure ``I+_i = [sigma_i, tau_i]``, ``I-_i = [tau_i, sigma_{i+1}]``.

    In periodic mode ``minus`` has ``m`` entries and ``sigma_{m+1} = sigma_1 + T``.
    In interval mode the window may open with a negative ``head`` and the last
    entry of ``minus`` is the negative tail, or ``None`` when the window ends
    inside a positive hump.
    """

    plus: tuple
    minus: tuple
    periodic: bool
    head: Optional[tuple] = None

    @property
    def m(self) -> int:
        return len(self.plus)

    def minus_before(self, i: int) -> Optional[tuple]:
        """Negativity interval preceding hump ``i`` (0-based, cyclic in periodic mode)."""
        if i > 0:
            return self.minus[i - 1]
        return self.minus[-1] if self.periodic else self.head

    def plus_after(self, i: int) -> Optional[tuple]:
        """Hump following negativity interval ``i``."""
        if i + 1 < self.m:
            return self.plus[i + 1]
        return self.plus[0] if self.periodic else None


def _piece_sign_changes(piece, lo, hi) -> list:
    if isinstance(piece, ConstantPiece):
        return []
    if piece.zeros is not None:
        return list(piece.zeros(lo, hi))
    ts = np.linspace(lo, hi, _SCAN + 1)
    vs = [piece(t) for t in ts]
    roots = []
    for k in range(_SCAN):
        v0, v1 = vs[k], vs[k + 1]
        if v0 == 0.0 and 0 < k:
            roots.append(ts[k])
        elif v0 * v1 < 0:
            roots.append(spo.brentq(piece.func, ts[k], ts[k + 1], xtol=1e-15, rtol=4e-16))
    return sorted(set(r for r in roots if lo < r < hi))


def _atom_sign(piece, lo, hi) -> int:
    if isinstance(piece, ConstantPiece):
        v = piece.value
    else:
        # sample a few interior points; a single midpoint may sit on a touching zero
        v = max((piece(lo + f * (hi - lo)) for f in (0.25, 0.5, 0.75)), key=abs)
    return (v > 0) - (v < 0)


def _runs(signs: Sequence[int], cyclic: bool) -> list:
    """Resolve zero signs by the plateau convention.

    A zero run touching a positive run joins it; a zero run with only
    negative neighbours stays negative.
    """
    n = len(signs)

    def neighbour(idx, step):
        q = idx
        for _ in range(n):
            q += step
            if not cyclic and not 0 <= q < n:
                return None
            s = signs[q % n]
            if s != 0:
                return s
        return None

    resolved = list(signs)
    k = 0
    while k < n:
        if signs[k] != 0:
            k += 1
            continue
        j = k
        while j < n and signs[j] == 0:
            j += 1
        left, right = neighbour(k, -1), neighbour(j - 1, 1)
        if left is None and right is None:
            raise InvalidSignPattern("weight vanishes identically")
        fill = 1 if 1 in (left, right) else -1
        resolved[k:j] = [fill] * (j - k)
        k = j
    return resolved


class Weight:
    """T-periodic (or windowed) piecewise weight.

    Parameters
    ----------
    pieces:
        ``[(t0, t1, piece), ...]`` contiguous, covering one period.
    periodic:
        Cyclic hump decomposition when true; interval decomposition
        (negative head and tail allowed) otherwise.
    """

    def __init__(self, pieces, periodic: bool = True):
        if not pieces:
            raise InvalidSignPattern("weight needs at least one piece")
        norm = []
        for t0, t1, p in pieces:
            t0, t1 = float(t0), float(t1)
            if not t1 > t0:
                raise InvalidSignPattern(f"zero-width piece [{t0}, {t1}]")
            norm.append((t0, t1, p))
        for (_, e, _), (s, _, _) in zip(norm, norm[1:]):
            if s != e:
                raise InvalidSignPattern(f"pieces not contiguous at {e} / {s}")
        self.pieces = tuple(norm)
        self.periodic = bool(periodic)
        self.t_start = norm[0][0]
        self.t_end = norm[-1][1]
        self.T = self.t_end - self.t_start
        self._starts = [p[0] for p in norm]

        atoms = []
        for t0, t1, p in norm:
            cuts = [t0] + _piece_sign_changes(p, t0, t1) + [t1]
            for lo, hi in zip(cuts, cuts[1:]):
                if hi > lo:
                    atoms.append((lo, hi, p, _atom_sign(p, lo, hi)))
        signs = [a[3] for a in atoms]
        if 1 not in signs or -1 not in signs:
            raise InvalidSignPattern("weight must take both signs")
        self.atoms = tuple(Atom(*a) for a in atoms)
        self._atom_starts = [a.lo for a in self.atoms]
        self.decomposition = self._decompose(_runs(signs, self.periodic))

    # -- evaluation ---------------------------------------------------------

    def reduce(self, t: float) -> tuple[float, float]:
        """Return ``(t_base, shift)`` with ``t_base`` in the base window."""
        if self.periodic or t < self.t_start or t > self.t_end:
            k = math.floor((t - self.t_start) / self.T)
            shift = k * self.T
            tb = t - shift
            if tb >= self.t_end:
                tb -= self.T
                shift += self.T
            return tb, shift
        return t, 0.0

    def a(self, t: float) -> float:
        tb, _ = self.reduce(t)
        idx = bisect.bisect_right(self._starts, tb) - 1
        return self.pieces[max(idx, 0)][2](tb)

    def evaluate(self, t: float, lam: float, mu: float) -> float:
        """``lam * a^+(t) - mu * a^-(t)``."""
        v = self.a(t)
        return lam * v if v > 0 else mu * v

    def breakpoints(self) -> list:
        """Piece boundaries and sign changes inside the base window."""
        pts = {self.t_start, self.t_end}
        for at in self.atoms:
            pts.add(at.lo)
            pts.add(at.hi)
        return sorted(pts)

    def segments(self, a: float, b: float) -> Iterator[tuple]:
        """Yield ``(lo, hi, atom, shift)`` covering ``[a, b]`` with ``a(t) = atom.piece(t - shift)``."""
        if b < a:
            raise ValueError("segments needs a <= b")
        k0 = math.floor((a - self.t_start) / self.T)
        k1 = math.floor((b - self.t_start) / self.T)
        for k in range(k0, k1 + 1):
            shift = k * self.T
            for at in self.atoms:
                lo = max(a, at.lo + shift)
                hi = min(b, at.hi + shift)
                if hi > lo:
                    yield lo, hi, at, shift

    # -- decomposition ------------------------------------------------------

    def _decompose(self, resolved) -> Decomposition:
        runs = []
        for at, s in zip(self.atoms, resolved):
            if runs and runs[-1][2] == s:
                runs[-1][1] = at.hi
            else:
                runs.append([at.lo, at.hi, s])
        if self.periodic:
            if len(runs) > 1 and runs[0][2] == runs[-1][2]:
                last = runs.pop()
                runs[0][0] = last[0] - self.T
            # start at the first positive run
            k = next(i for i, r in enumerate(runs) if r[2] == 1)
            runs = runs[k:] + [[lo + self.T, hi + self.T, s] for lo, hi, s in runs[:k]]
            plus = tuple((r[0], r[1]) for r in runs if r[2] == 1)
            minus = tuple((r[0], r[1]) for r in runs if r[2] == -1)
            return Decomposition(plus, minus, True)
        head = None
        if runs[0][2] == -1:
            head = (runs[0][0], runs[0][1])
            runs = runs[1:]
        plus = tuple((r[0], r[1]) for r in runs if r[2] == 1)
        minus = [(r[0], r[1]) for r in runs if r[2] == -1]
        if len(minus) < len(plus):
            minus.append(None)
        return Decomposition(plus, tuple(minus), False, head)

    def decompose(self) -> Decomposition:
        return self.decomposition

    @property
    def m(self) -> int:
        return self.decomposition.m

    # -- integrals ----------------------------------------------------------

    def moment(self, a: float, b: float, part: int, alpha: float = 1.0, beta: float = 0.0) -> float:
        """``int_a^b (alpha + beta*xi) * a^{part}(xi) dxi`` with part = +1 (a^+) or -1 (a^-)."""
        if b <= a:
            return 0.0
        total = 0.0
        for lo, hi, at, shift in self.segments(a, b):
            if at.sign != part:
                continue
            if isinstance(at.piece, ConstantPiece):
                v = part * at.piece.value
                total += v * (alpha * (hi - lo) + 0.5 * beta * (hi * hi - lo * lo))
                continue
            f = at.piece.func

            def integrand(x, f=f, shift=shift):
                return (alpha + beta * x) * part * f(x - shift)

            # the error estimate is checked below, so quad's own warning is redundant
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", spi.IntegrationWarning)
                val, err = spi.quad(integrand, lo, hi, epsabs=0.0, epsrel=QUAD_RTOL, limit=200)
            if not math.isfinite(val) or err > max(QUAD_RTOL * abs(val), 1e-300) * 10:
                raise QuadratureFailure(f"quadrature on [{lo}, {hi}] reached only {err:.3e}")
            total += val
        return total

    def integrals(self) -> "WeightIntegrals":
        return WeightIntegrals(self)


class WeightIntegrals:
    """Integral quantities of a weight over its humps (0-based indices)."""

    def __init__(self, w: Weight):
        self.weight = w
        d = w.decomposition
        self.m = d.m
        self.len_plus = [hi - lo for lo, hi in d.plus]
        self.len_minus = [None if iv is None else iv[1] - iv[0] for iv in d.minus]
        self.norm_plus = [w.moment(lo, hi, +1) for lo, hi in d.plus]
        self.norm_minus = [None if iv is None else w.moment(iv[0], iv[1], -1) for iv in d.minus]
        # ||A_i|| = int_{tau}^{sigma} (sigma - xi) a^-(xi) dxi
        self.norm_A = [None if iv is None else w.moment(iv[0], iv[1], -1, iv[1], -1.0) for iv in d.minus]
        self.head_norm_minus = None if d.head is None else w.moment(*d.head, -1)
        self.head_norm_A = None if d.head is None else w.moment(d.head[0], d.head[1], -1, d.head[1], -1.0)
        for i, v in enumerate(self.norm_plus):
            if not v > 0:
                raise InvalidSignPattern(f"hump {i + 1} has zero positive mass")

    def A(self, i: int, t: float) -> float:
        """``int_{tau_i}^t a^-``."""
        tau = self.weight.decomposition.minus[i][0]
        return self.weight.moment(tau, t, -1)

    def B(self, i: int, t: float) -> float:
        """``int_t^{sigma_{i+1}} a^-``."""
        sig = self.weight.decomposition.minus[i][1]
        return self.weight.moment(t, sig, -1)

    def int_A(self, i: int, delta: float) -> float:
        """``int_{tau_i}^{tau_i+delta} A_i``."""
        tau = self.weight.decomposition.minus[i][0]
        return self.weight.moment(tau, tau + delta, -1, tau + delta, -1.0)

    def int_B(self, i: int, delta: float) -> float:
        """``int_{sigma_{i+1}-delta}^{sigma_{i+1}} B_i``."""
        sig = self.weight.decomposition.minus[i][1]
        return self.weight.moment(sig - delta, sig, -1, -(sig - delta), 1.0)

    @property
    def total_plus(self) -> float:
        w = self.weight
        return w.moment(w.t_start, w.t_end, +1)

    @property
    def total_minus(self) -> float:
        w = self.weight
        return w.moment(w.t_start, w.t_end, -1)


def sine_weight(T: float = 2 * math.pi, periodic: bool = True) -> Weight:
    """``a(t) = sin t`` on ``[0, T]``."""
    return Weight([(0.0, T, sine_piece())], periodic=periodic)


def stepwise_weight(steps, periodic: bool = False) -> Weight:
    """Weight from ``[(t0, t1, value), ...]`` constant steps."""
    return Weight([(t0, t1, ConstantPiece(float(v))) for t0, t1, v in steps], periodic=periodic)
