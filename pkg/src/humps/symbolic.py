"""Lyndon words, shift spaces over block alphabets and the coding check for subharmonics."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

from .errors import CommutationFailure, InfeasibleSize, WindowMismatch

MAX_LYNDON_LENGTH = 64
MAX_ENUMERATE = 10**7
BRUTE_LIMIT = 10**8
DEFAULT_WINDOW = 32
FIXED_POINT_TOL = 1e-7


# ----------------------------------------------------------------------------
# counting
# ----------------------------------------------------------------------------


def mobius(l: int) -> int:
    if l < 1:
        raise ValueError(f"mobius needs l >= 1, got {l}")
    sign, p, rest = 1, 2, l
    while p * p <= rest:
        if rest % p == 0:
            rest //= p
            if rest % p == 0:
                return 0
            sign = -sign
        p += 1
    return -sign if rest > 1 else sign


def divisors(k: int) -> list:
    small = [d for d in range(1, math.isqrt(k) + 1) if k % d == 0]
    return sorted(set(small + [k // d for d in small]))


def lyndon_count(n: int, k: int) -> int:
    """Number of aperiodic necklaces of length ``k`` over ``n`` letters."""
    if n < 2 or k < 1:
        raise ValueError(f"lyndon_count needs n >= 2 and k >= 1, got n={n}, k={k}")
    total = sum(mobius(l) * n ** (k // l) for l in divisors(k))
    q, r = divmod(total, k)
    assert r == 0, "necklace sum not divisible by k"
    return q


# ----------------------------------------------------------------------------
# enumeration
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class LyndonWord:
    digits: tuple
    n: int

    def __post_init__(self):
        if not is_lyndon(self.digits):
            raise ValueError(f"{self.digits} is not a Lyndon word")

    @property
    def k(self) -> int:
        return len(self.digits)

    def __str__(self) -> str:
        if self.n <= 10:
            return "".join(str(d) for d in self.digits)
        return ",".join(str(d) for d in self.digits)


def is_lyndon(word: Sequence[int]) -> bool:
    w = tuple(word)
    return len(w) > 0 and all(w < w[i:] + w[:i] for i in range(1, len(w)))


def iter_lyndon(n: int, k: int, prefix: Sequence[int] = ()) -> Iterator[tuple]:
    """Lyndon words of length ``k`` in lexicographic order (Duval's successor rule).

    The rule walks all Lyndon words of length at most ``k`` in order; with
    ``prefix`` it stops once past the prefix, so streams can be sharded.
    """
    prefix = tuple(prefix)
    p = len(prefix)
    w = [-1]
    while w:
        w[-1] += 1
        head = tuple(w[:p])
        if head > prefix:
            return
        if len(w) == k and head == prefix:
            yield tuple(w)
        m = len(w)
        while len(w) < k:
            w.append(w[-m])
        while w and w[-1] == n - 1:
            w.pop()


def lyndon_enumerate(n: int, k: int) -> list:
    if k > MAX_LYNDON_LENGTH:
        raise InfeasibleSize(f"length {k} exceeds {MAX_LYNDON_LENGTH}")
    count = lyndon_count(n, k)
    if count > MAX_ENUMERATE:
        raise InfeasibleSize(f"{count} words exceed the enumeration limit {MAX_ENUMERATE}")
    return [LyndonWord(wd, n) for wd in iter_lyndon(n, k)]


def lyndon_brute(n: int, k: int) -> list:
    """Reference enumeration by rotation checks over all ``n**k`` words."""
    if n**k > BRUTE_LIMIT:
        raise InfeasibleSize(f"n^k = {n ** k} exceeds {BRUTE_LIMIT}")
    return [w for w in itertools.product(range(n), repeat=k) if is_lyndon(w)]


# ----------------------------------------------------------------------------
# codes and block alphabets
# ----------------------------------------------------------------------------


def code_to_index_sets(code) -> tuple[frozenset, frozenset]:
    """1-based ``(I, J)``: humps coded 1 and humps coded 2."""
    digits = getattr(code, "digits", code)
    I = frozenset(i + 1 for i, d in enumerate(digits) if d == 1)
    J = frozenset(i + 1 for i, d in enumerate(digits) if d == 2)
    return I, J


def encode_block(digits: Sequence[int]) -> int:
    """Base-3 integer for one period of hump digits (first hump most significant)."""
    x = 0
    for d in digits:
        if d not in (0, 1, 2):
            raise ValueError(f"digit {d} outside {{0, 1, 2}}")
        x = 3 * x + d
    return x


def decode_block(x: int, m: int) -> tuple:
    out = []
    for _ in range(m):
        x, d = divmod(x, 3)
        out.append(d)
    if x:
        raise ValueError("block value too large for m digits")
    return tuple(reversed(out))


def code_blocks(code, m: int) -> tuple:
    digits = tuple(getattr(code, "digits", code))
    if len(digits) % m:
        raise ValueError(f"code length {len(digits)} is not a multiple of m={m}")
    return tuple(encode_block(digits[i : i + m]) for i in range(0, len(digits), m))


# ----------------------------------------------------------------------------
# shift space
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class ShiftSequence:
    """Window of a two-sided sequence: ``window[j]`` is the symbol at index ``j - offset``."""

    window: tuple
    offset: int
    n: int

    def __post_init__(self):
        if not 0 <= self.offset < len(self.window):
            raise ValueError("offset must point inside the window")
        if any(not 0 <= s < self.n for s in self.window):
            raise ValueError(f"symbols must lie in 0..{self.n - 1}")

    @classmethod
    def periodic(cls, word: Sequence[int], n: int, N: int = DEFAULT_WINDOW) -> "ShiftSequence":
        """Indices ``-N..N`` of the bi-infinite repetition of ``word`` (index 0 = word[0])."""
        word = tuple(word)
        return cls(tuple(word[l % len(word)] for l in range(-N, N + 1)), N, n)

    @property
    def radius(self) -> int:
        """Largest ``N`` with indices ``-N..N`` all inside the window."""
        return min(self.offset, len(self.window) - 1 - self.offset)

    def at(self, l: int) -> int:
        return self.window[l + self.offset]

    def shift(self) -> "ShiftSequence":
        """Left shift: the symbol at index ``l`` becomes the old symbol at ``l + 1``."""
        if self.offset + 1 >= len(self.window):
            raise WindowMismatch("window too short to shift")
        return ShiftSequence(self.window, self.offset + 1, self.n)


@dataclass(frozen=True)
class ShiftDistance:
    value: float
    bound: float  # contribution of indices outside the window, at most


def shift_distance(s1: ShiftSequence, s2: ShiftSequence, N: Optional[int] = None) -> ShiftDistance:
    """Sum of ``delta(s1_l, s2_l) / 2**|l|`` over ``|l| <= N`` with the tail bound ``2**(1 - N)``."""
    if s1.n != s2.n:
        raise WindowMismatch(f"alphabets differ: {s1.n} vs {s2.n}")
    avail = min(s1.radius, s2.radius)
    if N is None:
        N = avail
    elif N > avail:
        raise WindowMismatch(f"N={N} exceeds the common window radius {avail}")
    total = sum(math.ldexp(1.0, -abs(l)) for l in range(-N, N + 1) if s1.at(l) != s2.at(l))
    return ShiftDistance(total, math.ldexp(1.0, 1 - N))


# ----------------------------------------------------------------------------
# coding of subharmonics
# ----------------------------------------------------------------------------


@dataclass
class CommutationRow:
    code: str
    blocks: tuple
    shifted: tuple
    recoded: tuple
    fixed_point_residual: float
    commutes: bool
    periodic_point: bool


@dataclass
class SemiconjugationReport:
    rows: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(r.commutes and r.periodic_point for r in self.rows)


def translated_maxima(entry, w, k: int, blocks: int = 1) -> tuple:
    """Hump maxima of ``t -> u(t + blocks*T)`` read off the kT-periodic trajectory."""
    tr = entry.trajectory
    a, span = tr.t0, tr.t1 - tr.t0
    shift = blocks * w.T
    out = []
    for lo, hi in _window_humps(w, a, a + span):
        lo2, hi2 = lo + shift, hi + shift
        # wrap back into the stored period
        wraps = math.floor((lo2 - a) / span + 1e-12)
        lo2 -= wraps * span
        hi2 -= wraps * span
        if hi2 <= a + span + 1e-12:
            out.append(tr.max_on(lo2, min(hi2, a + span)))
        else:
            out.append(max(tr.max_on(lo2, a + span), tr.max_on(a, hi2 - span)))
    return tuple(out)


def _window_humps(w, a, b):
    from .bvp import humps_in

    return humps_in(w, a, b)


def semiconjugation_check(entries, k: int, windows, params, *, raise_on_failure: bool = False) -> SemiconjugationReport:
    """Coding commutes with translation by one period, and ``z0`` is a k-periodic point.

    For every entry the block sequence of its code is compared with the
    re-classification of the solution translated by ``T``, which must equal
    the sequence shifted by one block.  Only finitely many solutions are
    sampled, so this can falsify the coding picture but not prove it.
    """
    from .bvp import classify_maxima
    from .integrate import poincare_map

    report = SemiconjugationReport()
    for e in entries:
        tr = e.trajectory
        w = tr.weight
        m = w.m
        blocks = code_blocks(e.code, m)
        shifted = blocks[1:] + blocks[:1]
        recoded = code_blocks(classify_maxima(translated_maxima(e, w, k), windows), m)
        z_end, _ = poincare_map(w, tr.g, params, e.z0, periods=k)
        res = float(np.max(np.abs(np.array(z_end) - np.array(e.z0))))
        row = CommutationRow(
            str(e.code), blocks, shifted, recoded, res, recoded == shifted, res < FIXED_POINT_TOL
        )
        report.rows.append(row)
        if raise_on_failure and not row.commutes:
            bad = next(i for i, (x, y) in enumerate(zip(recoded, shifted)) if x != y)
            raise CommutationFailure(f"code {e.code}: block {bad} recodes to {recoded[bad]}, expected {shifted[bad]}")
    return report
