"""Valuation calculus on products of subsets of {0, 1, 2} and the degree formulas it yields.

A box ``A_1 x ... x A_m`` stands for the set of codes whose i-th digit lies
in ``A_i``.  The valuation ``d`` is pinned down by additivity in each factor
together with two normalisation rules:

* (R1) some factor is ``{0,1}`` and every other factor is ``{0}``, ``{0,1}``
  or ``{0,1,2}``: ``d = 0``;
* (R2) every factor is ``{0}`` or ``{0,1,2}``: ``d = 1``.

Two reductions compute ``d`` on atomic boxes: the factor-splitting recursion
(``valuation_recursive``) and the single induction over atomic sub-boxes
(``lambda_degree_induction``).  ``valuation_product`` is an independent closed form.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

from .errors import OverlappingIndexSets

FULL = frozenset({0, 1, 2})
LOW = frozenset({0, 1})
ZERO = frozenset({0})
ONE = frozenset({1})
TWO = frozenset({2})
ALL_FACTORS = tuple(
    frozenset(s) for r in range(4) for s in itertools.combinations((0, 1, 2), r)
)
_WEIGHT = {0: 1, 1: -1, 2: 1}


@dataclass(frozen=True)
class BoxFamily:
    factors: tuple

    def __post_init__(self):
        fs = tuple(frozenset(f) for f in self.factors)
        if not fs:
            raise ValueError("a box needs at least one factor")
        if any(not f <= FULL for f in fs):
            raise ValueError("factors must be subsets of {0, 1, 2}")
        object.__setattr__(self, "factors", fs)

    @property
    def m(self) -> int:
        return len(self.factors)

    @property
    def masks(self) -> tuple:
        """Bit ``b`` of the i-th mask is set when ``b`` lies in ``A_i``."""
        return tuple(sum(1 << b for b in f) for f in self.factors)

    @classmethod
    def from_masks(cls, masks: Iterable[int]) -> "BoxFamily":
        return cls(tuple(frozenset(b for b in range(3) if (mk >> b) & 1) for mk in masks))

    @classmethod
    def parse(cls, text: str) -> "BoxFamily":
        """Comma-separated factors written as digit strings; ``-`` is the empty factor."""
        out = []
        for part in text.split(","):
            part = part.strip()
            if part in ("-", ""):
                out.append(frozenset())
            elif set(part) <= set("012"):
                out.append(frozenset(int(c) for c in part))
            else:
                raise ValueError(f"bad factor {part!r}")
        return cls(tuple(out))

    def replace(self, i: int, factor) -> "BoxFamily":
        fs = list(self.factors)
        fs[i] = frozenset(factor)
        return BoxFamily(tuple(fs))

    def codes(self) -> set:
        return set(itertools.product(*[sorted(f) for f in self.factors]))

    def __str__(self) -> str:
        return ",".join("".join(str(b) for b in sorted(f)) or "-" for f in self.factors)


def all_boxes(m: int):
    for fs in itertools.product(ALL_FACTORS, repeat=m):
        yield BoxFamily(fs)


# ----------------------------------------------------------------------------
# valuations
# ----------------------------------------------------------------------------


_MASK_WEIGHT = tuple(sum(_WEIGHT[b] for b in range(3) if (mk >> b) & 1) for mk in range(8))
_M_FULL, _M_LOW, _M_ZERO, _M_ONE, _M_TWO = 7, 3, 1, 2, 4


def valuation_product(box: BoxFamily) -> int:
    """Product over factors of the summed digit weights (+1, -1, +1 for 0, 1, 2)."""
    return _product(box.masks)


def _product(masks) -> int:
    d = 1
    for mk in masks:
        d *= _MASK_WEIGHT[mk]
    return d


def valuation_recursive(box: BoxFamily) -> int:
    """``d`` from additivity, (R1) and (R2) alone."""
    return _val(box.masks)


@lru_cache(maxsize=None)
def _val(ms: tuple) -> int:
    # factors are bit masks: bit b set when digit b is in the factor
    if 0 in ms:
        return 0
    # two-element factors other than {0,1}: split into singletons
    for i, mk in enumerate(ms):
        if mk in (5, 6):
            return sum(_val(_put(ms, i, 1 << b)) for b in range(3) if (mk >> b) & 1)
    # a {1} factor: {0,1,2} = {0} u {1} u {2}
    for i, mk in enumerate(ms):
        if mk == _M_ONE:
            return _val(_put(ms, i, _M_FULL)) - _val(_put(ms, i, _M_ZERO)) - _val(_put(ms, i, _M_TWO))
    # a {2} factor: {0,1,2} = {0,1} u {2}
    for i, mk in enumerate(ms):
        if mk == _M_TWO:
            return _val(_put(ms, i, _M_FULL)) - _val(_put(ms, i, _M_LOW))
    # only {0}, {0,1}, {0,1,2} remain
    return 0 if _M_LOW in ms else 1


def exhaustive_agreement(m: int) -> list:
    """Boxes (as mask tuples) over ``m`` factors where recursion and product disagree."""
    return [ms for ms in itertools.product(range(8), repeat=m) if _val(ms) != _product(ms)]


def _put(ms: tuple, i: int, mk: int) -> tuple:
    return ms[:i] + (mk,) + ms[i + 1 :]


# ----------------------------------------------------------------------------
# degrees of the atomic and the Omega boxes
# ----------------------------------------------------------------------------


def _check_sets(I, J, m):
    I, J = frozenset(I), frozenset(J)
    if I & J:
        raise OverlappingIndexSets(f"I and J share {sorted(I & J)}")
    if any(not 1 <= i <= m for i in I | J):
        raise ValueError(f"indices must lie in 1..{m}")
    return I, J


def lambda_box(I, J, m: int) -> BoxFamily:
    """``{0}`` off ``I u J``, ``{1}`` on ``I``, ``{2}`` on ``J`` (indices 1-based)."""
    I, J = _check_sets(I, J, m)
    return BoxFamily(tuple(ONE if i in I else TWO if i in J else ZERO for i in range(1, m + 1)))


def omega_box(I, J, m: int) -> BoxFamily:
    """``{0}`` off ``I u J``, ``{0,1}`` on ``I``, ``{0,1,2}`` on ``J``."""
    I, J = _check_sets(I, J, m)
    return BoxFamily(tuple(LOW if i in I else FULL if i in J else ZERO for i in range(1, m + 1)))


def omega_degree(I, J, m: int) -> int:
    _check_sets(I, J, m)
    return 0 if I else 1


def lambda_degree(I, J, m: int) -> int:
    """Degree of the atomic box for ``(I, J)`` by the factor-splitting recursion."""
    I, J = _check_sets(I, J, m)
    return _val(_atom_masks(I, J, m))


def _atom_masks(I, J, m: int) -> tuple:
    return tuple(_M_ONE if i in I else _M_TWO if i in J else _M_ZERO for i in range(1, m + 1))


def atoms_of_omega(I, J) -> list:
    """All ``(L, K)`` with ``L`` inside ``I u J``, ``K`` inside ``J`` and ``L``, ``K`` disjoint."""
    I, J = frozenset(I), frozenset(J)
    out = []
    for K in _subsets(J):
        for L in _subsets((I | J) - K):
            out.append((L, K))
    return out


def lambda_degree_induction(I, J, m: int) -> int:
    """Degree of the atomic box by inclusion-exclusion inside its Omega box.

    Induction runs over ``#L + (m+1) #K``: every proper atom of the Omega
    box has a smaller index, so its degree is already known.
    """
    I, J = _check_sets(I, J, m)
    return _induct(I, J, m)


@lru_cache(maxsize=None)
def _induct(I: frozenset, J: frozenset, m: int) -> int:
    if not I and not J:
        return 1
    rest = sum(_induct(L, K, m) for L, K in atoms_of_omega(I, J) if (L, K) != (I, J))
    return omega_degree(I, J, m) - rest


@dataclass
class InclusionExclusionReport:
    I: frozenset
    J: frozenset
    m: int
    atoms: list
    partition_ok: bool
    degree_sum: int
    omega_degree: int

    @property
    def ok(self) -> bool:
        return self.partition_ok and self.degree_sum == self.omega_degree


def inclusion_exclusion_check(I, J, m: int) -> InclusionExclusionReport:
    """Atoms of the Omega box partition its codes, and their degrees add up to its degree."""
    I, J = _check_sets(I, J, m)
    atoms = atoms_of_omega(I, J)
    seen, disjoint = set(), True
    for L, K in atoms:
        code = tuple(1 if i in L else 2 if i in K else 0 for i in range(1, m + 1))
        if code in seen:
            disjoint = False
        seen.add(code)
    partition_ok = disjoint and seen == omega_box(I, J, m).codes()
    total = sum(_val(_atom_masks(L, K, m)) for L, K in atoms)
    return InclusionExclusionReport(I, J, m, atoms, partition_ok, total, omega_degree(I, J, m))


def index_pairs(m: int):
    """All ``3**m`` disjoint pairs ``(I, J)`` over ``1..m``."""
    for digits in itertools.product((0, 1, 2), repeat=m):
        yield (
            frozenset(i + 1 for i, d in enumerate(digits) if d == 1),
            frozenset(i + 1 for i, d in enumerate(digits) if d == 2),
        )


def alternating_subset_sum(S: Sequence) -> int:
    """Sum of ``(-1)**#L`` over subsets ``L`` of ``S``."""
    return sum((-1) ** len(L) for L in _subsets(frozenset(S)))


def _subsets(S: frozenset):
    items = sorted(S)
    for r in range(len(items) + 1):
        for c in itertools.combinations(items, r):
            yield frozenset(c)
