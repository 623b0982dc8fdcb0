import dataclasses
import math

import numpy as np
import pytest

from humps.bvp import (
    SymbolCode,
    Windows,
    all_codes,
    build_atlas,
    bvp_window,
    classify_maxima,
    humps_in,
    infer_windows,
    reintegrate,
    shooting_nodes,
    solve_code,
    subharmonic_solve,
    sup_distance,
    validate_solution,
)
from humps.errors import AboveR, NoConvergence, OnBoundary
from humps.integrate import Params
from humps.nonlinearity import rational_square
from humps.symbolic import semiconjugation_check, translated_maxima
from humps.weight import sine_weight


@pytest.fixture(scope="module")
def three():
    w = sine_weight(3 * math.pi, periodic=False)
    p = Params(3, 10)
    return w, p, build_atlas(w, rational_square(), p, "dirichlet")


@pytest.fixture(scope="module")
def periodic_one():
    w = sine_weight()
    p = Params(19, 30)
    e = subharmonic_solve(w, rational_square(), p, SymbolCode.parse("1"), 1)
    return w, p, e


# ----------------------------------------------------------------------------
# codes and windows
# ----------------------------------------------------------------------------


def test_code_parse_and_str():
    assert str(SymbolCode.parse("(1,0,2)")) == "102"
    assert SymbolCode.parse("000").nonzero is False
    with pytest.raises(ValueError):
        SymbolCode((3,))


def test_code_shift():
    assert str(SymbolCode.parse("1200").shifted(1, 2)) == "0012"


def test_all_codes():
    assert len(all_codes(2)) == 8
    assert len(all_codes(3)) == 26


def test_classify_examples():
    wdw = Windows(0.1, 1.0, 10.0)
    assert str(classify_maxima([0.05, 0.5, 5.0], wdw)) == "012"
    with pytest.raises(OnBoundary):
        classify_maxima([1.0], wdw)
    with pytest.raises(AboveR):
        classify_maxima([12.0], wdw)


def test_windows_order():
    with pytest.raises(ValueError):
        Windows(1.0, 0.5, 2.0)


def test_infer_windows_separates():
    wdw = infer_windows([(SymbolCode.parse("12"), (0.1, 4.0)), (SymbolCode.parse("01"), (0.001, 0.2))])
    assert 0.001 < wdw.r < 0.1 and 0.2 < wdw.rho < 4.0 and wdw.R > 4.0


def test_infer_windows_overlap():
    assert infer_windows([(SymbolCode.parse("12"), (3.0, 2.0))]) is None


def test_geometry(sine):
    a, b = bvp_window(sine, "periodic", 2)
    assert b - a == pytest.approx(4 * math.pi)
    assert len(humps_in(sine, a, b)) == 2
    nodes = shooting_nodes(sine, a, b, 0.5)
    assert np.all(np.diff(nodes) <= 0.5 + 1e-12)
    with pytest.raises(ValueError):
        bvp_window(sine, "dirichlet", 2)


# ----------------------------------------------------------------------------
# solving
# ----------------------------------------------------------------------------


def test_atlas_complete(three):
    _, _, at = three
    assert at.misses == []
    assert sorted(at.codes, key=lambda c: c.digits) == all_codes(2)


def test_entries_validate(three):
    _, p, at = three
    for e in at.entries:
        rep = validate_solution(e, p, at.windows)
        assert rep.ok, (e.code, rep.flags)
        _, res = reintegrate(e, p)
        assert res < 1e-8


def test_entries_pairwise_distinct(three):
    _, _, at = three
    es = at.entries
    for i in range(len(es)):
        for j in range(i):
            assert sup_distance(es[i], es[j]) > 1e-3


def test_scaled_solution_fails(three):
    _, p, at = three
    e = at.entries[-1]
    tr = e.trajectory
    fake = dataclasses.replace(tr, u=2 * tr.u, y=2 * tr.y, d2a=2 * tr.d2a, d2b=2 * tr.d2b)
    bad = dataclasses.replace(e, trajectory=fake)
    assert not validate_solution(bad, p, at.windows).ok


def test_zero_code_rejected():
    w = sine_weight(3 * math.pi, periodic=False)
    with pytest.raises(ValueError):
        solve_code(w, rational_square(), Params(3, 10), "dirichlet", SymbolCode.parse("000"))


def test_wrong_length_rejected():
    w = sine_weight(3 * math.pi, periodic=False)
    with pytest.raises(ValueError):
        solve_code(w, rational_square(), Params(3, 10), "dirichlet", SymbolCode.parse("1"))


def test_wrong_window_misses():
    w = sine_weight(3 * math.pi, periodic=False)
    # every hump is far below r, so code 22 cannot be realised inside the window
    with pytest.raises(NoConvergence):
        solve_code(w, rational_square(), Params(3, 10), "dirichlet", SymbolCode.parse("22"),
                   windows=Windows(1e3, 1e4, 1e5), attempts=1)


# ----------------------------------------------------------------------------
# subharmonics
# ----------------------------------------------------------------------------


def test_unrolled_code_matches_period_one(periodic_one):
    w, p, e1 = periodic_one
    e2 = subharmonic_solve(w, rational_square(), p, SymbolCode.parse("11"), 2)
    assert e2.hump_maxima == pytest.approx(e1.hump_maxima * 2, rel=1e-8)


def test_translate_of_periodic(periodic_one):
    w, _, e = periodic_one
    assert translated_maxima(e, w, 1) == pytest.approx(e.hump_maxima, rel=1e-10)


def test_commutation_period_one(periodic_one):
    w, p, e = periodic_one
    wdw = Windows(0.001, 1.0, 955.0)
    rep = semiconjugation_check([e], 1, wdw, p)
    assert rep.ok
    assert rep.rows[0].fixed_point_residual < 1e-8


def test_subharmonic_needs_periodic():
    w = sine_weight(2 * math.pi, periodic=False)
    with pytest.raises(ValueError):
        subharmonic_solve(w, rational_square(), Params(19, 30), SymbolCode.parse("12"), 2)
