import math

import mpmath as mp
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from humps.errors import InvalidSignPattern
from humps.weight import ConstantPiece, Weight, make_piece, sine_piece, sine_weight, stepwise_weight

# ----------------------------------------------------------------------------
# evaluation
# ----------------------------------------------------------------------------


def test_evaluate_sine(sine):
    assert sine.evaluate(math.pi / 2, 3, 10) == pytest.approx(3.0, abs=1e-15)
    assert sine.evaluate(3 * math.pi / 2, 3, 10) == pytest.approx(-10.0, abs=1e-15)


@settings(max_examples=100, deadline=None)
@given(st.floats(-20, 20), st.integers(-3, 3))
def test_periodicity(t, k):
    w = sine_weight()
    assert w.a(t + k * w.T) == pytest.approx(w.a(t), abs=1e-12)


def test_steps_evaluate(steps):
    assert steps.evaluate(0.5, 20, 1e4) == 20
    assert steps.evaluate(1.5, 20, 1e4) == -2e4
    assert steps.evaluate(2.2, 20, 1e4) == 0
    assert steps.evaluate(2.7, 20, 1e4) == 40


def test_breakpoints_include_steps(steps):
    assert steps.breakpoints() == [0.0, 1.0, 2.0, 2.5, 3.0]


# ----------------------------------------------------------------------------
# decomposition
# ----------------------------------------------------------------------------


def test_sine_decomposition(sine):
    d = sine.decomposition
    assert d.plus == ((0.0, math.pi),)
    assert d.minus[0][0] == pytest.approx(math.pi)
    assert d.minus[0][1] == pytest.approx(2 * math.pi)
    assert d.m == 1


def test_plateau_joins_positive_hump(steps):
    d = steps.decomposition
    assert d.plus == ((0.0, 1.0), (2.0, 3.0))
    assert d.minus == ((1.0, 2.0), None)
    assert d.head is None


def test_three_hump_window():
    w = sine_weight(3 * math.pi, periodic=False)
    d = w.decomposition
    assert d.m == 2
    assert d.plus[1][0] == pytest.approx(2 * math.pi)
    assert d.minus[1] is None


def test_negative_head():
    w = stepwise_weight([(0, 1, -1), (1, 2, 1), (2, 3, -1)])
    d = w.decomposition
    assert d.head == (0.0, 1.0)
    assert d.plus == ((1.0, 2.0),)


def test_single_sign_rejected():
    with pytest.raises(InvalidSignPattern):
        stepwise_weight([(0, 1, 1), (1, 2, 3)])
    with pytest.raises(InvalidSignPattern):
        stepwise_weight([(0, 1, 1), (1, 1, -1)])


def test_pieces_must_be_contiguous():
    with pytest.raises(InvalidSignPattern):
        Weight([(0, 1, ConstantPiece(1.0)), (1.5, 2, ConstantPiece(-1.0))])


def test_make_piece_validation():
    assert make_piece("const", value=2).value == 2.0
    with pytest.raises(ValueError):
        make_piece("const", value=1, extra=2)
    with pytest.raises(ValueError):
        make_piece("cosine")
    with pytest.raises(ValueError):
        sine_piece(omega=0.0)


# ----------------------------------------------------------------------------
# integrals against closed forms and mpmath quadrature
# ----------------------------------------------------------------------------


def test_sine_integrals(sine):
    wi = sine.integrals()
    assert wi.norm_plus[0] == pytest.approx(2.0, rel=1e-12)
    assert wi.norm_minus[0] == pytest.approx(2.0, rel=1e-12)
    assert wi.norm_A[0] == pytest.approx(math.pi, rel=1e-12)
    for t in (3.5, 4.0, 5.5):
        assert wi.A(0, t) == pytest.approx(1 + math.cos(t), rel=1e-12)
        assert wi.B(0, t) == pytest.approx(1 - math.cos(t), rel=1e-12)


def test_steps_integrals(steps):
    wi = steps.integrals()
    assert wi.norm_minus[0] == 2.0
    assert wi.norm_plus == [1.0, 1.0]
    assert wi.norm_A[0] == pytest.approx(1.0)
    assert wi.int_A(0, 0.5) == pytest.approx(0.25)


def test_shifted_sine_against_mpmath():
    w = Weight([(0.0, 2 * math.pi, sine_piece(1.7, 1.0, 0.4))], periodic=True)
    wi = w.integrals()
    lo, hi = w.decomposition.minus[0]
    f = lambda x: max(-1.7 * mp.sin(x + 0.4), 0)
    exact = mp.quad(lambda x: (hi - x) * f(x), [lo, hi])
    assert wi.norm_A[0] == pytest.approx(float(exact), rel=1e-10)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.0, 2 * math.pi), st.floats(0.0, 2 * math.pi), st.floats(0.0, 2 * math.pi))
def test_moment_additivity(a, b, c):
    w = sine_weight()
    a, b, c = sorted((a, b, c))
    for part in (1, -1):
        whole = w.moment(a, c, part)
        assert whole == pytest.approx(w.moment(a, b, part) + w.moment(b, c, part), abs=1e-11)
