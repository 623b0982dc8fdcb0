
import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from humps.errors import NonPositiveInput
from humps.nonlinearity import (
    arctan_cube,
    g_lower,
    g_star,
    gamma_env,
    linear,
    make_nonlinearity,
    power_blend,
    rational_square,
    ratio_min,
    tabulated,
    zeta,
)

KERNELS = [rational_square(), arctan_cube(), power_blend(2.5, 0.5)]

# ----------------------------------------------------------------------------
# kernels
# ----------------------------------------------------------------------------


@pytest.mark.parametrize("g", KERNELS, ids=lambda g: g.kind)
def test_zero_extension_and_positivity(g):
    assert g(0.0) == 0.0
    assert g(-3.0) == 0.0
    assert all(g(s) > 0 for s in (1e-3, 0.5, 7.0, 1e4))


@pytest.mark.parametrize("g", KERNELS, ids=lambda g: g.kind)
def test_limits_hold(g):
    assert g.check_limits() == []


def test_linear_violates_limits():
    g = linear()
    assert g(-2.0) == -2.0
    with pytest.warns(UserWarning):
        assert len(g.check_limits()) == 2


@pytest.mark.parametrize("g", KERNELS, ids=lambda g: g.kind)
def test_derivative_matches_finite_difference(g):
    for s in (0.3, 1.0, 2.7):
        h = 1e-6
        fd = (g(s + h) - g(s - h)) / (2 * h)
        assert g.dg(s) == pytest.approx(fd, rel=1e-7)


def test_make_nonlinearity():
    assert make_nonlinearity("power_blend", alpha=2, beta=0.5).params() == {"alpha": 2.0, "beta": 0.5}
    with pytest.raises(ValueError):
        make_nonlinearity("rational_square", alpha=1)
    with pytest.raises(ValueError):
        make_nonlinearity("cubic")
    with pytest.raises(ValueError):
        power_blend(0.5, 0.5)


def test_tabulated_reproduces_samples():
    s = np.linspace(0, 4, 41)
    gv = s**2 / (1 + s**2)
    g = tabulated(s, gv)
    assert g(2.0) == pytest.approx(0.8, rel=1e-12)
    assert g(10.0) == pytest.approx(gv[-1])
    with pytest.raises(ValueError):
        tabulated([0, 1], [0, 1])


# ----------------------------------------------------------------------------
# envelopes
# ----------------------------------------------------------------------------


def test_envelope_examples():
    g = rational_square()
    assert zeta(g, 0.5) == pytest.approx(0.4, rel=1e-12)
    assert g_star(g, 1.0) == pytest.approx(0.5, rel=1e-12)
    assert g_lower(g, 1.0, 2.0) == pytest.approx(0.5, rel=1e-12)
    lin = linear()
    for d in (0.1, 1.0, 30.0):
        assert zeta(lin, d) == pytest.approx(1.0)
        assert gamma_env(lin, d) == pytest.approx(1.0)


def test_envelope_input_checks():
    g = rational_square()
    with pytest.raises(NonPositiveInput):
        zeta(g, 0.0)
    with pytest.raises(NonPositiveInput):
        g_lower(g, 2.0, 1.0)


def _mp_extremum(f, lo, hi, find_max):
    # dense mpmath scan with a local findroot on the derivative
    xs = [lo + (hi - lo) * mp.mpf(j) / 400 for j in range(401)]
    vals = [f(x) for x in xs]
    best = max(vals) if find_max else min(vals)
    k = vals.index(best)
    if 0 < k < 400:
        try:
            x = mp.findroot(lambda x: mp.diff(f, x), xs[k])
            if lo <= x <= hi:
                best = max(best, f(x)) if find_max else min(best, f(x))
        except (ValueError, ZeroDivisionError):
            pass
    return best


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 20.0))
def test_zeta_gamma_against_mpmath(d):
    mp.mp.dps = 30
    ratio = lambda s: mp.atan(s**3) / s
    g = arctan_cube()
    assert zeta(g, d) == pytest.approx(float(_mp_extremum(ratio, mp.mpf(d) / 2, mp.mpf(d), True)), rel=1e-10)
    assert gamma_env(g, d) == pytest.approx(float(_mp_extremum(ratio, mp.mpf(d) / 2, mp.mpf(d), False)), rel=1e-10)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.01, 50.0), st.floats(1.01, 5.0))
def test_envelope_ordering(d, f):
    g = rational_square()
    assert gamma_env(g, d) <= zeta(g, d)
    assert g_lower(g, d, f * d) <= g(d) <= g_star(g, d)
    assert ratio_min(g, d / 2, d) == pytest.approx(gamma_env(g, d))
