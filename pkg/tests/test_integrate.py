import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from humps.bvp import SymbolCode, subharmonic_solve
from humps.errors import NonFiniteState
from humps.integrate import Params, bound_k, integrate_ivp, poincare_map
from humps.nonlinearity import linear, rational_square
from humps.weight import stepwise_weight

TWO_PI = 2 * math.pi


@pytest.fixture
def flat():
    # a = 1 on the first period; the negative half is never reached
    return stepwise_weight([(0, TWO_PI, 1), (TWO_PI, 2 * TWO_PI, -1)])


# ----------------------------------------------------------------------------
# linear oscillator
# ----------------------------------------------------------------------------


def test_linear_oscillator(flat):
    tr = integrate_ivp(flat, linear(), Params(1, 1), 0.0, (1.0, 0.0), TWO_PI)
    ts = np.linspace(0, TWO_PI, 401)
    u, y = tr.sample(ts)
    assert np.max(np.abs(u - np.cos(ts))) < 1e-8
    assert np.max(np.abs(y + np.sin(ts))) < 1e-8


def test_observed_order(flat):
    errs = []
    for n in (20, 40, 80, 160):
        tr = integrate_ivp(flat, linear(), Params(1, 1), 0.0, (1.0, 0.0), TWO_PI, fixed_step=TWO_PI / n)
        u, y = tr.z_end
        errs.append(abs(u - 1.0) + abs(y))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= 4.5)


def test_dense_output_second_derivative(flat):
    tr = integrate_ivp(flat, linear(), Params(1, 1), 0.0, (1.0, 0.0), 3.0)
    ts = np.linspace(0.1, 2.9, 57)
    _, _, upp = tr.sample(ts, derivs=2)
    assert np.max(np.abs(upp + np.cos(ts))) < 1e-6


def test_damping_term(flat):
    # u'' + c u' + u = 0 with u(0)=1, u'(0)=-c/2
    c = 0.4
    wd = math.sqrt(1 - c * c / 4)
    tr = integrate_ivp(flat, linear(), Params(1, 1, c), 0.0, (1.0, -c / 2), 5.0)
    ts = np.linspace(0, 5, 51)
    u, _ = tr.sample(ts)
    assert np.max(np.abs(u - np.exp(-c * ts / 2) * np.cos(wd * ts))) < 1e-8


# ----------------------------------------------------------------------------
# structure
# ----------------------------------------------------------------------------


def test_breakpoints_are_steps(steps):
    tr = integrate_ivp(steps, rational_square(), Params(20, 1e4), 0.0, (0.1, 0.5), 3.0)
    assert {1.0, 2.0, 2.5, 3.0} <= set(tr.t.tolist())


def test_zero_is_equilibrium(sine):
    z, _ = poincare_map(sine, rational_square(), Params(19, 30), (0.0, 0.0), periods=100)
    assert tuple(z) == (0.0, 0.0)


def test_monodromy_at_zero(sine):
    _, M = poincare_map(sine, rational_square(), Params(19, 30), (0.0, 0.0))
    assert np.allclose(M, [[1.0, TWO_PI], [0.0, 1.0]], atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 2.0), st.floats(-1.0, 1.0))
def test_monodromy_matches_finite_differences(u0, y0):
    w = stepwise_weight([(0, 1, 1), (1, 2, -2), (2, 2.5, 0), (2.5, 3, 2)])
    g, p = rational_square(), Params(3, 5)
    tr = integrate_ivp(w, g, p, 0.0, (u0, y0), 3.0, variational=True)
    # tight oracle runs: step-sequence noise is about tol / h
    h, tol = 1e-4, 1e-13
    fd = np.empty((2, 2))
    for j, dz in enumerate(((h, 0.0), (0.0, h))):
        plus = integrate_ivp(w, g, p, 0.0, (u0 + dz[0], y0 + dz[1]), 3.0, rtol=tol, atol=tol).z_end
        minus = integrate_ivp(w, g, p, 0.0, (u0 - dz[0], y0 - dz[1]), 3.0, rtol=tol, atol=tol).z_end
        fd[:, j] = (np.array(plus) - np.array(minus)) / (2 * h)
    assert np.allclose(tr.monodromy, fd, rtol=1e-5, atol=1e-6)


def test_nonfinite_start(flat):
    with pytest.raises(NonFiniteState):
        integrate_ivp(flat, linear(), Params(1, 1), 0.0, (math.nan, 0.0), 1.0)


def test_reversed_interval(flat):
    with pytest.raises(ValueError):
        integrate_ivp(flat, linear(), Params(1, 1), 1.0, (1.0, 0.0), 0.0)


def test_csv_mesh(tmp_path, flat):
    tr = integrate_ivp(flat, linear(), Params(1, 1), 0.0, (1.0, 0.0), 1.0)
    path = tmp_path / "traj.csv"
    tr.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,u,y"
    assert len(lines) - 1 >= 1000


# ----------------------------------------------------------------------------
# Poincare map
# ----------------------------------------------------------------------------


def test_periodic_point_is_fixed(sine):
    g, p = rational_square(), Params(19, 30)
    e = subharmonic_solve(sine, g, p, SymbolCode.parse("1"), 1)
    z, _ = poincare_map(sine, g, p, e.z0)
    assert np.max(np.abs(np.array(z) - np.array(e.z0))) < 1e-8


def test_bound_k_positive(sine):
    K = bound_k(sine, rational_square(), Params(19, 30), 10.0)
    assert K > 0 and math.isfinite(K)
