"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``[criterion N] PASS|FAIL: ...`` line (shown even
under output capture) and then asserts.
"""

import math
import time

import mpmath as mp
import numpy as np
import pytest

from humps.bvp import SymbolCode, Windows, all_codes, build_atlas, continue_in_mu, solve_code, subharmonic_solve
from humps.bvp import classify_maxima, reintegrate, sup_distance, validate_solution
from humps.degcomb import (
    exhaustive_agreement,
    inclusion_exclusion_check,
    index_pairs,
    lambda_degree,
    lambda_degree_induction,
)
from humps.errors import NoConvergence
from humps.integrate import Params, integrate_ivp, poincare_map
from humps.nonlinearity import arctan_cube, linear, rational_square
from humps.radial import AnnulusProblem, lift_solution, lifted_maxima, radial_residual, reduce
from humps.symbolic import divisors, lyndon_count, lyndon_enumerate, semiconjugation_check
from humps.thresholds import admissible_rr, certify, mu_thresholds
from humps.weight import sine_piece, sine_weight, stepwise_weight

from oracles import KERNELS, Oracle

STEPS = [(0, 1, 1), (1, 2, -2), (2, 2.5, 0), (2.5, 3, 2)]


def report(capsys, n, ok, detail):
    with capsys.disabled():
        print(f"\n[criterion {n}] {'PASS' if ok else 'FAIL'}: {detail}")


# ----------------------------------------------------------------------------
# 1: three-hump sine atlas
# ----------------------------------------------------------------------------


def test_criterion_1_sine_atlas(capsys):
    w = sine_weight(3 * math.pi, periodic=False)
    p = Params(3, 10)
    t0 = time.process_time()
    at = build_atlas(w, rational_square(), p, "dirichlet")
    elapsed = time.process_time() - t0
    es = at.entries
    codes = sorted(str(e.code) for e in es)
    want = sorted(str(c) for c in all_codes(2))
    dist = min(sup_distance(a, b) for i, a in enumerate(es) for b in es[:i])
    bc = max(e.bc_residual for e in es)
    reint = max(reintegrate(e, p)[1] for e in es)
    valid = all(validate_solution(e, p, at.windows).ok for e in es)
    ok = codes == want and dist > 1e-3 and bc < 1e-8 and reint < 1e-8 and valid and elapsed < 60
    report(
        capsys, 1, ok,
        f"{len(es)} codes {' '.join(codes)}, min sup-distance {dist:.3g}, bc residual {bc:.2g}, "
        f"reintegration {reint:.2g}, windows ({at.windows.r:.3g}, {at.windows.rho:.3g}, {at.windows.R:.3g}), "
        f"{elapsed:.1f} s",
    )
    assert ok


# ----------------------------------------------------------------------------
# 2: stepwise weight, decay on the negativity interval
# ----------------------------------------------------------------------------


def test_criterion_2_stepwise_decay(capsys):
    w, g = stepwise_weight(STEPS), arctan_cube()
    sups, ratio = [], None
    for mu in (1e2, 1e3, 1e4):
        e = solve_code(w, g, Params(20, mu), "dirichlet", SymbolCode.parse("12"))
        tr = e.trajectory
        sups.append(tr.max_on(1.0, 2.0))
        ratio = sups[-1] / tr.max_on(2.0, 3.0)
    decreasing = all(a > b for a, b in zip(sups, sups[1:]))
    ok = ratio < 0.05 and decreasing
    report(
        capsys, 2, ok,
        f"code 12 at mu=1e4 exists; sup[1,2]/max[2,3] = {ratio:.4f} (need < 0.05); "
        f"sup[1,2] over mu=1e2,1e3,1e4: {', '.join(f'{s:.4g}' for s in sups)} "
        f"({'strictly decreasing' if decreasing else 'NOT decreasing'})",
    )
    assert ok


# ----------------------------------------------------------------------------
# 3: Lyndon counts
# ----------------------------------------------------------------------------


def test_criterion_3_lyndon(capsys):
    counts = [lyndon_count(3, k) for k in range(2, 11)]
    table = counts == [3, 8, 18, 48, 116, 312, 810, 2184, 5880]
    enum = all(len(lyndon_enumerate(n, k)) == lyndon_count(n, k) for n in (2, 3, 9) for k in range(1, 9))
    necklace = all(
        sum(d * lyndon_count(n, d) for d in divisors(K)) == n**K for n in (2, 3, 9, 26) for K in range(1, 13)
    )
    ok = table and enum and necklace
    report(capsys, 3, ok, f"counts {counts}, enumeration {'ok' if enum else 'BAD'}, necklace {'ok' if necklace else 'BAD'}")
    assert ok


# ----------------------------------------------------------------------------
# 4: degree calculus
# ----------------------------------------------------------------------------


def test_criterion_4_degrees(capsys):
    from humps.degcomb import _induct, _val

    _val.cache_clear()
    _induct.cache_clear()
    t0 = time.perf_counter()
    bad, pairs = [], 0
    for m in range(1, 7):
        bad += exhaustive_agreement(m)
        for I, J in index_pairs(m):
            pairs += 1
            d = lambda_degree(I, J, m)
            if not d == (-1) ** len(I) == lambda_degree_induction(I, J, m):
                bad.append((I, J))
            if not inclusion_exclusion_check(I, J, m).ok:
                bad.append(("omega", I, J))
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < 5
    report(capsys, 4, ok, f"{pairs} index pairs and all 8^m boxes for m <= 6, {len(bad)} disagreements, {elapsed:.2f} s")
    assert ok


# ----------------------------------------------------------------------------
# 5: threshold constants
# ----------------------------------------------------------------------------


def _worst(ps, want):
    worst = 0.0
    for name, got_list in (
        ("hat", ps.mu_hat),
        ("check", ps.mu_check),
        ("tilde", ps.mu_tilde),
        ("bar", ps.mu_bar),
        ("splus", ps.mu_star_plus),
        ("sminus", ps.mu_star_minus),
    ):
        for got, exp in zip(got_list, want[name]):
            if exp is None:
                worst = max(worst, 0.0 if math.isnan(got) else math.inf)
            else:
                worst = max(worst, abs(got - float(exp)) / abs(float(exp)))
    return worst


def test_criterion_5_thresholds(capsys):
    sine = sine_weight()
    g, gm = KERNELS["rational_square"]
    lam = 31.0
    r, R = admissible_rr(sine, g, lam, 1.0)
    rel_sine = _worst(
        mu_thresholds(sine, g, lam, 1.0, r, R),
        Oracle(lambda x: mp.sin(x), [(0, mp.pi)], [(mp.pi, 2 * mp.pi)], True, gm).thresholds(lam, r, R),
    )

    def a(x):
        return mp.mpf(1) if x < 1 else mp.mpf(-2) if x < 2 else mp.mpf(0) if x < 2.5 else mp.mpf(2)

    g2, gm2 = KERNELS["arctan_cube"]
    rel_steps = _worst(
        mu_thresholds(stepwise_weight(STEPS), g2, 20.0, 1.0, 0.05, 40.0),
        Oracle(a, [(0, 1), (2, 3)], [(1, 2), None], False, gm2, cuts=(1, 2, 2.5)).thresholds(20.0, 0.05, 40.0),
    )
    ints = sine.integrals()
    closed = max(
        abs(ints.norm_plus[0] - 2),
        abs(ints.norm_minus[0] - 2),
        abs(ints.norm_A[0] - math.pi) / math.pi,
        abs(certify(sine, g, 19.0, 1.0).mu_sharp - 19.0) / 19.0,
    )
    ok = rel_sine <= 1e-10 and rel_steps <= 1e-10 and closed <= 1e-12
    report(
        capsys, 5, ok,
        f"max relative error vs 40-digit oracle: sine {rel_sine:.2g}, stepwise {rel_steps:.2g}; "
        f"sine closed forms {closed:.2g}",
    )
    assert ok


# ----------------------------------------------------------------------------
# 6: integrator order and equilibrium
# ----------------------------------------------------------------------------


def test_criterion_6_integrator(capsys):
    two_pi = 2 * math.pi
    w = stepwise_weight([(0, two_pi, 1), (two_pi, 2 * two_pi, -1)])
    errs = []
    for n in (20, 40, 80, 160):
        u, y = integrate_ivp(w, linear(), Params(1, 1), 0.0, (1.0, 0.0), two_pi, fixed_step=two_pi / n).z_end
        errs.append(abs(u - 1) + abs(y))
    order = float(np.min(np.log2(np.array(errs[:-1]) / np.array(errs[1:]))))
    z, _ = poincare_map(sine_weight(), rational_square(), Params(19, 30), (0.0, 0.0), periods=100)
    drift = max(abs(z[0]), abs(z[1]))
    ok = order >= 4.5 and drift == 0.0
    report(capsys, 6, ok, f"observed order {order:.3f}, drift of (0,0) over 100 periods {drift:.2g}")
    assert ok


# ----------------------------------------------------------------------------
# 7: subharmonics at certified parameters
# ----------------------------------------------------------------------------

SUB_START_MU = 1e4
SUB_BUDGET = 90.0


def _translate_gap(e12, e21, T, n=4001):
    a, span = e21.trajectory.t0, e21.trajectory.t1 - e21.trajectory.t0
    ts = np.linspace(a, a + span, n)
    shifted = a + np.mod(ts - a + T, span)
    return float(np.max(np.abs(e12.trajectory.sample(shifted)[0] - e21.trajectory.sample(ts)[0])))


def _psi2(e, p):
    tr = e.trajectory
    z, _ = poincare_map(tr.weight, tr.g, p, e.z0, periods=2)
    return float(np.max(np.abs(np.array(z) - np.array(e.z0))))


def test_criterion_7_subharmonics(capsys):
    w, g = sine_weight(), rational_square()
    lam = 19.0
    ps = certify(w, g, lam, 1.0)
    win = Windows(ps.r, ps.rho, ps.R)
    target = Params(lam, ps.mu_star)
    codes = [SymbolCode.parse("12"), SymbolCode.parse("21")]

    # solutions at a moderate mu, then continuation towards the certified mu
    start = [subharmonic_solve(w, g, Params(lam, SUB_START_MU), c, 2, windows=win) for c in codes]
    reached, final = [], []
    for e in start:
        try:
            got = continue_in_mu(w, g, target, "periodic", e, k=2, windows=win, time_budget=SUB_BUDGET)
        except NoConvergence as exc:
            got = exc.partial
        final.append(got)
        reached.append(got.trajectory.params.mu)
    at_target = all(mu == ps.mu_star for mu in reached)

    # remaining clauses at the largest mu where both codes are available
    e12, e21 = final if reached[0] == reached[1] else start
    p_hi = e12.trajectory.params
    gap = _translate_gap(e12, e21, w.T)
    rep = semiconjugation_check([e12, e21], 2, win, p_hi)
    commutes = all(r.commutes for r in rep.rows)
    psi = max(_psi2(e12, p_hi), _psi2(e21, p_hi))
    closure = max(e12.bc_residual, e21.bc_residual)
    ok = at_target and gap < 1e-6 and commutes and psi < 1e-7
    report(
        capsys, 7, ok,
        f"certified lambda={lam:g}, mu*={ps.mu_star:.4g}; continuation from mu={SUB_START_MU:g} "
        f"reached mu={', '.join(f'{m:.4g}' for m in reached)} in {SUB_BUDGET:g} s per code; "
        f"at mu={p_hi.mu:.4g}: translate gap {gap:.2g}, commutation {'ok' if commutes else 'FAILED'}, "
        f"single-shot Psi^2 residual {psi:.3g}, multiple-shooting closure {closure:.2g}",
    )
    assert ok


# ----------------------------------------------------------------------------
# 8: radial equivalence
# ----------------------------------------------------------------------------


@pytest.mark.parametrize("N", [2, 3])
def test_criterion_8_radial(capsys, N):
    omega = 2 * math.pi / (math.e - 1)
    ap = AnnulusProblem(N, 1.0, math.e, ((1.0, math.e, sine_piece(1.0, omega, -omega)),), rational_square())
    w, _ = reduce(ap)
    p = Params(60, 100)
    at = build_atlas(w, ap.g, p, "dirichlet")
    worst, lifted_codes = 0.0, []
    for e in at.entries:
        prof = lift_solution(e.trajectory, ap)
        worst = max(worst, radial_residual(prof, ap, p))
        lifted_codes.append(str(classify_maxima(lifted_maxima(prof, ap, w), at.windows)))
    codes = sorted(str(c) for c in at.codes)
    ok = bool(at.entries) and worst < 1e-6 and sorted(lifted_codes) == codes
    report(
        capsys, 8, ok,
        f"N={N}: reduced codes {codes}, lifted codes {sorted(lifted_codes)}, max radial residual {worst:.2g}",
    )
    assert ok
