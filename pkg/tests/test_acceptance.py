"""Acceptance suite: one test per criterion, each printing a PASS/FAIL
line (to the real stdout, visible regardless of capture).

Two sub-clauses are implemented faithfully and marked xfail(strict)
because they are numerically unattainable as stated; each prints its
honest measurement plus the verified replacement statement:

* criterion 2, identity family under the cubic-Gaussian norm: the two
  large eigenvalue clusters are the exact roots of
  x^2 - (18d+288)x + 1944(d+4), which reach the asymptotic table values
  18d+180 and 108 only to O(1/d) (they differ by ~58 at d = 4); the
  exact closed form is verified to 1e-12 instead.
* criterion 3, split-pattern Gauss family: the d^(2/3)-scaled deviation
  from the table entries rises from d=8 to d=16 before decreasing (the
  table's large clusters carry the same big-constant corrections as the
  identity family); strict decrease holds from d = 16 on and is
  verified on {16, 32, 64}.
"""

import itertools
import sys
import time
from fractions import Fraction

import numpy as np
import pytest

from tensorscape import families, puiseux, radial, spectra
from tensorscape.calculus import (fd_check_gradient, fd_check_hessian,
                                  gradient, gradient_matrix)
from tensorscape.core import Kernel, loss, loss_dense_oracle
from tensorscape.rng import make_rng
from tensorscape.symbolic import (parse_poly, poly_ring,
                                  symbolic_restricted_gradient,
                                  symbolic_restricted_loss)
from tensorscape.symmetry import PermPair, act, act_vector

F = Fraction
KF = Kernel.frobenius()
KG = Kernel.gauss()


def emit(num: int, ok: bool, text: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {num}: {text}",
          file=sys.__stdout__, flush=True)


def test_criterion_1_exact_loss_table():
    t0 = time.time()
    checks = []
    for d in range(3, 9):
        checks.append(("C0", d, float(d)))
        checks.append(("C1", d, d - 1.0 / d))
        checks.append(("C4", d, 1.5))
        for t in (0.0, 0.7, -2.0, 1000.0):
            checks.append((f"C5t:{t}", d, 1.0))
        checks.append(("CI", d, 0.0))
        for i in (1, 2):
            if d > i:
                checks.append((f"Cblock:{i}", d, float(i)))
        checks.append(("D0", d, 15.0 * d))
        checks.append(("D1", d, 48.0 * d / 5 - 36.0 / 5 - 12.0 / (5.0 * d)))
        checks.append(("DI", d, 0.0))
    worst = 0.0
    for name, d, want in checks:
        got = families.construct(name, d).loss_value
        worst = max(worst, abs(got - want) / (1.0 + abs(want)))
    elapsed = time.time() - t0
    ok = worst <= 1e-9 and elapsed < 10.0
    emit(1, ok, f"exact loss table over d=3..8 ({len(checks)} checks, "
                f"worst rel dev {worst:.2e}, {elapsed:.1f}s)")
    assert worst <= 1e-9
    assert elapsed < 10.0


def test_criterion_2_exact_spectra():
    t0 = time.time()
    ok = True
    for name in ("CI", "C0", "C4", "C5"):
        res = spectra.compare_ladder(name, list(range(3, 11)))
        ok = ok and res["verdict"] == "ExactMatch"
    # the identity family under the Gauss norm: exact closed form
    # (quadratic eigenvalue pair) matches to 1e-12
    for d in range(4, 11):
        rep = spectra.spectrum_of_family("DI", d)
        pred = spectra.predicted("DI", d)
        assert spectra.compare_exact(rep, pred, rel_tol=1e-12) == "ExactMatch"
    elapsed = time.time() - t0
    ok = ok and elapsed < 60.0
    emit(2, ok, "exact spectra (frobenius families vs tables d=3..10; "
                "gauss identity family vs its exact quadratic pair, 1e-12; "
                f"{elapsed:.1f}s) -- see also the xfail'd literal table clause")
    assert ok


@pytest.mark.xfail(strict=True, reason="spec defect: the table's identity-family "
                   "entries under the Gauss norm (18d+180, 108) are asymptotic "
                   "forms of the exact quadratic pair, off by ~289/d * d at d<=10; "
                   "no exact-in-d match exists")
def test_criterion_2_di_literal_table_clause():
    worst = 0.0
    for d in range(4, 11):
        rep = spectra.spectrum_of_family("DI", d)
        entries = sorted([(18.0 * d + 180.0, d), (108.0, d), (36.0, d * d - 2 * d)],
                         key=lambda vm: -vm[0])
        pred = spectra.PredictedSpectrum("DI", d, tuple(entries), "exact")
        dev = spectra._exact_deviation(rep, pred)
        worst = max(worst, dev)
        verdict = spectra.compare_exact(rep, pred)
        if verdict != "ExactMatch":
            emit(2, False, f"literal table clause for the gauss identity family: "
                           f"largest cluster deviation {worst:.3g} at d<={d} "
                           f"(table values are asymptotic, not exact in d)")
            assert verdict == "ExactMatch"


def test_criterion_3_asymptotic_spectra():
    t0 = time.time()
    ladder = [8, 16, 32, 64]
    ok = True
    details = []
    for name in ("C1", "C2", "C3", "D1"):
        res = spectra.compare_ladder(name, ladder)
        ok = ok and res["verdict"] == "AsymptoticConsistent"
        details.append(f"{name}:{res['verdict']}")
    # the split-pattern gauss family: strict decrease holds from d=16
    res = spectra.compare_ladder("D2", [16, 32, 64])
    ok = ok and res["verdict"] == "AsymptoticConsistent"
    details.append("D2[16..64]:" + res["verdict"])
    elapsed = time.time() - t0
    ok = ok and elapsed < 1200.0
    emit(3, ok, f"asymptotic spectra scaled deviations decrease "
                f"({'; '.join(details)}; {elapsed:.0f}s) -- "
                "see also the xfail'd D2 d=8 start point")
    assert ok


@pytest.mark.xfail(strict=True, reason="spec defect: the d^(2/3)-scaled deviation "
                   "of the split-pattern Gauss family rises 8 -> 16 (259 -> 262) "
                   "before decreasing; the table entries carry large-constant "
                   "corrections and only enter the monotone regime at d = 16")
def test_criterion_3_d2_literal_ladder_clause():
    res = spectra.compare_ladder("D2", [8, 16, 32, 64])
    scaled = [r["scaled_deviation"] for r in res["rows"]]
    emit(3, res["verdict"] == "AsymptoticConsistent",
         "literal D2 ladder {8,16,32,64}: scaled deviations "
         + ", ".join(f"{s:.1f}" for s in scaled))
    assert res["verdict"] == "AsymptoticConsistent"


def test_criterion_4_criticality_and_permutation_zeros():
    names = ["CI", "C0", "C1", "C2", "C3", "C4", "C5", "D0", "D1", "DI", "D2",
             "Cblock:1", "Cblock:2", "C5t:0.7", "C5t:-2", "C5t:1000.0"]
    worst = 0.0
    for name in names:
        spec = families.parse_family_name(name)
        for d in list(range(3, 9)) + [12, 16]:
            if d < spec.min_d:
                continue
            p = families.construct(name, d)
            if spec.name in ("C5", "C5t"):
                # exact field arithmetic: gradient identically zero
                t = 0.0 if spec.name == "C5" else float(spec.param)
                _, grad_zero = families.continuum_exact(F(t), d)
                assert grad_zero, (name, d)
                continue
            g = float(np.linalg.norm(gradient_matrix(spec.kernel, p.W)))
            bound = 1e-10 * (1.0 + float(np.linalg.norm(p.W)) ** 3)
            worst = max(worst, g / bound)
            assert g <= bound, (name, d)
    # permutation matrices have zero loss under both kernels
    worst_perm = 0.0
    for d in (3, 4, 5):
        for perm in itertools.permutations(range(d)):
            P = np.zeros((d, d))
            P[np.arange(d), perm] = 1.0
            worst_perm = max(worst_perm, abs(loss(KF, P)), abs(loss(KG, P)))
    rng = make_rng(0, "acceptance-perm")
    for d in (6, 7, 8):
        for _ in range(20):
            P = np.zeros((d, d))
            P[np.arange(d), rng.permutation(d)] = 1.0
            worst_perm = max(worst_perm, abs(loss(KF, P)), abs(loss(KG, P)))
    ok = worst_perm <= 1e-12
    emit(4, ok, f"criticality of every catalog point (worst scaled gradient "
                f"{worst:.2e} of bound; continuum members exactly zero) and "
                f"permutation-matrix losses <= {worst_perm:.1e}")
    assert ok


def test_criterion_5_puiseux_reproduction():
    t0 = time.time()
    cands, _ = puiseux.leading_exponents(
        symbolic_restricted_gradient(KF, "DiagSd"), ["x1", "x2"])
    ok = set(cands) == {(F(0), F(-3, 4)), (F(-1), F(-1))}
    cands, _ = puiseux.leading_exponents(
        symbolic_restricted_gradient(KG, "DiagSd"), ["x1", "x2"])
    ok = ok and set(cands) == {(F(0), F(-1)), (F(-1, 6), F(-2, 3)), (F(-2, 3), F(-2, 3))}

    _, _, active, series = families.catalog_branch("C3", 4)
    by = dict(zip(active, series))
    ok = ok and by["x1"].coefficient(-2) == F(-13, 3)
    ok = ok and by["x1"].coefficient(-3) == F(-77, 9)
    ok = ok and by["x1"].coefficient(-4) == F(6421, 81)
    ok = ok and by["x2"].coefficient(-2) == F(13, 3)
    ok = ok and by["x2"].coefficient(-3) == F(149, 9)
    ok = ok and by["x2"].coefficient(-4) == F(2867, 81)

    _, _, active, series = families.catalog_branch("D2", 4)
    by = dict(zip(active, series))
    ok = ok and by["x1"].coefficient(-3) == F(-5, 3) and by["x1"].coefficient(-4) == F(9)
    ok = ok and by["x2"].coefficient(-3) == F(-1) and by["x2"].coefficient(-4) == F(7)
    ok = ok and by["x3"].coefficient(-3) == F(2) and by["x3"].coefficient(-4) == F(10, 3)
    elapsed = time.time() - t0
    ok = ok and elapsed < 60.0
    emit(5, ok, f"exponent sets exact on both diagonal systems; C3 and D2 "
                f"series coefficients exact rationals through order d^-4 "
                f"({elapsed:.1f}s)")
    assert ok
    assert elapsed < 60.0


def test_criterion_6_symbolic_exactness():
    v = ("x1", "x2", "d")
    eq1 = parse_poly(
        "3*x2^5*d^3 + 15*x1*x2^4*d^2 - 15*x2^5*d^2 + 6*x1^3*x2^2*d + 12*x1^2*x2^3*d"
        " - 42*x1*x2^4*d + 24*x2^5*d + 3*x1^5 - 6*x1^3*x2^2 - 12*x1^2*x2^3 - 3*x1^2"
        " + 27*x1*x2^4 - 12*x2^5", v)
    eq2 = parse_poly(
        "3*x2^5*d^3 + 15*x1*x2^4*d^2 - 15*x2^5*d^2 + 30*x1^2*x2^3*d - 60*x1*x2^4*d"
        " + 30*x2^5*d + 3*x1^4*x2 + 12*x1^3*x2^2 - 54*x1^2*x2^3 + 60*x1*x2^4"
        " - 21*x2^5 - 3*x2^2", v)
    g = symbolic_restricted_gradient(KF, "DiagSd")
    half = F(1, 2)
    ok = (g[0] * half == eq1) and (g[1] * half == eq2)

    x1, d = poly_ring("x1", "d")
    ok = ok and symbolic_restricted_loss(KF, "Full") == x1 ** 6 * d ** 5 - 2 * x1 ** 3 * d ** 2 + d
    ok = ok and symbolic_restricted_loss(KG, "Full") == \
        15 * x1 ** 6 * d ** 5 - 18 * x1 ** 3 * (d ** 3 + F(2, 3) * d ** 2) + 15 * d
    emit(6, ok, "reference quintic system and both single-coordinate losses "
                "reproduced as exact polynomial identities")
    assert ok


def test_criterion_7_saddle_certification():
    t0 = time.time()
    ok = True
    details = []
    for d in (3, 4, 5, 6):
        res = radial.certify_saddle("C5", d, pattern="DiagSd1" if d >= 3 else None, seed=1)
        good = (res["verdict"] == "SaddleCertified"
                and abs(res["fitted_order"] - 3.0) <= 0.25)
        # deficit ~ 2 r^3
        r0 = res["rows"][0]
        good = good and abs(r0["deficit"] - 2 * r0["r"] ** 3) <= 0.2 * 2 * r0["r"] ** 3
        ok = ok and good
        details.append(f"C5(d={d}):order {res['fitted_order']:.2f}")
    for name, d in [("C0", 3), ("C0", 4), ("Cblock:1", 4), ("Cblock:2", 5)]:
        res = radial.certify_saddle(name, d, seed=1)
        ok = ok and res["verdict"] == "SaddleCertified"
    res = radial.certify_saddle("CI", 4, seed=1)
    ok = ok and res["verdict"] == "NotASaddle"
    conns = [radial.curve_connections(d) for d in (3, 4, 5, 6)]
    ok = ok and all(all(c.values()) for c in conns)
    elapsed = time.time() - t0
    ok = ok and elapsed < 300.0
    emit(7, ok, f"saddle certification ({'; '.join(details)}; zero-matrix and "
                f"block families certified, identity not a saddle; all three "
                f"curve connections hold; {elapsed:.0f}s)")
    assert ok
    assert elapsed < 300.0


def test_criterion_8_property_suites():
    rng = make_rng(0, "acceptance-properties")
    d = 4
    worst_inv = worst_eqv = 0.0
    for kernel in (KF, KG):
        for _ in range(100):
            W = rng.standard_normal((d, d))
            sigma = PermPair(tuple(rng.permutation(d)), tuple(rng.permutation(d)))
            Ws = act(sigma, W)
            lw = loss(kernel, W)
            worst_inv = max(worst_inv, abs(loss(kernel, Ws) - lw) / (1.0 + abs(lw)))
            g = gradient(kernel, W)
            dev = np.max(np.abs(gradient(kernel, Ws) - act_vector(sigma, g, d, d)))
            worst_eqv = max(worst_eqv, dev / (1.0 + np.max(np.abs(g))))
    ok = worst_inv <= 1e-10 and worst_eqv <= 1e-10

    worst_fd_g = worst_fd_h = 0.0
    for kernel in (KF, KG):
        for dd in (3, 4, 5):
            for _ in range(50):
                W = rng.standard_normal((dd, dd))
                worst_fd_g = max(worst_fd_g, fd_check_gradient(kernel, W))
            for _ in range(8):
                W = rng.standard_normal((dd, dd))
                worst_fd_h = max(worst_fd_h, fd_check_hessian(kernel, W))
    ok = ok and worst_fd_g <= 1e-5 and worst_fd_h <= 1e-4

    worst_oracle = 0.0
    for kernel in (KF, KG):
        for dd in (3, 5, 8):
            for _ in range(5):
                W = rng.standard_normal((dd, dd)) * 0.8
                a, b = loss(kernel, W), loss_dense_oracle(kernel, W)
                worst_oracle = max(worst_oracle, abs(a - b) / (1.0 + abs(a)))
    ok = ok and worst_oracle <= 1e-10

    budget_ok = True
    for name in ("CI", "C0", "C1", "C2", "C3", "C4", "C5", "D0", "D1", "DI", "D2"):
        for dd in (5, 7, 9):
            budget_ok = budget_ok and \
                spectra.predicted(name, dd).multiplicity_total() == dd * dd
            if dd == 5 and families.parse_family_name(name).min_d <= 5:
                rep = spectra.spectrum_of_family(name, 5)
                budget_ok = budget_ok and rep.multiplicity_total() == 25
    ok = ok and budget_ok
    emit(8, ok, f"invariance {worst_inv:.1e}, equivariance {worst_eqv:.1e}, "
                f"FD gradient {worst_fd_g:.1e} / Hessian {worst_fd_h:.1e}, "
                f"oracle equivalence {worst_oracle:.1e}, multiplicity budgets d^2")
    assert ok


def test_criterion_9_relation_diagnostic():
    d = 20
    names = ["CI", "C5", "C4", "C3", "C2", "C1", "C0"]
    descents = {n: radial.certified_descent_count(n, d) for n in names}
    rows = spectra.index_value_report(names, d, descents=descents)
    by = {r["family"]: r for r in rows}
    ok = abs(by["C3"]["loss_over_d"] - by["C3"]["index_over_d2"]) <= 0.3
    ok = ok and by["CI"]["loss_over_d"] == 0.0 and by["CI"]["index_over_d2"] == 0.0
    table = "; ".join(f"{r['family']}:({r['loss_over_d']:.3f},{r['index_over_d2']:.3f})"
                      for r in rows)
    # reported, not asserted: the full-scale universality claim
    emit(9, ok, f"loss-vs-index diagnostic at d=20 [{table}] -- C3 ratios agree "
                "within 0.3, identity at (0,0); universality reported, not asserted")
    assert ok
