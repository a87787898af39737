import math
from fractions import Fraction

import numpy as np
import pytest

from tensorscape.calculus import gradient_matrix, hessian
from tensorscape.core import Kernel, loss
from tensorscape.families import (FAMILY_NAMES, construct, continuum_exact,
                                  continuum_sweep, family_spec,
                                  loss_formula_value, parse_family_name,
                                  verify_loss_formula)
from tensorscape.rng import make_rng
from tensorscape.symmetry import act, PermPair

KF = Kernel.frobenius()


def test_parse_family_names():
    assert parse_family_name("C5t:0.7").param == 0.7
    assert parse_family_name("Cblock:3").param == 3
    with pytest.raises(KeyError):
        parse_family_name("E8")
    with pytest.raises(ValueError):
        parse_family_name("Cblock:0")


def test_exact_loss_values():
    cases = [
        ("C0", 5, 5.0), ("C1", 5, 5.0 - 1.0 / 5), ("C4", 4, 1.5), ("C4", 3, 1.5),
        ("C5", 4, 1.0), ("C5t:0.7", 4, 1.0), ("CI", 6, 0.0), ("Cblock:2", 5, 2.0),
        ("D0", 3, 45.0), ("D1", 3, 48.0 * 3 / 5 - 36.0 / 5 - 12.0 / 15), ("DI", 5, 0.0),
    ]
    for name, d, want in cases:
        p = construct(name, d)
        assert p.loss_value == pytest.approx(want, abs=1e-9 * (1 + abs(want))), name


def test_construct_validates_dimension():
    with pytest.raises(ValueError):
        construct("C4", 2)


def test_loss_formula_ladders():
    assert verify_loss_formula("C0", range(3, 9))["verdict"] == "ExactMatch"
    assert verify_loss_formula("D1", range(3, 9))["verdict"] == "ExactMatch"
    for name in ("C2", "C3", "D2"):
        res = verify_loss_formula(name, [8, 16, 32])
        assert res["verdict"] == "AsymptoticConsistent", (name, res)


def test_loss_formula_value():
    kind, v = loss_formula_value("Cblock:3", 10)
    assert kind == "exact" and v == 3.0
    kind, v = loss_formula_value("D2", 10)
    assert kind == "o(d^(-2/3))" and v == pytest.approx(7.8)


def test_full_gradient_criticality_all_families():
    names = list(FAMILY_NAMES) + ["C5t:0.7", "C5t:-2", "Cblock:2"]
    for name in names:
        spec = parse_family_name(name)
        for d in (5, 8):
            if d < spec.min_d:
                continue
            p = construct(name, d)
            g = np.linalg.norm(gradient_matrix(spec.kernel, p.W))
            bound = 1e-10 * (1.0 + np.linalg.norm(p.W) ** 3)
            assert g <= bound, (name, d, g, bound)


def test_restricted_residuals_small():
    for name in ("C2", "C3", "D2"):
        p = construct(name, 12)
        assert p.residual <= 1e-11 * (1.0 + np.linalg.norm(p.xi))


def test_continuum_exact_members():
    for t in (Fraction(0), Fraction(7, 10), Fraction(-2), Fraction(1000), Fraction(1)):
        loss_one, grad_zero = continuum_exact(t, 5)
        assert loss_one and grad_zero


def test_continuum_sweep_unbounded_level_set():
    sweep = continuum_sweep([0.0, 0.7, -2.0, 1000.0], 4)
    assert sweep["passed"]
    # the float path loses the unit loss at large |t| -- the reason the
    # sweep uses exact field arithmetic
    big = next(r for r in sweep["rows"] if r["t"] == 1000.0)
    assert big["loss_is_one_exact"] and big["gradient_zero_exact"]


def test_c3_top_block_is_c2_one_dimension_down():
    # block decoupling: the distinguished row is exactly a unit vector
    # and the top block solves the one-smaller symmetric-diagonal system
    for d in (5, 8):
        c3 = construct("C3", d)
        c2 = construct("C2", d - 1)
        assert np.allclose(c3.W[: d - 1, : d - 1], c2.W, atol=1e-12)
        assert c3.W[d - 1, d - 1] == pytest.approx(1.0, abs=1e-13)
        assert c3.loss_value == pytest.approx(c2.loss_value, abs=1e-11)


def test_orbit_consistency_loss_and_spectrum():
    rng = make_rng(40, "orbit")
    d = 4
    for name in ("C4", "C5", "C2", "D2"):
        spec = parse_family_name(name)
        p = construct(name, d)
        base_loss = loss(spec.kernel, p.W)
        base_eigs = np.sort(np.linalg.eigvalsh(hessian(spec.kernel, p.W)))
        for _ in range(10):
            sigma = PermPair(tuple(rng.permutation(d)), tuple(rng.permutation(d)))
            Ws = act(sigma, p.W)
            assert loss(spec.kernel, Ws) == pytest.approx(base_loss, abs=1e-10 * (1 + abs(base_loss)))
            eigs = np.sort(np.linalg.eigvalsh(hessian(spec.kernel, Ws)))
            assert np.max(np.abs(eigs - base_eigs)) <= 1e-10 * (1.0 + np.max(np.abs(base_eigs)))


def test_isotropy_matches_declared_patterns():
    from tensorscape.symmetry import isotropy_group, match_pattern
    # diagonal-pattern families: brute force equals the declared pattern
    for name, d, want in [("CI", 4, "DiagSd"), ("C1", 4, "Full"), ("C0", 4, "Full"),
                          ("C2", 4, "DiagSd"), ("C3", 5, "DiagSd1"),
                          ("DI", 4, "DiagSd"), ("D2", 4, "DiagSd1"),
                          ("C5t:0.7", 4, "DiagSd11")]:
        G = isotropy_group(construct(name, d).W)
        assert match_pattern(G, d, d) == want, name
    # the two split-block exceptions where the true stabilizer exceeds
    # the diagonal pattern (independent block swaps / vanished row)
    G = isotropy_group(construct("C4", 4).W)
    assert len(G) == 4 * math.factorial(2)
    G = isotropy_group(construct("C5", 4).W)
    assert match_pattern(G, 4, 4) == "DiagSd1"
