"""The catalog of named critical-point families.

Frobenius-norm families C* and cubic-Gaussian families D*, constructed
either in closed form or by Newton-polishing a Puiseux seed on the
family's fixed-point space.  Catalog names double as the CLI strings:
CI C0 C1 C2 C3 C4 C5 D0 D1 DI D2, plus the parameterized "C5t:<t>"
continuum members and "Cblock:<i>" partial-identity saddles.

The polished coordinates always satisfy the restricted gradient system
to ~1e-13; the full-gradient criticality check (which would expose any
component transverse to the fixed-point space) is part of the
verification report, not assumed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from tensorscape import puiseux
from tensorscape.calculus import gradient_matrix
from tensorscape.core import Kernel, loss
from tensorscape.puiseux import CubeExt, PuiseuxSeries
from tensorscape.symbolic import symbolic_restricted_gradient
from tensorscape.symmetry import fixed_point_space

__all__ = [
    "FamilySpec",
    "PolishedPoint",
    "FAMILY_NAMES",
    "family_spec",
    "parse_family_name",
    "construct",
    "catalog_branch",
    "verify_loss_formula",
    "continuum_sweep",
    "continuum_exact",
    "NewtonError",
]

FAMILY_NAMES = ("CI", "C0", "C1", "C2", "C3", "C4", "C5", "D0", "D1", "DI", "D2")


class NewtonError(RuntimeError):
    pass


@dataclass(frozen=True)
class FamilySpec:
    name: str
    kernel: Kernel
    pattern: str | None
    construction: str  # "exact" | "series"
    min_d: int
    param: float | int | None = None  # t for C5t, block size for Cblock


@dataclass(frozen=True)
class PolishedPoint:
    family: str
    d: int
    W: np.ndarray
    xi: np.ndarray | None  # fixed-point coordinates when a pattern applies
    residual: float  # norm of the restricted (or full, if no pattern) gradient
    loss_value: float


_SPECS = {
    "CI": FamilySpec("CI", Kernel.frobenius(), "DiagSd", "exact", 2),
    "C0": FamilySpec("C0", Kernel.frobenius(), "Full", "exact", 2),
    "C1": FamilySpec("C1", Kernel.frobenius(), "Full", "exact", 2),
    "C2": FamilySpec("C2", Kernel.frobenius(), "DiagSd", "series", 3),
    "C3": FamilySpec("C3", Kernel.frobenius(), "DiagSd1", "series", 4),
    "C4": FamilySpec("C4", Kernel.frobenius(), "DiagSd2", "exact", 3),
    "C5": FamilySpec("C5", Kernel.frobenius(), "DiagSd11", "exact", 2),
    "D0": FamilySpec("D0", Kernel.gauss(), "Full", "exact", 2),
    "D1": FamilySpec("D1", Kernel.gauss(), "Full", "exact", 2),
    "DI": FamilySpec("DI", Kernel.gauss(), "DiagSd", "exact", 2),
    "D2": FamilySpec("D2", Kernel.gauss(), "DiagSd1", "series", 4),
}


def parse_family_name(name: str) -> FamilySpec:
    """Resolve a catalog string, including "C5t:<t>" and "Cblock:<i>"."""
    if name in _SPECS:
        return _SPECS[name]
    if name.startswith("C5t:"):
        t = float(name.split(":", 1)[1])
        return FamilySpec("C5t", Kernel.frobenius(), "DiagSd11", "exact", 2, param=t)
    if name.startswith("Cblock:"):
        i = int(name.split(":", 1)[1])
        if i < 1:
            raise ValueError("Cblock index must be >= 1")
        return FamilySpec("Cblock", Kernel.frobenius(), None, "exact", i + 1, param=i)
    raise KeyError(f"unknown family {name!r}")


def family_spec(name: str) -> FamilySpec:
    return parse_family_name(name)


def real_cbrt(x: float) -> float:
    return math.copysign(abs(x) ** (1.0 / 3.0), x)


# ---------------------------------------------------------------------------
# Puiseux branch data for the series-constructed families
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _restricted_system(kernel_kind: str, pattern: str):
    kernel = Kernel.frobenius() if kernel_kind == "frobenius" else Kernel.gauss()
    return symbolic_restricted_gradient(kernel, pattern)


@dataclass(frozen=True)
class Branch:
    """A named Puiseux branch of a restricted critical-point system."""

    family: str
    kernel_kind: str
    pattern: str
    zero_vars: tuple
    active_vars: tuple
    seed: tuple  # one PuiseuxSeries per active variable

    def system(self):
        full = _restricted_system(self.kernel_kind, self.pattern)
        if not self.zero_vars:
            return list(full), list(self.active_vars)
        return puiseux.reduce_system(full, self.zero_vars)


F = Fraction
_BRANCHES = {
    "C1": Branch("C1", "frobenius", "Full", (), ("x1",),
                 (PuiseuxSeries(((F(-1), F(1)),)),)),
    "C2": Branch("C2", "frobenius", "DiagSd", (), ("x1", "x2"),
                 (PuiseuxSeries(((F(-1), F(-1)),)), PuiseuxSeries(((F(-1), F(1)),)))),
    "C3": Branch("C3", "frobenius", "DiagSd1", ("x3", "x4"), ("x1", "x2", "x5"),
                 (PuiseuxSeries(((F(-1), F(-1)),)), PuiseuxSeries(((F(-1), F(1)),)),
                  PuiseuxSeries(((F(0), F(1)),)))),
    "D1": Branch("D1", "gauss", "Full", (), ("x1",),
                 (PuiseuxSeries(((F(-2, 3), CubeExt.root(F(3, 5))),)),)),
    "D2": Branch("D2", "gauss", "DiagSd1", ("x4", "x5"), ("x1", "x2", "x3"),
                 (PuiseuxSeries(((F(0), F(1)),)), PuiseuxSeries(()),
                  PuiseuxSeries(((F(-1), F(1)),)))),
}


@lru_cache(maxsize=None)
def catalog_branch(family: str, depth: int = 4):
    """The extended Puiseux series of a named branch (d-independent)."""
    br = _BRANCHES[family]
    system, active = br.system()
    series = puiseux.extend_series(system, active, list(br.seed), depth)
    return br, system, active, series


def discover(kernel: Kernel, pattern: str, depth: int = 4,
             name_match_d: int = 30) -> dict:
    """Run the branch-discovery pipeline on a pattern's restricted
    gradient system and tag branches matching the named catalog.

    Naming is by weight-matrix proximity at a test dimension after a
    Newton polish of the branch seed, so the same family is recognized
    on any pattern whose fixed-point space contains it."""
    system = _restricted_system(kernel.kind, pattern)
    result = puiseux.discover_branches(system, depth=depth)
    space = fixed_point_space(pattern, name_match_d)
    var_names = [f"x{i + 1}" for i in range(space.dim)]
    candidates = [n for n in FAMILY_NAMES if _SPECS[n].kernel.kind == kernel.kind]
    targets = {}
    for fam in candidates:
        try:
            targets[fam] = construct(fam, name_match_d).W
        except (ValueError, NewtonError):
            continue
    for branch in result["branches"]:
        active = list(branch["active_vars"])
        if branch["zero_vars"]:
            red, _ = puiseux.reduce_system(system, branch["zero_vars"])
        else:
            red = list(system)
        seed = np.array([branch["series"][v].evaluate(name_match_d) for v in active])
        try:
            polished, _ = _newton_polish(red, active, seed, name_match_d, tol_factor=1e-11)
        except NewtonError:
            polished = seed
        xi = np.zeros(space.dim)
        for v, x in zip(active, polished):
            xi[var_names.index(v)] = x
        W = space.embed(xi)
        branch["name"] = None
        for fam, target in targets.items():
            if np.max(np.abs(W - target)) <= 1e-6 * (1.0 + np.max(np.abs(target))):
                branch["name"] = fam
                break
    return result


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------


def _newton_polish(system, active, xi0, d, tol_factor=1e-13, max_iter=50):
    """Damped Newton on the reduced restricted-gradient system at a
    concrete dimension."""
    names = list(active)
    jac = [[p.differentiate(v) for v in names] for p in system]

    def evaluate(xi):
        env = {v: float(x) for v, x in zip(names, xi)}
        env["d"] = float(d)
        g = np.array([p.evaluate(env) for p in system])
        J = np.array([[jac[i][j].evaluate(env) for j in range(len(names))]
                      for i in range(len(system))])
        return g, J

    xi = np.array(xi0, dtype=float)
    g, J = evaluate(xi)
    for _ in range(max_iter):
        tol = tol_factor * (1.0 + np.linalg.norm(xi))
        if np.linalg.norm(g) <= tol:
            return xi, float(np.linalg.norm(g))
        try:
            step = np.linalg.solve(J, -g)
        except np.linalg.LinAlgError as e:
            raise NewtonError(f"singular Newton system: {e}") from e
        lam = 1.0
        base = np.linalg.norm(g)
        while lam > 1e-8:
            trial = xi + lam * step
            gt, Jt = evaluate(trial)
            if np.linalg.norm(gt) < base:
                xi, g, J = trial, gt, Jt
                break
            lam *= 0.5
        else:
            raise NewtonError(f"Newton line search failed at residual {base:.3e}")
    resid = float(np.linalg.norm(g))
    if resid > tol_factor * (1.0 + np.linalg.norm(xi)):
        raise NewtonError(f"Newton did not converge: residual {resid:.3e}")
    return xi, resid


def _adaptive_seed(series, d: int) -> np.ndarray:
    """Evaluate asymptotic partial sums truncated at their smallest term
    (the usable part of a divergent-at-small-d asymptotic series)."""
    out = []
    for s in series:
        total, last = 0.0, None
        for e, c in s.terms:
            term = float(c) * float(d) ** float(e)
            if last is not None and abs(term) >= abs(last):
                break
            total += term
            last = term
        out.append(total)
    return np.array(out)


def _root_matches_branch(xi, seed, series) -> bool:
    """The polished root must keep the branch's leading signs and
    magnitudes and stay near the seed; a jump to a different root of the
    system (e.g. the degenerate zero root) fails this."""
    for x, s0, s in zip(xi, seed, series):
        if s.terms and float(s.terms[0][1]) != 0.0:
            if np.sign(x) != np.sign(float(s.terms[0][1])):
                return False
            if abs(s0) > 0 and abs(x) < 0.3 * abs(s0):
                return False
    return bool(np.linalg.norm(xi - seed) <= 0.35 * (1.0 + np.linalg.norm(seed)))


_CONTINUATION_CAP = 40


@lru_cache(maxsize=None)
def _series_root(family: str, d: int) -> tuple:
    """Newton root of the reduced system on the branch, with dimension
    continuation when the asymptotic seed is unreliable at small d."""
    br, system, active, series = catalog_branch(family)
    seed = _adaptive_seed(series, d)
    try:
        xi, resid = _newton_polish(system, active, seed, d)
        if _root_matches_branch(xi, seed, series):
            return tuple(xi), resid
    except NewtonError:
        pass
    if d + 1 > _SPECS[family].min_d + _CONTINUATION_CAP:
        raise NewtonError(f"{family}: seed failed and continuation cap reached at d={d}")
    up, _ = _series_root(family, d + 1)
    scale = np.array([
        (d / (d + 1.0)) ** float(s.terms[0][0]) if s.terms else 1.0
        for s in series])
    seed2 = np.array(up) * scale
    xi, resid = _newton_polish(system, active, seed2, d)
    if not _root_matches_branch(xi, seed2, series):
        raise NewtonError(f"{family}: continuation lost the branch at d={d}")
    return tuple(xi), resid


def _series_point(family: str, d: int) -> tuple[np.ndarray, float]:
    br, system, active, series = catalog_branch(family)
    xi, resid = _series_root(family, d)
    spec = _SPECS[family]
    space = fixed_point_space(spec.pattern, d)
    var_names = [f"x{i + 1}" for i in range(space.dim)]
    full = np.zeros(space.dim)
    for v, x in zip(active, xi):
        full[var_names.index(v)] = x
    return full, resid


def construct(name: str, d: int) -> PolishedPoint:
    """Build a catalog point at dimension d with a verified residual."""
    spec = parse_family_name(name)
    if d < spec.min_d:
        raise ValueError(f"family {name} needs d >= {spec.min_d}")
    kernel = spec.kernel
    xi = None
    if spec.name == "CI":
        W = np.eye(d)
        xi = np.array([1.0, 0.0])
    elif spec.name == "C0":
        W = np.zeros((d, d))
        xi = np.array([0.0])
    elif spec.name == "C1":
        W = np.ones((d, d)) / d
        xi = np.array([1.0 / d])
    elif spec.name == "C4":
        W = np.zeros((d, d))
        W[: d - 2, : d - 2] = np.eye(d - 2)
        W[d - 2:, d - 2:] = 0.5
        if d >= 4:
            xi = np.array([1.0, 0.0, 0.0, 0.0, 0.5, 0.5])
    elif spec.name in ("C5", "C5t"):
        t = 0.0 if spec.name == "C5" else float(spec.param)
        a = real_cbrt(1.0 - t ** 3)
        W = np.zeros((d, d))
        W[: d - 2, : d - 2] = np.eye(d - 2)
        W[d - 2, d - 2] = a
        W[d - 1, d - 2] = t
        if d >= 4:
            xi = np.zeros(10)
            xi[0] = 1.0
            xi[6] = a
            xi[8] = t
    elif spec.name == "Cblock":
        i = int(spec.param)
        W = np.zeros((d, d))
        W[: d - i, : d - i] = np.eye(d - i)
    elif spec.name == "D0":
        W = np.zeros((d, d))
        xi = np.array([0.0])
    elif spec.name == "D1":
        c = real_cbrt(3.0 * (d + 2.0 / 3.0) / (5.0 * d ** 3))
        W = np.full((d, d), c)
        xi = np.array([c])
    elif spec.name == "DI":
        W = np.eye(d)
        xi = np.array([1.0, 0.0])
    elif spec.name in ("C2", "C3", "D2"):
        xi, _ = _series_point(spec.name, d)
        space = fixed_point_space(spec.pattern, d)
        W = space.embed(xi)
    else:  # pragma: no cover
        raise KeyError(spec.name)

    if spec.pattern is not None and xi is not None and d >= 2:
        try:
            space = fixed_point_space(spec.pattern, d)
            resid = float(np.linalg.norm(space.restrict_gradient(kernel, xi)))
        except ValueError:
            xi, resid = None, float(np.linalg.norm(gradient_matrix(kernel, W)))
    else:
        resid = float(np.linalg.norm(gradient_matrix(kernel, W)))
    loss_value = loss(kernel, W)
    if spec.name in ("C5", "C5t"):
        # large |t| loses the unit loss to float cancellation; the exact
        # cube-root field evaluation recovers it (and exact criticality)
        t = 0.0 if spec.name == "C5" else float(spec.param)
        loss_is_one, grad_zero = continuum_exact(Fraction(t), d)
        if loss_is_one:
            loss_value = 1.0
        if grad_zero:
            resid = 0.0
    return PolishedPoint(name, d, W, xi, resid, loss_value)


# ---------------------------------------------------------------------------
# Loss formulas and verification
# ---------------------------------------------------------------------------

# closed forms from the landscape analysis; "exact" entries hold to
# rounding at every d, "asymptotic" entries hold to the stated order
LOSS_FORMULAS = {
    "CI": ("exact", lambda d: 0.0),
    "C0": ("exact", lambda d: float(d)),
    "C1": ("exact", lambda d: d - 1.0 / d),
    "C2": ("o(1/d)", lambda d: d - 1.0 / d),
    "C3": ("o(1/d)", lambda d: d - 1.0),
    "C4": ("exact", lambda d: 1.5),
    "C5": ("exact", lambda d: 1.0),
    "C5t": ("exact", lambda d: 1.0),
    "Cblock": ("exact", None),  # block size i, filled per point
    "D0": ("exact", lambda d: 15.0 * d),
    "D1": ("exact", lambda d: 48.0 * d / 5.0 - 36.0 / 5.0 - 12.0 / (5.0 * d)),
    "DI": ("exact", lambda d: 0.0),
    "D2": ("o(d^(-2/3))", lambda d: 6.0 + 18.0 / d),
}


def loss_formula_value(name: str, d: int) -> tuple[str, float]:
    spec = parse_family_name(name)
    kind, fn = LOSS_FORMULAS[spec.name]
    if spec.name == "Cblock":
        return kind, float(spec.param)
    return kind, fn(d)


def verify_loss_formula(name: str, d_list, rel_tol: float = 1e-10) -> dict:
    """Compare constructed losses against the family's closed form.

    Exact families must match to rel_tol at every d; asymptotic families
    must show deviation * d (order o(1/d)) or deviation * d^(2/3)
    (order o(d^(-2/3))) non-increasing along the ladder.
    """
    rows = []
    kind = None
    for d in d_list:
        point = construct(name, d)
        kind, want = loss_formula_value(name, d)
        dev = abs(point.loss_value - want)
        rows.append({"d": d, "loss": point.loss_value, "formula": want,
                     "deviation": dev, "residual": point.residual})
    if kind == "exact":
        ok = all(r["deviation"] <= rel_tol * (1.0 + abs(r["formula"])) for r in rows)
        verdict = "ExactMatch" if ok else "Mismatch"
    else:
        power = 1.0 if kind == "o(1/d)" else 2.0 / 3.0
        scaled = [r["deviation"] * r["d"] ** power for r in rows]
        floor = 1e-9
        ok = all(b < a or b < floor for a, b in zip(scaled, scaled[1:]))
        verdict = "AsymptoticConsistent" if ok else "Mismatch"
    return {"family": name, "kind": kind, "rows": rows, "verdict": verdict,
            "passed": verdict != "Mismatch"}


def continuum_exact(t, d: int) -> tuple[bool, bool]:
    """Exact verification of one continuum member: with a the real cube
    root of 1 - t^3 (an element of the field Q[a]), the unsimplified
    kernel formulas for the loss and the two nontrivial gradient rows
    are evaluated with exact field arithmetic.

    Returns (loss_is_one, gradient_is_zero).  This sidesteps the
    catastrophic float cancellation at large |t| (the terms grow like
    t^6 while the exact values stay 1 and 0).
    """
    t = Fraction(t)
    a = CubeExt.root(1 - t ** 3)
    # rows a*e_p and t*e_p; all other rows are unit vectors orthogonal
    # to them, with exactly matching target terms
    ip_aa, ip_tt, ip_at = a * a, t * t, a * t
    grad_a = 6 * (ip_aa ** 2 * a + ip_at ** 2 * t - ip_aa)
    grad_t = 6 * (ip_tt ** 2 * t + ip_at ** 2 * a - ip_tt)
    loss_val = (d - 2) + a ** 6 + t ** 6 + 2 * (ip_at ** 3) \
        - 2 * ((d - 2) + a ** 3 + t ** 3) + d
    return loss_val == 1, grad_a == 0 and grad_t == 0


def continuum_sweep(t_grid, d: int) -> dict:
    """The one-parameter continuum of unit-loss critical points: exact
    loss/criticality verification for each t (demonstrating the
    unbounded level set), plus the float-path loss deviation."""
    rows = []
    for t in t_grid:
        p = construct(f"C5t:{t}", d)
        exact_loss, exact_grad = continuum_exact(Fraction(float(t)), d)
        rows.append({
            "t": float(t),
            "loss_is_one_exact": exact_loss,
            "gradient_zero_exact": exact_grad,
            "float_loss_deviation": abs(loss(Kernel.frobenius(), p.W) - 1.0),
        })
    ok = all(r["loss_is_one_exact"] and r["gradient_zero_exact"] for r in rows)
    return {"d": d, "rows": rows, "passed": ok}
