"""Exact multivariate polynomial arithmetic and the symbolic restricted
loss/gradient on the named fixed-point spaces.

Polynomials live in variables x1..xN (the fixed-point coordinates) and d
(the formal dimension), with Fraction coefficients.  The restricted loss
is assembled from a hand-enumerated table of row-pair classes: each
pattern has finitely many orbit classes of row pairs (i,j) and cross
pairs (i, e_j), with pair counts that are polynomials in d, so the loss
is a finite sum of kernel evaluations weighted by counts and no symbolic
summation engine is needed.

The restricted gradient is built by an independent route: for several
concrete integer dimensions, the full gradient matrix of the embedded
point is computed exactly in the x-variables, its block-representative
entries are read off (the gradient of an invariant loss is constant on
the blocks of the pattern), and the d-dependence is recovered by exact
Lagrange interpolation with two held-out verification dimensions.  The
agreement of this route with the formal derivative of the table-built
loss (after the diagonal Gram correction) is asserted in the tests as a
polynomial identity.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction

from tensorscape.core import Kernel
from tensorscape.symmetry import Pattern, pattern_by_name

__all__ = [
    "MPoly",
    "poly_ring",
    "parse_poly",
    "BlockInnerTable",
    "block_inner_table",
    "gram_polys",
    "symbolic_restricted_loss",
    "symbolic_restricted_gradient",
    "pattern_variables",
]


class MPoly:
    """Multivariate polynomial with exact rational coefficients.

    Immutable; terms map exponent tuples to nonzero Fractions.  The
    variable tuple is part of the value and must agree for arithmetic.
    """

    __slots__ = ("vars", "terms")

    def __init__(self, variables, terms=None):
        object.__setattr__(self, "vars", tuple(variables))
        clean = {}
        for expo, c in (terms or {}).items():
            c = Fraction(c)
            if c != 0:
                expo = tuple(int(e) for e in expo)
                if len(expo) != len(self.vars):
                    raise ValueError("exponent arity mismatch")
                clean[expo] = clean.get(expo, Fraction(0)) + c
        object.__setattr__(self, "terms", {e: c for e, c in clean.items() if c != 0})

    def __setattr__(self, *a):
        raise AttributeError("MPoly is immutable")

    # -- constructors ------------------------------------------------------
    @staticmethod
    def constant(variables, c) -> "MPoly":
        return MPoly(variables, {tuple([0] * len(variables)): Fraction(c)})

    @staticmethod
    def variable(variables, index: int) -> "MPoly":
        e = [0] * len(variables)
        e[index] = 1
        return MPoly(variables, {tuple(e): Fraction(1)})

    # -- basics ------------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = MPoly.constant(self.vars, other)
        return isinstance(other, MPoly) and self.vars == other.vars and self.terms == other.terms

    def __hash__(self):
        return hash((self.vars, frozenset(self.terms.items())))

    def _coerce(self, other) -> "MPoly":
        if isinstance(other, MPoly):
            if other.vars != self.vars:
                raise ValueError("variable sets differ")
            return other
        return MPoly.constant(self.vars, other)

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, Fraction(0)) + c
        return MPoly(self.vars, out)

    __radd__ = __add__

    def __neg__(self):
        return MPoly(self.vars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return (-self) + self._coerce(other)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            c0 = Fraction(other)
            return MPoly(self.vars, {e: c * c0 for e, c in self.terms.items()})
        other = self._coerce(other)
        out = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, Fraction(0)) + c1 * c2
        return MPoly(self.vars, out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power")
        out = MPoly.constant(self.vars, 1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def differentiate(self, var: str) -> "MPoly":
        i = self.vars.index(var)
        out = {}
        for e, c in self.terms.items():
            if e[i] > 0:
                e2 = list(e)
                e2[i] -= 1
                out[tuple(e2)] = out.get(tuple(e2), Fraction(0)) + c * e[i]
        return MPoly(self.vars, out)

    def evaluate(self, values: dict):
        """Full evaluation; exact when all values are Fractions/ints."""
        vals = [values[v] for v in self.vars]
        total = 0
        for e, c in self.terms.items():
            term = c if isinstance(vals[0], (int, Fraction)) else float(c)
            for v, p in zip(vals, e):
                if p:
                    term = term * v ** p
            total = total + term
        return total

    def substitute_d(self, dval) -> "MPoly":
        """Specialize the last variable (d) to a number, keeping the rest."""
        if self.vars[-1] != "d":
            raise ValueError("last variable is not d")
        out = {}
        dval = Fraction(dval)
        for e, c in self.terms.items():
            e2 = e[:-1] + (0,)
            out[e2] = out.get(e2, Fraction(0)) + c * dval ** e[-1]
        return MPoly(self.vars, out)

    def set_zero(self, names) -> "MPoly":
        """Substitute 0 for the given variables."""
        idx = [self.vars.index(n) for n in names]
        out = {e: c for e, c in self.terms.items() if all(e[i] == 0 for i in idx)}
        return MPoly(self.vars, out)

    def project(self, keep) -> "MPoly":
        """Restrict to a subset of variables; every dropped variable must
        have exponent zero throughout."""
        keep = tuple(keep)
        idx = [self.vars.index(v) for v in keep]
        dropped = [i for i in range(len(self.vars)) if i not in idx]
        out = {}
        for e, c in self.terms.items():
            if any(e[i] for i in dropped):
                raise ValueError("cannot project: dropped variable occurs")
            out[tuple(e[i] for i in idx)] = c
        return MPoly(keep, out)

    def degree(self, var: str | None = None) -> int:
        if not self.terms:
            return -1
        if var is None:
            return max(sum(e) for e in self.terms)
        i = self.vars.index(var)
        return max(e[i] for e in self.terms)

    def num_terms(self) -> int:
        return len(self.terms)

    # -- text format -------------------------------------------------------
    def _sorted_terms(self):
        return sorted(self.terms.items(), key=lambda ec: (sum(ec[0]), ec[0]), reverse=True)

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for e, c in self._sorted_terms():
            factors = [str(abs(c))]
            for v, p in zip(self.vars, e):
                if p == 1:
                    factors.append(v)
                elif p > 1:
                    factors.append(f"{v}^{p}")
            body = "*".join(factors)
            if not parts:
                parts.append(body if c > 0 else f"-{body}")
            else:
                parts.append(("+ " if c > 0 else "- ") + body)
        return " ".join(parts)

    __repr__ = __str__


def poly_ring(*names) -> tuple:
    """Generators of Q[names], one MPoly per name."""
    return tuple(MPoly.variable(names, i) for i in range(len(names)))


_TERM_RE = re.compile(r"^([+-]?\d+(?:/\d+)?)?\s*(.*)$")


def parse_poly(text: str, variables) -> MPoly:
    """Parse the plain-text format produced by str(MPoly), e.g.
    "3*x2^5*d^3 - 15*x2^5*d^2 + 1/2"."""
    variables = tuple(variables)
    s = text.replace("−", "-").strip()
    s = re.sub(r"\s+", " ", s)
    if not s or s == "0":
        return MPoly(variables, {})
    s = s.replace("- ", "-").replace("+ ", "+")
    chunks = re.split(r"(?=[+-])", s.replace(" ", "+"))
    out = MPoly(variables, {})
    for chunk in chunks:
        if not chunk or chunk in "+-":
            continue
        sign = Fraction(1)
        if chunk[0] == "+":
            chunk = chunk[1:]
        elif chunk[0] == "-":
            sign = Fraction(-1)
            chunk = chunk[1:]
        coeff = Fraction(1)
        expo = [0] * len(variables)
        for factor in chunk.split("*"):
            factor = factor.strip()
            if not factor:
                continue
            if re.fullmatch(r"\d+(/\d+)?", factor):
                coeff *= Fraction(factor)
                continue
            if "^" in factor:
                name, p = factor.split("^")
                p = int(p)
            else:
                name, p = factor, 1
            if name not in variables:
                raise ValueError(f"unknown variable {name!r} in {text!r}")
            expo[variables.index(name)] += p
        out = out + MPoly(variables, {tuple(expo): sign * coeff})
    return out


# ---------------------------------------------------------------------------
# Row-pair class tables per pattern
# ---------------------------------------------------------------------------


def pattern_variables(pattern: Pattern | str) -> tuple:
    pat = pattern_by_name(pattern) if isinstance(pattern, str) else pattern
    n = {"Full": 1, "DiagSd": 2, "DiagSd1": 5, "DiagSd2": 6, "DiagSd11": 10}[pat.name]
    return tuple(f"x{i + 1}" for i in range(n)) + ("d",)


@dataclass(frozen=True)
class BlockInnerTable:
    """Inner products of the embedded rows by orbit class.

    pairs: (count, <w_i,w_j>, |w_i|^2, |w_j|^2) per ordered row-pair class
    crosses: (count, <w_i,e_j>, |w_i|^2) per (row, target-column) class
    The counts sum to d^2 in both lists, as polynomial identities.
    """

    pattern: str
    variables: tuple
    pairs: tuple
    crosses: tuple


def block_inner_table(pattern: Pattern | str) -> BlockInnerTable:
    pat = pattern_by_name(pattern) if isinstance(pattern, str) else pattern
    v = pattern_variables(pat)
    one = MPoly.constant(v, 1)

    if pat.name == "Full":
        x1, d = poly_ring(*v)
        n = d * x1 ** 2
        pairs = (((d * d), n, n, n),)
        crosses = ((d * d, x1, n),)
    elif pat.name == "DiagSd":
        x1, x2, d = poly_ring(*v)
        s = x1 ** 2 + (d - one) * x2 ** 2
        p = 2 * x1 * x2 + (d - 2 * one) * x2 ** 2
        pairs = ((d, s, s, s), (d * d - d, p, s, s))
        crosses = ((d, x1, s), (d * d - d, x2, s))
    elif pat.name == "DiagSd1":
        x1, x2, x3, x4, x5, d = poly_ring(*v)
        nu = x1 ** 2 + (d - 2 * one) * x2 ** 2 + x3 ** 2
        nv = (d - one) * x4 ** 2 + x5 ** 2
        off = 2 * x1 * x2 + (d - 3 * one) * x2 ** 2 + x3 ** 2
        mix = x1 * x4 + (d - 2 * one) * x2 * x4 + x3 * x5
        m = d - one
        pairs = (
            (m, nu, nu, nu),
            (m * (d - 2 * one), off, nu, nu),
            (m, mix, nu, nv),
            (m, mix, nv, nu),
            (one, nv, nv, nv),
        )
        crosses = (
            (m, x1, nu),
            (m * (d - 2 * one), x2, nu),
            (m, x3, nu),
            (m, x4, nv),
            (one, x5, nv),
        )
    elif pat.name == "DiagSd2":
        x1, x2, x3, x4, x5, x6, d = poly_ring(*v)
        nu = x1 ** 2 + (d - 3 * one) * x2 ** 2 + 2 * x3 ** 2
        nb = (d - 2 * one) * x4 ** 2 + x5 ** 2 + x6 ** 2
        off = 2 * x1 * x2 + (d - 4 * one) * x2 ** 2 + 2 * x3 ** 2
        mix = x1 * x4 + (d - 3 * one) * x2 * x4 + x3 * (x5 + x6)
        boff = (d - 2 * one) * x4 ** 2 + 2 * x5 * x6
        m = d - 2 * one
        two = 2 * one
        pairs = (
            (m, nu, nu, nu),
            (m * (d - 3 * one), off, nu, nu),
            (two * m, mix, nu, nb),
            (two * m, mix, nb, nu),
            (two, nb, nb, nb),
            (two, boff, nb, nb),
        )
        crosses = (
            (m, x1, nu),
            (m * (d - 3 * one), x2, nu),
            (two * m, x3, nu),
            (two * m, x4, nb),
            (two, x5, nb),
            (two, x6, nb),
        )
    elif pat.name == "DiagSd11":
        x1, x2, x3, x4, x5, x6, x7, x8, x9, x10, d = poly_ring(*v)
        nu = x1 ** 2 + (d - 3 * one) * x2 ** 2 + x3 ** 2 + x4 ** 2
        n1 = (d - 2 * one) * x5 ** 2 + x7 ** 2 + x8 ** 2
        n2 = (d - 2 * one) * x6 ** 2 + x9 ** 2 + x10 ** 2
        off = 2 * x1 * x2 + (d - 4 * one) * x2 ** 2 + x3 ** 2 + x4 ** 2
        mix1 = x1 * x5 + (d - 3 * one) * x2 * x5 + x3 * x7 + x4 * x8
        mix2 = x1 * x6 + (d - 3 * one) * x2 * x6 + x3 * x9 + x4 * x10
        rr = (d - 2 * one) * x5 * x6 + x7 * x9 + x8 * x10
        m = d - 2 * one
        pairs = (
            (m, nu, nu, nu),
            (m * (d - 3 * one), off, nu, nu),
            (m, mix1, nu, n1),
            (m, mix1, n1, nu),
            (m, mix2, nu, n2),
            (m, mix2, n2, nu),
            (one, n1, n1, n1),
            (one, n2, n2, n2),
            (one, rr, n1, n2),
            (one, rr, n2, n1),
        )
        crosses = (
            (m, x1, nu),
            (m * (d - 3 * one), x2, nu),
            (m, x3, nu),
            (m, x4, nu),
            (m, x5, n1),
            (m, x6, n2),
            (one, x7, n1),
            (one, x8, n1),
            (one, x9, n2),
            (one, x10, n2),
        )
    else:  # pragma: no cover
        raise ValueError(f"no table for pattern {pat.name}")
    return BlockInnerTable(pat.name, v, pairs, crosses)


def gram_polys(pattern: Pattern | str) -> list[MPoly]:
    """Diagonal of the Frobenius Gram matrix of the 0/1 block basis,
    as polynomials in d (constant in x)."""
    pat = pattern_by_name(pattern) if isinstance(pattern, str) else pattern
    v = pattern_variables(pat)
    d = MPoly.variable(v, len(v) - 1)
    one = MPoly.constant(v, 1)
    if pat.name == "Full":
        return [d * d]
    if pat.name == "DiagSd":
        return [d, d * d - d]
    if pat.name == "DiagSd1":
        m = d - one
        return [m, m * (d - 2 * one), m, m, one]
    if pat.name == "DiagSd2":
        m = d - 2 * one
        return [m, m * (d - 3 * one), 2 * m, 2 * m, 2 * one, 2 * one]
    if pat.name == "DiagSd11":
        m = d - 2 * one
        return [m, m * (d - 3 * one), m, m, m, m, one, one, one, one]
    raise ValueError(pat.name)  # pragma: no cover


def _kappa_sym(kernel: Kernel, ip: MPoly, ni: MPoly, nj: MPoly) -> MPoly:
    if kernel.kind == "frobenius":
        if kernel.power != 3:
            raise ValueError("symbolic path implemented for order-3 kernels")
        return ip ** 3
    return 6 * ip ** 3 + 9 * ni * nj * ip


def symbolic_restricted_loss(kernel: Kernel, pattern: Pattern | str) -> MPoly:
    """Loss on the embedded fixed-point space as an exact polynomial in
    (x1..xN, d), via the block inner-product table."""
    table = block_inner_table(pattern)
    v = table.variables
    d = MPoly.variable(v, len(v) - 1)
    one = MPoly.constant(v, 1)
    total = MPoly(v, {})
    for count, ip, ni, nj in table.pairs:
        total = total + count * _kappa_sym(kernel, ip, ni, nj)
    for count, ip, ni in table.crosses:
        total = total - 2 * count * _kappa_sym(kernel, ip, ni, one)
    total = total + d * Fraction(kernel.unit_value)
    return total


# ---------------------------------------------------------------------------
# Restricted gradient via exact interpolation over concrete dimensions
# ---------------------------------------------------------------------------


def _kernel_w_rows(kernel: Kernel, rows, target_dim, vars_):
    """Gradient rows (as lists of MPoly) of the loss at the symbolic
    point whose rows are `rows` (lists of MPoly entries), for one
    concrete dimension.  Returns a function row_index -> list[MPoly]."""
    zero = MPoly(vars_, {})
    k = len(rows)
    ips = {}

    def ip(i, j):
        if (i, j) not in ips:
            val = sum((rows[i][a] * rows[j][a] for a in range(target_dim)), zero)
            ips[(i, j)] = val
            ips[(j, i)] = val
        return ips[(i, j)]

    def grad_row(i):
        out = [zero] * target_dim
        if kernel.kind == "frobenius":
            for j in range(k):
                c = ip(i, j) ** 2
                for a in range(target_dim):
                    out[a] = out[a] + c * rows[j][a]
            for a in range(target_dim):
                out[a] = out[a] - rows[i][a] ** 2
            return [6 * g for g in out]
        ni = ip(i, i)
        for j in range(k):
            g = ip(i, j)
            nj = ip(j, j)
            c1 = 18 * g ** 2 + 9 * ni * nj
            c2 = 18 * nj * g
            for a in range(target_dim):
                out[a] = out[a] + c1 * rows[j][a] + c2 * rows[i][a]
        # target part: v = e_a, <w_i, e_a> = rows[i][a], |e_a|^2 = 1
        srow = sum(rows[i], zero)
        for a in range(target_dim):
            wia = rows[i][a]
            out[a] = out[a] - (18 * wia ** 2 + 9 * ni)
            out[a] = out[a] - 18 * wia * srow
        return [2 * g for g in out]

    return grad_row


def _embedded_rows(pattern: Pattern, d0: int, vars_):
    """Rows of the embedded point at dimension d0 with symbolic x."""
    xs = [MPoly.variable(vars_, i) for i in range(len(vars_) - 1)]
    zero = MPoly(vars_, {})

    def vec(entries):
        return entries

    rows = []
    if pattern.name == "Full":
        rows = [[xs[0]] * d0 for _ in range(d0)]
    elif pattern.name == "DiagSd":
        for i in range(d0):
            rows.append([xs[0] if j == i else xs[1] for j in range(d0)])
    elif pattern.name == "DiagSd1":
        m = d0 - 1
        for i in range(m):
            rows.append([xs[0] if j == i else xs[1] for j in range(m)] + [xs[2]])
        rows.append([xs[3]] * m + [xs[4]])
    elif pattern.name == "DiagSd2":
        m = d0 - 2
        for i in range(m):
            rows.append([xs[0] if j == i else xs[1] for j in range(m)] + [xs[2], xs[2]])
        rows.append([xs[3]] * m + [xs[4], xs[5]])
        rows.append([xs[3]] * m + [xs[5], xs[4]])
    elif pattern.name == "DiagSd11":
        m = d0 - 2
        for i in range(m):
            rows.append([xs[0] if j == i else xs[1] for j in range(m)] + [xs[2], xs[3]])
        rows.append([xs[4]] * m + [xs[6], xs[7]])
        rows.append([xs[5]] * m + [xs[8], xs[9]])
    else:  # pragma: no cover
        raise ValueError(pattern.name)
    return rows


def _rep_entries(pattern: Pattern, d0: int):
    """One representative (row, col) per basis block at dimension d0."""
    if pattern.name == "Full":
        return [(0, 0)]
    if pattern.name == "DiagSd":
        return [(0, 0), (0, 1)]
    if pattern.name == "DiagSd1":
        m = d0 - 1
        return [(0, 0), (0, 1), (0, m), (m, 0), (m, m)]
    if pattern.name == "DiagSd2":
        m = d0 - 2
        return [(0, 0), (0, 1), (0, m), (m, 0), (m, m), (m, m + 1)]
    m = d0 - 2
    return [(0, 0), (0, 1), (0, m), (0, m + 1), (m, 0), (m + 1, 0),
            (m, m), (m, m + 1), (m + 1, m), (m + 1, m + 1)]


def _lagrange_in_d(samples: list[tuple[int, Fraction]]) -> list[Fraction]:
    """Exact interpolation: coefficients c_0..c_{n-1} of the polynomial
    through the given (d, value) points, by Newton divided differences."""
    pts = [Fraction(x) for x, _ in samples]
    vals = [Fraction(y) for _, y in samples]
    n = len(pts)
    coef = list(vals)
    for j in range(1, n):
        for i in range(n - 1, j - 1, -1):
            coef[i] = (coef[i] - coef[i - 1]) / (pts[i] - pts[i - j])
    # expand the Newton form to monomial coefficients
    out = [Fraction(0)] * n
    acc = [Fraction(1)]  # product (d - pts[0])...(d - pts[j-1])
    for j in range(n):
        for i, a in enumerate(acc):
            out[i] += coef[j] * a
        new = [Fraction(0)] * (len(acc) + 1)
        for i, a in enumerate(acc):
            new[i] -= a * pts[j]
            new[i + 1] += a
        acc = new
    return out


def symbolic_restricted_gradient(kernel: Kernel, pattern: Pattern | str,
                                 degree_cap: int = 7) -> list[MPoly]:
    """The gradient pullback to fixed-point coordinates, exact in
    (x1..xN, d), one polynomial per coordinate.

    Built from block-representative gradient entries at degree_cap+1
    concrete dimensions plus two held-out dimensions used to verify that
    the interpolated d-degree bound held.
    """
    pat = pattern_by_name(pattern) if isinstance(pattern, str) else pattern
    v = pattern_variables(pat)
    nx = len(v) - 1
    d_lo = max(pat.min_d, 4)
    sample_ds = list(range(d_lo, d_lo + degree_cap + 3))  # last 2 verify
    fit_ds, check_ds = sample_ds[:-2], sample_ds[-2:]

    per_d = {}
    for d0 in sample_ds:
        rows = _embedded_rows(pat, d0, v)
        grad_row = _kernel_w_rows(kernel, rows, d0, v)
        reps = _rep_entries(pat, d0)
        row_cache = {}
        coords = []
        for (i, j) in reps:
            if i not in row_cache:
                row_cache[i] = grad_row(i)
            coords.append(row_cache[i][j])
        per_d[d0] = coords

    out = []
    for n in range(len(per_d[sample_ds[0]])):
        support = set()
        for d0 in sample_ds:
            support.update(per_d[d0][n].terms)
        terms = {}
        for expo in support:
            pts = [(d0, per_d[d0][n].terms.get(expo, Fraction(0))) for d0 in fit_ds]
            coefs = _lagrange_in_d(pts)
            for p, c in enumerate(coefs):
                if c != 0:
                    terms[expo[:-1] + (p,)] = c
        poly = MPoly(v, terms)
        for d0 in check_ds:
            got = poly.substitute_d(d0)
            want = per_d[d0][n]
            if got != want:
                raise RuntimeError(
                    f"gradient interpolation failed verification at d={d0} "
                    f"(pattern {pat.name}, coordinate {n})")
        out.append(poly)
    return out
