"""Leading-exponent enumeration and Puiseux-series extraction for the
restricted critical-point systems.

A family of critical points across dimensions is sought as
x_i(d) = A_i d^(tau_i) + lower-order terms.  Admissible exponent vectors
tau are those for which, in every equation, the maximum of the affine
forms alpha . tau + beta (one per monomial c x^alpha d^beta) is attained
at least twice, so that the leading terms can cancel.  Candidates are
enumerated from the pairwise-equality hyperplane arrangement of those
forms; leading coefficients solve the cancellation system; further terms
are obtained by an exactness-verified linear march in s = d^(-1/q).

Coefficients stay exact: rationals, or elements of Q[rho]/(rho^3 - r)
when a branch has a cube-root leading coefficient (the only radicals the
catalog needs).  Complex branches are reported as "no real solution",
never computed.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from tensorscape.symbolic import MPoly

__all__ = [
    "CubeExt",
    "PuiseuxSeries",
    "UnboundedCandidateError",
    "StalledSeriesError",
    "leading_exponents",
    "leading_coefficients",
    "extend_series",
    "reduce_system",
    "admissible_zero_sets",
    "seed_to_numeric",
    "jacobian_nonsingular_check",
    "series_to_json",
    "series_from_json",
]


class UnboundedCandidateError(RuntimeError):
    """The twice-attained locus contains a continuum of exponent vectors."""


class StalledSeriesError(RuntimeError):
    """The linear march could not reduce the residual order."""


# ---------------------------------------------------------------------------
# Exact coefficients: rationals and the cubic extension Q[rho]/(rho^3 - r)
# ---------------------------------------------------------------------------


class CubeExt:
    """a + b rho + c rho^2 with rho the real cube root of a rational r.

    Exact field arithmetic (x^3 - r must be irreducible over Q, i.e. r is
    not a rational cube); interoperates with Fraction/int operands.
    """

    __slots__ = ("r", "a", "b", "c")

    def __init__(self, r, a=0, b=0, c=0):
        self.r = Fraction(r)
        self.a = Fraction(a)
        self.b = Fraction(b)
        self.c = Fraction(c)

    @staticmethod
    def root(r) -> "CubeExt":
        return CubeExt(r, 0, 1, 0)

    def _wrap(self, other):
        if isinstance(other, CubeExt):
            if other.r != self.r and not other.is_rational() and not self.is_rational():
                raise ValueError("mixing different cube-root extensions")
            r = self.r if not self.is_rational() else other.r
            return CubeExt(r, other.a, other.b, other.c), CubeExt(r, self.a, self.b, self.c)
        return CubeExt(self.r, Fraction(other)), self

    def is_rational(self) -> bool:
        return self.b == 0 and self.c == 0

    def __add__(self, other):
        o, s = self._wrap(other)
        return CubeExt(s.r, s.a + o.a, s.b + o.b, s.c + o.c)

    __radd__ = __add__

    def __neg__(self):
        return CubeExt(self.r, -self.a, -self.b, -self.c)

    def __sub__(self, other):
        return self + (-self._wrap(other)[0])

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o, s = self._wrap(other)
        r = s.r
        a = s.a * o.a + r * (s.b * o.c + s.c * o.b)
        b = s.a * o.b + s.b * o.a + r * s.c * o.c
        c = s.a * o.c + s.b * o.b + s.c * o.a
        return CubeExt(r, a, b, c)

    __rmul__ = __mul__

    def inverse(self) -> "CubeExt":
        # solve (a + b rho + c rho^2)(x + y rho + z rho^2) = 1 over Q
        r = self.r
        M = [
            [self.a, r * self.c, r * self.b],
            [self.b, self.a, r * self.c],
            [self.c, self.b, self.a],
        ]
        rhs = [Fraction(1), Fraction(0), Fraction(0)]
        sol = _solve_fraction_system([row[:] for row in M], rhs[:])
        if sol is None:
            raise ZeroDivisionError("CubeExt inverse of zero (or reducible extension)")
        return CubeExt(r, *sol)

    def __truediv__(self, other):
        o, s = self._wrap(other)
        return s * o.inverse()

    def __rtruediv__(self, other):
        return self._wrap(other)[0] * self.inverse()

    def __pow__(self, k: int):
        out = CubeExt(self.r, 1)
        base = self
        for _ in range(k):
            out = out * base
        return out

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.a == other and self.b == 0 and self.c == 0
        if isinstance(other, CubeExt):
            o, s = self._wrap(other)
            return (s.a, s.b, s.c) == (o.a, o.b, o.c)
        return NotImplemented

    def __hash__(self):
        return hash((self.r, self.a, self.b, self.c))

    def __float__(self):
        rho = math.copysign(abs(float(self.r)) ** (1.0 / 3.0), float(self.r))
        return float(self.a) + float(self.b) * rho + float(self.c) * rho ** 2

    def __str__(self):
        if self.is_rational():
            return str(self.a)
        parts = []
        if self.a:
            parts.append(str(self.a))
        if self.b:
            parts.append(f"{self.b}*({self.r})^(1/3)" if self.b != 1 else f"({self.r})^(1/3)")
        if self.c:
            parts.append(f"{self.c}*({self.r})^(2/3)" if self.c != 1 else f"({self.r})^(2/3)")
        return " + ".join(parts) if parts else "0"

    __repr__ = __str__


def _solve_fraction_system(M, rhs):
    """Gaussian elimination over a field (Fraction or CubeExt entries).
    Returns the solution list or None when singular."""
    n = len(M)
    for col in range(n):
        piv = next((r for r in range(col, n) if not _is_zero(M[r][col])), None)
        if piv is None:
            return None
        M[col], M[piv] = M[piv], M[col]
        rhs[col], rhs[piv] = rhs[piv], rhs[col]
        inv = _field_inv(M[col][col])
        M[col] = [x * inv for x in M[col]]
        rhs[col] = rhs[col] * inv
        for r in range(n):
            if r != col and not _is_zero(M[r][col]):
                f = M[r][col]
                M[r] = [x - f * y for x, y in zip(M[r], M[col])]
                rhs[r] = rhs[r] - f * rhs[col]
    return rhs


def _is_zero(x) -> bool:
    return x == 0


def _field_inv(x):
    if isinstance(x, CubeExt):
        return x.inverse()
    return Fraction(1) / Fraction(x)


def _to_float(x) -> float:
    return float(x)


# ---------------------------------------------------------------------------
# Public series type
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PuiseuxSeries:
    """Finite list of (exponent, coefficient) terms in powers of d,
    exponents strictly decreasing.  `exact` marks a series that solves
    its system identically (zero residual)."""

    terms: tuple
    exact: bool = False

    def __post_init__(self):
        exps = [Fraction(e) for e, _ in self.terms]
        if any(b >= a for a, b in zip(exps, exps[1:])):
            raise ValueError("exponents must be strictly decreasing")

    @property
    def leading_exponent(self) -> Fraction | None:
        return Fraction(self.terms[0][0]) if self.terms else None

    def evaluate(self, d: float) -> float:
        return sum(_to_float(c) * float(d) ** float(e) for e, c in self.terms)

    def coefficient(self, exponent) -> object:
        exponent = Fraction(exponent)
        for e, c in self.terms:
            if Fraction(e) == exponent:
                return c
        return Fraction(0)

    def truncate(self, min_exponent) -> "PuiseuxSeries":
        keep = tuple((e, c) for e, c in self.terms if Fraction(e) >= Fraction(min_exponent))
        return PuiseuxSeries(keep, self.exact and len(keep) == len(self.terms))


def _coeff_to_str(c) -> str:
    if isinstance(c, CubeExt):
        return str(c)
    return str(Fraction(c))


def _coeff_from_str(s: str):
    s = s.strip()
    if "(1/3)" in s or "(2/3)" in s:
        # forms like "q*(r)^(1/3)" summed; parse the three components
        out = CubeExt(Fraction(1))
        for part in s.split(" + "):
            part = part.strip()
            if "^(1/3)" in part:
                coeff, base = _split_radical(part, "^(1/3)")
                out = out + CubeExt(base, 0, coeff, 0)
            elif "^(2/3)" in part:
                coeff, base = _split_radical(part, "^(2/3)")
                out = out + CubeExt(base, 0, 0, coeff)
            else:
                out = out + Fraction(part)
        return out
    return Fraction(s)


def _split_radical(part: str, suffix: str):
    head = part[: part.index(suffix)]
    if "*" in head:
        coeff, base = head.split("*", 1)
    else:
        coeff, base = "1", head
    return Fraction(coeff), Fraction(base.strip("()"))


def series_to_json(series: dict[str, PuiseuxSeries]) -> str:
    payload = {
        name: {
            "exact": s.exact,
            "terms": [{"exp": str(Fraction(e)), "coef": _coeff_to_str(c)} for e, c in s.terms],
        }
        for name, s in series.items()
    }
    return json.dumps(payload, sort_keys=True, indent=2)


def series_from_json(text: str) -> dict[str, PuiseuxSeries]:
    raw = json.loads(text)
    out = {}
    for name, data in raw.items():
        terms = tuple((Fraction(t["exp"]), _coeff_from_str(t["coef"])) for t in data["terms"])
        out[name] = PuiseuxSeries(terms, bool(data.get("exact", False)))
    return out


# ---------------------------------------------------------------------------
# Leading exponents: the twice-attained condition
# ---------------------------------------------------------------------------

_MAX_DENOMINATOR = 12
_MAX_COMBINATIONS = 5_000_000


def _equation_forms(poly: MPoly, active_idx: list[int], d_idx: int):
    """Distinct affine forms (alpha, beta) of one equation; for equal
    alpha only the top d-power can ever attain the maximum."""
    best = {}
    for expo in poly.terms:
        alpha = tuple(expo[i] for i in active_idx)
        beta = expo[d_idx]
        if alpha not in best or beta > best[alpha]:
            best[alpha] = beta
    return sorted(best.items())


def _form_values(forms, tau):
    return [sum(Fraction(a) * t for a, t in zip(alpha, tau)) + beta for alpha, beta in forms]


def _twice_attained(forms, tau) -> bool:
    vals = _form_values(forms, tau)
    mx = max(vals)
    return sum(1 for v in vals if v == mx) >= 2


def _rank_fractions(rows) -> int:
    rows = [[Fraction(x) for x in r] for r in rows]
    rank = 0
    ncols = len(rows[0]) if rows else 0
    for col in range(ncols):
        piv = next((i for i in range(rank, len(rows)) if rows[i][col] != 0), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        inv = Fraction(1) / rows[rank][col]
        rows[rank] = [x * inv for x in rows[rank]]
        for i in range(len(rows)):
            if i != rank and rows[i][col] != 0:
                f = rows[i][col]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[rank])]
        rank += 1
    return rank


def _admissible(eq_forms, tau, nvars: int) -> bool:
    """Vertex admissibility of an exponent candidate:

    - every equation's maximal affine form is attained at least twice;
    - every variable occurs in some equation's maximal tie (otherwise
      its leading coefficient is unconstrained -- the vanishing-
      coefficient case handled by recursion on a reduced system);
    - the active tie normals span the whole exponent space, so tau is a
      zero-dimensional stratum of the admissible set, not the interior
      of a tie segment along which some exponent stays undetermined.
    """
    covered = [False] * nvars
    normals = []
    for forms in eq_forms:
        vals = _form_values(forms, tau)
        mx = max(vals)
        winners = [f for f, v in zip(forms, vals) if v == mx]
        if len(winners) < 2:
            return False
        for alpha, _ in winners:
            for i, a in enumerate(alpha):
                if a:
                    covered[i] = True
        base = winners[0][0]
        for alpha, _ in winners[1:]:
            normals.append([a - b for a, b in zip(alpha, base)])
    if not all(covered):
        return False
    return _rank_fractions(normals) == nvars


def leading_exponents(system: list[MPoly], active_vars: list[str],
                      max_exponent=Fraction(0)):
    """All exponent vectors tau (components <= max_exponent, denominator
    <= 12) at which every equation's maximal affine form is attained at
    least twice, with every variable occurring in some maximal tie.

    The default search region tau_i <= 0 targets families with
    non-growing entries; outside it the quintic top forms of these
    systems degenerate along whole rays of ties that correspond to no
    Puiseux branch.  Returns (candidates, flagged) where `flagged` holds
    arrangement vertices whose exponents fall outside the denominator
    restriction.  Raises UnboundedCandidateError when a continuum inside
    the region satisfies the condition.
    """
    max_exponent = Fraction(max_exponent)
    if not system:
        raise ValueError("empty system")
    vars_ = system[0].vars
    d_idx = len(vars_) - 1
    if vars_[d_idx] != "d":
        raise ValueError("system variables must end with d")
    active_idx = [vars_.index(v) for v in active_vars]
    N = len(active_idx)
    eq_forms = [_equation_forms(p, active_idx, d_idx) for p in system if not p.is_zero()]
    if not eq_forms:
        raise ValueError("system is identically zero")

    # pairwise-equality hyperplanes  (alpha_f - alpha_g) . tau = beta_g - beta_f
    planes = set()
    for forms in eq_forms:
        for (a1, b1), (a2, b2) in itertools.combinations(forms, 2):
            normal = tuple(x - y for x, y in zip(a1, a2))
            if all(v == 0 for v in normal):
                continue
            offset = b2 - b1
            g = math.gcd(*(abs(v) for v in normal), abs(offset)) or 1
            normal = tuple(v // g for v in normal)
            offset = offset // g
            lead = next(v for v in normal if v != 0)
            if lead < 0:
                normal = tuple(-v for v in normal)
                offset = -offset
            planes.add((normal, offset))
    planes = sorted(planes)
    if not planes:
        raise UnboundedCandidateError("no tie hyperplanes: condition holds nowhere or everywhere")

    n_comb = math.comb(len(planes), N)
    if n_comb > _MAX_COMBINATIONS:
        raise ValueError(
            f"leading-exponent enumeration too large ({len(planes)} hyperplanes, "
            f"{n_comb} {N}-subsets); reduce the system first")

    A_all = np.array([p[0] for p in planes], dtype=float)
    b_all = np.array([p[1] for p in planes], dtype=float)

    raw_points = []
    combos = list(itertools.combinations(range(len(planes)), N))
    chunk = 200_000
    for lo in range(0, len(combos), chunk):
        idx = np.array(combos[lo:lo + chunk])
        A = A_all[idx]               # (m, N, N)
        b = b_all[idx]               # (m, N)
        det = np.linalg.det(A)
        ok = np.abs(det) > 1e-9
        if not np.any(ok):
            continue
        sol = np.linalg.solve(A[ok], b[ok][..., None])[..., 0]
        raw_points.append(sol)
    if raw_points:
        raw_points = np.vstack(raw_points)
    else:
        raw_points = np.zeros((0, N))

    candidates = set()
    flagged = set()
    seen_float = set()
    for row in raw_points:
        key = tuple(np.round(row, 7))
        if key in seen_float:
            continue
        seen_float.add(key)
        tau = tuple(Fraction(float(x)).limit_denominator(_MAX_DENOMINATOR) for x in row)
        snapped = all(abs(float(t) - x) <= 1e-6 * (1.0 + abs(x)) for t, x in zip(tau, row))
        if snapped and all(t <= max_exponent for t in tau) and _admissible(eq_forms, tau, N):
            candidates.add(tau)
        elif not snapped:
            probe = tuple(Fraction(float(x)).limit_denominator(10 ** 6) for x in row)
            if all(t <= max_exponent for t in probe) and _admissible(eq_forms, probe, N):
                flagged.add(probe)

    # continuum probe: a hyperplane carrying weakly-admissible points
    # (twice-attained + participation, rank condition waived) at several
    # generic samples, with no vertex candidate on it, is a
    # one-parameter family of leading balances that no vertex resolves
    def weak(tau):
        covered = [False] * N
        for forms in eq_forms:
            vals = _form_values(forms, tau)
            mx = max(vals)
            winners = [f for f, v in zip(forms, vals) if v == mx]
            if len(winners) < 2:
                return False
            for alpha, _ in winners:
                for i, a in enumerate(alpha):
                    if a:
                        covered[i] = True
        return all(covered)

    rng = np.random.default_rng(20_24)
    for normal, offset in planes:
        if any(sum(Fraction(n) * t for n, t in zip(normal, tau)) == offset
               for tau in candidates):
            continue  # a vertex resolves this plane
        nz = next(i for i, v in enumerate(normal) if v != 0)
        hits = 0
        for _ in range(4):
            tau = [Fraction(int(v), 17) for v in rng.integers(-60, 1, size=N)]
            tau[nz] = (Fraction(offset) - sum(Fraction(normal[i]) * tau[i]
                                              for i in range(N) if i != nz)) / normal[nz]
            tau = tuple(tau)
            if any(t > max_exponent for t in tau):
                continue
            if weak(tau):
                hits += 1
        if hits >= 2:
            raise UnboundedCandidateError(
                f"continuum of admissible exponents along plane {normal} . tau = {offset}")
    return sorted(candidates), sorted(flagged)


# ---------------------------------------------------------------------------
# Leading coefficients: cancellation of the maximal terms
# ---------------------------------------------------------------------------


def _cancellation_polys(system, active_vars, tau):
    """For each equation, the polynomial in A (dict alpha -> coeff) made
    of the monomials attaining the maximal form value at tau."""
    vars_ = system[0].vars
    d_idx = len(vars_) - 1
    active_idx = [vars_.index(v) for v in active_vars]
    out = []
    for poly in system:
        if poly.is_zero():
            continue
        vals = {}
        for expo, coeff in poly.terms.items():
            alpha = tuple(expo[i] for i in active_idx)
            val = sum(Fraction(a) * t for a, t in zip(alpha, tau)) + expo[d_idx]
            cur = vals.get(alpha)
            if cur is None or val > cur[0]:
                vals[alpha] = (val, coeff)
        mx = max(v for v, _ in vals.values())
        out.append({alpha: c for alpha, (v, c) in vals.items() if v == mx})
    return out


def _perfect_root(x: Fraction, k: int):
    """Exact rational k-th root or None."""
    if x < 0 and k % 2 == 0:
        return None
    sign = -1 if x < 0 else 1
    num, den = abs(x.numerator), x.denominator
    rn = round(num ** (1.0 / k))
    rd = round(den ** (1.0 / k))
    for dn in (rn - 1, rn, rn + 1):
        for dd in (rd - 1, rd, rd + 1):
            if dn >= 0 and dd >= 1 and dn ** k == num and dd ** k == den:
                return sign * Fraction(dn, dd)
    return None


def _real_kth_roots(ratio: Fraction, k: int):
    """Real solutions of A^k = ratio, exact where possible."""
    if ratio == 0:
        return []
    if k % 2 == 1:
        exact = _perfect_root(ratio, k)
        if exact is not None:
            return [exact]
        if k == 3:
            return [CubeExt.root(ratio)]
        return [math.copysign(abs(float(ratio)) ** (1.0 / k), float(ratio))]
    if ratio < 0:
        return []
    exact = _perfect_root(ratio, k)
    if exact is not None:
        return [exact, -exact]
    v = float(ratio) ** (1.0 / k)
    return [v, -v]


def _univariate_real_roots(poly_1d: dict):
    """Real nonzero roots of sum c_k A^k, exact for binomials and for
    roots identifiable as rationals or cube roots of rationals."""
    degs = sorted(poly_1d)
    m = degs[0]
    shifted = {k - m: c for k, c in poly_1d.items()}
    degs = sorted(shifted)
    if len(degs) == 1:
        return []
    if len(degs) == 2 and degs[0] == 0:
        k = degs[1]
        c0, ck = shifted[0], shifted[k]
        ratio = -(_as_field(c0) / _as_field(ck))
        if isinstance(ratio, CubeExt) and ratio.is_rational():
            ratio = ratio.a
        if k == 1:
            return [ratio]
        if isinstance(ratio, Fraction):
            return _real_kth_roots(ratio, k)
        val = float(ratio)
        if k % 2 == 1:
            return [math.copysign(abs(val) ** (1.0 / k), val)]
        return [] if val < 0 else [val ** (1.0 / k), -(val ** (1.0 / k))]
    # general small polynomial: numeric real roots, exactified when possible
    deg = degs[-1]
    coeffs = [float(shifted.get(k, 0)) for k in range(deg, -1, -1)]
    roots = np.roots(coeffs)
    out = []
    exactable = not any(isinstance(c, CubeExt) for c in shifted.values())
    for z in roots:
        if abs(z.imag) > 1e-9 * (1.0 + abs(z.real)) or abs(z.real) < 1e-12:
            continue
        x = float(z.real)
        if exactable:
            cand = Fraction(x).limit_denominator(1000)
            if sum(Fraction(c) * cand ** k for k, c in shifted.items()) == 0:
                out.append(cand)
                continue
            base = Fraction(x ** 3).limit_denominator(1000)
            rho = CubeExt.root(base)
            val = sum(rho ** k * c for k, c in shifted.items())
            if not base.denominator > 999 and _is_zero(val):
                out.append(rho)
                continue
        out.append(x)
    return out


def _as_field(x):
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        if isinstance(x, float):
            return x
        return Fraction(x)
    return x


def _resultant_roots(polys: list[dict], free: list[int]):
    """Candidate values of the second free variable from the Sylvester
    resultant of the first two equations eliminating the first variable.

    The resultant (a univariate polynomial) is recovered exactly by
    evaluating the Sylvester determinant at sample rational points and
    interpolating; only Fraction coefficients are supported here.
    """
    u, v = free

    def as_bivariate(p):
        out = {}
        for alpha, c in p.items():
            if isinstance(c, CubeExt) and not c.is_rational():
                raise NotImplementedError("resultant fallback needs rational coefficients")
            out[(alpha[u], alpha[v])] = out.get((alpha[u], alpha[v]), Fraction(0)) + Fraction(
                c.a if isinstance(c, CubeExt) else c)
        return out

    p1, p2 = as_bivariate(polys[0]), as_bivariate(polys[1])
    m = max(a for a, _ in p1)
    n = max(a for a, _ in p2)
    if m == 0 or n == 0:
        raise NotImplementedError("degenerate elimination")
    degv = m * max(b for _, b in p2) + n * max(b for _, b in p1)

    def coeff_at(p, deg_u, val_v):
        return sum(c * val_v ** b for (a, b), c in p.items() if a == deg_u)

    def sylvester_det(val_v):
        c1 = [coeff_at(p1, a, val_v) for a in range(m, -1, -1)]
        c2 = [coeff_at(p2, a, val_v) for a in range(n, -1, -1)]
        size = m + n
        M = [[Fraction(0)] * size for _ in range(size)]
        for r in range(n):
            for idx, c in enumerate(c1):
                M[r][r + idx] = c
        for r in range(m):
            for idx, c in enumerate(c2):
                M[n + r][r + idx] = c
        # fraction-free-ish determinant by Gaussian elimination
        det = Fraction(1)
        for col in range(size):
            piv = next((r for r in range(col, size) if M[r][col] != 0), None)
            if piv is None:
                return Fraction(0)
            if piv != col:
                M[col], M[piv] = M[piv], M[col]
                det = -det
            det *= M[col][col]
            inv = Fraction(1) / M[col][col]
            for r in range(col + 1, size):
                if M[r][col] != 0:
                    f = M[r][col] * inv
                    M[r] = [x - f * y for x, y in zip(M[r], M[col])]
        return det

    samples = [(Fraction(t), sylvester_det(Fraction(t))) for t in range(degv + 1)]
    coefs = _lagrange_coeffs(samples)
    poly = {k: c for k, c in enumerate(coefs) if c != 0}
    if not poly:
        raise NotImplementedError("identically vanishing resultant")
    return _univariate_real_roots(poly)


def _lagrange_coeffs(samples):
    pts = [x for x, _ in samples]
    vals = [y for _, y in samples]
    n = len(pts)
    coef = list(vals)
    for j in range(1, n):
        for i in range(n - 1, j - 1, -1):
            coef[i] = (coef[i] - coef[i - 1]) / (pts[i] - pts[i - j])
    out = [Fraction(0)] * n
    acc = [Fraction(1)]
    for j in range(n):
        for i, a in enumerate(acc):
            out[i] += coef[j] * a
        new = [Fraction(0)] * (len(acc) + 1)
        for i, a in enumerate(acc):
            new[i] -= a * pts[j]
            new[i + 1] += a
        acc = new
    return out


def _strip_content(poly: dict) -> dict:
    """Divide out the monomial gcd; sound because all A_i are nonzero."""
    if not poly:
        return poly
    nvars = len(next(iter(poly)))
    mins = [min(alpha[i] for alpha in poly) for i in range(nvars)]
    if not any(mins):
        return poly
    return {tuple(a - m for a, m in zip(alpha, mins)): c for alpha, c in poly.items()}


def _eval_cancel(poly: dict, assign: dict, nvars: int):
    """Substitute assigned A-values; returns dict over remaining vars."""
    out = {}
    for alpha, c in poly.items():
        val = c
        rem = list(alpha)
        for i, a in assign.items():
            if alpha[i]:
                val = val * a ** alpha[i]
            rem[i] = 0
        key = tuple(rem)
        out[key] = out.get(key, 0) + val
    return _strip_content({k: v for k, v in out.items() if not _is_zero(v)})


def leading_coefficients(system: list[MPoly], active_vars: list[str], tau):
    """All real solutions A (every A_i nonzero) of the leading-term
    cancellation system at tau.  Solved by triangular substitution with
    exact univariate roots; an empty result is the legitimate "no real
    solution" outcome of a complex branch."""
    tau = tuple(Fraction(t) for t in tau)
    polys = _cancellation_polys(system, active_vars, tau)
    N = len(active_vars)

    def solve(remaining, assign):
        remaining = [p for p in (_eval_cancel(p, assign, N) for p in remaining) if p]
        if len(assign) == N or not remaining:
            if len(assign) < N:
                return []  # underdetermined cancellation system
            if any(p for p in remaining):
                ok = all(all(_is_zero(v) for v in p.values()) for p in remaining)
                if not ok:
                    return []
            return [tuple(assign[i] for i in range(N))]
        # pick an equation involving exactly one unassigned variable
        for p in remaining:
            seen = {i for alpha in p for i in range(N) if alpha[i] and i not in assign}
            if len(seen) == 1:
                (i,) = seen
                uni = {}
                consistent = True
                for alpha, c in p.items():
                    if any(alpha[j] for j in range(N) if j != i and j not in assign):
                        consistent = False
                        break
                    uni[alpha[i]] = uni.get(alpha[i], 0) + c
                if not consistent:
                    continue
                uni = {k: v for k, v in uni.items() if not _is_zero(v)}
                if not uni:
                    continue
                if min(uni) > 0 and len(uni) == 1:
                    return []  # forces A_i = 0
                sols = []
                for root in _univariate_real_roots(uni):
                    sub = dict(assign)
                    sub[i] = root
                    sols.extend(solve(remaining, sub))
                return sols
        free = sorted({i for p in remaining for alpha in p
                       for i in range(N) if alpha[i] and i not in assign})
        if len(free) == 2 and len(remaining) >= 2:
            sols = []
            for val in _resultant_roots(remaining, free):
                sub = dict(assign)
                sub[free[1]] = val
                sols.extend(solve(remaining, sub))
            return sols
        raise NotImplementedError(
            "cancellation system is not triangular; unsupported shape")

    sols = solve(polys, {})
    # verify and deduplicate
    out = []
    for A in sols:
        if any(_is_zero(a) for a in A):
            continue
        good = True
        for p in polys:
            total = 0
            for alpha, c in p.items():
                term = c
                for i, e in enumerate(alpha):
                    if e:
                        term = term * A[i] ** e
                total = total + term
            if isinstance(total, float):
                good = good and abs(total) < 1e-8
            else:
                good = good and _is_zero(total)
        if good and A not in out:
            out.append(A)
    return out


# ---------------------------------------------------------------------------
# Series extension: exactness-verified linear march in s = d^(-1/q)
# ---------------------------------------------------------------------------


def _l_add(a: dict, b: dict) -> dict:
    out = dict(a)
    for k, v in b.items():
        w = out.get(k, 0) + v
        if _is_zero(w):
            out.pop(k, None)
        else:
            out[k] = w
    return out


def _l_mul(a: dict, b: dict) -> dict:
    out = {}
    for ka, va in a.items():
        for kb, vb in b.items():
            k = ka + kb
            w = out.get(k, 0) + va * vb
            if _is_zero(w):
                out.pop(k, None)
            else:
                out[k] = w
    return out


def _l_pow(a: dict, k: int, cache: dict) -> dict:
    if k == 0:
        return {0: Fraction(1)}
    key = (id(a), k)
    if key not in cache:
        cache[key] = _l_mul(_l_pow(a, k - 1, cache), a)
    return cache[key]


def _eval_poly_on_series(poly: MPoly, series: list[dict], q: int, cache: dict) -> dict:
    """Evaluate an MPoly at x_i = series[i](s), d = s^(-q)."""
    out = {}
    for expo, coeff in poly.terms.items():
        term = {0: Fraction(coeff)}
        for i, e in enumerate(expo[:-1]):
            if e:
                term = _l_mul(term, _l_pow(series[i], e, cache))
        beta = expo[-1]
        if beta:
            term = {k - q * beta: v for k, v in term.items()}
        out = _l_add(out, term)
    return out


def _series_state(seed: list[PuiseuxSeries]):
    """Common denominator q and the s-power dicts of the seed."""
    q = 1
    for s in seed:
        for e, _ in s.terms:
            q = q * Fraction(e).denominator // math.gcd(q, Fraction(e).denominator)
    state = []
    for s in seed:
        dct = {}
        for e, c in s.terms:
            p = -Fraction(e) * q
            if p.denominator != 1:
                raise ValueError("seed exponents do not share the denominator")
            dct[int(p)] = c
        state.append(dct)
    return q, state


def _state_to_series(state: list[dict], q: int, exact: bool) -> list[PuiseuxSeries]:
    out = []
    for dct in state:
        terms = tuple(sorted(((Fraction(-p, q), c) for p, c in dct.items()),
                             key=lambda t: t[0], reverse=True))
        out.append(PuiseuxSeries(terms, exact))
    return out


def _march_plan(J, res_orders, base_slots, nvars, max_shift=6):
    """Choose per-variable slot shifts so the leading correction matrix
    is square nonsingular and no residual sits below a reachable order.

    J[i][j] are the Laurent Jacobian entries; corrections a_j s^(c_j)
    land in equation i at order lam_ij + c_j, so the matrix picked up at
    the row minima v_i must be invertible for the march to determine all
    coefficients.  Variables whose natural next slot cannot participate
    get shifted upward (their skipped coefficients are implicitly zero,
    which the exact residual verification re-checks).  Returns
    (slots, v, B) or None.
    """
    lam = [[min(J[i][j]) if J[i][j] else None for j in range(nvars)]
           for i in range(len(J))]
    best = None
    for shifts in itertools.product(range(max_shift + 1), repeat=nvars):
        slots = [base_slots[j] + shifts[j] for j in range(nvars)]
        v = []
        for i in range(len(J)):
            lands = [lam[i][j] + slots[j] for j in range(nvars) if lam[i][j] is not None]
            v.append(min(lands) if lands else None)
        ok = True
        for i, o in enumerate(v):
            if res_orders[i] is not None and (o is None or res_orders[i] < o):
                ok = False  # residual below any reachable order
                break
        if not ok:
            continue
        B = [[J[i][j].get(v[i] - slots[j], Fraction(0)) if v[i] is not None else Fraction(0)
              for j in range(nvars)] for i in range(len(J))]
        Bf = np.array([[_to_float(x) for x in row] for row in B])
        if Bf.shape[0] == Bf.shape[1]:
            if abs(np.linalg.det(Bf)) <= 1e-12 * (1.0 + np.max(np.abs(Bf)) ** len(B)):
                continue
        score = sum(shifts)
        if best is None or score < best[0]:
            best = (score, slots, v, B)
        if score == 0:
            break
    if best is None:
        return None
    return best[1], best[2], best[3]


def extend_series(system: list[MPoly], active_vars: list[str],
                  seed: list[PuiseuxSeries], depth) -> list[PuiseuxSeries]:
    """Extend a seed solution until every term with d-exponent >= -depth
    is determined, one exact linear solve per s-order.  All verified
    terms are returned, including any computed beyond the requested
    depth (uneven per-variable truncation keeps the correction Jacobian
    of the final state invertible).

    Each step substitutes the partial sums, plans correction slots so
    the leading linear system is invertible, solves it exactly, and
    re-substitutes to verify that the residual order strictly increased;
    failure to progress raises StalledSeriesError rather than returning
    unverified terms.  Seeds may leave a variable's series empty: its
    leading exponent is then discovered by the march itself (the
    vanishing-leading-coefficient recursion).
    """
    depth = Fraction(depth)
    if len(seed) != len(active_vars):
        raise ValueError("one seed series per active variable")
    q, state = _series_state(seed)
    target_p = int(math.ceil(depth * q))
    jac = [[p.differentiate(v) for v in active_vars] for p in system]
    known = [max(dct) if dct else 0 for dct in state]
    nvars = len(active_vars)

    def residual_orders():
        cache = {}
        res = [_eval_poly_on_series(p, state, q, cache) for p in system]
        return res, [min(r) if r else None for r in res]

    res, orders = residual_orders()
    guard = 0
    while any(m < target_p for m in known):
        if all(o is None for o in orders):
            return _state_to_series(state, q, exact=True)
        guard += 1
        if guard > 40 * (target_p + 2):
            raise StalledSeriesError("series march exceeded its iteration budget")
        cache = {}
        J = [[_eval_poly_on_series(jac[i][j], state, q, cache)
              for j in range(nvars)] for i in range(len(system))]
        plan = _march_plan(J, orders, [m + 1 for m in known], nvars)
        if plan is None:
            raise StalledSeriesError(
                f"no invertible correction system at residual orders {orders}")
        slots, v, B = plan
        rhs = [Fraction(0) if v[i] is None else -(res[i].get(v[i], Fraction(0)))
               for i in range(len(system))]
        sol = _solve_fraction_system([row[:] for row in B], rhs)
        if sol is None:
            raise StalledSeriesError(f"singular correction system at s-orders {v}")
        for j, a in enumerate(sol):
            if not _is_zero(a):
                state[j][slots[j]] = a
            known[j] = slots[j]
        prev_min = min(o for o in orders if o is not None)
        hit = min(o for o in v if o is not None)
        res, orders = residual_orders()
        # a step whose corrections land below the residual only records
        # zero coefficients; the residual is not required to move then
        if hit >= prev_min and any(o is not None and o <= prev_min for o in orders):
            raise StalledSeriesError(
                f"residual order did not increase past {prev_min}")
    exact = all(o is None for o in orders)
    return _state_to_series(state, q, exact)


def predicted_residual_order(system: list[MPoly], active_vars: list[str],
                             truncated: list[PuiseuxSeries],
                             deeper: list[PuiseuxSeries]) -> float:
    """The expected d-exponent of the system residual at a truncation:
    the largest (Jacobian-entry order) + (first omitted term order) over
    all equation/variable pairs -- the first-order effect of the actual
    omitted terms, read off a deeper extension of the same branch.
    Variables whose deeper series carry no further terms contribute
    nothing (their truncation is exact)."""
    q, state = _series_state(truncated)
    cache = {}
    next_exp = {}
    for v, s_t, s_d in zip(active_vars, truncated, deeper):
        have = {Fraction(e) for e, _ in s_t.terms}
        omitted = [Fraction(e) for e, _ in s_d.terms if Fraction(e) not in have]
        if omitted:
            next_exp[v] = max(omitted)
    if not next_exp:
        raise ValueError("the truncation is already exact to the deeper order")
    best = None
    for i, p in enumerate(system):
        for j, v in enumerate(active_vars):
            if v not in next_exp:
                continue
            J = _eval_poly_on_series(p.differentiate(v), state, q, cache)
            if not J:
                continue
            expo = -Fraction(min(J), q) + next_exp[v]
            if best is None or expo > best:
                best = expo
    if best is None:
        raise ValueError("system has an empty Jacobian on this seed")
    return float(best)


def reduce_system(system: list[MPoly], zero_vars) -> tuple[list[MPoly], list[str]]:
    """Pin a set of coordinates to zero and drop their equations.

    Valid only when each pinned coordinate's gradient component vanishes
    identically on the pinned subspace (the fixed-point sub-variety is
    flow-invariant); verified symbolically, raises ValueError otherwise.
    Returns (reduced equations, active variable names), equations
    projected onto the active variables and d.
    """
    zero_vars = list(zero_vars)
    vars_ = system[0].vars
    active = [v for v in vars_[:-1] if v not in zero_vars]
    for v in zero_vars:
        idx = vars_.index(v)
        if not system[idx].set_zero(zero_vars).is_zero():
            raise ValueError(
                f"gradient component {v} does not vanish on the zero set {zero_vars}")
    reduced = []
    for v in active:
        idx = vars_.index(v)
        reduced.append(system[idx].set_zero(zero_vars).project(tuple(active) + ("d",)))
    return reduced, active


def admissible_zero_sets(system: list[MPoly]) -> list[tuple[str, ...]]:
    """All variable subsets that may be pinned to zero (the recursion
    targets for branches with vanishing leading coefficients)."""
    vars_ = system[0].vars[:-1]
    out = []
    for r in range(1, len(vars_)):
        for sub in itertools.combinations(vars_, r):
            try:
                reduce_system(system, sub)
            except ValueError:
                continue
            out.append(sub)
    return out


def discover_branches(system: list[MPoly], depth=4, max_zero_set: int = 2,
                      max_combinations: int = 500_000) -> dict:
    """Systematic real-branch discovery for a restricted gradient system.

    Pipeline per admissible zero set (including the empty one for small
    systems): enumerate vertex exponent candidates, solve the leading
    cancellations, extend every real all-nonzero solution; then repeat
    with each proper subset of the remaining variables treated as
    subordinate (their monomials dropped for the leading balance, their
    exponents discovered by the march) -- the vanishing-leading-
    coefficient recursion.  Branches that stall, or whose subordinate
    exponents fail to sit strictly below the leading balance, are
    dropped with a note.
    """
    vars_ = system[0].vars
    nx = len(vars_) - 1
    zero_sets = [()]
    if nx > 1:
        zero_sets += [z for z in admissible_zero_sets(system) if len(z) <= max_zero_set]
    branches = []
    notes = []
    flagged_all = []
    candidates_by_set = {}

    def n_planes_ok(polys, active):
        d_idx = len(polys[0].vars) - 1
        a_idx = [polys[0].vars.index(v) for v in active]
        planes = set()
        for p in polys:
            forms = _equation_forms(p, a_idx, d_idx)
            for (a1, b1), (a2, b2) in itertools.combinations(forms, 2):
                nrm = tuple(x - y for x, y in zip(a1, a2))
                if any(nrm):
                    planes.add((nrm, b2 - b1))
        return math.comb(len(planes), len(active)) <= max_combinations

    def try_extend(polys, active, seed, zero_vars, route):
        try:
            series = extend_series(polys, active, seed, depth)
        except StalledSeriesError as e:
            notes.append(f"{route}: dropped (march stalled: {e})")
            return
        lead = {v: (s.leading_exponent, s.terms[0][1] if s.terms else None)
                for v, s in zip(active, series)}
        key = (tuple(zero_vars),
               tuple(sorted((v, float(e) if e is not None else None,
                             None if c is None else round(_to_float(c), 9))
                            for v, (e, c) in lead.items())))
        if key in seen:
            return
        seen.add(key)
        branches.append({
            "zero_vars": tuple(zero_vars),
            "active_vars": tuple(active),
            "series": dict(zip(active, series)),
            "route": route,
            "jacobian_nonsingular": jacobian_nonsingular_check(polys, active, series),
        })

    seen = set()
    for zs in zero_sets:
        if zs:
            red, active = reduce_system(system, zs)
        else:
            red, active = list(system), [v for v in vars_[:-1]]
        if not n_planes_ok(red, active):
            notes.append(f"zero set {zs}: skipped (enumeration above the combination cap)")
            continue
        try:
            cands, flagged = leading_exponents(red, active)
        except UnboundedCandidateError as e:
            notes.append(f"zero set {zs}: {e}")
            continue
        candidates_by_set[",".join(zs) if zs else "(none)"] = [
            dict(zip(active, map(str, tau))) for tau in cands]
        flagged_all += [tuple(map(str, f)) for f in flagged]
        for tau in cands:
            try:
                sols = leading_coefficients(red, active, tau)
            except NotImplementedError as e:
                notes.append(f"zero set {zs}, tau {tuple(map(str, tau))}: {e}")
                continue
            for A in sols:
                if any(isinstance(a, float) for a in A):
                    notes.append(f"zero set {zs}, tau {tuple(map(str, tau))}: "
                                 "leading coefficient not exactly representable; not extended")
                    continue
                seed = [PuiseuxSeries(((t, a),)) for t, a in zip(tau, A)]
                try_extend(red, active, seed, zs, f"direct[{zs}]")
        # subordinate-variable recursion
        if len(active) < 2:
            continue
        for r in range(1, len(active)):
            for sub in itertools.combinations(active, r):
                rem = [v for v in active if v not in sub]
                keep = tuple(rem) + ("d",)
                sub_eqs = [red[active.index(v)].set_zero(sub).project(keep) for v in rem]
                if any(p.is_zero() for p in sub_eqs) or not n_planes_ok(sub_eqs, rem):
                    continue
                try:
                    cands2, _ = leading_exponents(sub_eqs, rem)
                except UnboundedCandidateError:
                    continue
                for tau2 in cands2:
                    try:
                        sols = leading_coefficients(sub_eqs, rem, tau2)
                    except NotImplementedError:
                        continue
                    for A in sols:
                        if any(isinstance(a, float) for a in A):
                            continue
                        seed = []
                        for v in active:
                            if v in sub:
                                seed.append(PuiseuxSeries(()))
                            else:
                                i = rem.index(v)
                                seed.append(PuiseuxSeries(((tau2[i], A[i]),)))
                        route = f"subordinate[{zs};{sub}]"
                        before = len(branches)
                        try_extend(red, active, seed, zs, route)
                        # subordination must be consistent: the discovered
                        # exponents sit strictly below the leading balance
                        if len(branches) > before:
                            br = branches[-1]
                            lead_rem = min(Fraction(br["series"][v].leading_exponent)
                                           for v in rem)
                            bad = any(
                                br["series"][v].terms and
                                Fraction(br["series"][v].leading_exponent) >= lead_rem
                                for v in sub)
                            if bad:
                                branches.pop()
                                notes.append(f"{route}: dropped (subordinate variable "
                                             "not below the leading balance)")
    return {"branches": branches, "notes": notes, "flagged": flagged_all,
            "candidates": candidates_by_set}


def seed_to_numeric(series: list[PuiseuxSeries], d: int) -> np.ndarray:
    if d < 2:
        raise ValueError("d must be at least 2")
    return np.array([s.evaluate(d) for s in series], dtype=float)


def jacobian_nonsingular_check(system: list[MPoly], active_vars: list[str],
                               series: list[PuiseuxSeries],
                               rel_tol: float = 1e-8) -> bool:
    """Nonsingularity of the correction Jacobian at s = 0 for the given
    truncation: the matrix of leading coefficients the next march step
    would invert (at the planned slot shifts), checked by its singular
    values.  An over-truncated seed may legitimately fail this check."""
    q, state = _series_state(series)
    known = [max(dct) if dct else 0 for dct in state]
    cache = {}
    res = [_eval_poly_on_series(p, state, q, cache) for p in system]
    orders = [min(r) if r else None for r in res]
    if all(o is None for o in orders):
        return True  # exact solution: nothing left to invert
    J = [[_eval_poly_on_series(p.differentiate(v), state, q, cache)
          for v in active_vars] for p in system]
    plan = _march_plan(J, orders, [m + 1 for m in known], len(active_vars))
    if plan is None:
        return False
    _, _, B = plan
    Bf = np.array([[_to_float(x) for x in row] for row in B])
    sv = np.linalg.svd(Bf, compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return False
    return bool(sv[-1] > rel_tol * sv[0])
