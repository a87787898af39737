"""Row/column permutation action on weight matrices, brute-force
isotropy groups, and the block-pattern fixed-point spaces.

A pair (s1, s2) of permutations acts by (sW)_{ij} = W[s1^-1(i), s2^-1(j)].
Isotropy groups are found by exhaustive search (feasible for k = d <= 6);
the named diagonal patterns below parameterize the fixed-point spaces in
which every catalog family and radial curve lives.

Pattern coordinate layouts (0-based, p = d-2, q = d-1 for the split
patterns); each basis element is a 0/1 block indicator, so the Gram
matrix of the basis is diagonal and coordinates equal block values:

  Full     x1 * ones
  DiagSd   x1 I + x2 (ones - I)
  DiagSd1  [x1 I + x2 (ones - I) | x3 ones ; x4 ones | x5]   (top block d-1)
  DiagSd2  top block (x1, x2, d-2 wide), top-right x3, bottom-left x4,
           corner diag x5, corner off-diag x6
  DiagSd11 top block (x1, x2), columns p/q over top rows (x3, x4),
           rows p/q over left cols (x5, x6), corner entries x7..x10
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from tensorscape.calculus import gradient_matrix
from tensorscape.core import Kernel, check_weight_matrix

__all__ = [
    "PermPair",
    "identity_pair",
    "compose",
    "inverse",
    "act",
    "act_vector",
    "isotropy_group",
    "orbit_length",
    "match_pattern",
    "Pattern",
    "PATTERNS",
    "pattern_by_name",
    "FixedPointSpace",
    "fixed_point_space",
]

_BRUTE_FORCE_CAP = 600_000


@dataclass(frozen=True)
class PermPair:
    """A row permutation and a column permutation, stored as image tuples."""

    rows: tuple
    cols: tuple

    def __post_init__(self):
        for p in (self.rows, self.cols):
            if sorted(p) != list(range(len(p))):
                raise ValueError(f"not a permutation: {p}")


def identity_pair(k: int, d: int) -> PermPair:
    return PermPair(tuple(range(k)), tuple(range(d)))


def _inv(p: tuple) -> tuple:
    out = [0] * len(p)
    for i, v in enumerate(p):
        out[v] = i
    return tuple(out)


def compose(a: PermPair, b: PermPair) -> PermPair:
    """(a o b): apply b first, then a."""
    return PermPair(tuple(a.rows[i] for i in b.rows), tuple(a.cols[i] for i in b.cols))


def inverse(a: PermPair) -> PermPair:
    return PermPair(_inv(a.rows), _inv(a.cols))


def act(sigma: PermPair, W: np.ndarray) -> np.ndarray:
    W = np.asarray(W, dtype=float)
    k, d = W.shape
    if len(sigma.rows) != k or len(sigma.cols) != d:
        raise ValueError("permutation pair does not match the matrix shape")
    return W[np.ix_(_inv(sigma.rows), _inv(sigma.cols))]


def act_vector(sigma: PermPair, g: np.ndarray, k: int, d: int) -> np.ndarray:
    """Action on a stacked-row vector, consistent with `act` on matrices."""
    return act(sigma, np.asarray(g).reshape(k, d)).reshape(-1)


def isotropy_group(W: np.ndarray, tol: float | None = None) -> list[PermPair]:
    """All pairs fixing W, by exhaustive search over column permutations
    with a backtracking row matcher.  Feasible for k = d <= 6."""
    W = check_weight_matrix(W)
    k, d = W.shape
    if math.factorial(k) * math.factorial(d) > _BRUTE_FORCE_CAP:
        raise ValueError("matrix too large for brute-force isotropy enumeration")
    if tol is None:
        tol = 1e-9 * (1.0 + np.max(np.abs(W)))
    out = []
    for colp in itertools.permutations(range(d)):
        Wc = W[:, _inv(colp)]
        # candidate source rows for each target row i: sigma1^-1(i) = j
        cand = [
            [j for j in range(k) if np.max(np.abs(Wc[j] - W[i])) <= tol]
            for i in range(k)
        ]
        if any(not c for c in cand):
            continue
        used = [False] * k
        pick = [0] * k

        def backtrack(i: int):
            if i == k:
                inv_rows = tuple(pick)
                out.append(PermPair(_inv(inv_rows), colp))
                return
            for j in cand[i]:
                if not used[j]:
                    used[j] = True
                    pick[i] = j
                    backtrack(i + 1)
                    used[j] = False

        backtrack(0)
    return out


def orbit_length(W: np.ndarray, tol: float | None = None) -> int:
    W = check_weight_matrix(W)
    k, d = W.shape
    return math.factorial(k) * math.factorial(d) // len(isotropy_group(W, tol))


def match_pattern(group: list[PermPair], k: int, d: int) -> str | None:
    """Name the isotropy pattern of a group of pairs, up to conjugacy.

    Diagonal groups are recognized from the orbit partition of their
    column action; the full product is recognized by order.
    """
    if len(group) == math.factorial(k) * math.factorial(d):
        return "Full"
    if any(g.rows != g.cols for g in group):
        return None
    # orbit partition of the column action
    parent = list(range(d))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for g in group:
        for i, v in enumerate(g.cols):
            ri, rv = find(i), find(v)
            if ri != rv:
                parent[ri] = rv
    sizes = sorted(
        (sum(1 for x in range(d) if find(x) == r) for r in set(map(find, range(d)))),
        reverse=True,
    )
    if len(group) != math.prod(math.factorial(s) for s in sizes):
        return None
    key = tuple(sizes)
    named = {
        (d,): "DiagSd",
        (d - 1, 1): "DiagSd1",
        (d - 2, 2): "DiagSd2",
        (d - 2, 1, 1): "DiagSd11",
    }
    return named.get(key, "Delta" + str(key))


# ---------------------------------------------------------------------------
# Fixed-point spaces of the named diagonal patterns
# ---------------------------------------------------------------------------


def _basis_full(d):
    return [np.ones((d, d))]


def _basis_diag(d):
    I = np.eye(d)
    return [I, np.ones((d, d)) - I]


def _basis_diag1(d):
    m = d - 1
    B = []
    top_eye = np.zeros((d, d))
    top_eye[:m, :m] = np.eye(m)
    top_off = np.zeros((d, d))
    top_off[:m, :m] = np.ones((m, m)) - np.eye(m)
    col = np.zeros((d, d))
    col[:m, m] = 1.0
    row = np.zeros((d, d))
    row[m, :m] = 1.0
    corner = np.zeros((d, d))
    corner[m, m] = 1.0
    B.extend([top_eye, top_off, col, row, corner])
    return B


def _basis_diag2(d):
    m = d - 2
    B = []
    top_eye = np.zeros((d, d))
    top_eye[:m, :m] = np.eye(m)
    top_off = np.zeros((d, d))
    top_off[:m, :m] = np.ones((m, m)) - np.eye(m)
    tr = np.zeros((d, d))
    tr[:m, m:] = 1.0
    bl = np.zeros((d, d))
    bl[m:, :m] = 1.0
    c_eye = np.zeros((d, d))
    c_eye[m, m] = c_eye[m + 1, m + 1] = 1.0
    c_off = np.zeros((d, d))
    c_off[m, m + 1] = c_off[m + 1, m] = 1.0
    B.extend([top_eye, top_off, tr, bl, c_eye, c_off])
    return B


def _basis_diag11(d):
    m = d - 2
    p, q = d - 2, d - 1
    B = []
    top_eye = np.zeros((d, d))
    top_eye[:m, :m] = np.eye(m)
    top_off = np.zeros((d, d))
    top_off[:m, :m] = np.ones((m, m)) - np.eye(m)
    B.extend([top_eye, top_off])
    for c in (p, q):
        col = np.zeros((d, d))
        col[:m, c] = 1.0
        B.append(col)
    for r in (p, q):
        row = np.zeros((d, d))
        row[r, :m] = 1.0
        B.append(row)
    for r in (p, q):
        for c in (p, q):
            e = np.zeros((d, d))
            e[r, c] = 1.0
            B.append(e)
    return B


def _gens_sym(block: list[int]) -> list[tuple]:
    """Generators of the symmetric group on `block` inside S_d (as image
    tuples on the whole index set), for blocks of size >= 2."""
    out = []
    if len(block) >= 2:
        out.append((block[0], block[1]))
        if len(block) > 2:
            out.append(tuple(block))
    return out


def _cycles_to_perm(d, cycles):
    img = list(range(d))
    for cyc in cycles:
        for i, v in enumerate(cyc):
            img[v] = cyc[(i + 1) % len(cyc)]
    return tuple(img)


@dataclass(frozen=True)
class Pattern:
    """A named family of isotropy subgroups with its block basis."""

    name: str
    min_d: int
    dim_fn: Callable[[int], int] = field(repr=False)
    basis_fn: Callable[[int], list] = field(repr=False)
    order_fn: Callable[[int], int] = field(repr=False)
    diag_blocks_fn: Callable[[int], list] = field(repr=False)

    def dim(self, d: int) -> int:
        return self.dim_fn(d)

    def check_d(self, d: int) -> None:
        if d < self.min_d:
            raise ValueError(f"pattern {self.name} needs d >= {self.min_d}, got {d}")

    def basis(self, d: int) -> list[np.ndarray]:
        self.check_d(d)
        return self.basis_fn(d)

    def group_order(self, d: int) -> int:
        self.check_d(d)
        return self.order_fn(d)

    def generators(self, d: int) -> list[PermPair]:
        """Generating pairs: diagonal (pi, pi) on each block for the
        diagonal patterns, independent row/col generators for Full."""
        self.check_d(d)
        if self.name == "Full":
            gens = []
            for cyc in _gens_sym(list(range(d))):
                perm = _cycles_to_perm(d, [cyc])
                gens.append(PermPair(perm, tuple(range(d))))
                gens.append(PermPair(tuple(range(d)), perm))
            return gens
        gens = []
        for block in self.diag_blocks_fn(d):
            for cyc in _gens_sym(block):
                perm = _cycles_to_perm(d, [cyc])
                gens.append(PermPair(perm, perm))
        return gens


PATTERNS: dict[str, Pattern] = {
    "Full": Pattern("Full", 2, lambda d: 1, _basis_full,
                    lambda d: math.factorial(d) ** 2, lambda d: []),
    "DiagSd": Pattern("DiagSd", 2, lambda d: 2, _basis_diag,
                      lambda d: math.factorial(d), lambda d: [list(range(d))]),
    "DiagSd1": Pattern("DiagSd1", 3, lambda d: 5, _basis_diag1,
                       lambda d: math.factorial(d - 1),
                       lambda d: [list(range(d - 1)), [d - 1]]),
    "DiagSd2": Pattern("DiagSd2", 4, lambda d: 6, _basis_diag2,
                       lambda d: 2 * math.factorial(d - 2),
                       lambda d: [list(range(d - 2)), [d - 2, d - 1]]),
    "DiagSd11": Pattern("DiagSd11", 4, lambda d: 10, _basis_diag11,
                        lambda d: math.factorial(d - 2),
                        lambda d: [list(range(d - 2)), [d - 2], [d - 1]]),
}


def pattern_by_name(name: str) -> Pattern:
    try:
        return PATTERNS[name]
    except KeyError:
        raise ValueError(f"unknown pattern {name!r}; known: {sorted(PATTERNS)}") from None


@dataclass(frozen=True)
class FixedPointSpace:
    """A concrete fixed-point space M(d,d)^G with its 0/1 block basis.

    The basis blocks have pairwise disjoint supports, so the Frobenius
    Gram matrix is diagonal; `gram` holds its diagonal (the block sizes).
    """

    pattern: Pattern
    d: int
    basis: np.ndarray  # (N, d, d)
    gram: np.ndarray  # (N,)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def embed(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        if xi.shape != (self.dim,):
            raise ValueError(f"expected {self.dim} coordinates, got shape {xi.shape}")
        return np.einsum("n,nij->ij", xi, self.basis)

    def coords(self, W: np.ndarray) -> np.ndarray:
        """Orthogonal projection coordinates <W, B_n> / |B_n|^2."""
        W = np.asarray(W, dtype=float)
        return np.einsum("ij,nij->n", W, self.basis) / self.gram

    def projection_defect(self, W: np.ndarray) -> float:
        """Relative distance from W to the span of the basis."""
        R = W - self.embed(self.coords(W))
        scale = 1.0 + np.linalg.norm(W)
        return float(np.linalg.norm(R) / scale)

    def restrict_gradient(self, kernel: Kernel, xi) -> np.ndarray:
        """Pullback of the loss gradient to coordinates (the full gradient
        stays inside the fixed-point space; see `projection_defect`)."""
        return self.coords(gradient_matrix(kernel, self.embed(xi)))


def fixed_point_space(pattern: str | Pattern, d: int) -> FixedPointSpace:
    pat = pattern_by_name(pattern) if isinstance(pattern, str) else pattern
    basis = np.array(pat.basis(d))
    gram = np.einsum("nij,nij->n", basis, basis)
    if np.any(gram == 0.0):
        raise ValueError(f"pattern {pat.name} degenerates at d = {d}")
    return FixedPointSpace(pat, d, basis, gram)
