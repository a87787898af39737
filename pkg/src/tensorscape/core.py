"""Kernel-formulated losses for symmetric order-3 tensor decomposition.

A weight matrix W in M(k,d) represents the candidate decomposition
sum_i w_i^(x3) of the target tensor T = sum_i e_i^(x3).  The squared
distance between the two, under either the Frobenius norm or the
cubic-Gaussian norm, collapses to a double sum of a bivariate kernel
over rows:

    loss(W) = sum_ij k(w_i, w_j) - 2 sum_ij k(w_i, e_j) + sum_ij k(e_i, e_j)

Both kernels used here are functions of <w,v>, |w|^2 and |v|^2 only,
which is what makes every computation in this package (numeric and
symbolic alike) go through the single `pair_eval` bottleneck.

The module also carries independent dense-tensor oracles for both norms;
these never touch the kernel path and exist to cross-check it.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Kernel",
    "kernel_eval",
    "pair_eval",
    "loss",
    "loss_dense_oracle",
    "gaussian_moment",
    "gauss_inner_dense",
    "sym_rank_one_sum",
    "dense_target",
    "is_permutation_matrix",
    "check_weight_matrix",
]


@dataclass(frozen=True)
class Kernel:
    """Similarity kernel selecting the tensor norm.

    kind="frobenius" with power n gives k(w,v) = <w,v>^n (the order-n
    Frobenius norm of the rank-one sums); kind="gauss" gives the
    cubic-Gaussian kernel 6<w,v>^3 + 9 |w|^2 |v|^2 <w,v>.
    """

    kind: str
    power: int = 3

    def __post_init__(self):
        if self.kind not in ("frobenius", "gauss"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "frobenius" and self.power < 2:
            raise ValueError("frobenius kernel needs power >= 2")

    @staticmethod
    def frobenius(power: int = 3) -> "Kernel":
        return Kernel("frobenius", power)

    @staticmethod
    def gauss() -> "Kernel":
        return Kernel("gauss", 3)

    @property
    def unit_value(self) -> float:
        """k(e,e) for a unit vector e: 1 for frobenius, 15 for gauss."""
        return 1.0 if self.kind == "frobenius" else 15.0


def check_weight_matrix(W: np.ndarray) -> np.ndarray:
    W = np.asarray(W, dtype=float)
    if W.ndim != 2:
        raise ValueError(f"weight matrix must be 2-D, got shape {W.shape}")
    k, d = W.shape
    if k < 1 or d < 2:
        raise ValueError(f"weight matrix needs k >= 1 rows and d >= 2 columns, got {k}x{d}")
    if not np.all(np.isfinite(W)):
        raise ValueError("weight matrix has non-finite entries")
    return W


def pair_eval(kernel: Kernel, ip, nw=1.0, nv=1.0):
    """Evaluate k(w,v) from <w,v> and the squared norms |w|^2, |v|^2.

    Accepts scalars or broadcastable numpy arrays; this is the single
    evaluation point shared by the numeric loss, gradients and the
    symbolic construction (which substitutes polynomials for ip/nw/nv).
    """
    if kernel.kind == "frobenius":
        return ip ** kernel.power
    return 6.0 * ip ** 3 + 9.0 * nw * nv * ip


def kernel_eval(kernel: Kernel, w: np.ndarray, v: np.ndarray) -> float:
    w = np.asarray(w, dtype=float)
    v = np.asarray(v, dtype=float)
    if w.shape != v.shape or w.ndim != 1:
        raise ValueError(f"kernel arguments must be equal-length vectors, got {w.shape} and {v.shape}")
    return float(pair_eval(kernel, float(w @ v), float(w @ w), float(v @ v)))


def loss(kernel: Kernel, W: np.ndarray) -> float:
    """Kernel-formulated loss against the orthonormal target (V = I_d).

    Cross inner products <w_i, e_j> are just the entries of W, so the
    whole evaluation runs on the Gram matrix of W.
    """
    W = check_weight_matrix(W)
    d = W.shape[1]
    G = W @ W.T
    n = np.diag(G).copy()
    ww = pair_eval(kernel, G, n[:, None], n[None, :]).sum()
    wt = pair_eval(kernel, W, n[:, None], 1.0).sum()
    tt = d * kernel.unit_value
    return float(ww - 2.0 * wt + tt)


# ---------------------------------------------------------------------------
# Dense-tensor oracles (independent of the kernel path)
# ---------------------------------------------------------------------------

_DENSE_DIM_CAP = 12


def sym_rank_one_sum(W: np.ndarray) -> np.ndarray:
    """Dense d x d x d tensor sum_i w_i^(x3)."""
    W = np.asarray(W, dtype=float)
    return np.einsum("ri,rj,rk->ijk", W, W, W)


def dense_target(d: int) -> np.ndarray:
    T = np.zeros((d, d, d))
    idx = np.arange(d)
    T[idx, idx, idx] = 1.0
    return T


def gaussian_moment(exponents) -> int:
    """E[x1^r1 ... xd^rd] for x ~ N(0, I): zero if any r_i is odd,
    otherwise the product of double factorials (r_i - 1)!!."""
    out = 1
    for r in exponents:
        r = int(r)
        if r < 0:
            raise ValueError("moment exponents must be nonnegative")
        if r % 2 == 1:
            return 0
        out *= _double_factorial(r - 1)
    return out


def _double_factorial(m: int) -> int:
    if m <= 0:
        return 1
    out = 1
    while m > 0:
        out *= m
        m -= 2
    return out


def _multi_indices(d: int):
    """Sorted index triples (i <= j <= k) with their multinomial weight 3!/(p!)."""
    triples = list(itertools.combinations_with_replacement(range(d), 3))
    weights = np.empty(len(triples))
    expo = np.zeros((len(triples), d), dtype=np.int64)
    for t, (i, j, k) in enumerate(triples):
        expo[t, i] += 1
        expo[t, j] += 1
        expo[t, k] += 1
        weights[t] = math.factorial(3) / np.prod([math.factorial(int(p)) for p in expo[t] if p])
    return triples, expo, weights


def gauss_inner_dense(S: np.ndarray, T: np.ndarray) -> float:
    """Cubic-Gaussian inner product of two symmetric order-3 tensors via
    exact Gaussian moments of the associated cubic forms.

    With P_S(x) = <S, x^(x3)> = sum_p a_p x^p, the inner product is
    sum_{p,q} h_{p+q} a_p b_q where h_r is the Gaussian moment of x^r.
    Brute force over all multi-index pairs; usable for d <= 12.
    """
    d = S.shape[0]
    if d > _DENSE_DIM_CAP:
        raise ValueError(f"dense oracle capped at d = {_DENSE_DIM_CAP}")
    triples, expo, weights = _multi_indices(d)
    a = np.array([S[t] for t in triples]) * weights
    b = np.array([T[t] for t in triples]) * weights
    # h_{p+q} factored over coordinates; (p+q)_i <= 6 so a lookup suffices.
    dfact = np.array([1, 0, 1, 0, 3, 0, 15], dtype=float)
    r = expo[:, None, :] + expo[None, :, :]
    h = np.prod(dfact[r], axis=2)
    return float(a @ h @ b)


def loss_dense_oracle(kernel: Kernel, W: np.ndarray) -> float:
    """Independent loss evaluation through dense tensors.

    Frobenius: entrywise sum of squares of S - T.  Gauss: moment-sum
    inner product of S - T with itself.  Never calls `loss`.
    """
    W = check_weight_matrix(W)
    d = W.shape[1]
    if d > _DENSE_DIM_CAP:
        raise ValueError(f"dense oracle capped at d = {_DENSE_DIM_CAP}")
    X = sym_rank_one_sum(W) - dense_target(d)
    if kernel.kind == "frobenius":
        if kernel.power != 3:
            raise ValueError("dense oracle implemented for order-3 tensors only")
        return float(np.sum(X * X))
    return gauss_inner_dense(X, X)


def is_permutation_matrix(W: np.ndarray, tol: float = 1e-8) -> bool:
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        return False
    P = np.rint(W)
    if np.max(np.abs(W - P)) > tol:
        return False
    if not np.all((P == 0) | (P == 1)):
        return False
    return bool(np.all(P.sum(axis=0) == 1) and np.all(P.sum(axis=1) == 1))
