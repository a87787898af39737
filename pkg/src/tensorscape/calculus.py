"""Analytic gradient and Hessian of the kernel losses.

Layout convention: M(k,d) is identified with R^(k*d) by stacking the
rows of W (C-order `reshape(-1)`), so the Hessian is a (k*d) x (k*d)
symmetric matrix of blocks indexed by row pairs.

For a symmetric kernel k the loss gradient row i is
    2 [ sum_j k_w(w_i, w_j) - sum_j k_w(w_i, e_j) ]
with k_w the partial derivative in the first argument; the Hessian has
off-diagonal blocks 2 k_wv(w_i, w_j) and a diagonal correction from
k_ww.  Both derivative kernels are assembled here in closed form:

  frobenius power n:
    k_w(w,v)  = n <w,v>^(n-1) v
    k_wv(w,v) = n <w,v>^(n-1) I + n(n-1) <w,v>^(n-2) v w^T
    k_ww(w,v) = n(n-1) <w,v>^(n-2) v v^T
  gauss (6<w,v>^3 + 9|w|^2 |v|^2 <w,v>):
    k_w(w,v)  = 18 <w,v>^2 v + 18 |v|^2 <w,v> w + 9 |w|^2 |v|^2 v
    k_wv(w,v) = 36 <w,v> (v w^T + w v^T) + 18 |v|^2 w w^T + 18 |w|^2 v v^T
                + (18 <w,v>^2 + 9 |w|^2 |v|^2) I
    k_ww(w,v) = 36 <w,v> v v^T + 18 |v|^2 (w v^T + v w^T) + 18 |v|^2 <w,v> I

Everything is vectorized over rows; d = 64 (4096 x 4096 Hessians) is
routine.
"""

from __future__ import annotations

import numpy as np

from tensorscape.core import Kernel, check_weight_matrix, loss

__all__ = [
    "gradient",
    "gradient_matrix",
    "hessian",
    "fd_check_gradient",
    "fd_check_hessian",
    "hessian_symmetry_defect",
    "eigenpair_critical_point",
]


def gradient_matrix(kernel: Kernel, W: np.ndarray) -> np.ndarray:
    """Loss gradient arranged as a k x d matrix (same shape as W)."""
    W = check_weight_matrix(W)
    G = W @ W.T
    if kernel.kind == "frobenius":
        n = kernel.power
        return 2.0 * n * (G ** (n - 1) @ W - W ** (n - 1))
    nr = np.diag(G).copy()
    m = nr @ W
    out = 36.0 * ((G * G) @ W - W * W)
    out += 36.0 * (G @ nr - W.sum(axis=1))[:, None] * W
    out += 18.0 * nr[:, None] * (m - 1.0)[None, :]
    return out


def gradient(kernel: Kernel, W: np.ndarray) -> np.ndarray:
    """Stacked-row gradient vector of length k*d."""
    return gradient_matrix(kernel, W).reshape(-1)


def _hessian_frobenius(n: int, W: np.ndarray) -> np.ndarray:
    k, d = W.shape
    G = W @ W.T
    Gn1 = G ** (n - 1)
    Gn2 = G ** (n - 2)
    I = np.eye(d)
    H = np.einsum("ij,ab->iajb", 2.0 * n * Gn1, I)
    H += np.einsum("ij,ja,ib->iajb", 2.0 * n * (n - 1) * Gn2, W, W)
    D = np.einsum("il,la,lb->iab", 2.0 * n * (n - 1) * Gn2, W, W)
    idx = np.arange(d)
    D[:, idx, idx] -= 2.0 * n * (n - 1) * W ** (n - 2)
    ii = np.arange(k)
    H[ii, :, ii, :] += D
    return H.reshape(k * d, k * d)


def _hessian_gauss(W: np.ndarray) -> np.ndarray:
    k, d = W.shape
    G = W @ W.T
    nr = np.diag(G).copy()
    I = np.eye(d)
    H = np.einsum("ij,ja,ib->iajb", 72.0 * G, W, W)
    H += np.einsum("ij,ia,jb->iajb", 72.0 * G, W, W)
    H += np.einsum("j,ia,ib->iajb", 36.0 * nr, W, W)
    H += np.einsum("i,ja,jb->iajb", 36.0 * nr, W, W)
    H += np.einsum("ij,ab->iajb", 36.0 * G * G + 18.0 * np.outer(nr, nr), I)
    # diagonal-block correction from k_ww sums
    m = nr @ W
    rs = W.sum(axis=1)
    D = np.einsum("il,la,lb->iab", 72.0 * G, W, W)
    idx = np.arange(d)
    D[:, idx, idx] -= 72.0 * W
    shift = m - 1.0
    D += 36.0 * np.einsum("ia,b->iab", W, shift)
    D += 36.0 * np.einsum("a,ib->iab", shift, W)
    D += np.einsum("i,ab->iab", 36.0 * (G @ nr - rs), I)
    ii = np.arange(k)
    H = H.reshape(k, d, k, d)
    H[ii, :, ii, :] += D
    return H.reshape(k * d, k * d)


def hessian(kernel: Kernel, W: np.ndarray) -> np.ndarray:
    W = check_weight_matrix(W)
    if kernel.kind == "frobenius":
        return _hessian_frobenius(kernel.power, W)
    return _hessian_gauss(W)


def hessian_symmetry_defect(H: np.ndarray) -> float:
    scale = np.max(np.abs(H))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(H - H.T)) / scale)


def fd_check_gradient(kernel: Kernel, W: np.ndarray, step: float = 1e-6) -> float:
    """Max relative error of the analytic gradient against central
    differences of the loss."""
    if step <= 0.0:
        raise ValueError("step must be positive")
    W = check_weight_matrix(W)
    g = gradient_matrix(kernel, W)
    worst = 0.0
    for i in range(W.shape[0]):
        for j in range(W.shape[1]):
            Wp = W.copy()
            Wp[i, j] += step
            Wm = W.copy()
            Wm[i, j] -= step
            fd = (loss(kernel, Wp) - loss(kernel, Wm)) / (2.0 * step)
            worst = max(worst, abs(fd - g[i, j]) / (1.0 + abs(g[i, j])))
    return worst


def fd_check_hessian(kernel: Kernel, W: np.ndarray, step: float = 1e-5) -> float:
    """Max relative error of the analytic Hessian against central
    differences of the analytic gradient."""
    if step <= 0.0:
        raise ValueError("step must be positive")
    W = check_weight_matrix(W)
    k, d = W.shape
    H = hessian(kernel, W)
    scale = 1.0 + np.max(np.abs(H))
    worst = 0.0
    for i in range(k):
        for j in range(d):
            Wp = W.copy()
            Wp[i, j] += step
            Wm = W.copy()
            Wm[i, j] -= step
            col = (gradient(kernel, Wp) - gradient(kernel, Wm)) / (2.0 * step)
            worst = max(worst, np.max(np.abs(col - H[:, i * d + j])) / scale)
    return float(worst)


def eigenpair_critical_point(eigvecs, eigvals, n: int = 3, d: int | None = None,
                             k: int | None = None, tol: float = 1e-10) -> np.ndarray:
    """Critical point of the Frobenius loss generated by orthogonal
    eigenpairs of the target tensor.

    For each pair (w, lam) with T_e w^(n-1) = lam w, the row t*w with
    t = (lam / <w,w>^(n-1))^(1/n) kills its own gradient term; rows for
    distinct orthogonal eigenvectors do not interact.  Remaining rows
    are zero.
    """
    vecs = [np.asarray(v, dtype=float) for v in eigvecs]
    vals = [float(l) for l in eigvals]
    if len(vecs) != len(vals):
        raise ValueError("need one eigenvalue per eigenvector")
    if d is None:
        if not vecs:
            raise ValueError("need d when the eigenpair list is empty")
        d = vecs[0].size
    k = d if k is None else k
    if len(vecs) > k:
        raise ValueError("more eigenpairs than rows")
    for a in range(len(vecs)):
        for b in range(a + 1, len(vecs)):
            if abs(vecs[a] @ vecs[b]) > tol * (1.0 + np.linalg.norm(vecs[a]) * np.linalg.norm(vecs[b])):
                raise ValueError("eigenvectors must be pairwise orthogonal")
    W = np.zeros((k, d))
    for r, (w, lam) in enumerate(zip(vecs, vals)):
        ww = float(w @ w)
        if ww == 0.0:
            raise ValueError("zero eigenvector")
        # eigenpair relation for the diagonal target: (T_e w^2)_i = w_i^2
        lhs = w ** (n - 1)
        if np.max(np.abs(lhs - lam * w)) > tol * (1.0 + abs(lam) + np.max(np.abs(lhs))):
            raise ValueError("(vector, value) is not an eigenpair of the target tensor")
        base = lam / ww ** (n - 1)
        if n % 2 == 0 and base < 0.0:
            raise ValueError("negative scaling under an even root")
        t = np.sign(base) * abs(base) ** (1.0 / n) if n % 2 == 1 else base ** (1.0 / n)
        W[r] = t * w
    return W
