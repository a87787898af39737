"""Radial sets, the catalog of radial curves, and saddle certification
by sphere-restricted minimization.

A point x is radial for the center c when the loss gradient at x and
the displacement x - c are parallel; every minimizer of the loss on a
sphere about c is radial.  The catalog curves make the parallelism, the
closed-form losses, and the curve connections explicitly checkable, and
projected gradient descent on spheres produces certified upper bounds
on the sphere minimum -- enough to separate high-order saddles from
minima when the Hessian is positive semidefinite but singular.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from tensorscape.calculus import gradient_matrix
from tensorscape.core import Kernel, loss
from tensorscape.families import construct, real_cbrt
from tensorscape.rng import make_rng
from tensorscape.symmetry import FixedPointSpace, fixed_point_space

__all__ = [
    "RadialCurve",
    "radial_residual",
    "curve",
    "classify_curve",
    "sphere_min",
    "certify_saddle",
    "certified_descent_count",
    "curve_connections",
]


def radial_residual(kernel: Kernel, c: np.ndarray, x: np.ndarray) -> float:
    """Scale-normalized parallelism defect of (gradient(x), x - c):
    the largest 2x2 minor of the pair, divided by
    (1 + |g|_inf)(1 + |x-c|_inf).  Zero exactly on the radial set."""
    c = np.asarray(c, dtype=float)
    x = np.asarray(x, dtype=float)
    delta = (x - c).reshape(-1)
    if not np.any(delta):
        raise ValueError("x must differ from the center")
    g = gradient_matrix(kernel, x).reshape(-1)
    minors = np.abs(np.outer(g, delta) - np.outer(delta, g))
    return float(np.max(minors) / ((1.0 + np.max(np.abs(g))) * (1.0 + np.max(np.abs(delta)))))


@dataclass(frozen=True)
class RadialCurve:
    """A catalog radial curve t -> W(t) with its closed-form loss."""

    name: str
    d: int
    block: int | None = None

    def base(self) -> np.ndarray:
        return self.evaluate(0.0)

    def evaluate(self, t: float) -> np.ndarray:
        d = self.d
        t = float(t)
        if self.name == "Gamma1":
            W = np.eye(d)
            W[d - 1, d - 1] = t
            return W
        if self.name == "Gamma2":
            W = (1.0 + t) * np.eye(d)
            W[d - 1, d - 1] = 0.0
            return W
        if self.name == "Gamma3":
            W = np.zeros((d, d))
            W[: d - 2, : d - 2] = np.eye(d - 2)
            W[d - 2, d - 2] = real_cbrt(1.0 - t ** 3)
            W[d - 1, d - 2] = t
            return W
        if self.name == "GammaBlock":
            i = self.block
            W = np.zeros((d, d))
            W[: d - i, : d - i] = np.eye(d - i)
            W[d - i, d - i] = t
            return W
        raise KeyError(self.name)

    def loss_formula(self, t: float) -> float:
        t = float(t)
        if self.name == "Gamma1":
            return t ** 6 - 2.0 * t ** 3 + 1.0
        if self.name == "Gamma2":
            return (t ** 6 + 6 * t ** 5 + 15 * t ** 4 + 18 * t ** 3 + 9 * t ** 2) * (self.d - 1) + 1.0
        if self.name == "Gamma3":
            return 1.0
        if self.name == "GammaBlock":
            return t ** 6 - 2.0 * t ** 3 + float(self.block)
        raise KeyError(self.name)


def curve(name: str, d: int, block: int | None = None) -> RadialCurve:
    if name in ("Gamma1", "Gamma2", "Gamma3"):
        if d < 3:
            raise ValueError(f"{name} needs d >= 3")
        return RadialCurve(name, d)
    if name == "GammaBlock":
        # block = d is the zero matrix's own descent curve t -> t e_11
        if block is None or not (1 <= block <= d):
            raise ValueError("GammaBlock needs 1 <= block <= d")
        return RadialCurve(name, d, block)
    raise KeyError(f"unknown curve {name!r}")


def classify_curve(cv: RadialCurve, window: float = 0.2,
                   kernel: Kernel = Kernel.frobenius()) -> tuple[str, int | None, float]:
    """Monotonicity and leading order of t -> loss(curve(t)) on (0, window].

    Returns (kind, order, slope): kind is Descent/Ascent/Level, order the
    rounded log-log slope of |loss(t) - loss(0)| over a decade of t.
    """
    if window <= 0:
        raise ValueError("window must be positive")
    base_loss = loss(kernel, cv.base())
    ts = np.geomspace(window / 10.0, window, 25)
    deltas = np.array([loss(kernel, cv.evaluate(t)) - base_loss for t in ts])
    scale = 1.0 + abs(base_loss)
    if np.max(np.abs(deltas)) <= 1e-12 * scale:
        return "Level", None, 0.0
    diffs = np.diff(deltas)
    if np.all(deltas < 0) and np.all(diffs < 0):
        kind = "Descent"
    elif np.all(deltas > 0) and np.all(diffs > 0):
        kind = "Ascent"
    else:
        raise ValueError("loss is not monotone on the window")
    slope = np.polyfit(np.log(ts), np.log(np.abs(deltas)), 1)[0]
    return kind, int(round(slope)), float(slope)


# ---------------------------------------------------------------------------
# Sphere-restricted minimization (batched projected gradient descent)
# ---------------------------------------------------------------------------


def _gradient_batch(kernel: Kernel, W: np.ndarray) -> np.ndarray:
    G = np.einsum("rik,rjk->rij", W, W)
    if kernel.kind == "frobenius":
        p = kernel.power
        return 2.0 * p * (np.einsum("rij,rja->ria", G ** (p - 1), W) - W ** (p - 1))
    n = np.einsum("rii->ri", G)
    m = np.einsum("ri,ria->ra", n, W)
    out = 36.0 * (np.einsum("rij,rja->ria", G * G, W) - W * W)
    out += 36.0 * (np.einsum("rij,rj->ri", G, n) - W.sum(axis=2))[:, :, None] * W
    out += 18.0 * n[:, :, None] * (m[:, None, :] - 1.0)
    return out


def _loss_delta_batch(kernel: Kernel, c: np.ndarray, W: np.ndarray) -> np.ndarray:
    """loss(W) - loss(c) for a batch, without catastrophic cancellation.

    Every cubic difference is expanded as
    a^3 - b^3 = (a - b)(a^2 + ab + b^2) with the increment a - b built
    directly from D = W - c, so the result carries full relative
    precision even when the deficit is ~1e-12 of the loss itself (the
    regime of small spheres around unit-loss saddles).
    """
    D = W - c[None, :, :]
    G0 = c @ c.T
    dG = (np.einsum("rik,jk->rij", D, c) + np.einsum("ik,rjk->rij", c, D)
          + np.einsum("rik,rjk->rij", D, D))
    G1 = G0[None, :, :] + dG

    def cube_diff(delta, a, b):
        return delta * (a * a + a * b + b * b)

    pair = cube_diff(dG, G1, G0[None, :, :])
    cross = cube_diff(D, c[None, :, :] + D, c[None, :, :])
    if kernel.kind == "frobenius":
        if kernel.power != 3:
            raise ValueError("difference evaluation implemented for order 3")
        return pair.sum((1, 2)) - 2.0 * cross.sum((1, 2))
    n0 = np.diag(G0).copy()
    dn = np.einsum("rii->ri", dG)
    n1 = n0[None, :] + dn
    # nw nv ip - nw0 nv0 ip0 telescoped so every term carries an increment
    pair_g = 6.0 * pair
    pair_g += 9.0 * (dn[:, :, None] * n1[:, None, :] * G1
                     + n0[None, :, None] * dn[:, None, :] * G1
                     + n0[None, :, None] * n0[None, None, :] * dG)
    W1 = c[None, :, :] + D
    cross_g = 6.0 * cross
    cross_g += 9.0 * (dn[:, :, None] * W1 + n0[None, :, None] * D)
    return pair_g.sum((1, 2)) - 2.0 * cross_g.sum((1, 2))


def sphere_min(kernel: Kernel, c: np.ndarray, r: float,
               pattern: str | FixedPointSpace | None = None,
               restarts: int = 16, seed: int = 0, max_iter: int = 10_000,
               tol: float = 1e-12) -> tuple[np.ndarray, float, float]:
    """Best-effort minimizer of the loss on the radius-r sphere about c,
    optionally intersected with a fixed-point space containing c.

    Projected gradient descent with per-restart backtracking from
    `restarts` random directions, optimizing the cancellation-free
    difference loss(W) - loss(c).  Returns (minimizer, value, delta)
    where delta = value - loss(c) keeps full relative precision on tiny
    spheres; the value is a certified upper bound on the sphere minimum
    (the minimizer is an actual point of the sphere).  Coordinates on a
    fixed-point space are scaled by the square-root Gram weights so
    sphere radii match ambient Frobenius radii.
    """
    if r <= 0:
        raise ValueError("radius must be positive")
    c = np.asarray(c, dtype=float)
    rng = make_rng(seed, "sphere-min", c.shape[0], int(1e6 * r))

    space = None
    if pattern is not None:
        space = pattern if isinstance(pattern, FixedPointSpace) else fixed_point_space(pattern, c.shape[1])
        xi_c = space.coords(c)
        if space.projection_defect(c) > 1e-12:
            raise ValueError("center does not lie in the fixed-point space")
        sq = np.sqrt(space.gram)

        def objective(U):  # U: (R, N) unit rows; objective is loss(W)-loss(c)
            xi = xi_c[None, :] + r * U / sq[None, :]
            W = np.einsum("rn,nij->rij", xi, space.basis)
            f = _loss_delta_batch(kernel, c, W)
            g_amb = _gradient_batch(kernel, W)
            pull = np.einsum("ria,nia->rn", g_amb, space.basis) / space.gram[None, :]
            grad_u = r * pull * sq[None, :]
            return f, grad_u

        dim = space.dim
    else:

        def objective(U):  # U: (R, k*d) unit rows; objective is loss(W)-loss(c)
            W = c[None, :, :] + r * U.reshape(-1, *c.shape)
            f = _loss_delta_batch(kernel, c, W)
            g = r * _gradient_batch(kernel, W).reshape(U.shape)
            return f, g

        dim = c.size

    U = rng.standard_normal((restarts, dim))
    U /= np.linalg.norm(U, axis=1, keepdims=True)
    f, g = objective(U)
    step = np.full(restarts, 0.3)
    for _ in range(max_iter):
        tang = g - np.einsum("ri,ri->r", g, U)[:, None] * U
        tnorm = np.linalg.norm(tang, axis=1)
        scale = tol * (r * r + np.abs(f))
        active = (tnorm > scale) & (step > 1e-12)
        if not np.any(active):
            break
        # normalized-direction step: the step size is an arc length, so
        # progress does not stall on the r^2-flat objective of tiny spheres
        direction = tang / np.maximum(tnorm, 1e-300)[:, None]
        trial = U - step[:, None] * direction
        trial /= np.linalg.norm(trial, axis=1, keepdims=True)
        ft, gt = objective(trial)
        better = (ft < f - 1e-4 * step * tnorm) & active
        U[better] = trial[better]
        f[better] = ft[better]
        g[better] = gt[better]
        step[better] = np.minimum(step[better] * 1.3, 1.0)
        step[~better & active] *= 0.5
    best = int(np.argmin(f))
    if space is not None:
        xi = xi_c + r * U[best] / np.sqrt(space.gram)
        W_best = space.embed(xi)
    else:
        W_best = c + r * U[best].reshape(c.shape)
    delta = float(f[best])
    return W_best, loss(kernel, c) + delta, delta


def certify_saddle(name: str, d: int, r_grid=None, kernel: Kernel | None = None,
                   pattern: str | None = None, restarts: int = 16,
                   seed: int = 0) -> dict:
    """Certify the saddle/minimum character of a catalog point by sphere
    minimization: a saddle must have sphere values strictly below its
    loss on every tested radius; the deficit's log-log slope estimates
    the descent order (2 r^3 - r^6 for the unit-loss block saddles)."""
    from tensorscape.families import parse_family_name

    spec = parse_family_name(name)
    kernel = kernel or spec.kernel
    point = construct(name, d)
    if r_grid is None:
        r_grid = np.geomspace(0.02, 0.2, 5)
    rows = []
    for r in r_grid:
        W_star, value, delta = sphere_min(kernel, point.W, float(r), pattern=pattern,
                                          restarts=restarts, seed=seed)
        rows.append({"r": float(r), "sphere_value": value, "deficit": -delta})
    deficits = np.array([row["deficit"] for row in rows])
    rs = np.array([row["r"] for row in rows])
    certified = bool(np.all(deficits > 1e-9))
    fitted = float(np.polyfit(np.log(rs), np.log(np.maximum(deficits, 1e-300)), 1)[0]) \
        if certified else None
    return {
        "family": name,
        "d": d,
        "loss": point.loss_value,
        "rows": rows,
        "verdict": "SaddleCertified" if certified else "NotASaddle",
        "fitted_order": fitted,
    }


def certified_descent_count(name: str, d: int) -> int:
    """Curve-certified higher-order descent directions of a singular
    catalog point: one per fresh (row, column) slot of the zero block of
    the partial identities (i^2 for the block-i family, d^2 for the zero
    matrix), each realized by a descent radial curve equivalent to the
    block curve under the point's isotropy.  The representative curve is
    re-classified numerically before counting; nondegenerate families
    have none."""
    from tensorscape.families import parse_family_name

    spec = parse_family_name(name)
    if spec.name == "C0":
        i = d
    elif spec.name == "C5":
        i = 1
    elif spec.name == "Cblock":
        i = int(spec.param)
    else:
        return 0
    kind, _, _ = classify_curve(curve("GammaBlock", d, i))
    if kind != "Descent":
        raise RuntimeError(f"representative descent curve of {name} failed to classify")
    return i * i


def curve_connections(d: int) -> dict:
    """The three catalog curve connections, checked by direct matrix
    comparison: the descent curve ends on a permutation matrix, the
    ascent curve reaches the zero matrix at t = -1, and the level curve
    at t = 1 is a row swap away from its base point."""
    from tensorscape.core import is_permutation_matrix
    from tensorscape.symmetry import PermPair, act

    g1 = curve("Gamma1", d)
    g2 = curve("Gamma2", d)
    g3 = curve("Gamma3", d)
    end1 = g1.evaluate(1.0)
    end2 = g2.evaluate(-1.0)
    end3 = g3.evaluate(1.0)
    c5 = construct("C5", d).W
    swap = list(range(d))
    swap[d - 2], swap[d - 1] = swap[d - 1], swap[d - 2]
    sigma = PermPair(tuple(swap), tuple(range(d)))
    return {
        "gamma1_end_is_permutation": bool(is_permutation_matrix(end1)),
        "gamma2_end_is_zero": bool(np.max(np.abs(end2)) <= 1e-14),
        "gamma3_end_on_c5_orbit": bool(np.max(np.abs(act(sigma, end3) - c5)) <= 1e-14),
    }
