import numpy as np
import pytest

from tensorscape.calculus import (eigenpair_critical_point, fd_check_gradient,
                                  fd_check_hessian, gradient, gradient_matrix,
                                  hessian, hessian_symmetry_defect)
from tensorscape.core import Kernel
from tensorscape.families import construct, real_cbrt
from tensorscape.rng import make_rng
from tensorscape.symmetry import PermPair, act, act_vector

KF = Kernel.frobenius()
KG = Kernel.gauss()


def test_gradient_zero_at_known_critical_points():
    assert np.max(np.abs(gradient(KF, np.eye(4)))) == 0.0
    # continuum member at t = 0.7
    t = 0.7
    W = np.zeros((4, 4))
    W[:2, :2] = np.eye(2)
    W[2, 2] = real_cbrt(1 - t ** 3)
    W[3, 2] = t
    assert np.max(np.abs(gradient(KF, W))) <= 1e-12
    assert np.max(np.abs(gradient(KF, np.ones((5, 5)) / 5.0))) <= 1e-14


def test_fd_gradient_and_hessian_agreement():
    rng = make_rng(10, "fd")
    for k in (KF, KG):
        for d in (3, 4, 5):
            for _ in range(50):
                W = rng.standard_normal((d, d))
                assert fd_check_gradient(k, W, step=1e-6) <= 1e-5
    for k in (KF, KG):
        for d in (3, 4, 5):
            for _ in range(6):
                W = rng.standard_normal((d, d))
                assert fd_check_hessian(k, W, step=1e-5) <= 1e-4


def test_fd_step_validation():
    with pytest.raises(ValueError):
        fd_check_gradient(KF, np.eye(3), step=0.0)


def test_hessian_identity_block_structure():
    d = 4
    H = hessian(KF, np.eye(d))
    want = np.zeros((d * d, d * d))
    for i in range(d):
        block = 6.0 * np.eye(d)
        block[i, i] += 12.0
        want[i * d:(i + 1) * d, i * d:(i + 1) * d] = block
    assert np.array_equal(H, want)
    eigs = np.sort(np.linalg.eigvalsh(H))
    assert np.allclose(eigs[: d * d - d], 6.0) and np.allclose(eigs[d * d - d:], 18.0)


def test_hessian_zero_matrix():
    for k in (KF, KG):
        assert np.max(np.abs(hessian(k, np.zeros((4, 4))))) == 0.0


def test_hessian_symmetry_random():
    rng = make_rng(11, "hess-sym")
    for k in (KF, KG):
        for _ in range(10):
            H = hessian(k, rng.standard_normal((5, 5)))
            assert hessian_symmetry_defect(H) <= 1e-10


def test_loss_invariance_and_gradient_equivariance():
    from tensorscape.core import loss
    rng = make_rng(12, "equivariance")
    d = 4
    for k in (KF, KG):
        for _ in range(100):
            W = rng.standard_normal((d, d))
            rows = tuple(rng.permutation(d))
            cols = tuple(rng.permutation(d))
            sigma = PermPair(rows, cols)
            Ws = act(sigma, W)
            assert abs(loss(k, Ws) - loss(k, W)) <= 1e-10 * (1.0 + abs(loss(k, W)))
            g = gradient(k, W)
            gs = gradient(k, Ws)
            assert np.max(np.abs(gs - act_vector(sigma, g, d, d))) \
                <= 1e-10 * (1.0 + np.max(np.abs(g)))


def test_eigenpair_critical_point():
    d = 4
    vecs = [np.eye(d)[i] for i in range(d - 1)]
    W = eigenpair_critical_point(vecs, [1.0] * (d - 1), d=d)
    assert np.allclose(W, construct("C5", d).W)
    assert np.max(np.abs(gradient(KF, W))) <= 1e-12

    W = eigenpair_critical_point([np.eye(3)[0]], [1.0], d=3)
    assert np.allclose(W, np.diag([1.0, 0.0, 0.0]))
    assert np.max(np.abs(gradient(KF, W))) <= 1e-12

    W = eigenpair_critical_point([], [], d=4)
    assert np.array_equal(W, np.zeros((4, 4)))

    # sums of unit vectors are target eigenpairs too (entrywise squares)
    W = eigenpair_critical_point([np.array([1.0, 1.0, 0.0])], [1.0], d=3)
    assert np.max(np.abs(gradient(KF, W))) <= 1e-12

    with pytest.raises(ValueError):
        eigenpair_critical_point([np.array([1.0, 0.0]), np.array([1.0, 1.0])], [1.0, 1.0])
    with pytest.raises(ValueError):
        # not an eigenpair of the diagonal target
        eigenpair_critical_point([np.array([1.0, 2.0, 0.0])], [1.0], d=3)
