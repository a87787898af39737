import numpy as np
import pytest

from tensorscape.core import (Kernel, dense_target, gauss_inner_dense,
                              gaussian_moment, is_permutation_matrix,
                              kernel_eval, loss, loss_dense_oracle,
                              sym_rank_one_sum)
from tensorscape.rng import make_rng

KF = Kernel.frobenius()
KG = Kernel.gauss()


def test_kernel_eval_gauss_values():
    e1 = np.array([1.0, 0.0, 0.0])
    e2 = np.array([0.0, 1.0, 0.0])
    assert kernel_eval(KG, e1, e1) == 15.0
    assert kernel_eval(KG, e1, e2) == 0.0
    # cross-checked against the Gaussian-moment oracle below
    w = np.array([1.0, 1.0, 0.0])
    assert kernel_eval(KG, w, e1) == 24.0
    S = sym_rank_one_sum(w[None, :])
    T = sym_rank_one_sum(e1[None, :])
    assert gauss_inner_dense(S, T) == pytest.approx(24.0, abs=1e-12)


def test_kernel_symmetry_random():
    rng = make_rng(0, "kernel-sym")
    for k in (KF, KG):
        for _ in range(25):
            w, v = rng.standard_normal((2, 5))
            assert kernel_eval(k, w, v) == pytest.approx(kernel_eval(k, v, w), rel=1e-14)


def test_kernel_validation():
    with pytest.raises(ValueError):
        kernel_eval(KF, np.ones(3), np.ones(4))
    with pytest.raises(ValueError):
        Kernel("frobenius", 1)
    with pytest.raises(ValueError):
        Kernel("wavelet")


def test_loss_reference_values():
    assert loss(KF, np.eye(3)) == 0.0
    assert loss(KF, np.zeros((3, 3))) == 3.0
    assert loss(KF, np.ones((3, 3)) / 3.0) == pytest.approx(8.0 / 3.0, rel=1e-14)
    assert loss(KG, np.zeros((3, 3))) == 45.0


def test_loss_nonnegative_random():
    rng = make_rng(1, "loss-nonneg")
    for k in (KF, KG):
        for _ in range(40):
            W = rng.standard_normal((4, 4))
            assert loss(k, W) >= -1e-9


def test_dense_oracle_equivalence():
    rng = make_rng(2, "oracle")
    for k in (KF, KG):
        for d in (3, 5, 8):
            for _ in range(5):
                W = rng.standard_normal((d, d)) * 0.8
                a = loss(k, W)
                b = loss_dense_oracle(k, W)
                assert abs(a - b) <= 1e-10 * (1.0 + abs(a))


def test_dense_oracle_cap():
    with pytest.raises(ValueError):
        loss_dense_oracle(KF, np.eye(13))


def test_permutation_matrices_have_zero_loss():
    import itertools
    for d in (2, 3, 4):
        for perm in itertools.permutations(range(d)):
            P = np.zeros((d, d))
            P[np.arange(d), perm] = 1.0
            assert abs(loss(KF, P)) <= 1e-12
            assert abs(loss(KG, P)) <= 1e-12
    rng = make_rng(3, "perm")
    for d in (6, 8):
        for _ in range(10):
            perm = rng.permutation(d)
            P = np.zeros((d, d))
            P[np.arange(d), perm] = 1.0
            assert abs(loss(KF, P)) <= 1e-12
            assert abs(loss(KG, P)) <= 1e-12


def test_gaussian_moment():
    assert gaussian_moment((2, 2)) == 1
    assert gaussian_moment((1, 3)) == 0
    assert gaussian_moment((6,)) == 15
    assert gaussian_moment(()) == 1
    assert gaussian_moment((4, 2)) == 3
    with pytest.raises(ValueError):
        gaussian_moment((-2,))


def test_dense_target_symmetry():
    T = dense_target(4)
    assert T.shape == (4, 4, 4)
    S = sym_rank_one_sum(make_rng(4, "sym").standard_normal((3, 4)))
    for perm in ((0, 2, 1), (1, 0, 2), (2, 1, 0)):
        assert np.allclose(S, np.transpose(S, perm))


def test_is_permutation_matrix():
    assert is_permutation_matrix(np.eye(4))
    swapped = np.eye(3)[[1, 0, 2]]
    assert is_permutation_matrix(swapped)
    C4 = np.zeros((4, 4))
    C4[:2, :2] = np.eye(2)
    C4[2:, 2:] = 0.5
    assert not is_permutation_matrix(C4)
    assert not is_permutation_matrix(np.ones((3, 3)))
    assert is_permutation_matrix(np.eye(3) + 1e-10)
    assert not is_permutation_matrix(np.eye(3) + 1e-6)
