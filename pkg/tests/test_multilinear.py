import numpy as np
import pytest

from radonlike.errors import ChainViolation, DependentInput, RankDeficient, SingularBasis
from radonlike.multilinear import (dual_basis, frame_equivalent, frame_matrix, kernel_onb,
                                   multilinear_frame_sum, orthogonalize_preserving,
                                   random_orthogonal, realign_basis)


def test_realign_preserves_frame_and_chain(rng):
    v = rng.standard_normal((3, 3))
    chain = [np.eye(3)[1:], np.eye(3)[2:]]
    u = realign_basis(v, chain)
    np.testing.assert_allclose(frame_matrix(u), frame_matrix(v), atol=1e-12)
    # last vector spans the smallest space, last two span the next one
    assert np.allclose(u[2, :2], 0, atol=1e-12)
    assert np.allclose(u[1:, 0], 0, atol=1e-12)


def test_realign_two_vectors_line():
    v = np.array([[1.0, 1.0], [1.0, -1.0]])
    u = realign_basis(v, [np.array([[0.0, 1.0]])])
    assert abs(u[1, 0]) < 1e-12 and u[1, 1] != 0
    np.testing.assert_allclose(frame_matrix(u), frame_matrix(v), atol=1e-12)


def test_realign_rejects_bad_chain():
    v = np.eye(3)[:2]
    with pytest.raises(ChainViolation):
        realign_basis(v, [np.array([[0.0, 0.0, 1.0]])])


def test_orthogonalize_preserving(rng):
    v = rng.standard_normal((3, 4))
    u = orthogonalize_preserving(v)
    G = u @ u.T
    assert np.allclose(G - np.diag(np.diag(G)), 0, atol=1e-12)
    np.testing.assert_allclose(frame_matrix(u), frame_matrix(v), atol=1e-12)
    w = np.diag([1.0, 2.0, 3.0])
    assert np.array_equal(orthogonalize_preserving(w), w)


def test_dependent_input():
    with pytest.raises(DependentInput):
        orthogonalize_preserving([[1.0, 0.0], [2.0, 0.0]])


def test_frame_equivalent_rotation(rng):
    w = rng.standard_normal((3, 3))
    O = random_orthogonal(3, rng)
    res = frame_equivalent(O @ w, w)
    assert res.equivalent
    np.testing.assert_allclose(res.O, O, atol=1e-10)


def test_frame_equivalent_probe():
    # {2 w1, w2} against {w1, w2}: frames differ by 3 e1 e1^T
    w = np.eye(2)
    res = frame_equivalent(np.array([[2.0, 0.0], [0.0, 1.0]]), w)
    assert not res.equivalent
    np.testing.assert_allclose(res.probe, [1.0, 0.0], atol=1e-12)
    assert res.gap == pytest.approx(3.0)


def test_normsqsum_under_rotation(rng):
    L = rng.standard_normal((4, 4, 4))
    v = rng.standard_normal((3, 4))
    O = random_orthogonal(3, rng)
    assert multilinear_frame_sum(L, O @ v) == pytest.approx(multilinear_frame_sum(L, v), rel=1e-12)


def test_dual_basis(rng):
    v = rng.standard_normal((3, 3))
    np.testing.assert_allclose(v @ dual_basis(v).T, np.eye(3), atol=1e-12)
    with pytest.raises(SingularBasis):
        dual_basis([[1.0, 2.0], [2.0, 4.0]])


def test_kernel_onb_examples():
    np.testing.assert_allclose(kernel_onb([[0.0, 1.0, 0.0]]), [[1, 0, 0], [0, 0, 1]], atol=1e-15)
    Z = kernel_onb([[0.01, 1.0, 0.0]])
    assert np.allclose(Z @ Z.T, np.eye(2))
    assert np.allclose(Z @ [0.01, 1.0, 0.0], 0)
    np.testing.assert_allclose(Z, [[1, 0, 0], [0, 0, 1]], atol=2e-2)
    with pytest.raises(RankDeficient):
        kernel_onb([[0.0, 0.0, 0.0]])
