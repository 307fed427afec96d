import numpy as np
import pytest

from helpers.errors import NumericalError, SingularMatrixError
from hdichotomy.linalg import (
    idempotence_residual,
    invert,
    operator_norm,
    operator_norms,
    projection_rank,
    right_divide,
    smallest_singular_value,
)


def test_operator_norm_examples():
    assert operator_norm(np.eye(3)) == pytest.approx(1.0)
    assert operator_norm(np.diag([2.0, 1.0])) == pytest.approx(2.0)
    assert operator_norm(np.zeros((2, 0))) == 0.0
    with pytest.raises(NumericalError):
        operator_norm(np.array([[np.nan]]))


def test_operator_norm_matches_sphere_sampling():
    rng = np.random.default_rng(42)
    m = rng.standard_normal((3, 3))
    v = rng.standard_normal((3, 100_000))
    v /= np.linalg.norm(v, axis=0)
    sampled = np.linalg.norm(m @ v, axis=0).max()
    assert sampled <= operator_norm(m) + 1e-12
    assert sampled == pytest.approx(operator_norm(m), rel=1e-3)


def test_stacked_norms_and_smallest_singular_value():
    stack = np.stack([np.diag([3.0, 1.0]), np.diag([0.5, 2.0])])
    np.testing.assert_allclose(operator_norms(stack), [3.0, 2.0])
    assert smallest_singular_value(np.diag([3.0, 0.25])) == pytest.approx(0.25)


def test_inverse_and_right_division():
    a = np.array([[2.0, 1.0], [1.0, 1.0]])
    np.testing.assert_allclose(invert(a) @ a, np.eye(2), atol=1e-14)
    np.testing.assert_allclose(right_divide(np.eye(2), a), invert(a), atol=1e-14)
    with pytest.raises(SingularMatrixError):
        invert(np.ones((2, 2)))
    with pytest.raises(SingularMatrixError):
        right_divide(np.eye(2), np.zeros((2, 2)))


def test_projection_helpers():
    oblique = np.array([[1.0, 1.0], [0.0, 0.0]])
    assert projection_rank(oblique) == 1
    assert idempotence_residual(oblique) == 0.0
    assert idempotence_residual(np.diag([2.0, 0.0])) == pytest.approx(2.0)
