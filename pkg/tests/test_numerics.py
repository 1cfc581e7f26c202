import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from proofkit.numerics import ShapeError, affine, as_vector, dot, matvec


def test_matvec_examples():
    assert np.array_equal(matvec(np.eye(3), np.array([1.0, 2.0, 3.0])), [1, 2, 3])
    assert np.array_equal(matvec(np.zeros((2, 3)), np.array([4.0, -1.0, 9.0])), [0, 0])
    assert np.array_equal(matvec(np.array([[1.0, 2.0], [3.0, 4.0]]), np.ones(2)), [3, 7])


def test_affine_examples():
    v = np.array([2.0, 3.0])
    assert np.array_equal(affine(np.eye(2), v, np.zeros(2)), v)
    assert np.array_equal(affine(np.zeros((2, 2)), v, np.array([5.0, 6.0])), [5, 6])
    assert np.array_equal(affine(np.array([[1.0, -1.0]]), v, np.array([1.0])), [0])


def test_dot_examples():
    assert dot(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0
    v = np.array([3.0, 4.0])
    assert dot(v, v) == 25
    assert dot(np.array([1.0, 2, 3]), np.array([4.0, 5, 6])) == 32


@pytest.mark.parametrize("call", [
    lambda: matvec(np.eye(2), np.ones(3)),
    lambda: affine(np.eye(2), np.ones(2), np.ones(3)),
    lambda: dot(np.ones(2), np.ones(3)),
])
def test_shape_errors(call):
    with pytest.raises(ShapeError):
        call()


def test_non_finite_rejected():
    with pytest.raises(ValueError):
        as_vector([1.0, float("nan")])


unit = st.floats(-1, 1, allow_nan=False)


@given(st.integers(1, 6), st.integers(1, 6), st.data())
def test_affine_zero_bias_is_matvec(r, c, data):
    m = data.draw(arrays(np.float64, (r, c), elements=unit))
    v = data.draw(arrays(np.float64, (c,), elements=unit))
    assert np.array_equal(affine(m, v, np.zeros(r)), matvec(m, v))


@given(st.integers(1, 6), st.integers(1, 6), st.data())
def test_matvec_distributes(r, c, data):
    m = data.draw(arrays(np.float64, (r, c), elements=unit))
    a = data.draw(arrays(np.float64, (c,), elements=unit))
    b = data.draw(arrays(np.float64, (c,), elements=unit))
    assert np.allclose(matvec(m, a + b), matvec(m, a) + matvec(m, b), rtol=0, atol=1e-12)
