"""Contract tests for the matrix substrate."""

import numpy as np
import pytest

from vafnet import linalg
from vafnet.linalg import ShapeError


class TestMatmul:
    def test_identity(self):
        a = linalg.as_matrix([[1, 2], [3, 4]])
        eye = linalg.as_matrix([[1, 0], [0, 1]])
        np.testing.assert_array_equal(linalg.matmul(a, eye), a)

    def test_dot_product(self):
        a = linalg.as_matrix([[1, 2]])
        b = linalg.as_matrix([[3], [4]])
        np.testing.assert_array_equal(linalg.matmul(a, b), [[11]])

    def test_matches_triple_loop_oracle(self, rng):
        a = rng.standard_normal((3, 5))
        b = rng.standard_normal((5, 2))
        expected = np.zeros((3, 2))
        for i in range(3):
            for j in range(2):
                for k in range(5):
                    expected[i, j] += a[i, k] * b[k, j]
        np.testing.assert_allclose(linalg.matmul(a, b), expected, atol=1e-12)

    def test_dimension_mismatch_carries_shapes(self):
        a = linalg.as_matrix([[1, 2]])
        b = linalg.as_matrix([[1, 2]])
        with pytest.raises(ShapeError) as exc:
            linalg.matmul(a, b)
        assert exc.value.shape_a == (1, 2)
        assert exc.value.shape_b == (1, 2)

    def test_associativity(self, rng):
        for _ in range(20):
            a = rng.standard_normal((4, 3))
            b = rng.standard_normal((3, 5))
            c = rng.standard_normal((5, 2))
            left = linalg.matmul(linalg.matmul(a, b), c)
            right = linalg.matmul(a, linalg.matmul(b, c))
            np.testing.assert_allclose(left, right, rtol=1e-9)


class TestElementwiseOps:
    def test_elementwise_relu(self):
        out = linalg.elementwise(linalg.as_matrix([[-1, 2]]),
                                 lambda v: max(0.0, v))
        np.testing.assert_array_equal(out, [[0, 2]])

    def test_add(self):
        np.testing.assert_array_equal(
            linalg.add(linalg.as_matrix([[1]]), linalg.as_matrix([[2]])), [[3]])

    def test_add_shape_mismatch(self):
        with pytest.raises(ShapeError):
            linalg.add(linalg.as_matrix([[1, 2]]), linalg.as_matrix([[1]]))

    def test_sub_scale(self):
        a = linalg.as_matrix([[4, 2]])
        np.testing.assert_array_equal(linalg.sub(a, a), [[0, 0]])
        np.testing.assert_array_equal(linalg.scale(a, 0.5), [[2, 1]])

    def test_transpose_involution_bit_exact(self, rng):
        a = rng.standard_normal((2, 3))
        back = linalg.transpose(linalg.transpose(a))
        assert np.array_equal(back, a)

    def test_transpose_distributes_over_add_bit_exact(self, rng):
        a = rng.standard_normal((3, 4))
        b = rng.standard_normal((3, 4))
        lhs = linalg.transpose(linalg.add(a, b))
        rhs = linalg.add(linalg.transpose(a), linalg.transpose(b))
        assert np.array_equal(lhs, rhs)

    def test_row_sum(self):
        out = linalg.row_sum(linalg.as_matrix([[1, 2, 3], [4, 5, 6]]))
        np.testing.assert_array_equal(out, [[6], [15]])


class TestPurity:
    def test_operations_never_mutate_inputs(self, rng):
        a = rng.standard_normal((3, 3))
        b = rng.standard_normal((3, 3))
        a0, b0 = a.copy(), b.copy()
        linalg.matmul(a, b)
        linalg.add(a, b)
        linalg.sub(a, b)
        linalg.scale(a, 2.0)
        linalg.transpose(a)
        linalg.elementwise(a, lambda v: v * v)
        linalg.row_sum(a)
        assert np.array_equal(a, a0)
        assert np.array_equal(b, b0)


class TestAsMatrix:
    def test_rejects_wrong_rank(self):
        with pytest.raises(ShapeError):
            linalg.as_matrix([1, 2, 3])

    def test_rejects_empty(self):
        with pytest.raises(ShapeError):
            linalg.as_matrix(np.zeros((0, 3)))

    def test_float64(self):
        assert linalg.as_matrix([[1, 2]]).dtype == np.float64
