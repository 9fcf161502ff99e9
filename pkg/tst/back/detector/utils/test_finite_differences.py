import numpy as np
from pytest import approx, raises

from back.detector.utils import finite_differences as fd

POINTS = 201
GRID = np.linspace(-1.0, 1.0, POINTS)
SPACING = float(GRID[1] - GRID[0])


class TestSecondDerivative:
    @staticmethod
    def test_parabola_interior():
        for order in fd.SUPPORTED_ORDERS:
            curvature = fd.second_derivative(POINTS, SPACING, order=order) @ GRID**2
            reach = order // 2

            assert curvature[reach:-reach] == approx(2.0, rel=1e-9)

    @staticmethod
    def test_symmetric():
        matrix = fd.second_derivative(POINTS, SPACING, order=8)

        assert abs(matrix - matrix.T).max() == 0

    @staticmethod
    def test_bandwidth():
        matrix = fd.second_derivative(POINTS, SPACING, order=6).toarray()

        assert matrix[50, 53] != 0
        assert matrix[50, 54] == 0

    @staticmethod
    def test_higher_order_is_more_accurate():
        exact = -np.sin(GRID)
        errors = {
            order: np.max(
                np.abs(
                    (fd.second_derivative(POINTS, SPACING, order=order) @ np.sin(GRID))[5:-5]
                    - exact[5:-5]
                )
            )
            for order in (2, 8)
        }

        assert errors[8] < errors[2]

    @staticmethod
    def test_unsupported_order():
        with raises(ValueError):
            fd.second_derivative(POINTS, SPACING, order=3)


class TestFirstDerivative:
    @staticmethod
    def test_line_interior():
        for order in fd.SUPPORTED_ORDERS:
            slope = fd.first_derivative(POINTS, SPACING, order=order) @ (3 * GRID)
            reach = order // 2

            assert slope[reach:-reach] == approx(3.0, rel=1e-9)

    @staticmethod
    def test_antisymmetric():
        matrix = fd.first_derivative(POINTS, SPACING, order=8)

        assert abs(matrix + matrix.T).max() == 0

    @staticmethod
    def test_unsupported_order():
        with raises(ValueError):
            fd.first_derivative(POINTS, SPACING, order=10)
