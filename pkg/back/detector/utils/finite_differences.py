"""
Provides central finite-difference stencils on a uniform grid with Dirichlet boundaries.
"""

import numpy as np
from scipy import sparse

# Central coefficients from the diagonal outwards, keyed by accuracy order.
SECOND_DERIVATIVE_STENCILS: dict[int, tuple[float, ...]] = {
    2: (-2.0, 1.0),
    4: (-5 / 2, 4 / 3, -1 / 12),
    6: (-49 / 18, 3 / 2, -3 / 20, 1 / 90),
    8: (-205 / 72, 8 / 5, -1 / 5, 8 / 315, -1 / 560),
}

FIRST_DERIVATIVE_STENCILS: dict[int, tuple[float, ...]] = {
    2: (0.0, 1 / 2),
    4: (0.0, 2 / 3, -1 / 12),
    6: (0.0, 3 / 4, -3 / 20, 1 / 60),
    8: (0.0, 4 / 5, -1 / 5, 4 / 105, -1 / 280),
}

SUPPORTED_ORDERS = tuple(SECOND_DERIVATIVE_STENCILS)


def _check_order(order: int):
    if order not in SECOND_DERIVATIVE_STENCILS:
        raise ValueError(f"Stencil order must be one of {SUPPORTED_ORDERS}, got {order}.")


def second_derivative(points: int, spacing: float, *, order: int = 2) -> sparse.csc_matrix:
    """
    Symmetric banded matrix of d^2/dx^2, values outside the grid taken as zero.

    :param points: Number of grid points.
    :param spacing: Uniform grid spacing.
    :param order: Accuracy order of the central stencil (2, 4, 6 or 8).
    :return: A sparse (points x points) matrix.
    """
    _check_order(order)
    coefficients = SECOND_DERIVATIVE_STENCILS[order]
    offsets = [0]
    diagonals = [np.full(points, coefficients[0])]
    for distance, coefficient in enumerate(coefficients[1:], start=1):
        band = np.full(points - distance, coefficient)
        offsets += [distance, -distance]
        diagonals += [band, band]

    return sparse.diags(diagonals, offsets, shape=(points, points), format="csc") / spacing**2


def first_derivative(points: int, spacing: float, *, order: int = 2) -> sparse.csc_matrix:
    """
    Antisymmetric banded matrix of d/dx, values outside the grid taken as zero.

    :param points: Number of grid points.
    :param spacing: Uniform grid spacing.
    :param order: Accuracy order of the central stencil (2, 4, 6 or 8).
    :return: A sparse (points x points) matrix.
    """
    _check_order(order)
    coefficients = FIRST_DERIVATIVE_STENCILS[order]
    offsets = []
    diagonals = []
    for distance, coefficient in enumerate(coefficients[1:], start=1):
        band = np.full(points - distance, coefficient)
        offsets += [distance, -distance]
        diagonals += [band, -band]

    return sparse.diags(diagonals, offsets, shape=(points, points), format="csc") / spacing
