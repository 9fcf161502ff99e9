"""
Provides sparse operator algebra for truncated bosonic modes and few-level systems,
and their embedding into a tensor-product space.
"""

from functools import reduce

import numpy as np
from scipy import sparse


def annihilation(dimension: int) -> sparse.csc_matrix:
    """
    Truncated bosonic annihilation operator, a|n> = sqrt(n)|n-1>.

    :param dimension: Number of Fock states kept (0 ... dimension - 1).
    :return: A sparse complex (dimension x dimension) matrix.
    """
    return sparse.diags(
        np.sqrt(np.arange(1, dimension, dtype=complex)),
        offsets=1,
        shape=(dimension, dimension),
        format="csc",
    )


def number(dimension: int) -> sparse.csc_matrix:
    return sparse.diags(
        np.arange(dimension, dtype=complex), shape=(dimension, dimension), format="csc"
    )


def transition(dimension: int, row: int, column: int) -> sparse.csc_matrix:
    """
    Outer product |row><column| in a finite basis.

    :param dimension: Basis size.
    :param row: Index of the ket.
    :param column: Index of the bra.
    :return: A sparse complex (dimension x dimension) matrix.
    """
    return sparse.csc_matrix(
        ([1.0 + 0j], ([row], [column])), shape=(dimension, dimension)
    )


def tensor(*operators: sparse.spmatrix) -> sparse.csc_matrix:
    """
    Kronecker product of operators, leftmost factor slowest-varying.

    :param operators: Sparse matrices, one per tensor factor.
    :return: A sparse complex matrix on the product space.
    """
    return reduce(lambda left, right: sparse.kron(left, right, format="csc"), operators)


def embed(operator: sparse.spmatrix, position: int, dimensions: tuple[int, ...]) -> sparse.csc_matrix:
    """
    Lift a single-factor operator into the product space, identity elsewhere.

    :param operator: Operator acting on factor `position`.
    :param position: Index of the factor in `dimensions`.
    :param dimensions: Dimensions of every tensor factor.
    :return: A sparse complex matrix on the product space.
    """
    factors = [
        operator if index == position else sparse.identity(size, dtype=complex, format="csc")
        for index, size in enumerate(dimensions)
    ]

    return tensor(*factors).tocsc()


def dagger(operator: sparse.spmatrix) -> sparse.csc_matrix:
    return operator.conj().transpose().tocsc()


def hermiticity_error(operator: sparse.spmatrix) -> float:
    """
    Largest entry of |A - A^dagger|.

    :param operator: A sparse matrix.
    :return: The max-norm of the anti-Hermitian part times two.
    """
    difference = operator - dagger(operator)
    if difference.nnz == 0:
        return 0.0

    return float(np.max(np.abs(difference.data)))
