import numpy as np
import pytest

from qgacs.linalg import (DimensionError, NotHermitian, block, domination_bits, jacobi_eigvalsh,
                          m_reduce, matrix_from_doc, matrix_to_doc, exact_to_doc, partial_trace,
                          random_density, tensor, trace_product, validate_psd)
from qgacs.codec import ElementaryMatrix
from fractions import Fraction

WORKED_A = np.arange(1, 17, dtype=complex).reshape(4, 4)


def rand_c(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def test_worked_blocks():
    assert np.array_equal(block(WORKED_A, 1, 2, 2), [[3, 4], [7, 8]])
    assert np.array_equal(block(WORKED_A, 2, 1, 2), [[9, 10], [13, 14]])
    assert np.array_equal(m_reduce(WORKED_A, np.eye(2), 2), [[7, 11], [23, 27]])
    zero = np.array([[1, 0], [0, 0]])
    assert np.array_equal(m_reduce(WORKED_A, zero, 2), [[1, 3], [9, 11]])


@pytest.mark.parametrize("n", [2, 4, 8])
def test_m_identity(n):
    rng = np.random.default_rng(n)
    for _ in range(20):
        a, b, c = rand_c(rng, n * n, n * n), rand_c(rng, n, n), rand_c(rng, n, n)
        lhs = np.trace(a @ np.kron(c, b))
        rhs = np.trace(m_reduce(a, b, n) @ c)
        assert abs(lhs - rhs) < 1e-9


def test_block_errors():
    with pytest.raises(IndexError):
        block(WORKED_A, 3, 1, 2)
    with pytest.raises(DimensionError):
        block(np.eye(3), 1, 1, 2)


def test_partial_trace_adjunction():
    rng = np.random.default_rng(1)
    rho = random_density(8, rng)
    t = rand_c(rng, 4, 4)
    assert abs(trace_product(np.kron(t, np.eye(2)), rho)
               - trace_product(t, partial_trace(rho, 4, 2, "second"))) < 1e-12
    assert abs(trace_product(np.kron(np.eye(2), t), rho)
               - trace_product(t, partial_trace(rho, 4, 2, "first"))) < 1e-12


def test_partial_trace_of_product():
    a, b = np.diag([0.25, 0.75]), np.diag([0.5, 0.5])
    assert np.allclose(partial_trace(tensor(a, b), 2, 2, "second"), a)
    assert np.allclose(partial_trace(tensor(a, b), 2, 2, "first"), b)


def test_jacobi_matches_lapack():
    rng = np.random.default_rng(7)
    for dim in (2, 3, 8, 16):
        g = rand_c(rng, dim, dim)
        h = (g + g.conj().T) / 2
        assert np.allclose(jacobi_eigvalsh(h), np.linalg.eigvalsh(h), atol=1e-11)


def test_validate_psd():
    ok, min_eig = validate_psd(np.diag([1.0, 0.0]))
    assert ok and min_eig == 0.0
    assert not validate_psd(np.diag([1.0, -1e-3]))[0]
    assert validate_psd(np.diag([1.0, -1e-3]), method="jacobi") == (False, -1e-3)
    with pytest.raises(NotHermitian):
        validate_psd(np.array([[0, 1], [0, 0]]))


def test_domination_bits():
    assert domination_bits(np.diag([1.0, 1.0]), np.diag([0.5, 0.5])) == pytest.approx(1.0)
    assert domination_bits(np.diag([1.0, 1.0]), np.diag([1.0, 0.0])) == float("inf")
    assert domination_bits(np.diag([1.0, 0.0]), np.diag([1.0, 0.0])) == pytest.approx(0.0)


def test_interchange_round_trip():
    rng = np.random.default_rng(3)
    m = rand_c(rng, 4, 4)
    assert np.array_equal(matrix_from_doc(matrix_to_doc(m)), m)
    e = ElementaryMatrix.from_rows([[Fraction(1, 2), 0], [0, Fraction(1, 2)]])
    assert matrix_from_doc(exact_to_doc(e)) == e
