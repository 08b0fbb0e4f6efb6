"""Complex matrix algebra on n-qubit spaces.

Matrices are plain ``numpy`` complex arrays.  Block indices are 1-based so that
``block(a, i, j, n)`` starts at row ``n*(i-1)`` and column ``n*(j-1)``.
"""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .codec import ElementaryMatrix, GaussianRational

HERMITIAN_TOL = 1e-10
PSD_TOL = 1e-10
IDENTITY_TOL = 1e-9


class DimensionError(ValueError):
    pass


class NotHermitian(ValueError):
    pass


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim == 1:
        return m.reshape(-1, 1)
    if m.ndim != 2:
        raise DimensionError(f"expected a matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix entries must be finite")
    return m


def tensor(a, b) -> np.ndarray:
    return np.kron(as_matrix(a), as_matrix(b))


def tensor_all(*mats) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, as_matrix(m))
    return out


def projector(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex).reshape(-1)
    return np.outer(v, v.conj())


def dagger(a) -> np.ndarray:
    return np.asarray(a).conj().T


def trace_product(a, b) -> float:
    """Real part of Tr(ab) without forming the product."""
    return float(np.einsum("ij,ji->", a, b).real)


def partial_trace(m, keep_dims: int, trace_dims: int, side: str = "second") -> np.ndarray:
    """Trace out one factor of a (keep x trace) or (trace x keep) bipartite matrix.

    ``side="second"`` traces the right tensor factor, ``side="first"`` the left.
    """
    m = as_matrix(m)
    size = keep_dims * trace_dims
    if m.shape != (size, size):
        raise DimensionError(f"matrix {m.shape} is not {size}x{size}")
    if side == "second":
        return np.einsum("ikjk->ij", m.reshape(keep_dims, trace_dims, keep_dims, trace_dims))
    if side == "first":
        return np.einsum("kikj->ij", m.reshape(trace_dims, keep_dims, trace_dims, keep_dims))
    raise ValueError(f"side must be 'first' or 'second', got {side!r}")


def block(a, i: int, j: int, n: int) -> np.ndarray:
    a = as_matrix(a)
    if a.shape != (n * n, n * n):
        raise DimensionError(f"expected a {n * n}x{n * n} matrix, got {a.shape}")
    if not (1 <= i <= n and 1 <= j <= n):
        raise IndexError(f"block indices ({i}, {j}) outside 1..{n}")
    r, c = n * (i - 1), n * (j - 1)
    return a[r:r + n, c:c + n].copy()


def m_reduce(a, b, n: int) -> np.ndarray:
    """The n x n matrix with (i, j) entry Tr(A[i, j] B).

    Satisfies Tr A (C (x) B) = Tr M C for every n x n matrix C.
    """
    a, b = as_matrix(a), as_matrix(b)
    if a.shape != (n * n, n * n) or b.shape != (n, n):
        raise DimensionError(f"need {n * n}x{n * n} and {n}x{n}, got {a.shape} and {b.shape}")
    return np.einsum("ikjl,lk->ij", a.reshape(n, n, n, n), b)


def m_reduce_adjoint(c, b) -> np.ndarray:
    """C (x) B, the adjoint of ``a -> m_reduce(a, b)`` under the trace pairing."""
    return tensor(c, b)


def hermitize(m) -> np.ndarray:
    m = as_matrix(m)
    return (m + m.conj().T) / 2


def is_hermitian(m, tol: float = HERMITIAN_TOL) -> bool:
    m = as_matrix(m)
    return m.shape[0] == m.shape[1] and bool(np.max(np.abs(m - m.conj().T), initial=0.0) <= tol)


def jacobi_eigvalsh(m, tol: float = 1e-14, max_sweeps: int = 60) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix by cyclic complex Jacobi rotations."""
    a = hermitize(m).copy()
    n = a.shape[0]
    scale = max(np.max(np.abs(a), initial=0.0), 1e-300)
    for _ in range(max_sweeps):
        off = float(np.linalg.norm(a - np.diag(np.diag(a))))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag <= 1e-300:
                    continue
                phase = apq / mag
                theta = 0.5 * math.atan2(2 * mag, (a[q, q] - a[p, p]).real)
                c, s = math.cos(theta), math.sin(theta)
                # columns then rows of J = [[c, s*phase], [-s*conj(phase), c]] acting on (p, q)
                colp, colq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * colp - s * np.conj(phase) * colq
                a[:, q] = s * phase * colp + c * colq
                rowp, rowq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * rowp - s * phase * rowq
                a[q, :] = s * np.conj(phase) * rowp + c * rowq
                a[p, q] = a[q, p] = 0.0
    return np.sort(np.diag(a).real)


def validate_psd(m, tol: float = PSD_TOL, method: str = "lapack") -> tuple:
    """Return ``(is_psd, min_eig)`` for the Hermitized matrix."""
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"matrix {m.shape} is not square")
    if not is_hermitian(m, tol):
        raise NotHermitian(f"matrix deviates from Hermitian by more than {tol}")
    h = hermitize(m)
    eigs = jacobi_eigvalsh(h) if method == "jacobi" else np.linalg.eigvalsh(h)
    min_eig = float(eigs[0])
    return min_eig >= -tol, min_eig


def is_unitary(u, tol: float = HERMITIAN_TOL) -> bool:
    u = as_matrix(u)
    return u.shape[0] == u.shape[1] and bool(np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0]))) <= tol)


def check_semidensity(m, tol: float = PSD_TOL) -> np.ndarray:
    m = as_matrix(m)
    ok, min_eig = validate_psd(m, tol)
    if not ok:
        raise ValueError(f"not positive semidefinite (min eigenvalue {min_eig:.3e})")
    tr = np.trace(m).real
    if not -tol <= tr <= 1 + tol:
        raise ValueError(f"trace {tr} outside [0, 1]")
    return m


def domination_bits(x, y, rcond: float = 1e-13) -> float:
    """Smallest c with x <= 2**c * y (Loewner order), for PSD x and y.

    Returns ``inf`` when x has weight outside the support of y.
    """
    x, y = hermitize(x), hermitize(y)
    evals, evecs = np.linalg.eigh(y)
    keep = evals > rcond * max(evals[-1], 0.0)
    if not np.any(keep):
        return math.inf
    inv_sqrt = evecs[:, keep] / np.sqrt(evals[keep])
    inside = inv_sqrt.conj().T @ x @ inv_sqrt
    if not np.all(keep):
        outside = evecs[:, ~keep]
        leak = outside.conj().T @ x @ outside
        if np.max(np.abs(leak)) > 1e-12 * max(1.0, np.max(np.abs(x))):
            return math.inf
    top = float(np.linalg.eigvalsh(hermitize(inside))[-1])
    return math.log2(top) if top > 0 else -math.inf


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Density matrix from the induced measure of a Ginibre matrix."""
    rank = dim if rank is None else rank
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


# -- interchange format ------------------------------------------------------

def matrix_to_doc(m) -> dict:
    m = as_matrix(m)
    return {"dim": m.shape[0], "cols": m.shape[1],
            "rows": [[[float(z.real), float(z.imag)] for z in row] for row in m]}


def exact_to_doc(m: ElementaryMatrix) -> dict:
    rows = [[[v.re.numerator, v.re.denominator, v.im.numerator, v.im.denominator] for v in row]
            for row in m.rows()]
    return {"dim": m.dim, "exact": True, "rows": rows}


def matrix_from_doc(doc: dict):
    """Load either variant; the exact one comes back as an ElementaryMatrix."""
    if doc.get("exact"):
        rows = [[GaussianRational(Fraction(a, b), Fraction(c, d)) for a, b, c, d in row]
                for row in doc["rows"]]
        if len(rows) != doc["dim"]:
            raise DimensionError("row count does not match dim")
        return ElementaryMatrix.from_rows(rows)
    m = np.array([[complex(re, im) for re, im in row] for row in doc["rows"]], dtype=complex)
    if m.shape[0] != doc["dim"]:
        raise DimensionError("row count does not match dim")
    return m
