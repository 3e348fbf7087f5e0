"""Dense decomposition primitives behind explicit contracts.

Thin wrappers over LAPACK (through numpy/scipy): reconstruction residuals
are bounded by ``1e-10 * (1 + ||input||_F)``, singular values come back
nonnegative and descending, and a non-positive-definite left side of the
Hermitian solve raises instead of returning garbage.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import DecompositionError, DimensionError


def _as_matrix(mat) -> np.ndarray:
    a = np.asarray(mat)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise DimensionError(f"expected a 2-d matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DimensionError("matrix contains non-finite entries")
    return a.astype(np.complex128, copy=False)


def svd(mat, full_matrices: bool = False):
    """SVD ``mat = u @ diag(s) @ vh`` with ``s`` descending."""
    return np.linalg.svd(_as_matrix(mat), full_matrices=full_matrices)


def singular_values(mat) -> np.ndarray:
    """Singular values only, descending."""
    return np.linalg.svd(_as_matrix(mat), compute_uv=False)


def hermitian_eig(mat):
    """Eigendecomposition of a Hermitian matrix: (ascending values, vectors)."""
    a = _as_matrix(mat)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"hermitian_eig needs a square matrix, got {a.shape}")
    return np.linalg.eigh(a)


def solve_hermitian_posdef(h, rhs) -> np.ndarray:
    """Solve ``h @ x = rhs`` for Hermitian positive definite ``h``."""
    a = _as_matrix(h)
    b = np.asarray(rhs, dtype=np.complex128)
    try:
        factor = scipy.linalg.cho_factor(a, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise DecompositionError(f"matrix is not positive definite: {exc}") from exc
    return scipy.linalg.cho_solve(factor, b, check_finite=False)


def qr(mat):
    """Reduced QR factorization: (orthonormal columns, upper triangular)."""
    return np.linalg.qr(_as_matrix(mat))


def unitarity_defect(u) -> float:
    """Frobenius distance of ``u^H u`` from the identity."""
    a = np.asarray(u)
    eye = np.eye(a.shape[1])
    return float(np.linalg.norm(a.conj().T @ a - eye))


def orthonormal_completion(cols: np.ndarray, dim: int) -> np.ndarray:
    """Columns extending ``cols`` (orthonormal, ``dim`` rows) to a full basis.

    Modified Gram-Schmidt against the accepted columns with one
    reorthogonalization pass; each new column starts from the coordinate
    vector with the largest residual, which keeps the construction
    deterministic and well conditioned.
    """
    have = np.asarray(cols, dtype=np.complex128).reshape(dim, -1)
    need = dim - have.shape[1]
    if need < 0:
        raise DimensionError("more columns than the ambient dimension")
    out = np.empty((dim, need), dtype=np.complex128)
    basis = have
    for j in range(need):
        resid = np.eye(dim, dtype=np.complex128) - basis @ basis.conj().T
        norms = np.linalg.norm(resid, axis=0)
        v = resid[:, int(np.argmax(norms))]
        v = v - basis @ (basis.conj().T @ v)
        nrm = np.linalg.norm(v)
        if nrm < 1e-8:
            raise DecompositionError("orthonormal completion collapsed")
        out[:, j] = v / nrm
        basis = np.hstack([basis, out[:, j : j + 1]])
    return out
