"""Dense complex linear algebra kernel.

Everything here works on small dense ``complex128`` arrays (n up to a few
dozen).  LAPACK (through numpy) does the heavy lifting; this module adds the
validation, thresholding and deterministic basis conventions that the rest
of the package relies on for reproducible golden values.
"""
from __future__ import annotations

import numpy as np

from .errors import NoConvergence, NonHermitian, NonSquare, NotPSD

DEFAULT_TOL = 1e-10

# entries below this fraction of the column's largest entry never fix a phase
_PHASE_CUTOFF = 1e-8


def as_matrix(M) -> np.ndarray:
    A = np.asarray(M, dtype=complex)
    if A.ndim == 1:
        A = A[:, None]
    if A.ndim != 2:
        raise ValueError(f"expected a matrix, got array of shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def dag(M: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(M, -1, -2))


def operator_norm(M) -> float:
    A = np.asarray(M, dtype=complex)
    if A.size == 0:
        return 0.0
    if A.ndim == 1:
        return float(np.linalg.norm(A))
    return float(np.linalg.norm(A, 2))


def phase_normalize(v: np.ndarray) -> np.ndarray:
    """Rotate ``v`` so that its first significant entry is real positive."""
    v = np.array(v, dtype=complex)
    a = np.abs(v)
    if a.size == 0 or a.max() == 0:
        return v
    k = int(np.argmax(a > _PHASE_CUTOFF * a.max()))
    return v * (np.conj(v[k]) / a[k])


def phase_normalize_columns(B: np.ndarray) -> np.ndarray:
    B = np.array(B, dtype=complex)
    for j in range(B.shape[1]):
        B[:, j] = phase_normalize(B[:, j])
    return B


def orthonormal_range(M, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis of the column space of ``M``.

    The rank is fixed by singular values above ``tol * sigma_max``.  The basis
    itself is produced by Gram-Schmidt over the (range-projected) columns of
    ``M`` in index order, so it does not depend on how LAPACK happens to
    rotate degenerate singular vectors.  Each column is phase normalized.
    """
    A = as_matrix(M)
    rows = A.shape[0]
    if A.size == 0:
        return np.zeros((rows, 0), dtype=complex)
    U, s, _ = np.linalg.svd(A, full_matrices=False)
    if s[0] == 0.0:
        return np.zeros((rows, 0), dtype=complex)
    rank = int(np.sum(s > tol * s[0]))
    P = U[:, :rank]
    residual = P @ (dag(P) @ A)
    basis = []
    while len(basis) < rank:
        norms = np.linalg.norm(residual, axis=0)
        j = int(np.argmax(norms >= 0.5 * norms.max()))
        q = residual[:, j] / norms[j]
        for b in basis:  # second pass against the accepted vectors
            q = q - b * np.vdot(b, q)
        q = q / np.linalg.norm(q)
        basis.append(q)
        residual = residual - np.outer(q, dag(q[:, None]) @ residual)
    return phase_normalize_columns(np.column_stack(basis))


def hermitian_eig(M, tol: float = DEFAULT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix.

    Returns ascending eigenvalues and orthonormal eigenvector columns.
    Degenerate clusters are re-based deterministically through
    :func:`orthonormal_range` of the cluster projector.
    """
    A = as_matrix(M)
    if A.shape[0] != A.shape[1]:
        raise NonSquare(f"matrix of shape {A.shape} is not square")
    scale = operator_norm(A)
    defect = operator_norm(A - dag(A))
    if defect > tol * max(scale, 1.0):
        raise NonHermitian(f"Hermitian defect {defect:.3e} exceeds tolerance")
    H = 0.5 * (A + dag(A))
    try:
        w, V = np.linalg.eigh(H)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NoConvergence(str(exc)) from exc
    cluster_tol = 1e3 * np.finfo(float).eps * max(scale, 1.0)
    out = np.empty_like(V)
    start = 0
    n = len(w)
    while start < n:
        stop = start + 1
        while stop < n and w[stop] - w[stop - 1] <= cluster_tol:
            stop += 1
        block = V[:, start:stop]
        if stop - start > 1:
            block = orthonormal_range(block @ dag(block), tol=0.5)
        else:
            block = phase_normalize_columns(block)
        out[:, start:stop] = block
        start = stop
    return w, out


def psd_sqrt(M, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Positive square root; eigenvalues in ``[-tol, tol]`` are treated as zero.

    Zeroing small positive round-off too keeps the root of a projection a
    projection (sqrt(1e-16) would otherwise show up as 1e-8).
    """
    w, V = hermitian_eig(M, tol=max(tol, DEFAULT_TOL))
    if w.size and w[0] < -tol:
        raise NotPSD(f"smallest eigenvalue {w[0]:.3e} below -{tol:g}")
    root = np.sqrt(np.where(w > tol, w, 0.0))
    R = (V * root) @ dag(V)
    return 0.5 * (R + dag(R))


def solve_linear_nullspace(M, tol: float = DEFAULT_TOL, scale: float = 0.0) -> np.ndarray:
    """Orthonormal kernel basis by singular-value thresholding.

    Singular values at or below ``tol * max(sigma_max, scale)`` count as zero.
    Pass ``scale`` when the matrix is a difference of order-one operators, so a
    system that is pure round-off is read as zero rather than full rank.
    """
    A = as_matrix(M)
    cols = A.shape[1]
    _, s, Vh = np.linalg.svd(A, full_matrices=True)
    ref = max(s[0] if s.size else 0.0, scale)
    rank = int(np.sum(s > tol * ref)) if ref > 0 else 0
    N = dag(Vh[rank:])
    if N.shape[1] == 0:
        return np.zeros((cols, 0), dtype=complex)
    return orthonormal_range(N @ dag(N), tol=0.5)


def sandwich_matrix(left, right) -> np.ndarray:
    """Matrix of ``X -> sum_k left[k] @ X @ right[k]`` on row-major ``X.ravel()``."""
    left = np.asarray(left, dtype=complex)
    right = np.asarray(right, dtype=complex)
    n = left.shape[-1]
    S = np.zeros((left.shape[1] * right.shape[2], n * right.shape[1]), dtype=complex)
    for L, R in zip(left, right):
        S += np.kron(L, R.T)
    return S
