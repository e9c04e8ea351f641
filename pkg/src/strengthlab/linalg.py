"""Gaussian elimination over F_q on int-encoded numpy arrays."""

from __future__ import annotations

import numpy as np

from .field import FieldSpec


def as_matrix(rows, ncols: int | None = None) -> np.ndarray:
    A = np.asarray(rows, dtype=np.int64)
    if A.ndim == 1:
        A = A.reshape(0 if A.size == 0 else 1, -1) if ncols is None else A.reshape(-1, ncols)
    if A.size == 0 and ncols is not None:
        A = A.reshape(-1, ncols)
    return A


def rref(F: FieldSpec, A) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form and pivot columns."""
    R = np.array(A, dtype=np.int64, copy=True)
    if R.ndim != 2:
        raise ValueError("rref expects a 2-d array")
    m, n = R.shape
    pivots: list[int] = []
    row = 0
    for col in range(n):
        if row == m:
            break
        nz = np.flatnonzero(R[row:, col])
        if nz.size == 0:
            continue
        piv = row + int(nz[0])
        if piv != row:
            R[[row, piv]] = R[[piv, row]]
        lead = int(R[row, col])
        if lead != 1:
            R[row] = F.vmul(R[row], F.inv(lead))
        factors = R[:, col].copy()
        factors[row] = 0
        hit = np.flatnonzero(factors)
        if hit.size:
            R[hit] = F.vsub(R[hit], F.vmul(factors[hit, None], R[row][None, :]))
        pivots.append(col)
        row += 1
    return R, pivots


def rank(F: FieldSpec, A) -> int:
    A = np.asarray(A, dtype=np.int64)
    if A.size == 0:
        return 0
    if A.shape[0] > A.shape[1]:
        A = A.T
    return len(rref(F, A)[1])


def nullspace(F: FieldSpec, A) -> np.ndarray:
    """Basis (as rows) of {x : A x = 0}."""
    A = np.asarray(A, dtype=np.int64)
    n = A.shape[1]
    if A.shape[0] == 0:
        return np.eye(n, dtype=np.int64)
    R, pivots = rref(F, A)
    free = [c for c in range(n) if c not in pivots]
    basis = np.zeros((len(free), n), dtype=np.int64)
    for k, fc in enumerate(free):
        basis[k, fc] = 1
        for r, pc in enumerate(pivots):
            basis[k, pc] = F.neg(int(R[r, fc]))
    return basis


def solve(F: FieldSpec, A, b) -> np.ndarray | None:
    """One solution of A x = b, or None when inconsistent."""
    A = np.asarray(A, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64).reshape(-1)
    m, n = A.shape
    if m == 0:
        return np.zeros(n, dtype=np.int64)
    aug = np.concatenate([A, b[:, None]], axis=1)
    R, pivots = rref(F, aug)
    if pivots and pivots[-1] == n:
        return None
    x = np.zeros(n, dtype=np.int64)
    for r, pc in enumerate(pivots):
        x[pc] = R[r, n]
    return x


def inverse(F: FieldSpec, A) -> np.ndarray:
    A = np.asarray(A, dtype=np.int64)
    n = A.shape[0]
    R, pivots = rref(F, np.concatenate([A, np.eye(n, dtype=np.int64)], axis=1))
    if pivots[:n] != list(range(n)):
        raise ValueError("matrix is singular")
    return R[:, n:]


def matmul(F: FieldSpec, A, B) -> np.ndarray:
    A = np.asarray(A, dtype=np.int64)
    B = np.asarray(B, dtype=np.int64)
    if F.e == 1:
        return (A @ B) % F.p
    return F.vdot(A[:, :, None], B[None, :, :], axis=1)


def batch_rank(F: FieldSpec, A) -> np.ndarray:
    """Ranks of a stack of matrices of shape (B, m, n)."""
    A = np.array(A, dtype=np.int64, copy=True)
    if A.ndim != 3:
        raise ValueError("batch_rank expects a 3-d array")
    if A.shape[1] > A.shape[2]:
        A = np.ascontiguousarray(np.swapaxes(A, 1, 2))
    B, m, n = A.shape
    ranks = np.zeros(B, dtype=np.int64)
    if m == 0 or n == 0 or B == 0:
        return ranks
    used = np.zeros((B, m), dtype=bool)
    ar = np.arange(B)
    for col in range(n):
        cand = (A[:, :, col] != 0) & ~used
        has = cand.any(axis=1)
        if not has.any():
            continue
        piv = cand.argmax(axis=1)
        lead = A[ar, piv, col]
        lead = np.where(has, lead, 1)
        prow = F.vmul(A[ar, piv, :], F.vinv(lead)[:, None])
        factor = A[:, :, col].copy()
        factor[ar, piv] = 0
        factor[~has] = 0
        A = F.vsub(A, F.vmul(factor[:, :, None], prow[:, None, :]))
        used[ar[has], piv[has]] = True
        ranks += has
        if used.all(axis=1).all():
            break
    return ranks
