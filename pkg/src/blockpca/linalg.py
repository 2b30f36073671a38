"""Minimal dense linear algebra for tall p-by-k matrices.

Everything here is sized for the streaming use case: p may be large but k is
small, so factorizations either work column-by-column (Householder QR) or on
k-by-k Gram matrices (Jacobi eigensolve, polar projection). Nothing in this
module ever forms a p-by-p matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import RankDeficientError, ValidationError

ORTHONORMALITY_TOL = 1e-10
RANK_TOL = 1e-12

# Fixed seed for the power iteration's random start vector; spectral_norm is a
# deterministic function of its input.
_POWER_ITERATION_SEED = 0x5EED


def as_matrix(values, name: str = "matrix") -> np.ndarray:
    """Validate and return a finite 2-D float64 array (always a fresh copy)."""
    arr = np.array(values, dtype=np.float64, copy=True)
    if arr.ndim != 2:
        raise ValidationError(f"{name} must be 2-D, got ndim={arr.ndim}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValidationError(f"{name} must have at least one row and column")
    if not np.isfinite(arr).all():
        raise ValidationError(f"{name} contains non-finite entries")
    return arr


def as_vector(values, name: str = "vector") -> np.ndarray:
    """Validate and return a finite 1-D float64 array (always a fresh copy)."""
    arr = np.array(values, dtype=np.float64, copy=True)
    if arr.ndim != 1:
        raise ValidationError(f"{name} must be 1-D, got ndim={arr.ndim}")
    if arr.size < 1:
        raise ValidationError(f"{name} must be nonempty")
    if not np.isfinite(arr).all():
        raise ValidationError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class OrthonormalBasis:
    """A p-by-k matrix with orthonormal columns.

    Construction validates the orthonormality invariant (each entry of
    Q^T Q - I within ``ORTHONORMALITY_TOL``) and freezes the array, so a held
    instance can be trusted without re-checking.
    """

    columns: np.ndarray

    def __post_init__(self):
        cols = as_matrix(self.columns, "basis columns")
        p, k = cols.shape
        if k > p:
            raise ValidationError(f"basis cannot have more columns ({k}) than rows ({p})")
        gram = cols.T @ cols
        if np.abs(gram - np.eye(k)).max() > ORTHONORMALITY_TOL:
            raise ValidationError("columns are not orthonormal within tolerance")
        cols.setflags(write=False)
        object.__setattr__(self, "columns", cols)

    @property
    def dim(self) -> int:
        return self.columns.shape[0]

    @property
    def k(self) -> int:
        return self.columns.shape[1]


def basis_columns(basis) -> np.ndarray:
    """Accept an OrthonormalBasis, a matrix, or a unit vector; return validated columns."""
    if isinstance(basis, OrthonormalBasis):
        return basis.columns
    arr = np.asarray(basis, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    return OrthonormalBasis(arr).columns


def qr_decompose(M) -> tuple[OrthonormalBasis, np.ndarray]:
    """Thin QR factorization of a full-column-rank p-by-k matrix.

    Uses Householder reflections, then flips signs so that R has a strictly
    positive diagonal; this makes the factorization unique and the function
    bit-deterministic. Raises RankDeficientError naming the first offending
    column when a reduced column collapses below ``RANK_TOL`` times the
    largest original column norm.
    """
    A = as_matrix(M, "M")
    p, k = A.shape
    if p < k:
        raise ValidationError(f"need p >= k for thin QR, got shape ({p}, {k})")

    col_norms = np.sqrt((A * A).sum(axis=0))
    scale = col_norms.max()
    if scale == 0.0:
        raise RankDeficientError(0, "zero matrix has no full-rank QR factorization")

    reflectors = []
    for j in range(k):
        x = A[j:, j]
        nx = np.sqrt(x @ x)
        if nx <= RANK_TOL * scale:
            raise RankDeficientError(j)
        # alpha takes the opposite sign of x[0] to avoid cancellation.
        alpha = -nx if x[0] >= 0 else nx
        v = x.copy()
        v[0] -= alpha
        beta = 2.0 / (v @ v)
        block = A[j:, j:]
        block -= np.outer(v, beta * (v @ block))
        A[j:, j] = 0.0
        A[j, j] = alpha
        reflectors.append((j, v, beta))

    R = A[:k, :].copy()
    del A

    Q = np.zeros((p, k))
    Q[np.arange(k), np.arange(k)] = 1.0
    for j, v, beta in reversed(reflectors):
        block = Q[j:, :]
        block -= np.outer(v, beta * (v @ block))

    diag_sign = np.sign(np.diagonal(R)).copy()
    diag_sign[diag_sign == 0] = 1.0
    R *= diag_sign[:, None]
    Q *= diag_sign[None, :]
    return OrthonormalBasis(Q), R


def spectral_norm(M, max_iterations: int = 1000, tol: float = 1e-12) -> float:
    """Largest singular value, by power iteration on the Gram matrix M^T M.

    The start vector comes from a fixed-seed generator, so the result is a
    deterministic function of M. Iteration stops when the Rayleigh quotient
    moves by less than ``tol`` relative, or at ``max_iterations``.
    """
    A = as_matrix(M, "M")
    if not A.any():
        return 0.0
    # Iterate on the smaller side so each step costs O(rows * cols).
    if A.shape[0] < A.shape[1]:
        A = A.T
    n = A.shape[1]
    rng = np.random.Generator(np.random.PCG64(_POWER_ITERATION_SEED))
    v = rng.standard_normal(n)
    v /= np.sqrt(v @ v)
    rayleigh = 0.0
    for _ in range(max_iterations):
        w = A @ v
        new_rayleigh = w @ w
        if new_rayleigh == 0.0:
            # v landed in the null space; restart from a fresh direction.
            v = rng.standard_normal(n)
            v /= np.sqrt(v @ v)
            continue
        u = A.T @ w
        v = u / np.sqrt(u @ u)
        if abs(new_rayleigh - rayleigh) <= tol * max(new_rayleigh, np.finfo(float).tiny):
            rayleigh = new_rayleigh
            break
        rayleigh = new_rayleigh
    return float(np.sqrt(rayleigh))


def sample_gaussian_matrix(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    """A rows-by-cols matrix of i.i.d. standard normal entries."""
    if rows < 1 or cols < 1:
        raise ValidationError("matrix dimensions must be positive")
    return rng.standard_normal((rows, cols))


def jacobi_eigh(G, tol: float = 1e-14, max_sweeps: int = 60) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a small symmetric matrix by cyclic Jacobi rotations.

    Returns eigenvalues in descending order and the matching eigenvectors as
    columns. Intended for k-by-k Gram matrices with small k.
    """
    A = as_matrix(G, "G")
    n = A.shape[0]
    if A.shape[1] != n:
        raise ValidationError("matrix must be square")
    if np.abs(A - A.T).max() > 1e-8 * max(1.0, np.abs(A).max()):
        raise ValidationError("matrix must be symmetric")
    A = (A + A.T) / 2.0
    V = np.eye(n)
    norm = np.linalg.norm(A)
    if norm == 0.0:
        return np.zeros(n), V
    for _ in range(max_sweeps):
        off = np.sqrt(max(0.0, np.sum(A * A) - np.sum(np.diagonal(A) ** 2)))
        if off <= tol * norm:
            break
        for i in range(n - 1):
            for j in range(i + 1, n):
                if abs(A[i, j]) <= tol * norm / n:
                    continue
                theta = (A[j, j] - A[i, i]) / (2.0 * A[i, j])
                if theta == 0.0:
                    t = 1.0
                else:
                    t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot = np.array([[c, s], [-s, c]])
                # A <- J^T A J with J the plane rotation; V accumulates J.
                A[[i, j], :] = rot.T @ A[[i, j], :]
                A[:, [i, j]] = A[:, [i, j]] @ rot
                V[:, [i, j]] = V[:, [i, j]] @ rot
    values = np.diagonal(A).copy()
    order = np.argsort(values)[::-1]
    return values[order], V[:, order]


def polar_project(M) -> OrthonormalBasis:
    """The orthonormal polar factor of a full-column-rank p-by-k matrix.

    Equals U V^T from the thin SVD M = U S V^T, computed through the k-by-k
    Gram eigenproblem so memory stays O(pk). One refinement pass keeps the
    result orthonormal to working precision even for ill-conditioned input.
    """
    A = as_matrix(M, "M")
    p, k = A.shape
    if p < k:
        raise ValidationError(f"need p >= k, got shape ({p}, {k})")
    for _ in range(2):
        values, V = jacobi_eigh(A.T @ A)
        if values[-1] <= (RANK_TOL ** 2) * max(values[0], np.finfo(float).tiny):
            raise RankDeficientError(k - 1, "input does not have full column rank")
        inv_sqrt = V @ (V / np.sqrt(values)).T
        A = A @ inv_sqrt
    return OrthonormalBasis(A)
