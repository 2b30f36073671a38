"""Batch PCA oracle: the O(p^2)-memory method the streaming path is measured
against. Deliberately fenced off from the streaming path by a dimension guard.
"""

from __future__ import annotations

import warnings

import numpy as np

from .errors import IllConditionedWarning, OracleScaleError, RankDeficientError, ValidationError
from .linalg import OrthonormalBasis, qr_decompose, sample_gaussian_matrix
from .model import ORACLE_DIM_LIMIT
from .rng import derive_rng
from .stream import SampleStream

_EIGENGAP_TOL = 1e-12


def batch_pca_on_matrix(
    C,
    k: int,
    seed: int = 0,
    tol: float = 1e-10,
    max_iterations: int = 10_000,
) -> OrthonormalBasis:
    """Top-k eigenvectors of a symmetric PSD matrix by orthogonal iteration.

    Runs with one extra column when possible so the gap between the k-th and
    (k+1)-th eigenvalue estimates can be inspected; a gap below 1e-12 emits
    IllConditionedWarning because the k-dimensional subspace is then not well
    defined. Convergence requires both the Rayleigh values and the relative
    residual ||C Q - Q (Q^T C Q)|| to settle below ``tol``.
    """
    A = np.asarray(C, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValidationError("C must be a square matrix")
    p = A.shape[0]
    if p > ORACLE_DIM_LIMIT:
        raise OracleScaleError(f"batch oracle limited to p <= {ORACLE_DIM_LIMIT}, got {p}")
    if not 1 <= k <= p:
        raise ValidationError(f"need 1 <= k <= p, got k={k}")
    if np.abs(A - A.T).max() > 1e-8 * max(1.0, np.abs(A).max()):
        raise ValidationError("C must be symmetric")
    A = (A + A.T) / 2.0

    rng = derive_rng(seed, "batch-pca-init")
    m = min(k + 1, p)
    while True:
        try:
            Q = qr_decompose(sample_gaussian_matrix(p, m, rng))[0].columns
            theta = None
            for _ in range(max_iterations):
                Z = A @ Q
                basis, _ = qr_decompose(Z)
                Q = basis.columns
                CQ = A @ Q
                rayleigh_block = Q.T @ CQ
                new_theta = np.diagonal(rayleigh_block).copy()
                scale = max(np.abs(new_theta).max(), np.finfo(float).tiny)
                residual = np.linalg.norm(CQ - Q @ rayleigh_block) / scale
                moved = np.inf if theta is None else np.abs(new_theta - theta).max() / scale
                theta = new_theta
                if residual <= tol and moved <= tol:
                    break
            break
        except RankDeficientError:
            # C has rank below m; retry with exactly k columns.
            if m == k:
                raise
            m = k
    order = np.argsort(theta)[::-1]
    Q = Q[:, order]
    theta = theta[order]
    lam_next = theta[k] if m > k else 0.0
    if k < p and theta[k - 1] - lam_next < _EIGENGAP_TOL:
        warnings.warn(
            f"eigengap {theta[k - 1] - lam_next:.3e} below {_EIGENGAP_TOL}; "
            "top-k subspace is ill conditioned",
            IllConditionedWarning,
        )
    return OrthonormalBasis(Q[:, :k])


def batch_pca(samples, k: int, seed: int = 0) -> OrthonormalBasis:
    """Top-k eigenvectors of the empirical covariance of stored samples."""
    X = np.asarray(samples, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValidationError("samples must be a nonempty (n, p) array")
    p = X.shape[1]
    if p > ORACLE_DIM_LIMIT:
        raise OracleScaleError(f"batch oracle limited to p <= {ORACLE_DIM_LIMIT}, got {p}")
    C = (X.T @ X) / X.shape[0]
    return batch_pca_on_matrix(C, k, seed=seed)


def empirical_covariance(stream: SampleStream) -> tuple[np.ndarray, int]:
    """Accumulate (1/n) sum x x^T over a whole stream.

    O(p^2) memory by design; used for batch comparisons on data that is too
    long to store sample-by-sample.
    """
    p = stream.dim
    if p > ORACLE_DIM_LIMIT:
        raise OracleScaleError(f"batch oracle limited to p <= {ORACLE_DIM_LIMIT}, got {p}")
    C = np.zeros((p, p))
    n = 0
    while True:
        X = stream.next_block(4096)
        if X is None:
            break
        C += X.T @ X
        n += X.shape[0]
    if n == 0:
        raise ValidationError("stream yielded no samples")
    C /= n
    return C, n
