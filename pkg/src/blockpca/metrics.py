"""Recovery quality measures.

The subspace distance is the sine of the largest principal angle,
``dist(U, Q) = ||P_perp(U) Q||_2``, computed as ``||Q - U (U^T Q)||_2`` so the
(p - k)-dimensional complement basis is never materialized. It is 0 exactly
when span(Q) lies inside span(U) and 1 when some direction of Q is orthogonal
to all of span(U).
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError
from .linalg import basis_columns, spectral_norm
from .stream import SampleStream, require_evaluation_stream

_UNIT_TOL = 1e-8


def principal_angle_distance(U, Q) -> float:
    """Sine of the largest principal angle between two subspaces, in [0, 1]."""
    Uc = basis_columns(U)
    Qc = basis_columns(Q)
    if Uc.shape[0] != Qc.shape[0]:
        raise ValidationError(
            f"ambient dimensions differ: {Uc.shape[0]} vs {Qc.shape[0]}"
        )
    residual = Qc - Uc @ (Uc.T @ Qc)
    if not residual.any():
        return 0.0
    return min(spectral_norm(residual), 1.0)


def _unit_vector(v, name: str) -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64).reshape(-1)
    if not np.isfinite(arr).all():
        raise ValidationError(f"{name} contains non-finite entries")
    norm = np.sqrt(arr @ arr)
    if abs(norm - 1.0) > _UNIT_TOL:
        raise ValidationError(f"{name} must have unit norm, got {norm!r}")
    return arr


def rank1_recovery_error(q, u) -> float:
    """min(||q - u||, ||q + u||): the vector error modulo sign ambiguity."""
    qv = _unit_vector(q, "q")
    uv = _unit_vector(u, "u")
    if qv.size != uv.size:
        raise ValidationError("q and u must have the same dimension")
    return float(min(np.linalg.norm(qv - uv), np.linalg.norm(qv + uv)))


def sin_squared(q, u) -> float:
    """1 - <q, u>^2, the squared sine of the angle between two unit vectors."""
    qv = _unit_vector(q, "q")
    uv = _unit_vector(u, "u")
    if qv.size != uv.size:
        raise ValidationError("q and u must have the same dimension")
    return float(min(max(1.0 - float(qv @ uv) ** 2, 0.0), 1.0))


def explained_variance(basis, eval_stream: SampleStream) -> float:
    """Fraction of total uncentered variance captured by ``basis``.

    One pass over an evaluation stream accumulating sum ||V^T x||^2 over
    sum ||x||^2; equals Tr(V^T X X^T V) / Tr(X X^T) for the streamed data.
    The data is used raw (no centering).
    """
    V = basis_columns(basis)
    require_evaluation_stream(eval_stream)
    if V.shape[0] != eval_stream.dim:
        raise ValidationError(
            f"basis dimension {V.shape[0]} does not match stream dimension {eval_stream.dim}"
        )
    captured = 0.0
    total = 0.0
    seen = 0
    while True:
        X = eval_stream.next_block(4096)
        if X is None:
            break
        seen += X.shape[0]
        proj = X @ V
        captured += float(np.sum(proj * proj))
        total += float(np.sum(X * X))
    if seen == 0:
        raise ValidationError("evaluation stream yielded no samples")
    if total == 0.0:
        raise ValidationError("all-zero data has no explained variance")
    return captured / total
