import numpy as np
import pytest

from blockpca import (
    ArrayStream,
    EvaluationStreamError,
    ValidationError,
    derive_rng,
    explained_variance,
    principal_angle_distance,
    qr_decompose,
    rank1_recovery_error,
    sin_squared,
)


def _random_basis(p, k, tag):
    rng = derive_rng(33, "metrics", tag)
    return qr_decompose(rng.standard_normal((p, k)))[0]


def test_distance_zero_for_same_subspace():
    U = _random_basis(10, 3, "same")
    assert principal_angle_distance(U, U) == pytest.approx(0.0, abs=1e-12)


def test_distance_orthogonal_subspaces():
    e1 = np.array([[1.0], [0.0]])
    e2 = np.array([[0.0], [1.0]])
    assert principal_angle_distance(e1, e2) == pytest.approx(1.0, abs=1e-12)


def test_distance_is_sine_of_angle():
    angle = np.deg2rad(30.0)
    q = np.array([[np.cos(angle)], [np.sin(angle)]])
    e1 = np.array([[1.0], [0.0]])
    assert principal_angle_distance(e1, q) == pytest.approx(0.5, abs=1e-12)


@pytest.mark.parametrize("trial", range(5))
def test_distance_symmetry_same_k(trial):
    U = _random_basis(12, 3, ("u", trial))
    Q = _random_basis(12, 3, ("q", trial))
    assert principal_angle_distance(U, Q) == pytest.approx(
        principal_angle_distance(Q, U), abs=1e-9
    )


@pytest.mark.parametrize("trial", range(3))
def test_distance_rotation_invariance(trial):
    U = _random_basis(11, 3, ("rotu", trial))
    Q = _random_basis(11, 3, ("rotq", trial))
    rot = qr_decompose(derive_rng(44, "rot", trial).standard_normal((3, 3)))[0].columns
    base = principal_angle_distance(U, Q)
    assert principal_angle_distance(U, Q.columns @ rot) == pytest.approx(base, abs=1e-10)
    assert principal_angle_distance(U.columns @ rot, Q) == pytest.approx(base, abs=1e-10)


def test_distance_matches_dense_complement_oracle():
    p = 9
    U = _random_basis(p, 2, "dense-u")
    Q = _random_basis(p, 4, "dense-q")
    # Build U_perp explicitly and compare against the memory-light route.
    full = np.linalg.svd(U.columns, full_matrices=True)[0]
    u_perp = full[:, 2:]
    expected = np.linalg.norm(u_perp.T @ Q.columns, 2)
    assert principal_angle_distance(U, Q) == pytest.approx(expected, abs=1e-10)


def test_distance_dimension_mismatch():
    with pytest.raises(ValidationError):
        principal_angle_distance(_random_basis(5, 2, "a"), _random_basis(6, 2, "b"))


def test_rank1_error_examples():
    u = np.zeros(4)
    u[0] = 1.0
    assert rank1_recovery_error(u, u) == 0.0
    assert rank1_recovery_error(-u, u) == 0.0
    v = np.zeros(4)
    v[1] = 1.0
    assert rank1_recovery_error(v, u) == pytest.approx(np.sqrt(2.0), abs=1e-12)


def test_rank1_error_requires_unit_norm():
    with pytest.raises(ValidationError):
        rank1_recovery_error(np.array([2.0, 0.0]), np.array([1.0, 0.0]))


@pytest.mark.parametrize("trial", range(10))
def test_rank1_error_algebraic_identity(trial):
    rng = derive_rng(55, "r1", trial)
    q = rng.standard_normal(8)
    q /= np.linalg.norm(q)
    u = rng.standard_normal(8)
    u /= np.linalg.norm(u)
    err = rank1_recovery_error(q, u)
    assert err**2 == pytest.approx(2.0 - 2.0 * abs(q @ u), abs=1e-12)


def test_sin_squared_examples():
    u = np.array([1.0, 0.0])
    v = np.array([0.0, 1.0])
    assert sin_squared(u, u) == 0.0
    assert sin_squared(u, v) == 1.0


def test_error_bounded_by_twice_root_sin_squared():
    rng = derive_rng(56, "bound")
    for _ in range(1000):
        q = rng.standard_normal(6)
        q /= np.linalg.norm(q)
        u = rng.standard_normal(6)
        u /= np.linalg.norm(u)
        assert rank1_recovery_error(q, u) <= 2.0 * np.sqrt(sin_squared(q, u)) + 1e-12


def test_explained_variance_full_basis_is_one():
    rng = derive_rng(57, "ev")
    X = rng.standard_normal((25, 6))
    V = qr_decompose(rng.standard_normal((6, 6)))[0]
    ev = explained_variance(V, ArrayStream(X, evaluation_only=True))
    assert ev == pytest.approx(1.0, abs=1e-12)


def test_explained_variance_in_span_is_one():
    rng = derive_rng(58, "ev2")
    V = qr_decompose(rng.standard_normal((7, 2)))[0]
    coeffs = rng.standard_normal((30, 2))
    X = coeffs @ V.columns.T
    ev = explained_variance(V, ArrayStream(X, evaluation_only=True))
    assert ev == pytest.approx(1.0, abs=1e-12)


def test_explained_variance_matches_dense_oracle():
    rng = derive_rng(59, "ev3")
    X = rng.standard_normal((30, 6))
    V = qr_decompose(rng.standard_normal((6, 2)))[0]
    expected = np.trace(V.columns.T @ X.T @ X @ V.columns) / np.trace(X.T @ X)
    got = explained_variance(V, ArrayStream(X, evaluation_only=True))
    assert got == pytest.approx(expected, abs=1e-10)


def test_explained_variance_monotone_under_extension():
    rng = derive_rng(60, "ev4")
    X = rng.standard_normal((40, 8))
    full = qr_decompose(rng.standard_normal((8, 5)))[0].columns
    values = [
        explained_variance(full[:, :k], ArrayStream(X, evaluation_only=True))
        for k in range(1, 6)
    ]
    assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))


def test_explained_variance_errors():
    V = qr_decompose(np.eye(3))[0]
    with pytest.raises(EvaluationStreamError):
        explained_variance(V, ArrayStream(np.ones((2, 3))))  # not an eval stream
    with pytest.raises(ValidationError):
        explained_variance(V, ArrayStream(np.ones((0, 3)), evaluation_only=True))
    with pytest.raises(ValidationError):
        explained_variance(V, ArrayStream(np.zeros((4, 3)), evaluation_only=True))
