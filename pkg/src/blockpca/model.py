"""Spiked covariance generative model.

Samples are x = A z + w with A = U diag(lambdas) V^T, z standard normal in
R^r, and w isotropic Gaussian noise with standard deviation sigma in R^p.
The population covariance is A A^T + sigma^2 I; its top-r eigenspace is
span(U), which is what the streaming estimators try to recover.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import OracleScaleError, ValidationError
from .linalg import OrthonormalBasis, as_vector, qr_decompose, sample_gaussian_matrix

# Dense p-by-p matrices are test oracles only; refuse to build them above this.
ORACLE_DIM_LIMIT = 5000


@dataclass(frozen=True)
class SpikedModel:
    """Immutable model parameters.

    ``spike_basis`` is the p-by-r orthonormal U, ``lambdas`` the descending
    spike strengths with lambdas[0] == 1, ``sigma`` the noise level, and
    ``right_basis`` the r-by-r orthonormal V. V does not change the sampling
    distribution (z is isotropic) but is kept so the signal matrix A has a
    general SVD shape.
    """

    spike_basis: OrthonormalBasis
    lambdas: np.ndarray
    sigma: float
    right_basis: OrthonormalBasis
    signal: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        lams = as_vector(self.lambdas, "lambdas")
        if abs(lams[0] - 1.0) > 1e-12:
            raise ValidationError("lambdas must be normalized with lambdas[0] == 1")
        if np.any(np.diff(lams) > 0):
            raise ValidationError("lambdas must be sorted in descending order")
        if lams[-1] <= 0:
            raise ValidationError("lambdas must be strictly positive")
        if not np.isfinite(self.sigma) or self.sigma < 0:
            raise ValidationError("sigma must be a nonnegative real")
        r = lams.size
        if self.spike_basis.k != r:
            raise ValidationError("spike_basis must have one column per lambda")
        if self.right_basis.dim != r or self.right_basis.k != r:
            raise ValidationError("right_basis must be square of size r")
        if self.spike_basis.dim < r:
            raise ValidationError("ambient dimension must be at least the spike rank")
        lams.setflags(write=False)
        object.__setattr__(self, "lambdas", lams)
        signal = self.spike_basis.columns @ (lams[:, None] * self.right_basis.columns.T)
        signal.setflags(write=False)
        object.__setattr__(self, "signal", signal)

    @property
    def p(self) -> int:
        return self.spike_basis.dim

    @property
    def r(self) -> int:
        return self.lambdas.size


def make_model(p: int, lambdas, sigma: float, rng: np.random.Generator) -> SpikedModel:
    """Draw a random model: U and V come from QR of Gaussian matrices."""
    lams = as_vector(lambdas, "lambdas")
    r = lams.size
    if p < r:
        raise ValidationError(f"p={p} is smaller than the spike rank {r}")
    U, _ = qr_decompose(sample_gaussian_matrix(p, r, rng))
    V, _ = qr_decompose(sample_gaussian_matrix(r, r, rng))
    return SpikedModel(spike_basis=U, lambdas=lams, sigma=float(sigma), right_basis=V)


def draw_samples(model: SpikedModel, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` samples as rows of an (n, p) array.

    Consumes the generator exactly like ``n`` calls of :func:`draw_sample`
    (same variates, same order); row values agree with the per-call path up
    to floating-point summation order.
    """
    if n < 0:
        raise ValidationError("n must be nonnegative")
    p, r = model.p, model.r
    if model.sigma == 0.0:
        Z = rng.standard_normal((n, r))
        return Z @ model.signal.T
    buf = rng.standard_normal((n, r + p))
    X = buf[:, :r] @ model.signal.T
    X += model.sigma * buf[:, r:]
    return X


def draw_sample(model: SpikedModel, rng: np.random.Generator) -> np.ndarray:
    """Draw one sample x = A z + w."""
    p, r = model.p, model.r
    if model.sigma == 0.0:
        z = rng.standard_normal(r)
        return model.signal @ z
    buf = rng.standard_normal(r + p)
    x = model.signal @ buf[:r]
    x += model.sigma * buf[r:]
    return x


def population_covariance(model: SpikedModel) -> np.ndarray:
    """The exact covariance A A^T + sigma^2 I, as a dense test oracle.

    Guarded at ``ORACLE_DIM_LIMIT`` because the library's streaming path must
    never materialize p-by-p matrices; only diagnostics may.
    """
    p = model.p
    if p > ORACLE_DIM_LIMIT:
        raise OracleScaleError(
            f"population covariance is a desk-scale oracle; p={p} exceeds {ORACLE_DIM_LIMIT}"
        )
    U = model.spike_basis.columns
    C = (U * model.lambdas**2) @ U.T
    C[np.diag_indices(p)] += model.sigma**2
    return C


def format_model_config(p: int, lambdas, sigma: float, seed: int) -> str:
    """Serialize a model configuration as plain ``key = value`` text."""
    lams = as_vector(lambdas, "lambdas")
    lines = [
        f"p = {p}",
        "lambdas = " + ",".join(format(v, ".12g") for v in lams),
        f"sigma = {format(float(sigma), '.12g')}",
        f"seed = {int(seed)}",
    ]
    return "\n".join(lines) + "\n"


def parse_model_config(text: str) -> dict:
    """Parse the plain-text key-value format written by format_model_config."""
    out = {}
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValidationError(f"model config line {i} is not 'key = value': {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        try:
            if key == "p":
                out["p"] = int(value)
            elif key == "lambdas":
                out["lambdas"] = [float(v) for v in value.split(",") if v.strip()]
            elif key == "sigma":
                out["sigma"] = float(value)
            elif key == "seed":
                out["seed"] = int(value)
            else:
                raise ValidationError(f"unknown model config key {key!r}")
        except ValueError as exc:
            raise ValidationError(f"model config line {i}: {exc}") from exc
    missing = {"p", "lambdas", "sigma", "seed"} - set(out)
    if missing:
        raise ValidationError(f"model config missing keys: {sorted(missing)}")
    return out
