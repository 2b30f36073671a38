"""Block-stochastic power method and orthogonal iteration.

The estimators consume a stream in T blocks of B samples. Within a block the
empirical covariance acts on the current iterate without ever being formed:
the rank-1 path accumulates s += (1/B) <q, x> x and the rank-k path
S += (1/B) x (x^T Q), then renormalizes (vector norm or QR) between blocks.
Working state is the current basis and the accumulator, O(kp) numbers total;
samples are read in small bounded chunks so nothing proportional to B*p or
p^2 is ever allocated on the training path.

Schedules (B, T) come from the finite-sample analysis (rank-1 and rank-k
forms), from the empirical rule T = ceil(ln p), B = floor(n/T), or are given
manually. The analysis hides absolute constants; c_B defaults to the
empirically tuned 0.2 and c_T to 1, and both are sweepable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConfigurationError,
    DegenerateBlockError,
    InsufficientSamplesError,
    PartialStreamError,
    RankDeficientError,
    ValidationError,
)
from .linalg import (
    OrthonormalBasis,
    basis_columns,
    jacobi_eigh,
    polar_project,
    qr_decompose,
    sample_gaussian_matrix,
)
from .metrics import principal_angle_distance
from .rng import derive_rng
from .stream import READ_BUFFER_FLOATS, SampleStream, require_training_stream

# Max samples pulled from the stream per call; further capped by the stream's
# own read-ahead budget.
TRAIN_CHUNK = 64

_DEGENERATE_NORM = 1e-14

_PROVENANCES = ("theorem1", "theorem2", "empirical", "manual")


@dataclass(frozen=True)
class BlockSchedule:
    """Block size B, block count T, and where the numbers came from."""

    block_size: int
    block_count: int
    provenance: str

    def __post_init__(self):
        if self.block_size < 1 or self.block_count < 1:
            raise ValidationError("block size and block count must be at least 1")
        if self.provenance not in _PROVENANCES:
            raise ValidationError(f"provenance must be one of {_PROVENANCES}")

    @property
    def total_samples(self) -> int:
        return self.block_size * self.block_count


def _check_schedule_inputs(p: int, sigma: float, eps: float, c_B: float, c_T: float) -> None:
    if p < 1:
        raise ValidationError("p must be at least 1")
    if not np.isfinite(sigma) or sigma < 0:
        raise ValidationError("sigma must be nonnegative")
    if not 0.0 < eps < 1.0:
        raise ValidationError("eps must lie strictly between 0 and 1")
    if c_B <= 0 or c_T <= 0:
        raise ValidationError("schedule constants must be positive")


def theorem1_schedule(
    p: int, sigma: float, eps: float, c_B: float = 0.2, c_T: float = 1.0
) -> BlockSchedule:
    """Rank-1 schedule.

    T = ceil(c_T * log(p/eps) / log((sigma^2+0.75)/(sigma^2+0.5))) and
    B = ceil(c_B * (1 + 3(sigma+sigma^2) sqrt(p))^2 * log(T+1) / eps^2).
    log(T+1) keeps the block size positive when T = 1.
    """
    _check_schedule_inputs(p, sigma, eps, c_B, c_T)
    s2 = sigma * sigma
    ratio = (s2 + 0.75) / (s2 + 0.5)
    T = max(1, math.ceil(c_T * math.log(p / eps) / math.log(ratio)))
    amplitude = 1.0 + 3.0 * (sigma + s2) * math.sqrt(p)
    B = max(1, math.ceil(c_B * amplitude**2 * math.log(T + 1) / eps**2))
    return BlockSchedule(block_size=B, block_count=T, provenance="theorem1")


def theorem2_schedule(
    p: int,
    k: int,
    sigma: float,
    lambda_k: float,
    eps: float,
    c_B: float = 0.2,
    c_T: float = 1.0,
) -> BlockSchedule:
    """Rank-k schedule.

    T = ceil(c_T * log(p/(k eps)) / log((sigma^2+0.75 l^2)/(sigma^2+0.5 l^2)))
    and B = ceil(c_B * ((1+sigma)^2 sqrt(k) + sigma sqrt(1+sigma^2) k sqrt(p))^2
    * log(T+1) / (l^4 eps^2)), with l = lambda_k the weakest retained spike.
    """
    _check_schedule_inputs(p, sigma, eps, c_B, c_T)
    if k < 1:
        raise ValidationError("k must be at least 1")
    if not np.isfinite(lambda_k) or not 0.0 < lambda_k <= 1.0:
        raise ValidationError("lambda_k must lie in (0, 1]")
    s2 = sigma * sigma
    l2 = lambda_k * lambda_k
    ratio = (s2 + 0.75 * l2) / (s2 + 0.5 * l2)
    T = max(1, math.ceil(c_T * math.log(p / (k * eps)) / math.log(ratio)))
    amplitude = (1.0 + sigma) ** 2 * math.sqrt(k) + sigma * math.sqrt(1.0 + s2) * k * math.sqrt(p)
    B = max(1, math.ceil(c_B * amplitude**2 * math.log(T + 1) / (l2 * l2 * eps**2)))
    return BlockSchedule(block_size=B, block_count=T, provenance="theorem2")


def empirical_schedule(n: int, p: int) -> BlockSchedule:
    """The experiment rule: T = ceil(ln p) blocks, B = floor(n/T).

    Leftover n - B*T samples are simply never read.
    """
    if p < 1:
        raise ValidationError("p must be at least 1")
    T = max(1, math.ceil(math.log(p)))
    if n < T:
        raise InsufficientSamplesError(
            f"n={n} cannot fill T={T} blocks of at least one sample"
        )
    return BlockSchedule(block_size=n // T, block_count=T, provenance="empirical")


def manual_schedule(block_size: int, block_count: int) -> BlockSchedule:
    return BlockSchedule(block_size=block_size, block_count=block_count, provenance="manual")


@dataclass(frozen=True)
class SubspaceEstimate:
    """A column-orthonormal estimate plus how much data produced it."""

    basis: OrthonormalBasis
    blocks_consumed: int
    samples_consumed: int


@dataclass(frozen=True)
class BlockTrace:
    """Per-block observability: block index, distance to a reference subspace
    (when one was supplied), and the spectral norm of the accumulator."""

    block: int
    distance: float | None
    accumulator_norm: float


@dataclass(frozen=True)
class RunReport:
    """Everything a run produced: the final estimate, the per-block trace,
    the schedule it followed, and the seed that reproduces it."""

    final: SubspaceEstimate
    per_block_trace: tuple
    schedule: BlockSchedule
    seed: int
    final_distance: float | None

    def __post_init__(self):
        if len(self.per_block_trace) != self.final.blocks_consumed:
            raise ValidationError("trace length must equal the number of completed blocks")
        expected = self.schedule.block_size * self.final.blocks_consumed
        if self.final.samples_consumed != expected:
            raise ValidationError("samples consumed must equal blocks * block size")

    def trace_rows(self) -> list[dict]:
        return [
            {
                "block": t.block,
                "distance": t.distance,
                "accumulator_norm": t.accumulator_norm,
            }
            for t in self.per_block_trace
        ]

    def summary_row(self) -> dict:
        return {
            "final_distance": self.final_distance,
            "samples_consumed": self.final.samples_consumed,
            "seed": self.seed,
            "block_size": self.schedule.block_size,
            "block_count": self.schedule.block_count,
            "provenance": self.schedule.provenance,
        }


def _train_chunk(dim: int) -> int:
    return max(1, min(TRAIN_CHUNK, READ_BUFFER_FLOATS // dim))


def _accumulator_spectral_norm(S: np.ndarray) -> float:
    # sqrt of the largest eigenvalue of the k-by-k Gram matrix.
    values, _ = jacobi_eigh(S.T @ S)
    return float(np.sqrt(max(values[0], 0.0)))


def _reference_basis(reference) -> OrthonormalBasis | None:
    if reference is None:
        return None
    if isinstance(reference, OrthonormalBasis):
        return reference
    arr = np.asarray(reference, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    return OrthonormalBasis(arr)


def block_power_method_rank1(
    stream: SampleStream,
    schedule: BlockSchedule,
    seed: int,
    reference=None,
) -> RunReport:
    """Recover the single dominant direction from one pass over the stream.

    The iterate starts as a normalized Gaussian vector and is refreshed once
    per block as the normalized block-average of <q, x> x. Working state is
    two length-p vectors plus scalars.
    """
    require_training_stream(stream)
    p = stream.dim
    ref = _reference_basis(reference)
    if ref is not None and ref.dim != p:
        raise ValidationError("reference dimension does not match the stream")
    B, T = schedule.block_size, schedule.block_count
    inv_b = 1.0 / B

    rng = derive_rng(seed, "init", 0)
    q = rng.standard_normal(p)
    q /= np.sqrt(q @ q)

    chunk = _train_chunk(p)
    trace = []
    s = np.zeros(p)
    for tau in range(T):
        s.fill(0.0)
        filled = 0
        while filled < B:
            X = stream.next_block(min(chunk, B - filled))
            if X is None:
                raise PartialStreamError(tau, stream.consumed_count)
            coeffs = X @ q
            coeffs *= inv_b
            s += X.T @ coeffs
            filled += X.shape[0]
        norm = float(np.sqrt(s @ s))
        if norm < _DEGENERATE_NORM:
            raise DegenerateBlockError(tau)
        q = s / norm
        distance = principal_angle_distance(ref, q[:, None]) if ref is not None else None
        trace.append(BlockTrace(block=tau, distance=distance, accumulator_norm=norm))

    final = SubspaceEstimate(
        basis=OrthonormalBasis(q[:, None]), blocks_consumed=T, samples_consumed=B * T
    )
    return RunReport(
        final=final,
        per_block_trace=tuple(trace),
        schedule=schedule,
        seed=seed,
        final_distance=trace[-1].distance if ref is not None else None,
    )


def _run_orthogonal_instances(
    stream: SampleStream,
    k: int,
    schedule: BlockSchedule,
    seed: int,
    instances: int,
    reference,
):
    """Advance ``instances`` independent iterates over one shared pass."""
    require_training_stream(stream)
    p = stream.dim
    if not 1 <= k <= p:
        raise ValidationError(f"need 1 <= k <= p, got k={k}, p={p}")
    ref = _reference_basis(reference)
    if ref is not None and ref.dim != p:
        raise ValidationError("reference dimension does not match the stream")
    B, T = schedule.block_size, schedule.block_count
    inv_b = 1.0 / B

    bases = []
    for i in range(instances):
        rng = derive_rng(seed, "init", i)
        basis, _ = qr_decompose(sample_gaussian_matrix(p, k, rng))
        bases.append(basis)
    traces = [[] for _ in range(instances)]
    accumulators = [np.zeros((p, k)) for _ in range(instances)]

    chunk = _train_chunk(p)
    for tau in range(T):
        for S in accumulators:
            S.fill(0.0)
        filled = 0
        while filled < B:
            X = stream.next_block(min(chunk, B - filled))
            if X is None:
                raise PartialStreamError(tau, stream.consumed_count)
            for i in range(instances):
                Y = X @ bases[i].columns
                Y *= inv_b
                accumulators[i] += X.T @ Y
            filled += X.shape[0]
        for i in range(instances):
            norm = _accumulator_spectral_norm(accumulators[i])
            if norm < _DEGENERATE_NORM:
                raise DegenerateBlockError(tau)
            bases[i] = None  # drop the old basis before QR to keep peak memory at 4kp
            try:
                basis, _ = qr_decompose(accumulators[i])
            except RankDeficientError as exc:
                raise DegenerateBlockError(
                    tau, f"accumulator rank deficient in block {tau} (column {exc.column})"
                ) from exc
            bases[i] = basis
            distance = principal_angle_distance(ref, basis) if ref is not None else None
            traces[i].append(BlockTrace(block=tau, distance=distance, accumulator_norm=norm))
    return bases, traces


def _report_for_instance(basis, trace, schedule, seed, has_reference) -> RunReport:
    final = SubspaceEstimate(
        basis=basis,
        blocks_consumed=schedule.block_count,
        samples_consumed=schedule.total_samples,
    )
    return RunReport(
        final=final,
        per_block_trace=tuple(trace),
        schedule=schedule,
        seed=seed,
        final_distance=trace[-1].distance if has_reference else None,
    )


def block_orthogonal_iteration(
    stream: SampleStream,
    k: int,
    schedule: BlockSchedule,
    seed: int,
    reference=None,
) -> RunReport:
    """Recover the dominant k-dimensional subspace from one pass.

    The iterate starts as the QR factor of a Gaussian p-by-k matrix; each
    block accumulates S = (1/B) sum x (x^T Q) online and re-orthonormalizes S
    by QR. Working state is two p-by-k matrices plus O(k^2).
    """
    bases, traces = _run_orthogonal_instances(stream, k, schedule, seed, 1, reference)
    return _report_for_instance(bases[0], traces[0], schedule, seed, reference is not None)


def boost_instance_count(p: int) -> int:
    """The log-scale instance count used to amplify the success probability."""
    if p < 1:
        raise ValidationError("p must be at least 1")
    return max(1, math.ceil(math.log2(p)))


def rayleigh_scores(stream: SampleStream, bases, n_samples: int) -> np.ndarray:
    """Score candidate bases on held-out data by the empirical Rayleigh trace
    (1/n) sum ||Q^T x||^2; larger means more captured energy."""
    if n_samples < 1:
        raise ValidationError("n_samples must be positive")
    cols = [basis_columns(b) for b in bases]
    if any(c.shape[0] != stream.dim for c in cols):
        raise ValidationError("candidate dimension does not match the stream")
    totals = np.zeros(len(cols))
    chunk = _train_chunk(stream.dim)
    seen = 0
    while seen < n_samples:
        X = stream.next_block(min(chunk, n_samples - seen))
        if X is None:
            raise PartialStreamError(0, stream.consumed_count)
        for i, c in enumerate(cols):
            proj = X @ c
            totals[i] += float(np.sum(proj * proj))
        seen += X.shape[0]
    return totals / n_samples


def boosted_recovery(
    stream: SampleStream,
    k: int,
    schedule: BlockSchedule,
    m: int,
    eval_block: int,
    seed: int,
    reference=None,
) -> RunReport:
    """Run m independently initialized instances over the same pass, then
    spend one extra block of ``eval_block`` samples scoring the candidates by
    their empirical Rayleigh trace, and return the best.

    With m = 1 this is exactly block_orthogonal_iteration (the evaluation
    block is still consumed). Memory is m times the single-instance state.
    """
    if m < 1:
        raise ValidationError("instance count m must be at least 1")
    if eval_block < 1:
        raise ValidationError("eval_block must be positive")
    bases, traces = _run_orthogonal_instances(stream, k, schedule, seed, m, reference)
    scores = rayleigh_scores(stream, bases, eval_block)
    winner = int(np.argmax(scores))
    return _report_for_instance(
        bases[winner], traces[winner], schedule, seed, reference is not None
    )


def oja_baseline(
    stream: SampleStream,
    k: int,
    seed: int,
    step=None,
    sigma: float = 1.0,
) -> SubspaceEstimate:
    """Per-sample stochastic power update with projection after every step:
    W <- Proj(W + eta_t x (x^T W)).

    Provided for empirical comparison only; no accuracy guarantee is claimed.
    ``step`` may be a constant, a callable t -> eta_t (t is 1-based), or None
    for the default eta_t = 1 / (sigma^2 t + p), a non-normative choice that
    keeps early steps bounded.
    """
    require_training_stream(stream)
    p = stream.dim
    if not 1 <= k <= p:
        raise ValidationError(f"need 1 <= k <= p, got k={k}, p={p}")
    if step is None:
        s2 = float(sigma) ** 2
        step_fn = lambda t: 1.0 / (s2 * t + p)
    elif callable(step):
        step_fn = step
    else:
        eta = float(step)
        step_fn = lambda t: eta

    rng = derive_rng(seed, "init", 0)
    W = polar_project(sample_gaussian_matrix(p, k, rng)).columns.copy()
    t = 0
    while True:
        x = stream.next_sample()
        if x is None:
            break
        t += 1
        eta = step_fn(t)
        if eta != 0.0:
            W += np.outer(x, eta * (x @ W))
            W = polar_project(W).columns.copy()
    if t == 0:
        raise ValidationError("stream yielded no samples")
    return SubspaceEstimate(
        basis=OrthonormalBasis(W), blocks_consumed=t, samples_consumed=t
    )
