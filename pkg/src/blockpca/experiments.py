"""Experiment drivers behind the CLI.

Each driver returns (header, rows) where rows are dicts of plain Python
values; CSV formatting lives in the CLI. Every trial derives its own seed
from (base seed, role tags), so results are reproducible and independent of
execution order; trials may run in a process pool (``BLOCKPCA_WORKERS``)
with rows always emitted in trial order.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .algorithm import (
    BlockSchedule,
    block_orthogonal_iteration,
    block_power_method_rank1,
    empirical_schedule,
    manual_schedule,
    theorem1_schedule,
    theorem2_schedule,
)
from .batch import batch_pca_on_matrix, empirical_covariance
from .diagnostics import (
    covariance_deviation,
    initialization_overlap_stats,
    recursion_closed_form,
    recursion_one_step,
)
from .errors import ConfigurationError, InsufficientSamplesError, ValidationError
from .metrics import explained_variance, principal_angle_distance, rank1_recovery_error
from .model import ORACLE_DIM_LIMIT, draw_samples, make_model
from .rng import derive_rng, derive_seed
from .stream import (
    parse_bag_of_words,
    reopen_for_evaluation,
    stream_from_corpus,
    stream_from_model,
)


def worker_count() -> int:
    """Trial parallelism, from the BLOCKPCA_WORKERS environment variable."""
    try:
        return max(1, int(os.environ.get("BLOCKPCA_WORKERS", "1")))
    except ValueError:
        return 1


def _map_trials(fn, args_list):
    workers = worker_count()
    if workers == 1 or len(args_list) < 2:
        return [fn(args) for args in args_list]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, args_list, chunksize=max(1, len(args_list) // (4 * workers))))


def build_schedule(
    mode: str,
    p: int,
    k: int,
    sigma: float,
    lambdas,
    eps: float | None,
    n: int | None,
    block_size: int | None,
    block_count: int | None,
    c_B: float,
    c_T: float,
) -> BlockSchedule:
    """Resolve a schedule from CLI-style arguments.

    ``theorem`` uses the rank-1 formula for k = 1 and the rank-k formula with
    the weakest spike strength otherwise; ``empirical`` needs the sample
    budget n; ``manual`` needs explicit block size and count.
    """
    if mode == "theorem":
        if eps is None:
            raise ConfigurationError("theorem schedules need eps")
        lams = np.asarray(lambdas, dtype=np.float64)
        if k == 1 and lams.size == 1:
            return theorem1_schedule(p, sigma, eps, c_B=c_B, c_T=c_T)
        return theorem2_schedule(p, k, sigma, float(lams[-1]), eps, c_B=c_B, c_T=c_T)
    if mode == "empirical":
        if n is None:
            raise ConfigurationError("the empirical schedule needs the sample budget n")
        return empirical_schedule(n, p)
    if mode == "manual":
        if block_size is None or block_count is None:
            raise ConfigurationError("manual schedules need block size and block count")
        return manual_schedule(block_size, block_count)
    raise ConfigurationError(f"unknown schedule mode {mode!r}")


def run_recovery_trial(args: tuple) -> dict:
    """One independent recovery run; the workhorse behind recover/phase/scaling.

    Redraws the model, the stream, and the initialization from seeds derived
    off (base_seed, "trial", index). The reported distance is the success
    metric's value: the sign-resolved vector error for k = 1, the largest
    principal angle distance against the spike basis otherwise (against the
    full rank-r basis when k < r, where it measures containment).
    """
    (p, k, lambdas, sigma, schedule, eps, base_seed, index) = args
    trial_seed = derive_seed(base_seed, "trial", index)
    lams = np.asarray(lambdas, dtype=np.float64)
    r = lams.size
    if k > r:
        raise ConfigurationError(f"k={k} exceeds the model rank r={r}")
    model = make_model(p, lams, sigma, derive_rng(trial_seed, "model"))
    stream = stream_from_model(model, schedule.total_samples, derive_seed(trial_seed, "stream"))
    algo_seed = derive_seed(trial_seed, "algorithm")
    if k == 1 and r == 1:
        mode = "rank1"
        u = model.spike_basis.columns[:, 0]
        report = block_power_method_rank1(stream, schedule, algo_seed, reference=u)
        distance = rank1_recovery_error(report.final.basis.columns[:, 0], u)
    else:
        mode = "rankk" if k == r else "underparameterized"
        report = block_orthogonal_iteration(
            stream, k, schedule, algo_seed, reference=model.spike_basis
        )
        distance = float(report.final_distance)
    return {
        "trial": index,
        "seed": trial_seed,
        "final_distance": distance,
        "success": int(eps is not None and distance <= eps),
        "samples_used": report.final.samples_consumed,
        "block_size": schedule.block_size,
        "block_count": schedule.block_count,
        "mode": mode,
    }


RECOVER_HEADER = (
    "trial",
    "seed",
    "final_distance",
    "success",
    "samples_used",
    "block_size",
    "block_count",
    "mode",
)


def recover_rows(
    p: int,
    k: int,
    lambdas,
    sigma: float,
    schedule: BlockSchedule,
    eps: float,
    trials: int,
    seed: int,
) -> list[dict]:
    if trials < 1:
        raise ValidationError("trials must be positive")
    args = [(p, k, tuple(lambdas), sigma, schedule, eps, seed, i) for i in range(trials)]
    return _map_trials(run_recovery_trial, args)


def success_fraction(
    p: int, k: int, lambdas, sigma: float, schedule: BlockSchedule, eps: float,
    trials: int, seed: int,
) -> float:
    rows = recover_rows(p, k, lambdas, sigma, schedule, eps, trials, seed)
    return sum(r["success"] for r in rows) / trials


def _batch_trial(args: tuple) -> int:
    """Success indicator for batch PCA given the same sample budget."""
    (p, sigma, n, eps, base_seed, index) = args
    trial_seed = derive_seed(base_seed, "trial", index)
    model = make_model(p, [1.0], sigma, derive_rng(trial_seed, "model"))
    stream = stream_from_model(model, n, derive_seed(trial_seed, "stream"))
    C, _ = empirical_covariance(stream)
    basis = batch_pca_on_matrix(C, 1, seed=derive_seed(trial_seed, "algorithm"))
    err = rank1_recovery_error(basis.columns[:, 0], model.spike_basis.columns[:, 0])
    return int(err <= eps)


def geometric_grid(lo: int, hi: int, factor: float) -> list[int]:
    """Strictly increasing integer grid lo, lo*factor, ... covering hi."""
    if lo < 1 or hi < lo or factor <= 1.0:
        raise ValidationError("need 1 <= lo <= hi and factor > 1")
    grid = [lo]
    while grid[-1] < hi:
        nxt = max(grid[-1] + 1, math.ceil(grid[-1] * factor))
        grid.append(min(nxt, hi))
    return grid


def minimal_threshold(evaluate, grid: list[int], target: float) -> tuple[int, bool]:
    """Smallest grid point whose score reaches ``target``.

    Assumes the score is (statistically) non-decreasing along the grid.
    Brackets the crossing with geometrically growing index steps (so the
    expensive top of the grid is only evaluated when the crossing really is
    that high), then bisects the bracket. Returns (value, saturated);
    saturated means even the top of the grid missed the target.
    """
    if evaluate(grid[0]) >= target:
        return grid[0], False
    lo = 0
    step = 1
    hi = None
    while True:
        idx = min(lo + step, len(grid) - 1)
        if evaluate(grid[idx]) >= target:
            hi = idx
            break
        lo = idx
        if idx == len(grid) - 1:
            return grid[-1], True
        step *= 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if evaluate(grid[mid]) >= target:
            hi = mid
        else:
            lo = mid
    return grid[hi], False


SCALING_HEADER = (
    "p",
    "n_streaming",
    "streaming_saturated",
    "n_batch",
    "batch_saturated",
)


def scaling_rows(
    p_list,
    sigma: float,
    eps: float,
    success_target: float,
    trials: int,
    seed: int,
    n_floor_mult: int = 32,
    n_cap_mult: int = 8192,
    grid_factor: float = 1.3,
    include_batch: bool = False,
) -> tuple[list[dict], float | None]:
    """Minimal sample budget reaching the success target, per dimension.

    Returns the rows and the fitted log-log slope of n against p over the
    unsaturated streaming entries (None when fewer than two such rows).
    """
    ps = list(p_list)
    if sorted(ps) != ps or len(set(ps)) != len(ps):
        raise ValidationError("p-list must be strictly ascending")
    rows = []
    for p in ps:
        grid = geometric_grid(n_floor_mult * p, n_cap_mult * p, grid_factor)

        def stream_frac(n: int, p=p) -> float:
            schedule = empirical_schedule(n, p)
            return success_fraction(
                p, 1, (1.0,), sigma, schedule, eps, trials, derive_seed(seed, "scaling", p, n)
            )

        n_stream, saturated = minimal_threshold(stream_frac, grid, success_target)
        row = {
            "p": p,
            "n_streaming": None if saturated else n_stream,
            "streaming_saturated": int(saturated),
            "n_batch": None,
            "batch_saturated": None,
        }
        if include_batch and p <= ORACLE_DIM_LIMIT:

            def batch_frac(n: int, p=p) -> float:
                base = derive_seed(seed, "scaling-batch", p, n)
                args = [(p, sigma, n, eps, base, i) for i in range(trials)]
                return sum(_map_trials(_batch_trial, args)) / trials

            n_batch, bsat = minimal_threshold(batch_frac, grid, success_target)
            row["n_batch"] = None if bsat else n_batch
            row["batch_saturated"] = int(bsat)
        rows.append(row)
    fitted = [(r["p"], r["n_streaming"]) for r in rows if r["n_streaming"] is not None]
    slope = None
    if len(fitted) >= 2:
        slope = fit_loglog_slope([p for p, _ in fitted], [n for _, n in fitted])
    return rows, slope


def fit_loglog_slope(xs, ys) -> float:
    """Least-squares slope of log(y) against log(x)."""
    lx = np.log(np.asarray(xs, dtype=np.float64))
    ly = np.log(np.asarray(ys, dtype=np.float64))
    if lx.size < 2:
        raise ValidationError("need at least two points to fit a slope")
    lx_c = lx - lx.mean()
    return float((lx_c @ (ly - ly.mean())) / (lx_c @ lx_c))


PHASE_HEADER = ("sigma", "n", "success_fraction")


def phase_rows(
    sigma_grid, n_grid, p: int, eps: float, trials: int, seed: int
) -> list[dict]:
    """Success fraction over the full (sigma, n) Cartesian grid.

    Budgets too small to fill the schedule's blocks score 0 by definition.
    """
    rows = []
    for sigma in sigma_grid:
        for n in n_grid:
            try:
                schedule = empirical_schedule(n, p)
            except InsufficientSamplesError:
                rows.append({"sigma": sigma, "n": n, "success_fraction": 0.0})
                continue
            frac = success_fraction(
                p, 1, (1.0,), sigma, schedule, eps, trials,
                derive_seed(seed, "phase", str(sigma), n),
            )
            rows.append({"sigma": sigma, "n": n, "success_fraction": frac})
    return rows


REALDATA_HEADER = (
    "samples_consumed",
    "explained_variance_streaming",
    "explained_variance_batch",
)


def realdata_rows(
    docword_path,
    k: int,
    orientation: str,
    normalize: bool,
    seed: int,
    include_batch: bool = True,
) -> list[dict]:
    """Stream a bag-of-words corpus once, then score both passes.

    Uses the empirical schedule for the corpus size; explained variance is
    measured on a fresh evaluation pass. The batch column is filled only when
    the sample dimension is within the dense-oracle guard.
    """
    corpus = parse_bag_of_words(docword_path)
    stream = stream_from_corpus(corpus, orientation, normalize)
    n = corpus.doc_count if orientation == "docs" else corpus.vocab_size
    schedule = empirical_schedule(n, stream.dim)
    report = block_orthogonal_iteration(stream, k, schedule, derive_seed(seed, "algorithm"))
    ev_streaming = explained_variance(report.final.basis, reopen_for_evaluation(stream))
    ev_batch = None
    if include_batch and stream.dim <= ORACLE_DIM_LIMIT:
        C, _ = empirical_covariance(reopen_for_evaluation(stream))
        basis = batch_pca_on_matrix(C, k, seed=derive_seed(seed, "batch"))
        ev_batch = explained_variance(basis, reopen_for_evaluation(stream))
    return [
        {
            "samples_consumed": report.final.samples_consumed,
            "explained_variance_streaming": ev_streaming,
            "explained_variance_batch": ev_batch,
        }
    ]


RECURSION_HEADER = ("cells_checked", "violations", "max_violation")

_RECURSION_DELTAS = np.linspace(0.01, 0.99, 20)
_RECURSION_GAMMAS = np.linspace(0.05, 0.95, 20)
_RECURSION_MAX_TAU = 100


def recursion_check_rows(tolerance: float = 1e-12) -> list[dict]:
    """Grid check that iterating the one-step recursion never exceeds the
    closed form, over delta0 x gamma x tau up to 100 steps."""
    cells = 0
    violations = 0
    worst = 0.0
    for delta0 in _RECURSION_DELTAS:
        for gamma in _RECURSION_GAMMAS:
            delta = delta0
            for tau in range(1, _RECURSION_MAX_TAU + 1):
                delta = recursion_one_step(delta, gamma)
                bound = recursion_closed_form(delta0, gamma, tau)
                gap = delta - bound
                worst = max(worst, gap)
                cells += 1
                if gap > tolerance:
                    violations += 1
    return [{"cells_checked": cells, "violations": violations, "max_violation": worst}]


INIT_HEADER = ("percentile", "scaled_smallest_singular_value")


def init_overlap_rows(p: int, k: int, trials: int, seed: int) -> list[dict]:
    stats = initialization_overlap_stats(p, k, trials, derive_rng(seed, "init-diagnostic"))
    return [
        {"percentile": q, "scaled_smallest_singular_value": v}
        for q, v in sorted(stats.scaled_quantiles.items())
    ]


CONCENTRATION_HEADER = ("block_size", "blocks", "median_deviation", "mean_deviation")


def concentration_rows(
    p: int, sigma: float, block_sizes, blocks: int, seed: int
) -> list[dict]:
    """Monte Carlo spectral deviation of block empirical covariances from the
    population covariance, for each requested block size."""
    if blocks < 1:
        raise ValidationError("need at least one block per block size")
    model = make_model(p, [1.0], sigma, derive_rng(seed, "model"))
    rows = []
    for B in block_sizes:
        if B < 1:
            raise ValidationError("block sizes must be positive")
        rng = derive_rng(seed, "concentration", B)
        devs = np.empty(blocks)
        for i in range(blocks):
            devs[i] = covariance_deviation(draw_samples(model, B, rng), model)
        rows.append(
            {
                "block_size": B,
                "blocks": blocks,
                "median_deviation": float(np.median(devs)),
                "mean_deviation": float(np.mean(devs)),
            }
        )
    return rows
