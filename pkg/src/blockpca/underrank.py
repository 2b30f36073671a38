"""Under-parameterized runs: requested rank below the true spike rank.

When the data has r spikes but the iteration is run with k < r, exact
recovery of a specific k-subset is not the goal; the estimate should simply
stay inside span(U). The containment score is the same largest-principal-angle
distance measured against the full r-dimensional spike basis, i.e. the size
of the component of the estimate leaking outside span(U).
"""

from __future__ import annotations

from .algorithm import BlockSchedule, RunReport, block_orthogonal_iteration
from .errors import ConfigurationError
from .model import SpikedModel
from .stream import stream_from_model


def run_underparameterized(
    model: SpikedModel, k: int, schedule: BlockSchedule, seed: int
) -> tuple[RunReport, float]:
    """Run rank-k block orthogonal iteration against a rank-r > k stream.

    Returns the run report (per-block distances measured against the full
    spike basis) and the final containment value ||P_perp(U) Q_T||_2.
    The schedule should be computed with the weakest true spike strength
    lambda_r, since that is the direction that pulls the iterate in slowest.
    """
    if k >= model.r:
        raise ConfigurationError(
            f"k={k} must be strictly below the true rank r={model.r}; "
            "use block_orthogonal_iteration for full-rank recovery"
        )
    stream = stream_from_model(model, schedule.total_samples, seed)
    report = block_orthogonal_iteration(
        stream, k, schedule, seed, reference=model.spike_basis
    )
    return report, float(report.final_distance)
