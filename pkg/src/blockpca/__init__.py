"""Single-pass, memory-limited streaming PCA.

Estimates the dominant k-dimensional subspace of high-dimensional streamed
data with O(kp) working memory, by a block-stochastic variant of power
iteration / orthogonal iteration: each block of B samples applies the block's
empirical covariance to the current iterate (accumulated online, never
formed) followed by renormalization. Includes schedule calculators, recovery
metrics, a batch-PCA oracle, convergence diagnostics, bag-of-words ingestion,
and an experiment CLI.
"""

from .algorithm import (
    BlockSchedule,
    BlockTrace,
    RunReport,
    SubspaceEstimate,
    block_orthogonal_iteration,
    block_power_method_rank1,
    boost_instance_count,
    boosted_recovery,
    empirical_schedule,
    manual_schedule,
    oja_baseline,
    rayleigh_scores,
    theorem1_schedule,
    theorem2_schedule,
)
from .batch import batch_pca, batch_pca_on_matrix, empirical_covariance
from .diagnostics import (
    OverlapStats,
    contraction_factor,
    covariance_deviation,
    initialization_overlap_stats,
    recursion_closed_form,
    recursion_one_step,
)
from .errors import (
    BlockPCAError,
    ConfigurationError,
    DegenerateBlockError,
    EvaluationStreamError,
    IllConditionedWarning,
    InsufficientSamplesError,
    NotReopenableError,
    OracleScaleError,
    ParseError,
    PartialStreamError,
    RankDeficientError,
    ValidationError,
)
from .linalg import (
    OrthonormalBasis,
    jacobi_eigh,
    polar_project,
    qr_decompose,
    sample_gaussian_matrix,
    spectral_norm,
)
from .metrics import (
    explained_variance,
    principal_angle_distance,
    rank1_recovery_error,
    sin_squared,
)
from .model import (
    ORACLE_DIM_LIMIT,
    SpikedModel,
    draw_sample,
    draw_samples,
    make_model,
    population_covariance,
)
from .rng import derive_rng, derive_seed
from .stream import (
    ArrayStream,
    BagOfWordsCorpus,
    CorpusStream,
    ModelStream,
    SampleStream,
    parse_bag_of_words,
    reopen_for_evaluation,
    stream_from_corpus,
    stream_from_model,
)
from .underrank import run_underparameterized

__version__ = "0.1.0"
