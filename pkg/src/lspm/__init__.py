"""Latent shrinkage position models for binary and count networks."""

from .network import (
    BINARY,
    COUNT,
    Network,
    NetworkFormatError,
    density,
    geodesic_distances,
    load_network,
    save_network,
    transitivity,
)
from .prior import (
    Hyperparams,
    ShrinkageState,
    expected_sq_distance_dim,
    expected_sq_distance_total,
    incomplete_gamma_ratio,
    sample_truncated_gamma,
)
from .model import (
    ModelParams,
    edge_mean,
    log_full_conditional_Z,
    log_likelihood,
    pairwise_sq_distances,
    sq_distance,
)
from .initialize import ChainState, classical_mds, init_regression, initialize_chain
from .sampler import (
    ChainTrace,
    SamplerConfig,
    SamplerError,
    accept_alpha,
    accept_z,
    gibbs_update_deltas,
    informed_alpha_proposal,
    propose_z,
    run_chain,
    run_chains,
)
from .postprocess import (
    EffectiveDimensionReport,
    PosteriorSummary,
    autocorrelation,
    effective_dimensions,
    gelman_rubin,
    posterior_summary,
    procrustes_align,
    procrustes_correlation,
)
from .ppc import (
    PpcReport,
    accuracy_f1,
    count_frequency_table,
    distance_ratio_distribution,
    hamming,
    mean_absolute_difference,
    pseudo_r2,
    replicate_network,
    run_ppc,
)
from .simulate import StudyCell, overdispersion_stats, simulate_network, study_preset

__version__ = "0.1.0"
