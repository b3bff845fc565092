"""Bayesian structural inference over topological epsilon-machines."""

from .machine import (
    EdgeCounts,
    Topology,
    TransitionAssignment,
    as_series,
    entropy_rate,
    is_strongly_connected,
    stationary_distribution,
    statistical_complexity,
    trace_path,
)
from .enumeration import (
    CapacityError,
    MachineLibrary,
    build_library,
    canonical_encoding,
    canonicalize,
    enumerate_topological_ems,
    is_minimal_uniform,
    load_library,
    save_library,
    shipped_library,
)
from .bayes import (
    DirichletPrior,
    ModelPriorSpec,
    NoAcceptingTopologyError,
    PosteriorTable,
    accepting_count,
    map_topology,
    model_log_evidence,
    start_state_posterior,
    topology_posterior,
)
from .processes import GeneratorHMM, builtin, generate_series
from .sampler import (
    Mode,
    SamplerConfig,
    credible_interval,
    gaussian_kde,
    sample_posterior,
    summarize,
)

__version__ = "0.1.0"
