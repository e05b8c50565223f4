"""phasegen: online phase-map training data for microphone-array DOA estimation.

Generates labeled phase-map samples directly in the frequency domain
(deterministic direct path, statistically modeled diffuse reverberation,
additive noise), validates the generator against its declared statistical
laws, and certifies label recoverability with a classical steered-response
oracle.
"""

__version__ = "0.1.0"

from .coherence import (
    CoherenceFactors,
    CoherenceSet,
    FactorizationError,
    build_coherence,
    factorize,
)
from .config import GenerationConfig, ScenarioDistributions, class_grid
from .dataio import (
    BadMagicError,
    ContainerError,
    HeaderMismatchError,
    TruncatedPayloadError,
    read_batch,
    read_batches,
    read_factors,
    stream_batches,
    write_batch,
    write_factors,
)
from .generator import (
    DatasetBatch,
    ScenarioParams,
    gen_batch,
    gen_sample,
    ratio_db_to_variance,
    sample_params,
    sample_rng,
)
from .geometry import (
    ArrayGeometry,
    SourcePosition,
    default_ula,
    direct_phase,
    direct_phases,
    load_geometry,
    source_position,
)
from .phasemap import PhaseMapSample, extract_phase
from .rtf import complex_normal, gen_rtf
from .srp import (
    DoaDecision,
    SteeringTable,
    block_decision,
    build_steering,
    evaluate_batches,
    metrics,
    srp_phase,
)
from .validation import (
    CheckResult,
    CoherenceEstimate,
    SuiteReport,
    check_bin_independence,
    check_coherence,
    check_variances,
    estimate_coherence,
    run_suite,
)

__all__ = [
    "__version__",
    "ArrayGeometry",
    "BadMagicError",
    "CheckResult",
    "CoherenceEstimate",
    "CoherenceFactors",
    "CoherenceSet",
    "ContainerError",
    "DatasetBatch",
    "DoaDecision",
    "FactorizationError",
    "GenerationConfig",
    "HeaderMismatchError",
    "PhaseMapSample",
    "ScenarioDistributions",
    "ScenarioParams",
    "SourcePosition",
    "SteeringTable",
    "SuiteReport",
    "TruncatedPayloadError",
    "block_decision",
    "build_coherence",
    "build_steering",
    "check_bin_independence",
    "check_coherence",
    "check_variances",
    "class_grid",
    "complex_normal",
    "default_ula",
    "direct_phase",
    "direct_phases",
    "estimate_coherence",
    "evaluate_batches",
    "extract_phase",
    "factorize",
    "gen_batch",
    "gen_rtf",
    "gen_sample",
    "load_geometry",
    "metrics",
    "ratio_db_to_variance",
    "read_batch",
    "read_batches",
    "read_factors",
    "sample_params",
    "sample_rng",
    "source_position",
    "srp_phase",
    "stream_batches",
    "write_batch",
    "write_factors",
]
