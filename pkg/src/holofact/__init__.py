"""Factorization of bipolar holographic vectors on simulated CIM hardware.

The package has three layers:

* algebra and search: bipolar hypervector operations (:mod:`holofact.hv`),
  the resonator factorization loop (:mod:`holofact.resonator`), and a
  brute-force oracle (:mod:`holofact.oracle`);
* hardware modeling: the compute-in-memory readout stochasticity pipeline
  (:mod:`holofact.noise`) and the analytical area/throughput/energy model
  (:mod:`holofact.ppa`);
* evaluation: the synthetic perception task (:mod:`holofact.perception`)
  and the Monte-Carlo benchmark harness plus CLI (:mod:`holofact.bench`,
  ``holofact`` console script).
"""

from ._version import __version__
from .hv import (
    Codebook,
    Hypervector,
    bind,
    bundle,
    gen_codebook,
    hamming,
    permute,
    project,
    random_hypervector,
    similarity,
    unbind,
)
from .noise import (
    CALIBRATED_ADC_BITS,
    CALIBRATED_SIGMA_REL,
    CALIBRATED_THRESHOLD_FRAC,
    CALIBRATED_VTGT_SCALE,
    CALIBRATED_VTGT_SCHEDULE,
    ChipNoiseStats,
    NoiseModel,
    calibrated_vtgt,
    gate_threshold,
    inject_noise,
    load_chip_stats,
    pipeline,
    quantize_adc,
    save_chip_stats,
)
from .oracle import (
    OracleBudgetError,
    OracleResult,
    brute_force_factorize,
    certify_problem,
)
from .perception import (
    CorruptionSpec,
    PerceptionReport,
    SceneSpec,
    default_codebooks,
    encode_scene,
    evaluate_perception,
    export_queries,
    ingest_queries,
)
from .ppa import (
    DESIGN_KINDS,
    BlockParams,
    PpaConfig,
    PpaReport,
    TsvSpec,
    compare,
    default_config,
    evaluate,
    load_ppa_config,
    tsv_count,
)
from .resonator import (
    FactorizationProblem,
    FactorizationResult,
    OpCounters,
    ResonatorConfig,
    ResonatorState,
    TrajectoryPoint,
    default_iteration_cap,
    detect_limit_cycle,
    factorize,
    init_state,
    make_problem,
    resonator_step,
    trajectory_to_csv,
)
from .rng import RngStream, derive_stream_id

__all__ = [
    "__version__",
    "Hypervector",
    "Codebook",
    "RngStream",
    "derive_stream_id",
    "random_hypervector",
    "gen_codebook",
    "bind",
    "unbind",
    "bundle",
    "permute",
    "similarity",
    "project",
    "hamming",
    "NoiseModel",
    "ChipNoiseStats",
    "inject_noise",
    "quantize_adc",
    "gate_threshold",
    "pipeline",
    "load_chip_stats",
    "save_chip_stats",
    "CALIBRATED_SIGMA_REL",
    "CALIBRATED_ADC_BITS",
    "CALIBRATED_VTGT_SCALE",
    "CALIBRATED_VTGT_SCHEDULE",
    "CALIBRATED_THRESHOLD_FRAC",
    "calibrated_vtgt",
    "FactorizationProblem",
    "ResonatorConfig",
    "ResonatorState",
    "TrajectoryPoint",
    "FactorizationResult",
    "OpCounters",
    "make_problem",
    "init_state",
    "resonator_step",
    "trajectory_to_csv",
    "factorize",
    "detect_limit_cycle",
    "default_iteration_cap",
    "OracleBudgetError",
    "OracleResult",
    "brute_force_factorize",
    "certify_problem",
    "SceneSpec",
    "CorruptionSpec",
    "PerceptionReport",
    "default_codebooks",
    "encode_scene",
    "evaluate_perception",
    "export_queries",
    "ingest_queries",
    "BlockParams",
    "TsvSpec",
    "PpaConfig",
    "PpaReport",
    "DESIGN_KINDS",
    "tsv_count",
    "evaluate",
    "compare",
    "default_config",
    "load_ppa_config",
]
