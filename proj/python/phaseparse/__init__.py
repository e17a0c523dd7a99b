"""Two-phase video parsing: motion-derived weak supervision, appearance
models, and transition detection, backed by the native _core module."""

from phaseparse._core import (  # noqa: F401
    IoError,
    ConfigError,
    StaleArtifactError,
    load_frame,
    store_frame,
    load_flow,
    store_flow,
    load_tensor,
    store_tensor,
    boundary_flux,
    divergence_sum,
    direction_measure,
    cumulative_signal,
    boundary_estimate,
    weak_labels,
    estimate_flow_pair,
    extract_features,
    partition_score,
    detect_transition,
    mae_medae,
    receptive_field,
    synth_video,
    run_pipeline,
)

__version__ = "0.1.0"
