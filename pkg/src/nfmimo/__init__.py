"""Near-field large-scale MIMO channel simulator.

Deterministic synthesis of complex channel matrices under spherical,
planar, and subarray-decomposed wavefront treatments of a large transmit
array, with correlation statistics, Shannon capacity, a model-error
metric, and an analytic operation-count model, plus an experiment CLI.
"""

__version__ = "0.1.0"

from .channel import (
    BANDWIDTH_HZ,
    ChannelRealization,
    CirComponents,
    WavefrontModel,
    channel_matrix,
    cir_los,
    cir_nlos,
    cir_total,
    los_phase,
    nlos_delays,
    nlos_ray_phases,
    rician_weights,
    tau_los,
    transfer_function,
)
from .geometry import (
    SPEED_OF_LIGHT,
    AngleConvention,
    GeometryError,
    ScenarioConfig,
    SubarrayPartition,
    Vec3,
    bs_element_position,
    config_from_dict,
    element_index,
    element_rowcol,
    element_to_subarray,
    k_index,
    los_arrival_angles,
    make_partition,
    mr_element_position,
    optimal_subarray_size,
    partition_counts,
    ray_angles,
    rayleigh_distance,
    rayleigh_distance_aperture,
    subarray_center,
    subarray_size,
    wrap_angle,
)
from .harness import (
    EXPERIMENT_KINDS,
    Experiment,
    RunManifest,
    load_config,
    run_experiment,
    validate_config,
)
from .scattering import (
    Ray,
    ScattererField,
    field_for_realization,
    generate_scatterers,
    sample_von_mises,
    von_mises_pdf,
)
from .stats import (
    RO_LOS_PER_ANGLE_SET,
    RO_NLOS_PER_ANGLE_SET,
    RO_PER_ANGLE_SET,
    THREADS_ENV_VAR,
    ComplexityReport,
    CorrelationSeries,
    capacity,
    frequency_cf,
    frequency_cf_series,
    mean_capacity,
    model_error_delta,
    ro_complexity,
    spatial_ccf_series,
    st_ccf,
    st_ccf_parts,
    temporal_acf,
    temporal_acf_series,
    worker_count,
)

__all__ = [
    "__version__",
    "SPEED_OF_LIGHT",
    "BANDWIDTH_HZ",
    "THREADS_ENV_VAR",
    "RO_LOS_PER_ANGLE_SET",
    "RO_NLOS_PER_ANGLE_SET",
    "RO_PER_ANGLE_SET",
    "EXPERIMENT_KINDS",
    "AngleConvention",
    "GeometryError",
    "ScenarioConfig",
    "SubarrayPartition",
    "Vec3",
    "Ray",
    "ScattererField",
    "WavefrontModel",
    "ChannelRealization",
    "CirComponents",
    "CorrelationSeries",
    "ComplexityReport",
    "Experiment",
    "RunManifest",
    "bs_element_position",
    "capacity",
    "channel_matrix",
    "cir_los",
    "cir_nlos",
    "cir_total",
    "config_from_dict",
    "element_index",
    "element_rowcol",
    "element_to_subarray",
    "field_for_realization",
    "frequency_cf",
    "frequency_cf_series",
    "generate_scatterers",
    "k_index",
    "load_config",
    "los_arrival_angles",
    "los_phase",
    "make_partition",
    "mean_capacity",
    "model_error_delta",
    "mr_element_position",
    "nlos_delays",
    "nlos_ray_phases",
    "optimal_subarray_size",
    "partition_counts",
    "ray_angles",
    "rayleigh_distance",
    "rayleigh_distance_aperture",
    "rician_weights",
    "ro_complexity",
    "run_experiment",
    "sample_von_mises",
    "spatial_ccf_series",
    "st_ccf",
    "st_ccf_parts",
    "subarray_center",
    "subarray_size",
    "tau_los",
    "temporal_acf",
    "temporal_acf_series",
    "transfer_function",
    "validate_config",
    "von_mises_pdf",
    "worker_count",
    "wrap_angle",
]
