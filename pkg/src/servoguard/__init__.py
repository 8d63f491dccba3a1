"""Condition monitoring for robot servo axes that stays quiet across
task changes.

The pipeline: raw position/speed/torque days -> uniform sample grid ->
frame-wise STFT magnitude features -> joint low-rank embedding of the
training day and a test day -> a single day distance -> a half-Laplace
calibrated threshold.  A PCA projection distance ships alongside as the
reference detector.
"""

from ._kernels import kernel_backend
from .alignment import (JointEmbedding, ReconstructionCoeffs, aligned_distance,
                        alignment_cost_matrix, block_reconstruction,
                        correspondence_laplacian, joint_embed, lre_coefficients,
                        lre_objective, normalize_pair, standardize_pair)
from .baseline import (PcaModel, components_for_energy, fit_pca, pca_distance,
                       pca_hypothesis_test)
from .detect import (DetectionReport, DetectorConfig, HalfLaplaceModel, classify,
                     detect_days, fit_half_laplace, quantile_threshold,
                     roc_experiment, run_scenario)
from .errors import DataFormatError, ParameterError, ServoguardError
from .features import FeatureMatrix, StftConfig, combine_channels, feature_matrix, stft
from .preprocess import UniformTrace, assemble, pchip_interpolate, pchip_slopes, upsample_position
from .signals import (OP1, OP2, AnomalySpec, OperationProfile, ScenarioSchedule,
                      SignalTrace, default_schedule, generate_day, generate_scenario,
                      inject_anomaly, read_csv, write_csv)

__version__ = "0.1.0"

__all__ = [
    "AnomalySpec", "DataFormatError", "DetectionReport", "DetectorConfig",
    "FeatureMatrix", "HalfLaplaceModel", "JointEmbedding", "OP1", "OP2",
    "OperationProfile", "ParameterError", "PcaModel", "ReconstructionCoeffs",
    "ScenarioSchedule", "ServoguardError", "SignalTrace", "StftConfig",
    "UniformTrace", "aligned_distance", "alignment_cost_matrix", "assemble",
    "block_reconstruction", "classify", "combine_channels", "components_for_energy",
    "correspondence_laplacian", "default_schedule", "detect_days", "feature_matrix",
    "fit_half_laplace", "fit_pca", "generate_day", "generate_scenario",
    "inject_anomaly", "joint_embed", "kernel_backend", "lre_coefficients",
    "lre_objective", "normalize_pair", "pca_distance", "pca_hypothesis_test", "pchip_interpolate",
    "pchip_slopes", "quantile_threshold", "read_csv", "roc_experiment",
    "run_scenario", "standardize_pair", "stft", "upsample_position", "write_csv",
]
