"""GSR/EDA analysis: conditioning, convex decomposition, peak and learned
features, and cross-validated stress classification."""

from .classify import CvReport, ModelSpec, TrainedModel, accuracy, cross_validate, cross_validate_deep, fit, predict
from .decompose import Decomposition, DecompositionConfig, build_cvxeda_model, decompose
from .dlfeatures import (
    CnnArchitecture,
    CnnParameters,
    ConvStage,
    FeatureMatrix,
    TrainingConfig,
    extract_features,
    forward,
    init_cnn,
    load_params,
    numerical_gradient_check,
    save_params,
    train,
)
from .ingest import PipelineConfig, load_config, parse_recording_csv, segment_windows
from .peaks import (
    FilterCoefficients,
    Peak,
    PeakConfig,
    ResponseWindow,
    StatFeatures,
    apply_iir,
    design_butterworth_lowpass,
    detect_response_windows,
    extract_peaks,
    lowpass_phasic,
    statistical_features,
)
from .preprocess import downsample, min_max_normalize, moving_average, preprocess, preprocess_recording
from .qpsolve import QpSolution, QuadraticProgram, solve_qp
from .trace import LabeledWindow, Recording, SignalTrace

__all__ = [
    "CnnArchitecture",
    "CnnParameters",
    "ConvStage",
    "CvReport",
    "Decomposition",
    "DecompositionConfig",
    "FeatureMatrix",
    "FilterCoefficients",
    "LabeledWindow",
    "ModelSpec",
    "Peak",
    "PeakConfig",
    "PipelineConfig",
    "QpSolution",
    "QuadraticProgram",
    "Recording",
    "ResponseWindow",
    "SignalTrace",
    "StatFeatures",
    "TrainedModel",
    "TrainingConfig",
    "accuracy",
    "apply_iir",
    "build_cvxeda_model",
    "cross_validate",
    "cross_validate_deep",
    "decompose",
    "design_butterworth_lowpass",
    "detect_response_windows",
    "downsample",
    "extract_features",
    "extract_peaks",
    "fit",
    "forward",
    "init_cnn",
    "load_config",
    "load_params",
    "lowpass_phasic",
    "min_max_normalize",
    "moving_average",
    "numerical_gradient_check",
    "parse_recording_csv",
    "predict",
    "preprocess",
    "preprocess_recording",
    "save_params",
    "segment_windows",
    "solve_qp",
    "statistical_features",
    "train",
]
