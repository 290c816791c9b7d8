"""Heart and respiration rate from PPG with ECG-guided filtering, PCA
refinement and error-based quality grading."""

from .core import (
    PipelineConfig,
    QrsAnnotations,
    SegmentRecord,
    SignalSegment,
    VitalReference,
    validate_record,
)
from .errors import ConfigError, ParseError, PipelineError
from .filters import PassBand, design_butterworth_highpass, design_butterworth_lowpass, filtfilt
from .pca import embed, gaussian_smooth, overlap_average, refine, svd_reconstruct
from .peaks import detect_peaks
from .pipeline import process_record, process_records, pseudo_clean_ppg
from .quality import (
    CohortReport,
    GradeThresholds,
    QualityGrade,
    bland_altman,
    cohort_report,
    grade_segment,
    mae,
    pearson,
)
from .synth import NoiseSpec, SynthSpec, generate
from .vitals import VitalsEstimate, estimate_vitals, spectral_peak_brpm

__version__ = "0.1.0"

__all__ = [
    "CohortReport", "ConfigError", "GradeThresholds", "NoiseSpec", "ParseError", "PassBand",
    "PipelineConfig", "PipelineError", "QrsAnnotations", "QualityGrade", "SegmentRecord",
    "SignalSegment", "SynthSpec", "VitalReference", "VitalsEstimate", "bland_altman",
    "cohort_report", "design_butterworth_highpass", "design_butterworth_lowpass", "detect_peaks",
    "embed", "estimate_vitals", "filtfilt", "gaussian_smooth", "generate", "grade_segment", "mae",
    "overlap_average", "pearson", "process_record", "process_records", "pseudo_clean_ppg",
    "refine", "spectral_peak_brpm", "svd_reconstruct", "validate_record",
]
