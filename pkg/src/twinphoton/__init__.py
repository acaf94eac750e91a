"""Simulator and estimation toolkit for correlated photon-pair fiber
measurements: pair sources, dispersive and birefringent propagation,
single-photon detection, coincidence counting, four measurement
protocols and their estimators."""

from ._version import __version__
from .core import (
    FS_PER_S,
    SPEED_OF_LIGHT_M_PER_S,
    TYPE_I,
    TYPE_II,
    PairEvent,
    PolarizationDescriptor,
    angular_frequency_to_wavelength,
    conjugate_wavelength,
    degenerate_wavelength,
    fingerprint,
    join_timestamp,
    seconds_to_fs,
    split_timestamp,
    wavelength_to_angular_frequency,
)
from .detection import (
    CoincidenceResult,
    DetectorSpec,
    DetectorState,
    TimeTagStream,
    accidental_estimate,
    analyzer_outcome,
    count_coincidences,
    detect,
    detect_stream,
    joint_analyzer_outcomes,
)
from .errors import (
    ConfigError,
    EstimationError,
    FitDomainError,
    InsufficientCountsError,
    NoDipError,
    NoFringeError,
    RankDeficiencyError,
    TagFormatError,
    TwinphotonError,
)
from .estimation import (
    BandDelayCurve,
    DipFit,
    EfficiencyEstimate,
    GroupDelayFit,
    VisibilityEnvelopeFit,
    estimate_efficiency,
    fit_delay_difference_curve,
    fit_dip_center,
    fit_group_delay,
    fit_group_delay_scan,
    fit_visibility_envelope,
)
from .experiments import (
    CalibrationCounts,
    InterferogramScan,
    TofScanResult,
    centered_mirror_grid,
    downconversion_envelope,
    predict_envelope_centroid_um,
    predict_mirror_center_um,
    run_detector_calibration,
    run_pmd_interferogram,
    run_tof_dispersion,
    run_two_photon_interferometer,
)
from .fiber import (
    ELEMENT_PRESETS,
    FIBER_PRESETS,
    BirefringentElement,
    FiberSpec,
    QuadraticCoefficients,
    Sellmeier3Coefficients,
    birefringent_plate,
    dispersion_coefficient,
    dispersion_slope_at_zero,
    group_delay,
    phase_integral,
    propagate,
    quartz_plate_fixture,
    smf_fixture,
    survival_probability,
    zero_dispersion_wavelength,
)
from .source import (
    GAUSSIAN,
    RECTANGULAR,
    SOURCE_PRESETS,
    PairStream,
    SourceSpec,
    sample_pair,
    sample_pair_stream,
    spectral_density,
    tune_center_wavelength,
)
from .tagio import export_time_tags, import_time_tags
