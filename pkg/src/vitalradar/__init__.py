"""FMCW radar pipeline for breath- and heart-rate measurement of several people.

Typical use::

    from vitalradar import RadarConfig, reference_scene, synthesize_cube, process_cube

    cfg = RadarConfig()
    result = process_cube(synthesize_cube(reference_scene(), cfg))
    for s in result.subjects:
        print(s.detection.bin, s.estimate.br_f, s.estimate.hr_a)
"""

__version__ = "0.1.0"

from .activity import (SubjectDetection, VitalActivityMap, activity_score, build_map,
                       threshold_and_localize)
from .beamform import RangeSpectra, beamform, range_fft, range_spectra, steering_weights
from .errors import (AliasingError, CaptureLengthError, DemuxError, FusionInputError,
                     InputError, InvalidConfigError, NoPeriodicityError, NoSignalError,
                     NumericalError, OutOfRangeError, ParseError, SingularCalibrationError,
                     UndefinedPhaseError, VitalRadarError)
from .estimators import (VitalEstimate, autocorrelate, estimate_all, estimate_autocorr,
                         estimate_fft, estimate_peaks)
from .fusion import CalibrationSet, FusionWeights, apply, cross_validate, fit
from .ingest import CaptureLayout, load_capture, read_capture, to_bytes, write_capture
from .phase import Band, BandSignal, PhaseSignal, bandpass, comb_filter, extract_phase
from .pipeline import ProcessResult, SubjectResult, process_cube, process_spectra
from .radar import RadarConfig, load_config, range_bin_width, wavelength_max
from .simulator import (Clutter, DataCube, GroundTruth, Scene, Subject, ground_truth,
                        load_scene, reference_scene, synthesize_cube)

__all__ = [name for name in dir() if not name.startswith("_")]
