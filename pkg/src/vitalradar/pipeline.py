"""End-to-end processing of one observation window."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .activity import (DEFAULT_ALPHA, SubjectDetection, VitalActivityMap,
                       build_map, threshold_and_localize)
from .beamform import RangeAzimuthMap, RangeSpectra, combined_map, range_spectra
from .errors import FusionInputError, VitalRadarError
from .estimators import HR_FFT_PEAKS, VitalEstimate, estimate_all, estimate_fft
from .fusion import FusionWeights, apply
from .phase import (Band, BandSignal, PhaseSignal, bandpass, comb_filter,
                    extract_phase, mean_subtract_unwrap)
from .simulator import DataCube


@dataclass
class SubjectResult:
    detection: SubjectDetection
    estimate: VitalEstimate
    br: float = math.nan
    hr: float = math.nan
    signals: dict[str, np.ndarray] = field(default_factory=dict)
    error: str | None = None


@dataclass
class ProcessResult:
    spectra: RangeSpectra
    range_azimuth: RangeAzimuthMap
    activity: VitalActivityMap
    subjects: list[SubjectResult]


def analyze_bin(spectra: RangeSpectra, detection: SubjectDetection,
                weights: FusionWeights | None = None, detection_id: int | None = None,
                l: int = HR_FFT_PEAKS) -> SubjectResult:
    """Phase extraction through rate estimation for one detected bin.

    The breathing fundamental for the comb filter is this window's own
    spectral breath-rate estimate.
    """
    raw: PhaseSignal = extract_phase(spectra, detection.bin)
    unwrapped = mean_subtract_unwrap(raw)
    phi_br = bandpass(unwrapped, Band.BREATH)
    phi_hr = bandpass(unwrapped, Band.HEART)
    phi_hr_comb: BandSignal | None = None
    try:
        br0 = estimate_fft(phi_br, 1)
        lo, hi = Band.BREATH.passband
        if lo <= br0 <= hi:
            phi_hr_comb = comb_filter(phi_hr, br0)
    except VitalRadarError:
        pass
    est = estimate_all(phi_br, phi_hr, phi_hr_comb, l=l, detection_id=detection_id)
    res = SubjectResult(detection, est)
    res.signals = {
        "raw": raw.samples,
        "unwrapped": unwrapped.samples,
        "breath": phi_br.samples,
        "heart": phi_hr.samples,
    }
    if phi_hr_comb is not None:
        res.signals["heart_comb"] = phi_hr_comb.samples
    if weights is not None:
        try:
            res.br, res.hr = apply(weights, est)
        except FusionInputError as exc:
            res.error = str(exc)
    return res


def process_spectra(spectra: RangeSpectra, alpha: float = DEFAULT_ALPHA,
                    weights: FusionWeights | None = None,
                    threads: int = 1) -> ProcessResult:
    vmap = build_map(spectra, alpha)
    dets = threshold_and_localize(vmap, alpha)

    def work(item):
        i, det = item
        return analyze_bin(spectra, det, weights, detection_id=i)

    items = list(enumerate(dets, start=1))
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            subjects = list(pool.map(work, items))
    else:
        subjects = [work(it) for it in items]
    return ProcessResult(spectra, combined_map(spectra), vmap, subjects)


def process_cube(cube: DataCube, alpha: float = DEFAULT_ALPHA,
                 weights: FusionWeights | None = None, threads: int = 1) -> ProcessResult:
    """Beamform, range-transform, localize subjects and estimate their rates."""
    return process_spectra(range_spectra(cube), alpha, weights, threads)
