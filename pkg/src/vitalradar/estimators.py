"""Breath- and heart-rate estimators: spectral peak, autocorrelation, peak count."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from .errors import NoPeriodicityError, NoSignalError, VitalRadarError
from .phase import Band, BandSignal

AUTOCORR_MIN_HEIGHT = 0.2
PEAK_MIN_HEIGHT = 0.4
HR_FFT_PEAKS = 6
FFT_PAD_FACTOR = 4

BR_FIELDS = ("br_f", "br_a", "br_p")
HR_FIELDS = ("hr_f", "hr_a", "hr_p", "hr_fc", "hr_ac", "hr_pc")


def _parabolic_offset(y_prev: float, y0: float, y_next: float) -> float:
    """Vertex offset (in samples) of the parabola through three points."""
    denom = y_prev - 2.0 * y0 + y_next
    if denom == 0:
        return 0.0
    return float(np.clip(0.5 * (y_prev - y_next) / denom, -0.5, 0.5))


def _spectrum(x: np.ndarray, pad_factor: int):
    n = len(x)
    nfft = pad_factor * n
    mag = np.abs(np.fft.rfft(x * np.hanning(n), n=nfft))
    return mag, nfft


def estimate_fft(sig: BandSignal, l: int = 1, pad_factor: int = FFT_PAD_FACTOR) -> float:
    """Rate (per minute) from the ``l`` strongest spectral peaks inside the band.

    Peaks are local maxima of the Hann-windowed, zero-padded magnitude
    spectrum whose bin lies in the band; each is refined by three-point
    parabolic interpolation and their frequencies are averaged without
    weighting. Fewer than ``l`` peaks are averaged as available. With
    ``l == 1`` the result is the refined in-band maximum, peak or not.
    """
    if l < 1:
        raise ValueError("l must be >= 1")
    x = np.asarray(sig.samples, dtype=float)
    if not np.any(x):
        raise NoSignalError("all-zero signal")
    mag, nfft = _spectrum(x, pad_factor)
    df = 1.0 / (nfft * sig.sample_interval)  # Hz per bin
    freqs_min = np.arange(len(mag)) * df * 60.0
    lo, hi = sig.band.passband
    in_band = (freqs_min >= lo) & (freqs_min <= hi)
    if not np.any(in_band):
        raise NoSignalError("band narrower than one frequency bin")

    band_bins = np.flatnonzero(in_band)
    top = int(band_bins[np.argmax(mag[band_bins])])
    interior = np.arange(1, len(mag) - 1)
    is_peak = (mag[interior] > mag[interior - 1]) & (mag[interior] >= mag[interior + 1])
    peaks = interior[is_peak & in_band[interior]]
    if l == 1 or peaks.size == 0:
        # the in-band maximum, even where it sits on a band edge
        chosen = [top]
    else:
        chosen = peaks[np.argsort(mag[peaks], kind="stable")[::-1][:l]]
    if not 0 < top < len(mag) - 1:
        return float(freqs_min[top])
    refined = [k + _parabolic_offset(mag[k - 1], mag[k], mag[k + 1]) for k in chosen]
    return float(np.mean(refined) * df * 60.0)


def autocorrelate(sig) -> np.ndarray:
    """Biased autocorrelation ``R[n] = (1/M) sum_m x[m] x[m+n]`` for n in [0, M)."""
    x = np.asarray(getattr(sig, "samples", sig), dtype=float)
    m = len(x)
    if m < 4:
        raise ValueError("need at least 4 samples")
    return np.correlate(x, x, mode="full")[m - 1:] / m


def estimate_autocorr(sig: BandSignal, min_height: float = AUTOCORR_MIN_HEIGHT) -> float:
    """Rate from the lag of the first autocorrelation peak after lag 0."""
    r = autocorrelate(sig)
    if r[0] <= 0:
        raise NoSignalError("all-zero signal")
    n = np.arange(1, len(r) - 1)
    ok = (r[n] > r[n - 1]) & (r[n] >= r[n + 1]) & (r[n] >= min_height * r[0])
    hits = n[ok]
    if hits.size == 0:
        raise NoPeriodicityError("no autocorrelation peak above "
                                 f"{min_height:g} * R[0]")
    k = int(hits[0])
    lag = k + _parabolic_offset(r[k - 1], r[k], r[k + 1])
    return 60.0 / (lag * sig.sample_interval)


def estimate_peaks(sig: BandSignal, min_height: float = PEAK_MIN_HEIGHT) -> float:
    """Peaks above ``min_height * max`` per minute of signal.

    Peaks closer than half the shortest in-band period are merged. Counting
    quantizes the result to multiples of ``60 / duration``.
    """
    x = np.asarray(sig.samples, dtype=float)
    if sig.duration <= 0:
        raise ValueError("signal has zero duration")
    top = float(np.max(x)) if x.size else 0.0
    if top <= 0:
        return 0.0
    spacing = 0.5 * (60.0 / sig.band.high) / sig.sample_interval
    peaks, _ = signal.find_peaks(x, height=min_height * top,
                                 distance=max(1, int(round(spacing))))
    return len(peaks) / sig.duration * 60.0


@dataclass
class VitalEstimate:
    br_f: float = math.nan
    br_a: float = math.nan
    br_p: float = math.nan
    hr_f: float = math.nan
    hr_a: float = math.nan
    hr_p: float = math.nan
    hr_fc: float = math.nan
    hr_ac: float = math.nan
    hr_pc: float = math.nan
    detection_id: int | None = None
    # field name -> reason ("out-of-band", "no-signal", "no-periodicity", ...)
    flags: dict[str, str] = field(default_factory=dict)

    def br_vector(self) -> np.ndarray:
        return np.array([getattr(self, f) for f in BR_FIELDS])

    def hr_vector(self) -> np.ndarray:
        return np.array([getattr(self, f) for f in HR_FIELDS])

    def is_flagged(self, name: str) -> bool:
        return name in self.flags


_REASONS = {NoSignalError: "no-signal", NoPeriodicityError: "no-periodicity"}


def _run(est: VitalEstimate, name: str, band: Band, fn, *args) -> None:
    try:
        value = float(fn(*args))
    except VitalRadarError as exc:
        est.flags[name] = _REASONS.get(type(exc), type(exc).__name__)
        setattr(est, name, math.nan)
        return
    setattr(est, name, value)
    lo, hi = band.passband
    if not (math.isfinite(value) and lo <= value <= hi):
        est.flags[name] = "out-of-band"


def estimate_all(phi_br: BandSignal | None, phi_hr: BandSignal | None,
                 phi_hr_comb: BandSignal | None, l: int = HR_FFT_PEAKS,
                 detection_id: int | None = None) -> VitalEstimate:
    """All nine estimates; failures are recorded in ``flags``, never raised.

    A missing signal (``None``) flags every field that depends on it.
    """
    est = VitalEstimate(detection_id=detection_id)
    groups = [
        (phi_br, ("br_f", "br_a", "br_p"), 1),
        (phi_hr, ("hr_f", "hr_a", "hr_p"), l),
        (phi_hr_comb, ("hr_fc", "hr_ac", "hr_pc"), l),
    ]
    for sig, (f_name, a_name, p_name), peaks in groups:
        if sig is None:
            for name in (f_name, a_name, p_name):
                est.flags[name] = "missing-signal"
            continue
        _run(est, f_name, sig.band, estimate_fft, sig, peaks)
        _run(est, a_name, sig.band, estimate_autocorr, sig)
        _run(est, p_name, sig.band, estimate_peaks, sig)
    return est
