"""Slow-time phase extraction, unwrapping, band splitting and the respiration comb.

Band filters are zero-phase (forward-backward) Butterworth cascades,
designed at run time from the slow-time sample rate ``1/T_c``. The comb
filter places a notch on every breathing harmonic that falls in the heart
band.
"""
from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy import signal

from .beamform import RangeSpectra
from .errors import AliasingError, UndefinedPhaseError

# single-pass design targets; forward-backward filtering doubles both (in dB)
PASS_RIPPLE_DB = 1.5
STOP_ATTEN_DB = 20.5

COMB_WIDTH_PER_MIN = 2.0
# a 2nd-order notch applied twice is -3 dB where |H|^2 = 1/sqrt(2) on each
# pass, i.e. at sqrt(1/(sqrt(2)-1)) times its single-pass half-width
_COMB_SINGLE_WIDTH_FACTOR = 1.0 / math.sqrt(1.0 / (math.sqrt(2.0) - 1.0))


class Band(enum.Enum):
    """Pass band, stop-band edges and peak spacing, all in cycles per minute."""

    BREATH = ("breath", (3.0, 36.0), (1.5, 48.0))
    HEART = ("heart", (48.0, 120.0), (36.0, 180.0))

    def __init__(self, label, passband, stopband):
        self.label = label
        self.passband = passband
        self.stopband = stopband

    @property
    def low(self) -> float:
        return self.passband[0]

    @property
    def high(self) -> float:
        return self.passband[1]


@dataclass(frozen=True, eq=False)
class PhaseSignal:
    samples: np.ndarray
    sample_interval: float
    source_bin: tuple[int, int] | None = None

    @property
    def fs(self) -> float:
        return 1.0 / self.sample_interval

    def __len__(self):
        return len(self.samples)


@dataclass(frozen=True, eq=False)
class BandSignal:
    samples: np.ndarray
    sample_interval: float
    band: Band
    comb_applied: bool = False
    source_bin: tuple[int, int] | None = None
    notches_per_min: tuple[float, ...] = ()

    @property
    def fs(self) -> float:
        return 1.0 / self.sample_interval

    @property
    def duration(self) -> float:
        return len(self.samples) * self.sample_interval

    def __len__(self):
        return len(self.samples)


def extract_phase(spectra: RangeSpectra, bin: tuple[int, int]) -> PhaseSignal:
    """Per-chirp argument of the range spectrum at ``bin``, in (-pi, pi]."""
    r, a = bin
    z = spectra.values[:, r, a]
    zero = np.flatnonzero(z == 0)
    if zero.size:
        raise UndefinedPhaseError(int(zero[0]), (r, a))
    p = np.angle(z)
    p[p == -np.pi] = np.pi
    return PhaseSignal(p, spectra.config.chirp_interval_s, (int(r), int(a)))


def mean_subtract_unwrap(p: PhaseSignal) -> PhaseSignal:
    """Unwrap (steps above pi get 2*pi*k added) and remove the mean."""
    if len(p.samples) < 2:
        raise ValueError("need at least two phase samples")
    u = np.unwrap(np.asarray(p.samples, dtype=float))
    return PhaseSignal(u - u.mean(), p.sample_interval, p.source_bin)


@functools.lru_cache(maxsize=64)
def band_filter(band: Band, fs: float) -> np.ndarray:
    """Second-order sections of the single-pass band filter for ``band`` at ``fs``."""
    nyq = fs / 2.0
    lo, hi = band.low / 60.0, band.high / 60.0
    if fs <= 2.0 * hi:
        raise AliasingError(
            f"slow-time rate {fs:g} Hz cannot represent the {band.label} band "
            f"(needs > {2 * hi:g} Hz)")
    stop_lo, stop_hi = band.stopband
    sections = [signal.iirdesign(lo, stop_lo / 60.0, PASS_RIPPLE_DB, STOP_ATTEN_DB,
                                 ftype="butter", output="sos", fs=fs)]
    ws = min(stop_hi / 60.0, hi + 0.9 * (nyq - hi))
    sections.append(signal.iirdesign(hi, ws, PASS_RIPPLE_DB, STOP_ATTEN_DB,
                                     ftype="butter", output="sos", fs=fs))
    return np.vstack(sections)


def zero_phase_response(sos: np.ndarray, freqs_hz, fs: float) -> np.ndarray:
    """Magnitude response of forward-backward filtering with ``sos``."""
    _, h = signal.sosfreqz(sos, worN=np.atleast_1d(np.asarray(freqs_hz, dtype=float)), fs=fs)
    return np.abs(h) ** 2


def bandpass(p: PhaseSignal, band: Band) -> BandSignal:
    sos = band_filter(band, round(p.fs, 12))
    y = signal.sosfiltfilt(sos, p.samples)
    return BandSignal(y, p.sample_interval, band, source_bin=p.source_bin)


def comb_frequencies(br_fundamental: float, band: Band = Band.HEART) -> list[float]:
    """Harmonics ``k*br`` (k >= 1) inside ``band``, per minute."""
    if not br_fundamental > 0:
        raise ValueError("breathing fundamental must be positive")
    k0 = max(1, math.ceil(band.low / br_fundamental - 1e-9))
    out = []
    k = k0
    while k * br_fundamental <= band.high + 1e-9:
        out.append(k * br_fundamental)
        k += 1
    return out


def comb_sos(br_fundamental: float, fs: float,
             width_per_min: float = COMB_WIDTH_PER_MIN) -> np.ndarray | None:
    notches = []
    single_bw = width_per_min * _COMB_SINGLE_WIDTH_FACTOR / 60.0
    for f in comb_frequencies(br_fundamental):
        f0 = f / 60.0
        if f0 >= fs / 2.0:
            continue
        b, a = signal.iirnotch(f0, f0 / single_bw, fs=fs)
        notches.append(signal.tf2sos(b, a))
    return np.vstack(notches) if notches else None


def comb_filter(h: BandSignal, br_fundamental: float) -> BandSignal:
    """Suppress breathing harmonics in a heart-band signal (zero phase)."""
    lo, hi = Band.BREATH.passband
    if not lo <= br_fundamental <= hi:
        raise ValueError(f"breathing fundamental {br_fundamental} outside [{lo}, {hi}]/min")
    sos = comb_sos(br_fundamental, h.fs)
    # the notches ring for ~1/(pi*width), comparable to the whole window, so
    # pad as far as the record allows to keep start-up transients out
    y = h.samples if sos is None else \
        signal.sosfiltfilt(sos, h.samples, padlen=len(h.samples) - 1)
    return BandSignal(np.asarray(y, dtype=float), h.sample_interval, h.band, True,
                      h.source_bin, tuple(comb_frequencies(br_fundamental)))
