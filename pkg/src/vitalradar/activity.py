"""Vital activity map: temporal-activity scoring, clutter removal, localization.

A bin's score is its squared mean spectral magnitude times the variance
``v`` of its unwrapped slow-time phase, softly limited as
``v * cap / (v + cap)`` with ``cap = pi**2/3`` (the variance of a uniformly
random phase). Static clutter has constant phase and scores zero. The limit
matters for bins holding only noise, or two overlapping returns of similar
strength: their phase wraps erratically, so the unwrapped sequence drifts
like a random walk and its raw variance can exceed a breathing subject's by
two orders of magnitude. The limit is soft so that more chest motion always
means a higher score.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .beamform import RangeSpectra, write_grid_csv

DEFAULT_ALPHA = 0.25
PHASE_VARIANCE_CAP = np.pi ** 2 / 3.0
MIN_CHIRPS = 8


@dataclass(frozen=True, eq=False)
class VitalActivityMap:
    score: np.ndarray  # (range_bin, azimuth_index)
    threshold_used: float
    surviving_bins: frozenset = field(default_factory=frozenset)
    range_axis: np.ndarray | None = None
    azimuth_axis: np.ndarray | None = None

    def to_csv(self, path) -> None:
        write_grid_csv(path, self.score, self.range_axis, self.azimuth_axis)


@dataclass(frozen=True)
class SubjectDetection:
    range_bin: int
    azimuth_index: int
    score: float
    estimated_range_m: float
    estimated_azimuth_deg: float

    @property
    def bin(self) -> tuple[int, int]:
        return (self.range_bin, self.azimuth_index)


def _scores(values: np.ndarray) -> np.ndarray:
    if values.shape[0] < MIN_CHIRPS:
        raise ValueError(f"need at least {MIN_CHIRPS} chirps, got {values.shape[0]}")
    mag = np.mean(np.abs(values), axis=0)
    phase = np.unwrap(np.angle(values), axis=0)
    v = np.var(phase, axis=0)
    return mag ** 2 * (v * PHASE_VARIANCE_CAP / (v + PHASE_VARIANCE_CAP))


def activity_score(spectra: RangeSpectra, bin: tuple[int, int]) -> float:
    r, a = bin
    return float(_scores(spectra.values[:, r:r + 1, a:a + 1])[0, 0])


def _surviving(score: np.ndarray, alpha: float) -> tuple[float, np.ndarray]:
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    peak = float(np.max(score)) if score.size else 0.0
    thr = alpha * peak
    if peak <= 0:
        return thr, np.zeros(score.shape, dtype=bool)
    return thr, score >= thr


def build_map(spectra: RangeSpectra, alpha: float = DEFAULT_ALPHA) -> VitalActivityMap:
    score = _scores(spectra.values)
    thr, mask = _surviving(score, alpha)
    bins = frozenset(zip(*map(lambda a: a.tolist(), np.nonzero(mask))))
    return VitalActivityMap(score, thr, bins, spectra.range_axis, spectra.azimuth_axis)


def threshold_and_localize(vmap: VitalActivityMap,
                           alpha: float = DEFAULT_ALPHA) -> list[SubjectDetection]:
    """One detection per 8-connected cluster of bins scoring >= alpha * max.

    Detections are sorted by score, highest first. Two subjects whose bins
    touch collapse into a single detection.
    """
    score = vmap.score
    _, mask = _surviving(score, alpha)
    labels, count = ndimage.label(mask, structure=np.ones((3, 3), dtype=int))
    dets = []
    for lab in range(1, count + 1):
        masked = np.where(labels == lab, score, -np.inf)
        r, a = np.unravel_index(int(np.argmax(masked)), score.shape)
        rng_m = float(vmap.range_axis[r]) if vmap.range_axis is not None else float("nan")
        az = float(vmap.azimuth_axis[a]) if vmap.azimuth_axis is not None else float("nan")
        dets.append(SubjectDetection(int(r), int(a), float(score[r, a]), rng_m, az))
    dets.sort(key=lambda d: (-d.score, d.range_bin, d.azimuth_index))
    return dets


def write_detections_csv(path, detections) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["patient", "range_bin", "azimuth_index", "range_m",
                    "azimuth_deg", "score"])
        for i, d in enumerate(detections, start=1):
            w.writerow([i, d.range_bin, d.azimuth_index, f"{d.estimated_range_m:.4f}",
                        f"{d.estimated_azimuth_deg:g}", repr(d.score)])


def detection_report(detections) -> str:
    """Line-oriented ``range_m azimuth_deg score`` listing."""
    return "".join(f"{d.estimated_range_m:.3f} {d.estimated_azimuth_deg:g} {d.score:.6g}\n"
                   for d in detections)
