"""Batches of simulated single-subject observations with known rates.

Used to build calibration sets for the fusion weights and to measure
closed-loop accuracy against simulator ground truth.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .estimators import VitalEstimate
from .fusion import CalibrationSet
from .pipeline import SubjectResult, process_cube
from .radar import RadarConfig
from .simulator import GroundTruth, Scene, ground_truth, random_subject, synthesize_cube


@dataclass
class Trial:
    scene: Scene
    truth: GroundTruth
    result: SubjectResult | None  # None when nothing was detected

    @property
    def estimate(self) -> VitalEstimate | None:
        return None if self.result is None else self.result.estimate


def run_trial(scene: Scene, config: RadarConfig, weights=None) -> Trial:
    """Process a one-subject scene and keep the detection nearest the subject."""
    truth = ground_truth(scene, config)[0]
    res = process_cube(synthesize_cube(scene, config), weights=weights)
    best = None
    for s in res.subjects:
        d = abs(s.detection.range_bin - truth.range_bin) + \
            abs(s.detection.azimuth_index - truth.azimuth_index)
        if d <= 2 and (best is None or d < best[0]):
            best = (d, s)
    return Trial(scene, truth, None if best is None else best[1])


def random_scenes(count: int, seed: int, config: RadarConfig, snr_db: float = 20.0,
                  **subject_ranges) -> list[Scene]:
    rng = np.random.default_rng(seed)
    return [Scene(subjects=(random_subject(rng, config, **subject_ranges),),
                  snr_db=snr_db, seed=int(rng.integers(2**31)))
            for _ in range(count)]


def run_trials(scenes, config: RadarConfig, weights=None) -> list[Trial]:
    return [run_trial(s, config, weights) for s in scenes]


def calibration_set(trials: list[Trial]) -> CalibrationSet:
    """Rows from trials whose nine estimates are all finite.

    Out-of-band values stay in: they are what the estimators actually
    return, and the fit should see them.
    """
    usable = [t for t in trials
              if t.estimate is not None
              and np.all(np.isfinite(t.estimate.br_vector()))
              and np.all(np.isfinite(t.estimate.hr_vector()))]
    return CalibrationSet.from_estimates(
        [t.estimate for t in usable],
        [t.truth.br_per_min for t in usable],
        [t.truth.hr_per_min for t in usable])
