"""Synthetic IF data cubes for multi-subject scenes.

Each reflector contributes, for chirp ``m``, fast-time sample ``n`` and
virtual receiver ``i``::

    a * exp(j * (2*pi*f_b*n/fs + 4*pi*R(t_m)/lambda + 2*pi*i*(d/lambda)*sin(theta)))

with ``f_b = 2*K_c*R(t_m)/c``. The range is frozen within a chirp
(stop-and-hop); chest motion is sinusoidal with optional breathing
harmonics.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InputError, OutOfRangeError, ParseError
from .radar import (
    CONSTANTS,
    RadarConfig,
    beat_from_range,
    load_toml,
    max_unambiguous_range,
    range_bin_width,
    wavelength_max,
)

BR_BAND_PER_MIN = (3.0, 36.0)
HR_BAND_PER_MIN = (48.0, 120.0)
BREATH_AMP_LIMITS_M = (1e-3, 12e-3)
HEART_AMP_LIMITS_M = (1e-5, 5e-4)


@dataclass(frozen=True)
class Subject:
    range_m: float
    azimuth_deg: float
    br_per_min: float
    hr_per_min: float
    breath_amp_m: float = 4e-3
    heart_amp_m: float = 2e-4
    breath_phase: float = 0.0
    heart_phase: float = 0.0
    reflectivity: float = 1.0
    # amplitudes (m) of breathing harmonics 2, 3, ...
    breath_harmonics_m: tuple[float, ...] = ()
    # peak fractional deviation of the instantaneous rate, varied sinusoidally
    # with period variability_period_s; the nominal rate is the ground truth
    br_variability: float = 0.0
    hr_variability: float = 0.0
    variability_period_s: float = 12.0

    def __post_init__(self):
        object.__setattr__(self, "breath_harmonics_m",
                           tuple(float(a) for a in self.breath_harmonics_m))
        lo, hi = BR_BAND_PER_MIN
        if not lo <= self.br_per_min <= hi:
            raise InputError(f"br_per_min {self.br_per_min} outside [{lo}, {hi}]")
        lo, hi = HR_BAND_PER_MIN
        if not lo <= self.hr_per_min <= hi:
            raise InputError(f"hr_per_min {self.hr_per_min} outside [{lo}, {hi}]")
        lo, hi = BREATH_AMP_LIMITS_M
        if not lo <= self.breath_amp_m <= hi:
            raise InputError(f"breath_amp_m {self.breath_amp_m} outside [{lo}, {hi}]")
        lo, hi = HEART_AMP_LIMITS_M
        if not lo <= self.heart_amp_m <= hi:
            raise InputError(f"heart_amp_m {self.heart_amp_m} outside [{lo}, {hi}]")
        if not self.range_m > 0:
            raise InputError("range_m must be positive")
        if not self.reflectivity >= 0:
            raise InputError("reflectivity must be non-negative")
        for name in ("br_variability", "hr_variability"):
            if not 0 <= getattr(self, name) < 0.5:
                raise InputError(f"{name} must lie in [0, 0.5)")
        if not self.variability_period_s > 0:
            raise InputError("variability_period_s must be positive")


@dataclass(frozen=True)
class Clutter:
    range_m: float
    azimuth_deg: float
    reflectivity: float = 1.0


@dataclass(frozen=True)
class Scene:
    subjects: tuple[Subject, ...] = ()
    clutter: tuple[Clutter, ...] = ()
    snr_db: float = math.inf
    seed: int = 0
    # scale amplitudes by (1 m / R)^2
    path_loss: bool = False

    def __post_init__(self):
        object.__setattr__(self, "subjects", tuple(self.subjects))
        object.__setattr__(self, "clutter", tuple(self.clutter))
        if int(self.seed) != self.seed or self.seed < 0:
            raise InputError("seed must be a non-negative integer")


@dataclass(frozen=True, eq=False)
class DataCube:
    """Complex IF samples indexed ``[chirp, fast_time, virtual_rx]``."""

    samples: np.ndarray
    config: RadarConfig

    def __post_init__(self):
        cfg = self.config
        expected = (cfg.num_chirps, cfg.fast_time_samples, cfg.num_virtual_rx)
        if self.samples.shape != expected:
            raise InputError(
                f"cube shape {self.samples.shape} does not match config {expected}")
        if not np.all(np.isfinite(self.samples)):
            raise InputError("cube contains non-finite samples")

    def __mul__(self, k):
        return DataCube(self.samples * k, self.config)

    __rmul__ = __mul__

    def __add__(self, other: "DataCube"):
        return DataCube(self.samples + other.samples, self.config)


@dataclass(frozen=True)
class GroundTruth:
    range_bin: int
    azimuth_index: int
    br_per_min: float
    hr_per_min: float
    range_m: float
    azimuth_deg: float


def chest_displacement(subject: Subject, t):
    """Chest displacement in metres at time(s) ``t`` (seconds)."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("time must be non-negative")
    breath = _cycle_phase(subject.br_per_min, subject.br_variability,
                          subject.variability_period_s, t) + subject.breath_phase
    heart = _cycle_phase(subject.hr_per_min, subject.hr_variability,
                         subject.variability_period_s, t) + subject.heart_phase
    x = subject.breath_amp_m * np.sin(breath) + subject.heart_amp_m * np.sin(heart)
    for k, amp in enumerate(subject.breath_harmonics_m, start=2):
        x = x + amp * np.sin(k * breath)
    return x if x.ndim else float(x)


def _cycle_phase(rate_per_min: float, variability: float, period_s: float, t):
    # integral of 2*pi*f0*(1 + v*sin(2*pi*t/T)) from 0 to t
    w = 2 * np.pi * rate_per_min / 60.0
    if variability == 0:
        return w * t
    wm = 2 * np.pi / period_s
    return w * (t + variability / wm * (1.0 - np.cos(wm * t)))


def chirp_times(config: RadarConfig) -> np.ndarray:
    return np.arange(config.num_chirps) * config.chirp_interval_s


def _reflectors(scene: Scene, config: RadarConfig):
    """(range per chirp, azimuth, amplitude) for every scatterer."""
    t = chirp_times(config)
    out = []
    for s in scene.subjects:
        amp = s.reflectivity
        if scene.path_loss:
            amp /= s.range_m ** 2
        out.append((s.range_m + chest_displacement(s, t), s.azimuth_deg, amp))
    for c in scene.clutter:
        amp = c.reflectivity
        if scene.path_loss:
            amp /= c.range_m ** 2
        out.append((np.full(config.num_chirps, float(c.range_m)), c.azimuth_deg, amp))
    return out


def _check_separation(scene: Scene, config: RadarConfig) -> None:
    width = range_bin_width(config)
    grid = np.asarray(config.azimuth_grid_deg)
    step = np.min(np.diff(grid)) if len(grid) > 1 else 180.0
    subs = scene.subjects
    for i in range(len(subs)):
        for j in range(i + 1, len(subs)):
            a, b = subs[i], subs[j]
            if (abs(a.range_m - b.range_m) < width
                    and abs(a.azimuth_deg - b.azimuth_deg) < step):
                warnings.warn(f"subjects {i} and {j} share a range-azimuth bin",
                              stacklevel=3)


def noise_sigma(scene: Scene, reflectors) -> float:
    if math.isinf(scene.snr_db) and scene.snr_db > 0:
        return 0.0
    peak = max((abs(a) for _, _, a in reflectors), default=0.0)
    if peak == 0.0:
        peak = 1.0
    return peak / math.sqrt(10.0 ** (scene.snr_db / 10.0))


def synthesize_cube(scene: Scene, config: RadarConfig, threads: int = 1) -> DataCube:
    """Render ``scene`` into a virtual-receiver data cube.

    Noise is circular complex Gaussian with per-sample power set so that
    the strongest reflector sits at ``scene.snr_db``. Each chirp draws its
    noise from an independent stream keyed by ``(seed, chirp)``, so the
    result does not depend on ``threads``.
    """
    lam = wavelength_max(config)
    r_max = max_unambiguous_range(config)
    refl = _reflectors(scene, config)
    for r, _, _ in refl:
        if np.max(r) > r_max or np.min(r) < 0:
            raise OutOfRangeError(
                f"reflector at {np.max(r):.3f} m beyond unambiguous range {r_max:.3f} m")
    _check_separation(scene, config)
    sigma = noise_sigma(scene, refl)

    M, N, K = config.num_chirps, config.fast_time_samples, config.num_virtual_rx
    n = np.arange(N) / config.fast_time_sample_rate_hz
    rx = np.arange(K)
    d = config.element_spacing_m
    steer = [np.exp(1j * 2 * np.pi * rx * (d / lam) * np.sin(np.deg2rad(az)))
             for _, az, _ in refl]

    out = np.zeros((M, N, K), dtype=np.complex128)

    def render(chunk: np.ndarray) -> None:
        block = np.zeros((len(chunk), N, K), dtype=np.complex128)
        for (r, _, amp), sv in zip(refl, steer):
            rm = r[chunk]
            fb = beat_from_range(rm, config)
            phase = 2 * np.pi * fb[:, None] * n[None, :] + (4 * np.pi / lam) * rm[:, None]
            block += amp * np.exp(1j * phase)[:, :, None] * sv[None, None, :]
        if sigma > 0:
            for j, m in enumerate(chunk):
                rng = np.random.default_rng([int(scene.seed), int(m)])
                w = rng.standard_normal((N, K, 2))
                block[j] += (sigma / math.sqrt(2.0)) * (w[..., 0] + 1j * w[..., 1])
        out[chunk] = block

    chunks = np.array_split(np.arange(M), max(1, min(int(threads), M)))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(render, chunks))
    else:
        for c in chunks:
            render(c)
    return DataCube(out, config)


def azimuth_index(azimuth_deg: float, config: RadarConfig) -> int:
    grid = np.asarray(config.azimuth_grid_deg)
    return int(np.argmin(np.abs(grid - azimuth_deg)))


def ground_truth(scene: Scene, config: RadarConfig) -> list[GroundTruth]:
    width = range_bin_width(config)
    return [
        GroundTruth(range_bin=int(round(s.range_m / width)),
                    azimuth_index=azimuth_index(s.azimuth_deg, config),
                    br_per_min=s.br_per_min, hr_per_min=s.hr_per_min,
                    range_m=s.range_m, azimuth_deg=s.azimuth_deg)
        for s in scene.subjects
    ]


def scene_from_mapping(data: dict) -> Scene:
    subjects = []
    for i, entry in enumerate(data.get("subject", [])):
        entry = dict(entry)
        if "breath_harmonics_m" in entry:
            entry["breath_harmonics_m"] = tuple(entry["breath_harmonics_m"])
        try:
            subjects.append(Subject(**entry))
        except TypeError as exc:
            raise InputError(f"subject {i}: {exc}") from exc
    clutter = []
    for i, entry in enumerate(data.get("clutter", [])):
        try:
            clutter.append(Clutter(**entry))
        except TypeError as exc:
            raise InputError(f"clutter {i}: {exc}") from exc
    unknown = set(data) - {"subject", "clutter", "snr_db", "seed", "path_loss"}
    if unknown:
        raise InputError(f"unknown scene keys: {', '.join(sorted(unknown))}")
    snr = data.get("snr_db", math.inf)
    if isinstance(snr, str) and snr.lower() in ("inf", "infinity", "noiseless"):
        snr = math.inf
    return Scene(subjects=tuple(subjects), clutter=tuple(clutter),
                 snr_db=float(snr), seed=int(data.get("seed", 0)),
                 path_loss=bool(data.get("path_loss", False)))


def load_scene(path) -> Scene:
    """Scene file: top-level ``snr_db``, ``seed``, ``path_loss`` plus
    ``[[subject]]`` and ``[[clutter]]`` tables."""
    data = load_toml(path)
    try:
        return scene_from_mapping(data)
    except (TypeError, ValueError) as exc:
        raise ParseError(str(exc), path=path) from exc


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    if isinstance(v, tuple):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def scene_to_text(scene: Scene) -> str:
    lines = [f"snr_db = {_fmt(float(scene.snr_db))}",
             f"seed = {int(scene.seed)}",
             f"path_loss = {_fmt(scene.path_loss)}"]
    for s in scene.subjects:
        lines += ["", "[[subject]]"]
        lines += [f"{k} = {_fmt(v)}" for k, v in s.__dict__.items()
                  if not (k == "breath_harmonics_m" and not v)]
    for c in scene.clutter:
        lines += ["", "[[clutter]]"]
        lines += [f"{k} = {_fmt(float(v))}" for k, v in c.__dict__.items()]
    return "\n".join(lines) + "\n"


def save_scene(scene: Scene, path) -> None:
    Path(path).write_text(scene_to_text(scene))


def reference_scene(snr_db: float = 20.0, seed: int = 0) -> Scene:
    """Three subjects at 1 m/-45 deg, 1.5 m/0 deg and 1.2 m/+45 deg."""
    return Scene(
        subjects=(
            Subject(1.0, -45.0, br_per_min=12.0, hr_per_min=75.0,
                    breath_amp_m=4.0e-3, heart_amp_m=2.0e-4),
            Subject(1.5, 0.0, br_per_min=18.0, hr_per_min=66.0,
                    breath_amp_m=4.5e-3, heart_amp_m=2.5e-4,
                    breath_phase=1.0, heart_phase=0.5),
            Subject(1.2, 45.0, br_per_min=15.0, hr_per_min=90.0,
                    breath_amp_m=4.0e-3, heart_amp_m=2.0e-4,
                    breath_phase=2.0, heart_phase=1.5),
        ),
        snr_db=snr_db, seed=seed)


def random_subject(rng: np.random.Generator, config: RadarConfig,
                   ranges=(0.5, 5.0), br=(8.0, 28.0), hr=(55.0, 110.0),
                   breath_amp=(2e-3, 5e-3), heart_amp=(1e-4, 4e-4),
                   harmonic_fraction=(0.0, 0.0), num_harmonics: int = 3,
                   variability=(0.0, 0.0)) -> Subject:
    """Draw a subject on the azimuth grid with physiologically typical rates.

    A nonzero ``harmonic_fraction`` range adds breathing harmonics 2, 3, ...
    with amplitude ``f * breath_amp / (k - 1)`` for a drawn fraction ``f``,
    mimicking a non-sinusoidal breathing waveform. ``variability`` is the
    range of the peak fractional rate deviation drawn independently for
    breathing and heartbeat.
    """
    amp = float(rng.uniform(*breath_amp))
    frac = float(rng.uniform(*harmonic_fraction))
    harmonics = tuple(frac * amp / (k - 1) for k in range(2, num_harmonics + 2)) \
        if frac > 0 else ()
    return Subject(
        range_m=float(rng.uniform(*ranges)),
        azimuth_deg=float(rng.choice(config.azimuth_grid_deg)),
        br_per_min=float(rng.uniform(*br)),
        hr_per_min=float(rng.uniform(*hr)),
        breath_amp_m=amp,
        heart_amp_m=float(rng.uniform(*heart_amp)),
        breath_phase=float(rng.uniform(0, 2 * np.pi)),
        heart_phase=float(rng.uniform(0, 2 * np.pi)),
        breath_harmonics_m=harmonics,
        br_variability=float(rng.uniform(*variability)),
        hr_variability=float(rng.uniform(*variability)),
        variability_period_s=float(rng.uniform(8.0, 20.0)),
    )
