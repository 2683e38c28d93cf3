"""Radar configuration and closed-form FMCW relations.

All quantities are SI (Hz, s, m, rad). Conversion to per-minute rates only
happens at the reporting boundary.
"""
from __future__ import annotations

import dataclasses
import hashlib
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

try:
    import tomllib
except ImportError:  # python < 3.11
    import tomli as tomllib

from .errors import InvalidConfigError, ParseError

SPEED_OF_LIGHT = 299792458.0  # m/s


@dataclass(frozen=True)
class PhysicalConstants:
    c: float = SPEED_OF_LIGHT


CONSTANTS = PhysicalConstants()

DEFAULT_AZIMUTH_GRID = (-60.0, -45.0, -30.0, -15.0, 0.0, 15.0, 30.0, 45.0, 60.0)


@dataclass(frozen=True)
class RadarConfig:
    """Chirp, frame and virtual-array parameters.

    Defaults reproduce the measurement setup of a 77 GHz TDM-MIMO sensor:
    512 chirps spaced 50 ms apart (25.6 s window), 8 virtual receivers and
    a 15 degree azimuth grid. The fast-time parameters keep the sampled
    sweep narrow (0.38 GHz) so that the phase-to-range factor 4*pi/lambda_max
    holds to about 0.25 % across the sampling window.

    ``element_spacing_m=None`` resolves to half of ``wavelength_max``.
    """

    f_min_hz: float = 77e9
    chirp_rate_hz_per_s: float = 29.982e12
    chirp_duration_s: float = 20e-6
    chirp_interval_s: float = 0.05
    num_chirps: int = 512
    fast_time_samples: int = 64
    fast_time_sample_rate_hz: float = 5e6
    num_virtual_rx: int = 8
    element_spacing_m: float | None = None
    azimuth_grid_deg: tuple[float, ...] = DEFAULT_AZIMUTH_GRID
    range_fft_size: int = 256

    def __post_init__(self):
        object.__setattr__(self, "azimuth_grid_deg",
                           tuple(float(a) for a in self.azimuth_grid_deg))
        _validate(self)
        if self.element_spacing_m is None:
            object.__setattr__(self, "element_spacing_m",
                               wavelength_max(self) / 2.0)
        elif not self.element_spacing_m > 0:
            raise InvalidConfigError("element_spacing_m must be positive")

    # short aliases matching the usual FMCW notation
    @property
    def f_min(self) -> float:
        return self.f_min_hz

    @property
    def chirp_rate(self) -> float:
        return self.chirp_rate_hz_per_s

    @property
    def T_c(self) -> float:
        return self.chirp_interval_s

    @property
    def M(self) -> int:
        return self.num_chirps

    @property
    def N(self) -> int:
        return self.fast_time_samples

    @property
    def fs(self) -> float:
        return self.fast_time_sample_rate_hz

    @property
    def num_range_bins(self) -> int:
        return self.range_fft_size // 2

    @property
    def observation_time_s(self) -> float:
        return self.num_chirps * self.chirp_interval_s

    def replace(self, **changes) -> "RadarConfig":
        if "element_spacing_m" not in changes and "f_min_hz" in changes:
            changes["element_spacing_m"] = None
        return dataclasses.replace(self, **changes)

    def to_text(self) -> str:
        """Canonical ``key = value`` rendering (TOML compatible)."""
        lines = []
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                rendered = "[" + ", ".join(repr(float(v)) for v in value) + "]"
            elif isinstance(value, float):
                rendered = repr(value)
            else:
                rendered = str(value)
            lines.append(f"{f.name} = {rendered}")
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.to_text().encode("ascii")).hexdigest()


def _validate(cfg: RadarConfig) -> None:
    problems = []
    if not cfg.f_min_hz > 0:
        problems.append("f_min_hz must be positive")
    if not cfg.chirp_rate_hz_per_s > 0:
        problems.append("chirp_rate_hz_per_s must be positive")
    if not cfg.chirp_duration_s > 0:
        problems.append("chirp_duration_s must be positive")
    if not cfg.chirp_duration_s <= cfg.chirp_interval_s:
        problems.append("chirp_duration_s must not exceed chirp_interval_s")
    if cfg.num_chirps < 2:
        problems.append("num_chirps must be >= 2")
    if cfg.fast_time_samples < 2:
        problems.append("fast_time_samples must be >= 2")
    if not cfg.fast_time_sample_rate_hz > 0:
        problems.append("fast_time_sample_rate_hz must be positive")
    if cfg.num_virtual_rx < 1:
        problems.append("num_virtual_rx must be >= 1")
    if cfg.range_fft_size < cfg.fast_time_samples:
        problems.append("range_fft_size must be >= fast_time_samples")
    grid = cfg.azimuth_grid_deg
    if len(grid) == 0:
        problems.append("azimuth_grid_deg must not be empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        problems.append("azimuth_grid_deg must be strictly increasing")
    if any(abs(a) > 90 for a in grid):
        problems.append("azimuth_grid_deg must lie within [-90, 90]")
    if problems:
        raise InvalidConfigError("; ".join(problems))


def wavelength_max(config: RadarConfig) -> float:
    if not config.f_min_hz > 0:
        raise InvalidConfigError("f_min_hz must be positive")
    return CONSTANTS.c / config.f_min_hz


def range_from_beat(f_b: float, config: RadarConfig) -> float:
    """Range in metres for beat frequency ``f_b`` (Hz)."""
    if f_b < 0:
        raise ValueError(f"beat frequency must be non-negative, got {f_b}")
    return CONSTANTS.c * f_b / (2.0 * config.chirp_rate_hz_per_s)


def beat_from_range(r: float, config: RadarConfig) -> float:
    return 2.0 * config.chirp_rate_hz_per_s * r / CONSTANTS.c


def phase_from_range(r, config: RadarConfig):
    """Unwrapped IF phase ``4*pi*R/lambda_max``; accepts arrays."""
    return 4.0 * math.pi * r / wavelength_max(config)


def range_bin_width(config: RadarConfig) -> float:
    return CONSTANTS.c * config.fast_time_sample_rate_hz / (
        2.0 * config.chirp_rate_hz_per_s * config.range_fft_size)


def max_unambiguous_range(config: RadarConfig) -> float:
    return range_from_beat(config.fast_time_sample_rate_hz / 2.0, config)


_FIELDS = {f.name for f in dataclasses.fields(RadarConfig)}


def config_from_mapping(values: Mapping[str, Any]) -> RadarConfig:
    unknown = sorted(set(values) - _FIELDS)
    if unknown:
        raise InvalidConfigError(f"unknown config keys: {', '.join(unknown)}")
    kwargs = dict(values)
    if "azimuth_grid_deg" in kwargs:
        kwargs["azimuth_grid_deg"] = tuple(kwargs["azimuth_grid_deg"])
    for key in ("num_chirps", "fast_time_samples", "num_virtual_rx",
                "range_fft_size"):
        if key in kwargs:
            v = kwargs[key]
            if isinstance(v, bool) or int(v) != v:
                raise InvalidConfigError(f"{key} must be an integer")
            kwargs[key] = int(v)
    return RadarConfig(**kwargs)


def load_toml(path) -> dict:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        line = getattr(exc, "lineno", None)
        if line is None:
            # tomli < 2.1 only carries the position in the message
            import re
            m = re.search(r"line (\d+)", str(exc))
            line = int(m.group(1)) if m else None
        raise ParseError(str(exc), path=path, line=line) from exc


def load_config(path) -> RadarConfig:
    """Read a :class:`RadarConfig` from a ``key = value`` text file.

    Missing keys take their default values; unknown keys are rejected.
    """
    data = load_toml(path)
    try:
        return config_from_mapping(data)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InvalidConfigError):
            raise ParseError(str(exc), path=path) from exc
        raise ParseError(f"bad value: {exc}", path=path) from exc


def save_config(config: RadarConfig, path) -> None:
    Path(path).write_text(config.to_text())
