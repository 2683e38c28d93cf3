"""Delay-and-sum beamforming, range FFT and the combined range-azimuth map."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .radar import RadarConfig, range_bin_width, wavelength_max
from .simulator import DataCube


@dataclass(frozen=True, eq=False)
class RangeSpectra:
    """Complex range spectra indexed ``[chirp, range_bin, azimuth_index]``."""

    values: np.ndarray
    config: RadarConfig

    @property
    def range_axis(self) -> np.ndarray:
        return np.arange(self.values.shape[1]) * range_bin_width(self.config)

    @property
    def azimuth_axis(self) -> np.ndarray:
        return np.asarray(self.config.azimuth_grid_deg)

    @property
    def shape(self):
        return self.values.shape


@dataclass(frozen=True, eq=False)
class RangeAzimuthMap:
    magnitude: np.ndarray  # (range_bin, azimuth_index)
    range_axis: np.ndarray
    azimuth_axis: np.ndarray

    def to_csv(self, path) -> None:
        write_grid_csv(path, self.magnitude, self.range_axis, self.azimuth_axis)


def write_grid_csv(path, grid, range_axis, azimuth_axis) -> None:
    """Range rows, azimuth columns; first column holds the range in metres."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["range_m"] + [f"{a:g}" for a in azimuth_axis])
        for r, row in zip(range_axis, grid):
            w.writerow([f"{r:.6f}"] + [repr(float(v)) for v in row])


def steering_weights(azimuth_deg: float, config: RadarConfig) -> np.ndarray:
    """Unit-norm delay-and-sum weights for look direction ``azimuth_deg``.

    ``w_i = exp(-j*2*pi*i*(d/lambda)*sin(gamma)) / sqrt(K)``, so that
    ``sum_i y_i * w_i`` phase-aligns a plane wave from ``gamma``.
    """
    if abs(azimuth_deg) > 90:
        raise ValueError(f"azimuth {azimuth_deg} outside [-90, 90]")
    k = config.num_virtual_rx
    ratio = config.element_spacing_m / wavelength_max(config)
    i = np.arange(k)
    return np.exp(-1j * 2 * np.pi * i * ratio * np.sin(np.deg2rad(azimuth_deg))) / np.sqrt(k)


def steering_matrix(config: RadarConfig, grid=None) -> np.ndarray:
    """Weights for every grid angle, shape ``(num_virtual_rx, len(grid))``."""
    grid = config.azimuth_grid_deg if grid is None else grid
    return np.stack([steering_weights(a, config) for a in grid], axis=1)


def beamform(cube: DataCube, azimuth_deg: float) -> np.ndarray:
    """Beat signal steered to ``azimuth_deg``, shape ``(M, N)``."""
    return cube.samples @ steering_weights(azimuth_deg, cube.config)


def beamform_grid(cube: DataCube) -> np.ndarray:
    """Beat signals for all grid angles, shape ``(M, N, A)``."""
    return cube.samples @ steering_matrix(cube.config)


def range_fft(beat: np.ndarray, config: RadarConfig, half: bool = True) -> np.ndarray:
    """Hann-windowed, zero-padded FFT along the last (fast-time) axis.

    With ``half=True`` only the first ``range_fft_size // 2`` bins (the
    non-negative beat frequencies) are returned.
    """
    beat = np.asarray(beat)
    n = beat.shape[-1]
    if n != config.fast_time_samples:
        raise ValueError(f"beat length {n} != fast_time_samples {config.fast_time_samples}")
    win = np.hanning(n)
    spectrum = np.fft.fft(beat * win, n=config.range_fft_size, axis=-1)
    if half:
        spectrum = spectrum[..., : config.range_fft_size // 2]
    return spectrum


def range_spectra(cube: DataCube) -> RangeSpectra:
    """Beamform to every grid angle and range-transform each chirp."""
    beams = beamform_grid(cube)  # (M, N, A)
    spectrum = range_fft(np.moveaxis(beams, 1, -1), cube.config)  # (M, A, bins)
    return RangeSpectra(np.ascontiguousarray(np.moveaxis(spectrum, -1, 1)), cube.config)


def combined_map(spectra: RangeSpectra) -> RangeAzimuthMap:
    """Mean spectral magnitude over chirps."""
    mag = np.mean(np.abs(spectra.values), axis=0)
    return RangeAzimuthMap(mag, spectra.range_axis, spectra.azimuth_axis)
