import functools
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from vitalradar import RadarConfig, Scene, Subject, range_spectra, synthesize_cube

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def config():
    return RadarConfig()


@pytest.fixture(scope="session")
def short_config():
    """Fewer chirps for tests that only need slow-time structure, not rates."""
    return RadarConfig(num_chirps=64)


@functools.lru_cache(maxsize=None)
def single_subject_spectra(range_m=1.0, azimuth_deg=0.0, br=12.0, hr=60.0,
                           snr_db=float("inf"), seed=0, num_chirps=512):
    cfg = RadarConfig(num_chirps=num_chirps)
    scene = Scene(subjects=(Subject(range_m, azimuth_deg, br, hr),), snr_db=snr_db, seed=seed)
    return scene, range_spectra(synthesize_cube(scene, cfg))


def tone(freq_per_min, n=512, dt=0.05, amp=1.0, phase=0.0):
    t = np.arange(n) * dt
    return amp * np.sin(2 * np.pi * freq_per_min / 60.0 * t + phase)


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
