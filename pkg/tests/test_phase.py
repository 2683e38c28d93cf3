import numpy as np
import pytest
from hypothesis import assume, given, strategies as st
from hypothesis.extra import numpy as hnp

from vitalradar import RadarConfig, ground_truth
from vitalradar.beamform import RangeSpectra
from vitalradar.errors import AliasingError, UndefinedPhaseError
from vitalradar.estimators import estimate_fft
from vitalradar.phase import (Band, BandSignal, PhaseSignal, band_filter, bandpass,
                              comb_filter, comb_frequencies, comb_sos, extract_phase,
                              mean_subtract_unwrap, zero_phase_response)

from conftest import single_subject_spectra, tone

CFG = RadarConfig()
DT = CFG.chirp_interval_s
FS = 1.0 / DT


def _amplitude(x, freq_per_min, others=(), dt=DT):
    """Least-squares amplitude of one sinusoid over the middle half of ``x``.

    Tones listed in ``others`` are fitted jointly so their leakage over the
    short window does not bias the result.
    """
    n = len(x)
    t = np.arange(n)[n // 4:3 * n // 4] * dt
    cols = []
    for f in (freq_per_min, *others):
        w = 2 * np.pi * f / 60.0
        cols += [np.sin(w * t), np.cos(w * t)]
    cols.append(np.ones_like(t))
    coef, *_ = np.linalg.lstsq(np.column_stack(cols), x[n // 4:3 * n // 4], rcond=None)
    return float(np.hypot(coef[0], coef[1]))


def _db(gain):
    return 20 * np.log10(gain)


def _phase_signal(x, dt=DT):
    return PhaseSignal(np.asarray(x, dtype=float), dt)


# extraction

def test_constant_spectrum_gives_constant_phase():
    vals = np.full((32, 2, 2), 3 * np.exp(0.7j))
    p = extract_phase(RangeSpectra(vals, CFG), (1, 0))
    assert np.allclose(p.samples, 0.7) and p.source_bin == (1, 0)


def test_conjugation_negates_phase():
    rng = np.random.default_rng(1)
    vals = rng.standard_normal((40, 3, 3)) + 1j * rng.standard_normal((40, 3, 3))
    a = extract_phase(RangeSpectra(vals, CFG), (2, 1)).samples
    b = extract_phase(RangeSpectra(vals.conj(), CFG), (2, 1)).samples
    assert np.allclose(a, -b)


def test_zero_sample_is_undefined():
    vals = np.ones((16, 2, 2), complex)
    vals[5, 0, 1] = 0
    with pytest.raises(UndefinedPhaseError) as info:
        extract_phase(RangeSpectra(vals, CFG), (0, 1))
    assert info.value.chirp == 5


def test_negative_real_axis_maps_to_plus_pi():
    vals = np.full((8, 1, 1), -1.0 + 0j)
    vals[:, 0, 0] = complex(-1.0, -0.0)
    assert np.all(extract_phase(RangeSpectra(vals, CFG), (0, 0)).samples == np.pi)


# unwrapping

def test_unwrap_example():
    out = mean_subtract_unwrap(_phase_signal([3.0, -3.0])).samples
    assert out == pytest.approx([-(np.pi - 3.0), np.pi - 3.0], abs=1e-12)


wrapped = hnp.arrays(float, st.integers(2, 200),
                     elements=st.floats(-np.pi, np.pi, allow_nan=False))


@given(wrapped)
def test_unwrapped_steps_stay_within_pi(x):
    u = mean_subtract_unwrap(_phase_signal(x)).samples
    assert np.all(np.abs(np.diff(u)) <= np.pi + 1e-9)
    assert abs(u.mean()) < 1e-9


@given(wrapped)
def test_rewrapping_recovers_input_up_to_offset(x):
    u = mean_subtract_unwrap(_phase_signal(x)).samples
    d = np.angle(np.exp(1j * (u - x)))
    assert np.allclose(d, d[0], atol=1e-9)


@given(wrapped, hnp.arrays(int, st.just(1), elements=st.integers(-5, 5)))
def test_unwrap_ignores_2pi_multiples(x, shift):
    # a step of exactly pi is ambiguous: either branch is a valid unwrap
    step = np.abs(np.angle(np.exp(1j * np.diff(x))))
    assume(np.all(np.abs(step - np.pi) > 1e-9))
    rng = np.random.default_rng(abs(int(shift[0])))
    ks = rng.integers(-3, 4, size=len(x))
    a = mean_subtract_unwrap(_phase_signal(x)).samples
    b = mean_subtract_unwrap(_phase_signal(x + 2 * np.pi * ks)).samples
    assert np.allclose(a, b, atol=1e-8)


def test_unwrap_needs_two_samples():
    with pytest.raises(ValueError):
        mean_subtract_unwrap(_phase_signal([0.1]))


# band splitting

# 120 s records hold an integer number of cycles of every tone used below,
# and their middle half is clear of the filters' start-up transients
LONG = 2400


def test_breath_tone_passes_breath_band_only():
    p = _phase_signal(tone(15.0))
    br, hr = bandpass(p, Band.BREATH), bandpass(p, Band.HEART)
    assert _amplitude(br.samples, 15.0) == pytest.approx(1.0, rel=0.05)
    assert 20 * np.log10(_amplitude(hr.samples, 15.0)) <= -40
    assert br.band is Band.BREATH and not br.comb_applied


def test_band_cross_terms_suppressed():
    p = _phase_signal(tone(12.0, n=LONG) + 0.1 * tone(72.0, n=LONG))
    br, hr = bandpass(p, Band.BREATH), bandpass(p, Band.HEART)
    assert 20 * np.log10(_amplitude(br.samples, 72.0, (12.0,)) / 0.1) <= -40
    assert 20 * np.log10(_amplitude(hr.samples, 12.0, (72.0,))) <= -40
    assert _amplitude(hr.samples, 72.0, (12.0,)) == pytest.approx(0.1, rel=0.1)


@pytest.mark.parametrize("band", list(Band))
def test_design_meets_ripple_and_stop_targets(band):
    sos = band_filter(band, FS)
    inside = np.linspace(band.low, band.high, 50) / 60.0
    gain_db = _db(zero_phase_response(sos, inside, FS))
    assert gain_db.min() >= -3.0 - 1e-3 and gain_db.max() <= 1e-6
    lo, hi = band.stopband
    stops = [hi] + ([lo] if lo is not None else [])
    for f in stops:
        assert _db(zero_phase_response(sos, f / 60.0, FS)[0]) <= -40


def test_aliasing_rejected():
    with pytest.raises(AliasingError):
        bandpass(_phase_signal(np.zeros(64), dt=0.6), Band.HEART)


def test_zero_in_zero_out_and_linearity():
    p0 = _phase_signal(np.zeros(512))
    assert np.all(bandpass(p0, Band.HEART).samples == 0)
    rng = np.random.default_rng(3)
    x, y = rng.standard_normal(512), rng.standard_normal(512)
    for band in Band:
        lhs = bandpass(_phase_signal(2.5 * x - 0.5 * y), band).samples
        rhs = 2.5 * bandpass(_phase_signal(x), band).samples \
            - 0.5 * bandpass(_phase_signal(y), band).samples
        assert np.allclose(lhs, rhs, atol=1e-10)


# respiration comb

def test_comb_notch_positions():
    assert comb_frequencies(15.0) == pytest.approx([60, 75, 90, 105, 120])
    assert comb_frequencies(12.0) == pytest.approx([48, 60, 72, 84, 96, 108, 120])


def test_comb_response():
    sos = comb_sos(15.0, FS)
    db = lambda f: _db(zero_phase_response(sos, f / 60.0, FS)[0])
    for f in (60, 75, 90, 105, 120):
        assert db(f) <= -30
    assert db(67.0) > -3.0
    # -3 dB points 1/min either side of the notch
    assert db(75.0 + 1.0) == pytest.approx(-3.0, abs=0.2)
    assert db(75.0 - 1.0) == pytest.approx(-3.0, abs=0.2)


def test_comb_suppresses_harmonic_keeps_heart():
    x = 0.2 * tone(75.0, n=LONG) + 0.05 * tone(67.0, n=LONG)
    h = BandSignal(x, DT, Band.HEART)
    y = comb_filter(h, 15.0)
    assert _db(_amplitude(y.samples, 75.0, (67.0,)) / 0.2) <= -30
    assert _amplitude(y.samples, 67.0, (75.0,)) == pytest.approx(0.05, rel=0.05)
    assert y.comb_applied and y.notches_per_min == (60.0, 75.0, 90.0, 105.0, 120.0)


@pytest.mark.parametrize("br", [2.9, 36.5, 0.0])
def test_comb_rejects_fundamental_outside_breath_band(br):
    with pytest.raises(ValueError):
        comb_filter(BandSignal(np.zeros(64), DT, Band.HEART), br)


# end to end on a simulated subject

@pytest.mark.parametrize("br,hr", [(15.0, 70.0), (10.0, 95.0)])
def test_simulated_subject_rates_survive(br, hr):
    scene, spectra = single_subject_spectra(range_m=1.7, br=br, hr=hr)
    g = ground_truth(scene, CFG)[0]
    u = mean_subtract_unwrap(extract_phase(spectra, (g.range_bin, g.azimuth_index)))
    bin_per_min = 60.0 / (len(u) * DT)
    assert abs(estimate_fft(bandpass(u, Band.BREATH)) - br) <= bin_per_min
    assert abs(estimate_fft(bandpass(u, Band.HEART)) - hr) <= bin_per_min
