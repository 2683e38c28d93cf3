import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from vitalradar import DataCube, RadarConfig, reference_scene, synthesize_cube
from vitalradar.errors import CaptureLengthError, DemuxError, InputError
from vitalradar.ingest import (HEADER_BYTES, LAYOUTS, CaptureLayout, IQOrder, LaneInterleave,
                               default_layout, load_capture, quantize, read_capture,
                               tdm_demux, tdm_mux, to_bytes, write_capture)

SMALL = RadarConfig(num_chirps=8, fast_time_samples=16, range_fft_size=64)


def _int_cube(rng, cfg=SMALL):
    shape = (cfg.num_chirps, cfg.fast_time_samples, cfg.num_virtual_rx)
    re = rng.integers(-32768, 32768, size=shape)
    im = rng.integers(-32768, 32768, size=shape)
    return DataCube(re + 1j * im, cfg)


def test_all_zero_stream_gives_zero_cube():
    layout = default_layout(SMALL)
    data = b"\0" * (layout.header_bytes + layout.payload_bytes(SMALL))
    cube = read_capture(data, CaptureLayout(header_bytes=64), SMALL)
    assert not np.any(cube.samples)


@pytest.mark.parametrize("name", sorted(LAYOUTS))
def test_round_trip_every_layout(name):
    cube = _int_cube(np.random.default_rng(1))
    layout = LAYOUTS[name](SMALL)
    back = read_capture(to_bytes(cube, layout), layout, SMALL)
    assert np.array_equal(back.samples, cube.samples)


@pytest.mark.parametrize("iq", list(IQOrder))
@pytest.mark.parametrize("lane", list(LaneInterleave))
def test_round_trip_iq_and_lane_orders(iq, lane):
    cube = _int_cube(np.random.default_rng(2))
    layout = CaptureLayout(iq_order=iq, lane_interleave=lane)
    data = to_bytes(cube, layout)
    assert np.array_equal(read_capture(data, layout, SMALL).samples, cube.samples)
    assert to_bytes(read_capture(data, layout, SMALL), layout) == data


@given(st.integers(0, 2**32 - 1))
def test_bytes_round_trip(seed):
    layout = CaptureLayout(header_bytes=0)
    n = layout.payload_bytes(SMALL)
    data = np.random.default_rng(seed).bytes(n)
    assert to_bytes(read_capture(data, layout, SMALL), layout) == data


def test_simulated_capture_round_trips_bit_exactly(tmp_path):
    cfg = RadarConfig(num_chirps=32)
    cube = quantize(synthesize_cube(reference_scene(snr_db=20, seed=1), cfg))
    path = tmp_path / "cap.bin"
    write_capture(cube, path)
    assert path.stat().st_size == HEADER_BYTES + 2 * 2 * 64 * 32 * 8
    assert np.array_equal(load_capture(path, cfg).samples, cube.samples)


def test_truncated_stream_reports_expected_and_actual():
    cube = _int_cube(np.random.default_rng(3))
    data = to_bytes(cube)
    with pytest.raises(CaptureLengthError) as exc:
        read_capture(data[:-1], default_layout(SMALL), SMALL)
    assert exc.value.expected == len(data) and exc.value.actual == len(data) - 1


def test_header_checks():
    cube = _int_cube(np.random.default_rng(4))
    data = bytearray(to_bytes(cube))
    other = SMALL.replace(fast_time_sample_rate_hz=4e6)
    with pytest.warns(UserWarning, match="different radar config"):
        read_capture(bytes(data), default_layout(other), other)
    data[4] = 9  # version
    with pytest.raises(InputError, match="version"):
        read_capture(bytes(data), default_layout(SMALL), SMALL)


def test_non_integer_cube_must_be_quantized():
    cube = DataCube(np.full((8, 16, 8), 0.5 + 0j), SMALL)
    with pytest.raises(InputError, match="quantize"):
        to_bytes(cube)
    q = quantize(cube)
    assert np.max(np.abs(q.samples.real)) == 8192


def test_layout_must_match_virtual_array():
    with pytest.raises(InputError):
        to_bytes(_int_cube(np.random.default_rng(5)), CaptureLayout(num_physical_rx=3))


def test_demux_identity_for_one_tx():
    x = np.random.default_rng(0).standard_normal((10, 16, 4))
    assert np.array_equal(tdm_demux(x, 1), x)


def test_demux_reference_geometry():
    phys = np.zeros((1024, 4, 4))
    out = tdm_demux(phys, 2)
    assert out.shape == (512, 4, 8)


def test_demux_mapping_and_constants():
    phys = np.arange(4 * 2 * 3).reshape(4, 2, 3).astype(float)  # 4 chirps, N = 2, 3 rx
    v = tdm_demux(phys, 2)
    # TX k supplies virtual receivers [3k, 3k + 3) from chirp 2m + k
    assert np.array_equal(v[1, :, 0:3], phys[2])
    assert np.array_equal(v[1, :, 3:6], phys[3])
    const = tdm_demux(np.full((6, 5, 4), 7.0), 3)
    assert np.all(const == 7.0)


def test_demux_rejects_indivisible_counts():
    with pytest.raises(DemuxError):
        tdm_demux(np.zeros((5, 4, 4)), 2)


@given(hnp.arrays(np.int64, st.tuples(st.sampled_from([2, 4, 6, 8]), st.integers(1, 4),
                                      st.integers(1, 4)),
                  elements=st.integers(-1000, 1000)),
       st.sampled_from([1, 2]))
def test_demux_preserves_sample_multiset(phys, num_tx):
    v = tdm_demux(phys, num_tx)
    assert sorted(v.ravel().tolist()) == sorted(phys.ravel().tolist())
    assert np.array_equal(tdm_mux(v, num_tx), phys)
