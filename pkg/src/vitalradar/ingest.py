"""Raw ADC capture files and TDM demultiplexing.

Canonical file layout (little-endian)::

    offset  size  field
    0       4     magic b"VRAW"
    4       2     version (1)
    6       2     num_tx
    8       2     num_physical_rx
    10      1     iq_order (0 = I first, 1 = Q first)
    11      1     lane_interleave (0 = chirp-contiguous, 1 = sample-interleaved)
    12      4     physical chirp count
    16      4     fast-time samples per chirp
    20      32    SHA-256 digest of the RadarConfig text
    52      12    reserved (zero)
    64      ...   int16 payload

Payload, chirp-contiguous: for each physical chirp, for each receiver,
``N`` (I, Q) pairs. Sample-interleaved: for each physical chirp, for each
fast-time sample, one (I, Q) pair per receiver. Physical chirp ``p``
comes from transmitter ``p % num_tx``.

Headerless dumps from capture hardware are read by passing a
:class:`CaptureLayout` with ``header_bytes=0`` (or the vendor header
size, which is skipped).
"""
from __future__ import annotations

import enum
import struct
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CaptureLengthError, DemuxError, InputError
from .radar import RadarConfig
from .simulator import DataCube

MAGIC = b"VRAW"
VERSION = 1
HEADER_BYTES = 64
_HEADER = struct.Struct("<4sHHHBBII32s12x")


class IQOrder(enum.IntEnum):
    I_FIRST = 0
    Q_FIRST = 1


class LaneInterleave(enum.IntEnum):
    CHIRP_CONTIGUOUS = 0
    SAMPLE_INTERLEAVED = 1


@dataclass(frozen=True)
class CaptureLayout:
    num_physical_rx: int = 4
    num_tx: int = 2
    iq_order: IQOrder = IQOrder.I_FIRST
    lane_interleave: LaneInterleave = LaneInterleave.CHIRP_CONTIGUOUS
    header_bytes: int = HEADER_BYTES
    sample_width: int = 16

    def __post_init__(self):
        if self.sample_width != 16:
            raise InputError("only 16-bit samples are supported")
        if self.num_physical_rx < 1 or self.num_tx < 1:
            raise InputError("receiver and transmitter counts must be >= 1")
        if self.header_bytes < 0:
            raise InputError("header_bytes must be >= 0")

    def check(self, config: RadarConfig) -> None:
        if self.num_physical_rx * self.num_tx != config.num_virtual_rx:
            raise InputError(
                f"{self.num_tx} TX x {self.num_physical_rx} RX does not give "
                f"{config.num_virtual_rx} virtual receivers")

    def payload_bytes(self, config: RadarConfig) -> int:
        return 2 * 2 * config.fast_time_samples * config.num_chirps * \
            self.num_physical_rx * self.num_tx


def default_layout(config: RadarConfig, num_tx: int | None = None) -> CaptureLayout:
    """Canonical layout: 2 TX when the virtual array splits evenly, else 1."""
    if num_tx is None:
        num_tx = 2 if config.num_virtual_rx % 2 == 0 else 1
    return CaptureLayout(num_physical_rx=config.num_virtual_rx // num_tx, num_tx=num_tx)


LAYOUTS = {
    "canonical": lambda cfg: default_layout(cfg),
    "interleaved": lambda cfg: CaptureLayout(
        num_physical_rx=default_layout(cfg).num_physical_rx,
        num_tx=default_layout(cfg).num_tx,
        lane_interleave=LaneInterleave.SAMPLE_INTERLEAVED, header_bytes=0),
    "raw": lambda cfg: CaptureLayout(
        num_physical_rx=default_layout(cfg).num_physical_rx,
        num_tx=default_layout(cfg).num_tx, header_bytes=0),
}


def tdm_demux(chirps: np.ndarray, num_tx: int) -> np.ndarray:
    """Fold a physical chirp sequence into virtual-receiver snapshots.

    ``chirps`` has shape ``(num_tx * M, N, num_physical_rx)``; the result
    has shape ``(M, N, num_tx * num_physical_rx)`` with transmitter ``k``
    filling receivers ``[k*P, (k+1)*P)``. The slow-time interval of the
    result is taken from ``RadarConfig.chirp_interval_s``.
    """
    chirps = np.asarray(chirps)
    if chirps.ndim != 3:
        raise DemuxError(f"expected a 3-d chirp array, got shape {chirps.shape}")
    total, n, p = chirps.shape
    if num_tx < 1 or total % num_tx:
        raise DemuxError(f"{total} physical chirps not divisible by num_tx={num_tx}")
    m = total // num_tx
    # (M, num_tx, N, P) -> (M, N, num_tx, P) -> (M, N, num_tx*P)
    return chirps.reshape(m, num_tx, n, p).transpose(0, 2, 1, 3).reshape(m, n, num_tx * p)


def tdm_mux(cube: np.ndarray, num_tx: int) -> np.ndarray:
    """Inverse of :func:`tdm_demux`."""
    m, n, k = cube.shape
    if k % num_tx:
        raise DemuxError(f"{k} virtual receivers not divisible by num_tx={num_tx}")
    p = k // num_tx
    return cube.reshape(m, n, num_tx, p).transpose(0, 2, 1, 3).reshape(m * num_tx, n, p)


def quantize(cube: DataCube, full_scale: float = 8192.0) -> DataCube:
    """Scale so the largest I or Q magnitude equals ``full_scale`` and round
    to integers, as a 16-bit ADC would."""
    peak = max(np.max(np.abs(cube.samples.real)), np.max(np.abs(cube.samples.imag)))
    scale = full_scale / peak if peak > 0 else 1.0
    s = cube.samples * scale
    # + 0.0 folds -0.0 into 0.0 so quantized cubes survive a byte round trip
    return DataCube((np.round(s.real) + 0.0) + 1j * (np.round(s.imag) + 0.0), cube.config)


def _header(layout: CaptureLayout, config: RadarConfig) -> bytes:
    return _HEADER.pack(MAGIC, VERSION, layout.num_tx, layout.num_physical_rx,
                        int(layout.iq_order), int(layout.lane_interleave),
                        config.num_chirps * layout.num_tx, config.fast_time_samples,
                        bytes.fromhex(config.digest()))


def to_bytes(cube: DataCube, layout: CaptureLayout | None = None) -> bytes:
    """Serialize an integer-valued cube. Values must fit in int16."""
    config = cube.config
    layout = layout or default_layout(config)
    layout.check(config)
    s = cube.samples
    if np.any(s.real != np.round(s.real)) or np.any(s.imag != np.round(s.imag)):
        raise InputError("cube is not integer-valued; quantize() it first")
    lim = (np.iinfo(np.int16).min, np.iinfo(np.int16).max)
    if (s.real.min(initial=0) < lim[0] or s.real.max(initial=0) > lim[1]
            or s.imag.min(initial=0) < lim[0] or s.imag.max(initial=0) > lim[1]):
        raise InputError("cube values exceed the int16 range")

    phys = tdm_mux(s, layout.num_tx)  # (P_chirps, N, rx)
    if layout.lane_interleave == LaneInterleave.CHIRP_CONTIGUOUS:
        phys = phys.transpose(0, 2, 1)  # (P_chirps, rx, N)
    pairs = np.empty(phys.shape + (2,), dtype="<i2")
    first, second = (phys.real, phys.imag) if layout.iq_order == IQOrder.I_FIRST \
        else (phys.imag, phys.real)
    pairs[..., 0] = first
    pairs[..., 1] = second

    head = b""
    if layout.header_bytes:
        head = _header(layout, config)
        head += b"\0" * (layout.header_bytes - len(head))
    return head[:layout.header_bytes] + pairs.tobytes()


def read_capture(data: bytes, layout: CaptureLayout, config: RadarConfig) -> DataCube:
    """Parse a capture into a virtual-receiver :class:`DataCube` of raw ADC counts."""
    layout.check(config)
    expected = layout.header_bytes + layout.payload_bytes(config)
    if len(data) != expected:
        raise CaptureLengthError(expected, len(data))
    if layout.header_bytes >= HEADER_BYTES and data[:4] == MAGIC:
        _, version, ntx, nrx, iq, lane, nchirp, nsamp, digest = \
            _HEADER.unpack_from(data, 0)
        if version != VERSION:
            raise InputError(f"unsupported capture version {version}")
        if (ntx, nrx, iq, lane) != (layout.num_tx, layout.num_physical_rx,
                                    int(layout.iq_order), int(layout.lane_interleave)):
            raise InputError("capture header disagrees with the requested layout")
        if (nchirp, nsamp) != (config.num_chirps * layout.num_tx, config.fast_time_samples):
            raise InputError("capture header dimensions disagree with the config")
        if digest.hex() != config.digest():
            warnings.warn("capture was written under a different radar config",
                          stacklevel=2)

    raw = np.frombuffer(data, dtype="<i2", offset=layout.header_bytes).astype(np.float64)
    pairs = raw.reshape(-1, 2)
    if layout.iq_order == IQOrder.I_FIRST:
        values = pairs[:, 0] + 1j * pairs[:, 1]
    else:
        values = pairs[:, 1] + 1j * pairs[:, 0]

    n_phys = config.num_chirps * layout.num_tx
    N, P = config.fast_time_samples, layout.num_physical_rx
    if layout.lane_interleave == LaneInterleave.CHIRP_CONTIGUOUS:
        phys = values.reshape(n_phys, P, N).transpose(0, 2, 1)
    else:
        phys = values.reshape(n_phys, N, P)
    return DataCube(tdm_demux(phys, layout.num_tx), config)


def write_capture(cube: DataCube, path, layout: CaptureLayout | None = None) -> None:
    Path(path).write_bytes(to_bytes(cube, layout))


def load_capture(path, config: RadarConfig, layout: CaptureLayout | None = None) -> DataCube:
    return read_capture(Path(path).read_bytes(), layout or default_layout(config), config)
