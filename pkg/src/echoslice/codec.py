"""Byte-stream codec for 3D echo volumes.

Stream layout (all integers little-endian):

    [0:4]   uint32  total stream size in bytes
    [4:8]   uint32  frame count T
    [8:8+4T]        uint32 starting byte offset of each frame
    per frame:      32-byte checksum field, then zlib-compressed voxels

Our writer stores CRC-32 (IEEE) of the compressed payload in the first 4
bytes of the checksum field and zero-fills the remaining 28. Readers treat
the field as opaque unless policy="strict". Frame payloads hold I*J*K
uint8 intensities with rho fastest: voxel (i, j, k) sits at flat position
i + I*j + I*J*k.

The standalone "E3DC" container wraps one stream with its metadata:
magic b"E3DC", one version byte, uint32 JSON length, the VolumeMeta JSON,
then the raw stream. DICOM input is supported through a minimal explicit
VR little-endian walker with configurable private tag addresses.
"""

from __future__ import annotations

import enum
import json
import logging
import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

from .errors import CodecError
from .volume import BoundsMatrix, VolumeMeta, VolumeSequence

log = logging.getLogger(__name__)

HEADER_FIXED = 8
CHECKSUM_BYTES = 32
ZLIB_LEVEL = 6  # fixed so two encodes of the same volume are byte-identical

E3DC_MAGIC = b"E3DC"
E3DC_VERSION = 1


class ChecksumPolicy(str, enum.Enum):
    IGNORE = "ignore"
    WARN = "warn"
    STRICT = "strict"


class StreamSource(str, enum.Enum):
    DICOM_PRIVATE_TAG = "dicom_private_tag"
    STANDALONE_CONTAINER = "standalone_container"


@dataclass(frozen=True)
class RawStream:
    data: bytes
    source: StreamSource = StreamSource.STANDALONE_CONTAINER

    def __post_init__(self):
        if len(self.data) < HEADER_FIXED:
            raise CodecError("stream shorter than 8-byte header")
        declared = struct.unpack_from("<I", self.data, 0)[0]
        if declared > len(self.data):
            raise CodecError("declared total size exceeds actual stream length")


@dataclass(frozen=True)
class FrameIndex:
    total_size_bytes: int
    frame_count: int
    offsets: tuple[int, ...]


def parse_stream_header(stream: RawStream) -> FrameIndex:
    """Read the fixed header and per-frame offset table."""
    data = stream.data
    total_size, frame_count = struct.unpack_from("<II", data, 0)
    if frame_count == 0:
        raise CodecError("empty stream")
    table_end = HEADER_FIXED + 4 * frame_count
    if table_end > total_size or table_end > len(data):
        raise CodecError("corrupt offset table")
    offsets = struct.unpack_from(f"<{frame_count}I", data, HEADER_FIXED)
    prev = table_end - 1
    for off in offsets:
        if off <= prev:
            raise CodecError("corrupt offset table")
        if off >= total_size:
            raise CodecError("corrupt offset table")
        prev = off
    return FrameIndex(total_size, frame_count, offsets)


def decode_frame(
    stream: RawStream,
    index: FrameIndex,
    frame_no: int,
    expected_voxels: int,
    policy: ChecksumPolicy | str = ChecksumPolicy.IGNORE,
) -> np.ndarray:
    """Inflate one frame payload to a flat uint8 array of expected_voxels."""
    policy = ChecksumPolicy(policy)
    if not 0 <= frame_no < index.frame_count:
        raise CodecError(f"frame {frame_no} out of range (T={index.frame_count})")
    start = index.offsets[frame_no]
    end = (
        index.offsets[frame_no + 1]
        if frame_no + 1 < index.frame_count
        else index.total_size_bytes
    )
    if end > len(stream.data) or end - start < CHECKSUM_BYTES + 1:
        raise CodecError("corrupt frame payload")
    checksum_field = stream.data[start : start + CHECKSUM_BYTES]
    compressed = stream.data[start + CHECKSUM_BYTES : end]
    if policy is not ChecksumPolicy.IGNORE:
        stored = struct.unpack_from("<I", checksum_field, 0)[0]
        ok = stored == 0 or stored == zlib.crc32(compressed)
        if ok and policy is ChecksumPolicy.STRICT and any(checksum_field[4:]):
            ok = False
        if not ok:
            if policy is ChecksumPolicy.STRICT:
                raise CodecError("checksum failed")
            log.warning("frame %d checksum mismatch", frame_no)
    try:
        raw = zlib.decompress(compressed)
    except zlib.error as exc:
        raise CodecError(f"corrupt frame payload: {exc}") from exc
    if len(raw) != expected_voxels:
        raise CodecError(
            f"frame size mismatch: got {len(raw)} voxels, expected {expected_voxels}")
    return np.frombuffer(raw, dtype=np.uint8)


def decode_volume(
    stream: RawStream,
    meta: VolumeMeta,
    policy: ChecksumPolicy | str = ChecksumPolicy.IGNORE,
) -> VolumeSequence:
    """Decode every frame and assemble the (I, J, K, T) voxel grid."""
    index = parse_stream_header(stream)
    i, j, k, t = meta.dims
    if index.frame_count != t:
        raise CodecError(
            f"header frame count {index.frame_count} does not match metadata T={t}")
    voxels = np.empty((i, j, k, t), dtype=np.uint8)
    for f in range(t):
        try:
            flat = decode_frame(stream, index, f, meta.frame_voxels, policy)
        except CodecError as exc:
            raise CodecError(f"frame {f}: {exc}") from exc
        # rho fastest: flat position i + I*j + I*J*k
        voxels[:, :, :, f] = flat.reshape((i, j, k), order="F")
    return VolumeSequence(meta, voxels)


def encode_volume(volume: VolumeSequence) -> RawStream:
    """Serialize a volume into the frame-stream layout, invertible bit-exactly."""
    i, j, k, t = volume.meta.dims
    payloads = []
    for f in range(t):
        flat = volume.voxels[:, :, :, f].reshape(-1, order="F")
        compressed = zlib.compress(flat.tobytes(), ZLIB_LEVEL)
        checksum = struct.pack("<I", zlib.crc32(compressed)) + b"\x00" * 28
        payloads.append(checksum + compressed)
    header_size = HEADER_FIXED + 4 * t
    offsets = []
    pos = header_size
    for p in payloads:
        offsets.append(pos)
        pos += len(p)
    header = struct.pack("<II", pos, t) + struct.pack(f"<{t}I", *offsets)
    return RawStream(header + b"".join(payloads))


# ---------------------------------------------------------------------------
# E3DC standalone container


def write_e3dc(volume: VolumeSequence) -> bytes:
    meta_json = json.dumps(volume.meta.to_dict(), sort_keys=True).encode()
    stream = encode_volume(volume)
    return (
        E3DC_MAGIC
        + bytes([E3DC_VERSION])
        + struct.pack("<I", len(meta_json))
        + meta_json
        + stream.data
    )


def read_e3dc(data: bytes, policy: ChecksumPolicy | str = ChecksumPolicy.IGNORE) -> VolumeSequence:
    if len(data) < 9 or data[:4] != E3DC_MAGIC:
        raise CodecError("not an E3DC container")
    if data[4] != E3DC_VERSION:
        raise CodecError(f"unsupported E3DC version {data[4]}")
    (meta_len,) = struct.unpack_from("<I", data, 5)
    meta_end = 9 + meta_len
    if meta_end > len(data):
        raise CodecError("truncated E3DC metadata")
    try:
        meta = VolumeMeta.from_dict(json.loads(data[9:meta_end]))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise CodecError(f"invalid E3DC metadata: {exc}") from exc
    stream = RawStream(data[meta_end:])
    return decode_volume(stream, meta, policy)


# ---------------------------------------------------------------------------
# Minimal DICOM walker (explicit VR little-endian only)

_LONG_LENGTH_VRS = {b"OB", b"OW", b"OF", b"OD", b"OL", b"SQ", b"UC", b"UR", b"UT", b"UN"}
_DICM_PREAMBLE = 128


@dataclass(frozen=True)
class TagConfig:
    """Addresses of the private tags carrying volume data, plus source units."""

    dims: tuple[int, int]
    bounds: tuple[int, int]
    stream: tuple[int, int]
    frame_interval: tuple[int, int] | None = None
    rho_unit: str = "m"       # "m" or "cm"
    angle_unit: str = "rad"   # "rad" or "deg"

    def to_dict(self) -> dict:
        d = {
            "dims": list(self.dims),
            "bounds": list(self.bounds),
            "stream": list(self.stream),
            "rho_unit": self.rho_unit,
            "angle_unit": self.angle_unit,
        }
        if self.frame_interval is not None:
            d["frame_interval"] = list(self.frame_interval)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TagConfig":
        def tag(v):
            return (int(v[0]), int(v[1]))

        return cls(
            dims=tag(d["dims"]),
            bounds=tag(d["bounds"]),
            stream=tag(d["stream"]),
            frame_interval=tag(d["frame_interval"]) if d.get("frame_interval") else None,
            rho_unit=d.get("rho_unit", "m"),
            angle_unit=d.get("angle_unit", "rad"),
        )


def iter_dicom_elements(data: bytes):
    """Yield (group, element, vr, value) from an explicit VR little-endian
    element sequence. A 128-byte preamble + DICM magic is skipped if present."""
    pos = 0
    if len(data) >= _DICM_PREAMBLE + 4 and data[_DICM_PREAMBLE : _DICM_PREAMBLE + 4] == b"DICM":
        pos = _DICM_PREAMBLE + 4
    n = len(data)
    while pos < n:
        if n - pos < 8:
            raise CodecError("truncated DICOM element")
        group, element = struct.unpack_from("<HH", data, pos)
        vr = data[pos + 4 : pos + 6]
        if not (vr.isalpha() and vr.isupper()):
            raise CodecError("truncated DICOM element")
        if vr in _LONG_LENGTH_VRS:
            if n - pos < 12:
                raise CodecError("truncated DICOM element")
            (length,) = struct.unpack_from("<I", data, pos + 8)
            pos += 12
        else:
            (length,) = struct.unpack_from("<H", data, pos + 6)
            pos += 8
        if length > n - pos:
            raise CodecError("truncated DICOM element")
        yield group, element, vr.decode(), data[pos : pos + length]
        pos += length


def parse_dicom_private_payload(
    data: bytes, tag_config: TagConfig
) -> tuple[RawStream, VolumeMeta]:
    """Locate the configured private tags and assemble the stream + metadata.

    dims tag: 4 x uint32 (I, J, K, T). bounds tag: 6 x float64
    (rho_min, rho_max, phi_min, phi_max, theta_min, theta_max) in the
    configured source units; normalized to cm/degrees on load.
    """
    found: dict[tuple[int, int], bytes] = {}
    wanted = {tag_config.dims, tag_config.bounds, tag_config.stream}
    if tag_config.frame_interval is not None:
        wanted.add(tag_config.frame_interval)
    for group, element, _vr, value in iter_dicom_elements(data):
        if (group, element) in wanted:
            found[(group, element)] = value
    for tag in (tag_config.dims, tag_config.bounds, tag_config.stream):
        if tag not in found:
            raise CodecError(
                f"required private tag absent: ({tag[0]:04x},{tag[1]:04x})")

    dims_raw = found[tag_config.dims]
    if len(dims_raw) != 16:
        raise CodecError("dims tag must hold 4 uint32 values")
    dims = struct.unpack("<4I", dims_raw)

    bounds_raw = found[tag_config.bounds]
    if len(bounds_raw) != 48:
        raise CodecError("bounds tag must hold 6 float64 values")
    vals = list(struct.unpack("<6d", bounds_raw))
    rho_scale = {"m": 100.0, "cm": 1.0}.get(tag_config.rho_unit)
    if rho_scale is None:
        raise CodecError(f"unknown rho unit {tag_config.rho_unit!r}")
    if tag_config.angle_unit == "rad":
        vals[2:] = list(np.degrees(vals[2:]))
    elif tag_config.angle_unit != "deg":
        raise CodecError(f"unknown angle unit {tag_config.angle_unit!r}")
    bounds = BoundsMatrix(vals[0] * rho_scale, vals[1] * rho_scale, *vals[2:])

    frame_interval = None
    if tag_config.frame_interval is not None and tag_config.frame_interval in found:
        raw = found[tag_config.frame_interval]
        if len(raw) != 8:
            raise CodecError("frame interval tag must hold one float64")
        frame_interval = struct.unpack("<d", raw)[0]

    meta = VolumeMeta(dims, bounds, frame_interval)
    stream = RawStream(found[tag_config.stream], StreamSource.DICOM_PRIVATE_TAG)
    return stream, meta


def build_dicom(volume: VolumeSequence, tag_config: TagConfig) -> bytes:
    """Companion fixture writer: emit an explicit VR little-endian element
    sequence that parse_dicom_private_payload inverts."""

    def element(tag: tuple[int, int], vr: bytes, value: bytes) -> bytes:
        head = struct.pack("<HH", *tag) + vr
        if vr in _LONG_LENGTH_VRS:
            return head + b"\x00\x00" + struct.pack("<I", len(value)) + value
        return head + struct.pack("<H", len(value)) + value

    b = volume.meta.bounds
    rho_scale = {"m": 0.01, "cm": 1.0}[tag_config.rho_unit]
    angles = [b.phi_min, b.phi_max, b.theta_min, b.theta_max]
    if tag_config.angle_unit == "rad":
        angles = list(np.radians(angles))
    bounds_vals = [b.rho_min * rho_scale, b.rho_max * rho_scale, *angles]

    parts = [
        element((0x0008, 0x0060), b"CS", b"US"),
        element(tag_config.dims, b"OB", struct.pack("<4I", *volume.meta.dims)),
        element(tag_config.bounds, b"OB", struct.pack("<6d", *bounds_vals)),
    ]
    if tag_config.frame_interval is not None and volume.meta.frame_interval_ms is not None:
        parts.append(
            element(tag_config.frame_interval, b"OB",
                    struct.pack("<d", volume.meta.frame_interval_ms)))
    parts.append(element(tag_config.stream, b"OB", encode_volume(volume).data))
    return b"".join(parts)
