import hashlib
import struct
import zlib

import numpy as np
import pytest

import echoslice as es
from echoslice import codec
from echoslice.errors import CodecError

from conftest import random_volume


def small_volume(seed=0, dims=(4, 4, 4, 2)):
    rng = np.random.default_rng(seed)
    meta = es.VolumeMeta(dims, es.BoundsMatrix(1.0, 11.0, -30.0, 30.0, -30.0, 30.0))
    return es.VolumeSequence(meta, rng.integers(0, 256, dims, dtype=np.uint8))


class TestStreamHeader:
    def test_fixture_offsets(self):
        vol = small_volume()
        stream = codec.encode_volume(vol)
        index = codec.parse_stream_header(stream)
        assert index.frame_count == 2
        assert index.offsets[0] == 16  # 8-byte header + 2 offsets
        assert all(b > a for a, b in zip(index.offsets, index.offsets[1:]))

    def test_zero_frames_rejected(self):
        data = struct.pack("<II", 8, 0)
        with pytest.raises(CodecError, match="empty stream"):
            codec.parse_stream_header(codec.RawStream(data))

    def test_non_increasing_offsets_rejected(self):
        data = struct.pack("<II", 200, 2) + struct.pack("<II", 128, 16) + b"\x00" * 184
        with pytest.raises(CodecError, match="corrupt offset table"):
            codec.parse_stream_header(codec.RawStream(data))

    def test_offset_beyond_total_size_rejected(self):
        data = struct.pack("<II", 32, 1) + struct.pack("<I", 40) + b"\x00" * 20
        with pytest.raises(CodecError, match="corrupt offset table"):
            codec.parse_stream_header(codec.RawStream(data))

    def test_declared_size_beyond_actual_rejected(self):
        with pytest.raises(CodecError, match="declared total size"):
            codec.RawStream(struct.pack("<II", 1000, 1))


class TestFrames:
    def test_frame_round_trip(self):
        vol = small_volume(dims=(4, 4, 4, 1))
        stream = codec.encode_volume(vol)
        index = codec.parse_stream_header(stream)
        flat = codec.decode_frame(stream, index, 0, 64, policy="strict")
        assert flat.tobytes() == vol.voxels[:, :, :, 0].tobytes(order="F")

    def test_flipped_byte_fails_strict(self):
        vol = small_volume()
        stream = codec.encode_volume(vol)
        index = codec.parse_stream_header(stream)
        # flip one byte inside the compressed region of frame 0
        pos = index.offsets[0] + codec.CHECKSUM_BYTES + 3
        data = bytearray(stream.data)
        data[pos] ^= 0xFF
        bad = codec.RawStream(bytes(data))
        with pytest.raises(CodecError):
            codec.decode_frame(bad, index, 0, 64, policy="strict")

    def test_frame_out_of_range(self):
        vol = small_volume()
        stream = codec.encode_volume(vol)
        index = codec.parse_stream_header(stream)
        with pytest.raises(CodecError, match="out of range"):
            codec.decode_frame(stream, index, 2, 64)

    def test_size_mismatch(self):
        vol = small_volume(dims=(4, 4, 4, 1))
        stream = codec.encode_volume(vol)
        index = codec.parse_stream_header(stream)
        with pytest.raises(CodecError, match="frame size mismatch"):
            codec.decode_frame(stream, index, 0, 63)


class TestVolumeRoundTrip:
    def test_many_random_volumes(self):
        rng = np.random.default_rng(42)
        for _ in range(25):
            vol = random_volume(rng)
            out = codec.decode_volume(codec.encode_volume(vol), vol.meta, policy="strict")
            assert np.array_equal(out.voxels, vol.voxels)

    def test_encode_deterministic(self):
        vol = small_volume(seed=5)
        d1 = hashlib.sha256(codec.encode_volume(vol).data).hexdigest()
        d2 = hashlib.sha256(codec.encode_volume(vol).data).hexdigest()
        assert d1 == d2

    def test_single_frame_count_field(self):
        vol = small_volume(dims=(4, 4, 4, 1))
        stream = codec.encode_volume(vol)
        assert struct.unpack_from("<I", stream.data, 4)[0] == 1

    def test_offsets_point_at_checksum(self):
        vol = small_volume()
        stream = codec.encode_volume(vol)
        index = codec.parse_stream_header(stream)
        for f in range(index.frame_count):
            start = index.offsets[f]
            crc = struct.unpack_from("<I", stream.data, start)[0]
            end = index.offsets[f + 1] if f + 1 < index.frame_count else index.total_size_bytes
            payload = stream.data[start + codec.CHECKSUM_BYTES : end]
            assert crc == zlib.crc32(payload)

    def test_frame_count_mismatch(self):
        vol = small_volume()
        stream = codec.encode_volume(vol)
        wrong = es.VolumeMeta((4, 4, 4, 3), vol.meta.bounds)
        with pytest.raises(CodecError, match="frame count"):
            codec.decode_volume(stream, wrong)

    def test_fuzzed_mutations_error_not_crash(self):
        vol = small_volume(seed=9)
        stream = codec.encode_volume(vol)
        rng = np.random.default_rng(1)
        for _ in range(200):
            data = bytearray(stream.data)
            pos = int(rng.integers(0, len(data)))
            old = data[pos]
            data[pos] = int((old + rng.integers(1, 256)) % 256)
            with pytest.raises(CodecError):
                codec.decode_volume(codec.RawStream(bytes(data)), vol.meta, policy="strict")


class TestE3DC:
    def test_round_trip(self):
        vol = small_volume(seed=3)
        out = codec.read_e3dc(codec.write_e3dc(vol))
        assert out.meta == vol.meta
        assert np.array_equal(out.voxels, vol.voxels)

    def test_bad_magic(self):
        with pytest.raises(CodecError, match="not an E3DC"):
            codec.read_e3dc(b"NOPE" + b"\x00" * 20)

    def test_truncated_metadata(self):
        data = codec.E3DC_MAGIC + bytes([1]) + struct.pack("<I", 10_000) + b"{}"
        with pytest.raises(CodecError, match="truncated"):
            codec.read_e3dc(data)


TAGS = codec.TagConfig(dims=(0x7FD1, 0x0010), bounds=(0x7FD1, 0x0020),
                       stream=(0x7FD1, 0x0030), frame_interval=(0x7FD1, 0x0040))


class TestDicom:
    def test_fixture_round_trip(self):
        vol = small_volume(seed=11)
        blob = codec.build_dicom(vol, TAGS)
        stream, meta = codec.parse_dicom_private_payload(blob, TAGS)
        assert meta.dims == (4, 4, 4, 2)
        assert meta.bounds.rho_min == pytest.approx(vol.meta.bounds.rho_min)
        assert meta.bounds.theta_max == pytest.approx(vol.meta.bounds.theta_max)
        out = codec.decode_volume(stream, meta)
        assert np.array_equal(out.voxels, vol.voxels)

    def test_missing_tag(self):
        vol = small_volume()
        blob = codec.build_dicom(vol, TAGS)
        other = codec.TagConfig(dims=(0x7FD9, 0x0010), bounds=(0x7FD9, 0x0020),
                                stream=(0x7FD9, 0x0030))
        with pytest.raises(CodecError, match="required private tag absent"):
            codec.parse_dicom_private_payload(blob, other)

    def test_truncated_element(self):
        vol = small_volume()
        blob = codec.build_dicom(vol, TAGS)
        with pytest.raises(CodecError, match="truncated DICOM element"):
            codec.parse_dicom_private_payload(blob[:-10], TAGS)

    def test_rho_unit_conversion(self):
        vol = small_volume()
        cm_tags = codec.TagConfig(dims=TAGS.dims, bounds=TAGS.bounds,
                                  stream=TAGS.stream, rho_unit="cm", angle_unit="deg")
        _, meta = codec.parse_dicom_private_payload(codec.build_dicom(vol, cm_tags), cm_tags)
        assert meta.bounds.rho_max == pytest.approx(11.0)
        _, meta_m = codec.parse_dicom_private_payload(codec.build_dicom(vol, TAGS), TAGS)
        assert meta_m.bounds.rho_max == pytest.approx(11.0)

    def test_preamble_skipped(self):
        vol = small_volume()
        blob = b"\x00" * 128 + b"DICM" + codec.build_dicom(vol, TAGS)
        _, meta = codec.parse_dicom_private_payload(blob, TAGS)
        assert meta.dims == vol.meta.dims
