import numpy as np
import pytest

from sideband import dctcodec
from sideband.errors import DecodeError, FormatError, ParameterError
from sideband.metrics import psnr

from conftest import make_plane

# Annex K luminance table, restated here as the independent reference.
ANNEX_K = [
    16, 11, 10, 16, 24, 40, 51, 61,
    12, 12, 14, 19, 26, 58, 60, 55,
    14, 13, 16, 24, 40, 57, 69, 56,
    14, 17, 22, 29, 51, 87, 80, 62,
    18, 22, 37, 56, 68, 109, 103, 77,
    24, 35, 55, 64, 81, 104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101,
    72, 92, 95, 98, 112, 100, 103, 99,
]


class TestQuantTable:
    def test_q50_is_base_table(self):
        assert dctcodec.quant_table(50).flatten().tolist() == ANNEX_K

    def test_q100_all_ones(self):
        # Oracle: apply the scaling formula entry-wise.
        expected = [max(1, min(255, (b * (200 - 2 * 100) + 50) // 100)) for b in ANNEX_K]
        assert dctcodec.quant_table(100).flatten().tolist() == expected
        assert set(expected) == {1}

    @pytest.mark.parametrize("q", [1, 10, 37, 49, 50, 51, 80, 100])
    def test_matches_formula(self, q):
        scale = 5000 // q if q < 50 else 200 - 2 * q
        expected = [max(1, min(255, (b * scale + 50) // 100)) for b in ANNEX_K]
        assert dctcodec.quant_table(q).flatten().tolist() == expected

    def test_rejects_out_of_range(self):
        for q in (0, 101, -5):
            with pytest.raises(ParameterError):
                dctcodec.quant_table(q)


class TestRoundTrip:
    def test_constant_128_exact(self):
        plane = make_plane(np.full((24, 17), 128))
        for q in (1, 25, 50, 100):
            stream = dctcodec.base_encode(plane, q)
            assert dctcodec.base_decode(stream) == plane

    def test_header_fields_exact(self):
        plane = make_plane(np.arange(35 * 19).reshape(35, 19) % 256)
        stream = dctcodec.base_encode(plane, 42)
        assert (stream.width, stream.height, stream.q) == (19, 35, 42)
        back = dctcodec.deserialize(dctcodec.serialize(stream))
        assert back == stream

    def test_q100_gradient_psnr(self, bundled):
        stream = dctcodec.base_encode(bundled["gradient"], 100)
        decoded = dctcodec.base_decode(stream)
        assert psnr(decoded, bundled["gradient"]) >= 40.0

    def test_distortion_nonincreasing_in_q(self, bundled):
        for plane in bundled.values():
            errors = []
            for q in (10, 30, 50, 70, 90):
                decoded = dctcodec.base_decode(dctcodec.base_encode(plane, q))
                d = np.mean((decoded.samples.astype(float) - plane.samples.astype(float)) ** 2)
                errors.append(d)
            assert all(a >= b for a, b in zip(errors, errors[1:]))


class TestRate:
    def test_rate_is_payload_bits(self):
        stream = dctcodec.BaseBitstream(payload=b"\x00" * 100, width=8, height=8, q=50)
        assert dctcodec.rate_of(stream) == 800

    def test_rate_matches_container_size(self, bundled):
        stream = dctcodec.base_encode(bundled["blob"], 60)
        blob = dctcodec.serialize(stream)
        assert dctcodec.rate_of(stream) == 8 * (len(blob) - dctcodec.HEADER_BYTES)
        assert len(stream.payload) > 0

    def test_bits_strictly_decrease_on_scene(self, bundled):
        bits = [
            dctcodec.rate_of(dctcodec.base_encode(bundled["scene"], q))
            for q in (90, 70, 50, 30, 10)
        ]
        assert all(a > b for a, b in zip(bits, bits[1:]))

    def test_bits_nonincreasing_everywhere(self, bundled):
        for plane in bundled.values():
            bits = [
                dctcodec.rate_of(dctcodec.base_encode(plane, q))
                for q in (90, 70, 50, 30, 10)
            ]
            assert all(a >= b for a, b in zip(bits, bits[1:]))

    def test_bit_count_recomputable(self, bundled):
        stream = dctcodec.base_encode(bundled["step"], 30)
        assert stream.bit_count == 8 * len(stream.payload)


class TestEntropyCoding:
    def test_lossless_on_random_blocks(self, rng):
        # DC in [-1016, 1016] with diffs bounded by 11 bits; AC within size 10.
        for _ in range(30):
            n = int(rng.integers(1, 30))
            zz = rng.integers(-900, 901, size=(n, 64))
            zz[:, 0] = rng.integers(-1000, 1001, size=n)
            mask = rng.random((n, 64)) < rng.uniform(0.05, 0.9)
            zz = np.where(mask, zz, 0)
            back = dctcodec.decode_coeff_blocks(dctcodec.encode_coeff_blocks(zz), n)
            assert (back == zz).all()

    def test_all_zero_blocks(self):
        zz = np.zeros((5, 64), dtype=np.int64)
        back = dctcodec.decode_coeff_blocks(dctcodec.encode_coeff_blocks(zz), 5)
        assert (back == zz).all()

    def test_zrl_runs(self):
        zz = np.zeros((1, 64), dtype=np.int64)
        zz[0, 0] = 12
        zz[0, 40] = -3
        zz[0, 63] = 1
        back = dctcodec.decode_coeff_blocks(dctcodec.encode_coeff_blocks(zz), 1)
        assert (back == zz).all()


class TestErrors:
    def test_truncated_payload_reports_offset(self, bundled):
        stream = dctcodec.base_encode(bundled["scene"], 70)
        cut = dctcodec.BaseBitstream(
            payload=stream.payload[: len(stream.payload) // 4],
            width=stream.width,
            height=stream.height,
            q=stream.q,
        )
        with pytest.raises(DecodeError) as exc:
            dctcodec.base_decode(cut)
        assert exc.value.offset <= len(cut.payload)
        assert "byte offset" in str(exc.value)

    def test_bad_magic(self):
        with pytest.raises(FormatError) as exc:
            dctcodec.deserialize(b"XXXX" + b"\x00" * 20)
        assert exc.value.field == "magic"

    def test_length_mismatch(self, bundled):
        blob = dctcodec.serialize(dctcodec.base_encode(bundled["step"], 50))
        with pytest.raises(FormatError) as exc:
            dctcodec.deserialize(blob[:-1])
        assert exc.value.field == "payload length"

    def test_short_container(self):
        with pytest.raises(FormatError):
            dctcodec.deserialize(b"MSR")
