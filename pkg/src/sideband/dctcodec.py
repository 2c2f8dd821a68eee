"""Base-layer lossy codec: 8x8 DCT, scaled quantization, Huffman coding.

Grayscale only, sequential scan, private container (not JFIF):
little-endian magic "MSRB", width u32, height u32, q u8, payload length
u32, payload bytes. Quality follows the IJG convention: scale = 5000/q
for q < 50 else 200 - 2q; entry = clamp((base*scale + 50) // 100, 1, 255).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import DecodeError, FormatError, ParameterError
from .image import ImagePlane, round_half_away, to_u8

MAGIC = b"MSRB"
HEADER = struct.Struct("<4sIIBI")
HEADER_BYTES = HEADER.size

# ITU-T T.81 Annex K luminance quantization table (row-major).
BASE_QUANT = np.array(
    [
        [16, 11, 10, 16, 24, 40, 51, 61],
        [12, 12, 14, 19, 26, 58, 60, 55],
        [14, 13, 16, 24, 40, 57, 69, 56],
        [14, 17, 22, 29, 51, 87, 80, 62],
        [18, 22, 37, 56, 68, 109, 103, 77],
        [24, 35, 55, 64, 81, 104, 113, 92],
        [49, 64, 78, 87, 103, 121, 120, 101],
        [72, 92, 95, 98, 112, 100, 103, 99],
    ],
    dtype=np.int64,
)

# Annex K typical luminance Huffman tables: (bits-per-length, values).
DC_BITS = (0, 1, 5, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0)
DC_VALUES = tuple(range(12))
AC_BITS = (0, 2, 1, 3, 3, 2, 4, 3, 5, 5, 4, 4, 0, 0, 1, 0x7D)
AC_VALUES = (
    0x01, 0x02, 0x03, 0x00, 0x04, 0x11, 0x05, 0x12, 0x21, 0x31, 0x41, 0x06,
    0x13, 0x51, 0x61, 0x07, 0x22, 0x71, 0x14, 0x32, 0x81, 0x91, 0xA1, 0x08,
    0x23, 0x42, 0xB1, 0xC1, 0x15, 0x52, 0xD1, 0xF0, 0x24, 0x33, 0x62, 0x72,
    0x82, 0x09, 0x0A, 0x16, 0x17, 0x18, 0x19, 0x1A, 0x25, 0x26, 0x27, 0x28,
    0x29, 0x2A, 0x34, 0x35, 0x36, 0x37, 0x38, 0x39, 0x3A, 0x43, 0x44, 0x45,
    0x46, 0x47, 0x48, 0x49, 0x4A, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58, 0x59,
    0x5A, 0x63, 0x64, 0x65, 0x66, 0x67, 0x68, 0x69, 0x6A, 0x73, 0x74, 0x75,
    0x76, 0x77, 0x78, 0x79, 0x7A, 0x83, 0x84, 0x85, 0x86, 0x87, 0x88, 0x89,
    0x8A, 0x92, 0x93, 0x94, 0x95, 0x96, 0x97, 0x98, 0x99, 0x9A, 0xA2, 0xA3,
    0xA4, 0xA5, 0xA6, 0xA7, 0xA8, 0xA9, 0xAA, 0xB2, 0xB3, 0xB4, 0xB5, 0xB6,
    0xB7, 0xB8, 0xB9, 0xBA, 0xC2, 0xC3, 0xC4, 0xC5, 0xC6, 0xC7, 0xC8, 0xC9,
    0xCA, 0xD2, 0xD3, 0xD4, 0xD5, 0xD6, 0xD7, 0xD8, 0xD9, 0xDA, 0xE1, 0xE2,
    0xE3, 0xE4, 0xE5, 0xE6, 0xE7, 0xE8, 0xE9, 0xEA, 0xF1, 0xF2, 0xF3, 0xF4,
    0xF5, 0xF6, 0xF7, 0xF8, 0xF9, 0xFA,
)

ZRL = 0xF0
EOB = 0x00


def _zigzag_order() -> np.ndarray:
    # Raster indices visited in zigzag sequence (anti-diagonal walk).
    order = []
    for s in range(15):
        rng = range(min(s, 7), max(0, s - 7) - 1, -1) if s % 2 == 0 else range(max(0, s - 7), min(s, 7) + 1)
        for i in rng:
            order.append(i * 8 + (s - i))
    return np.array(order, dtype=np.int64)


ZIGZAG = _zigzag_order()
UNZIGZAG = np.argsort(ZIGZAG)


def _dct_matrix() -> np.ndarray:
    u = np.arange(8).reshape(8, 1)
    x = np.arange(8).reshape(1, 8)
    mat = 0.5 * np.cos((2 * x + 1) * u * np.pi / 16.0)
    mat[0, :] *= 1.0 / np.sqrt(2.0)
    return mat


DCT = _dct_matrix()


def quant_table(q: int) -> np.ndarray:
    """Annex K base table scaled by the IJG quality convention."""
    if not 1 <= q <= 100:
        raise ParameterError(f"quality factor must lie in [1, 100], got {q}")
    scale = 5000 // q if q < 50 else 200 - 2 * q
    return np.clip((BASE_QUANT * scale + 50) // 100, 1, 255).astype(np.int64)


def _build_codes(bits, values) -> dict:
    codes = {}
    code = 0
    k = 0
    for length in range(1, 17):
        for _ in range(bits[length - 1]):
            codes[values[k]] = (code, length)
            k += 1
            code += 1
        code <<= 1
    return codes


DC_CODES = _build_codes(DC_BITS, DC_VALUES)
AC_CODES = _build_codes(AC_BITS, AC_VALUES)
DC_LOOKUP = {v: k for k, v in DC_CODES.items()}
AC_LOOKUP = {v: k for k, v in AC_CODES.items()}


class _BitWriter:
    def __init__(self):
        self._buf = bytearray()
        self._acc = 0
        self._n = 0

    def write(self, code: int, length: int):
        self._acc = (self._acc << length) | (code & ((1 << length) - 1))
        self._n += length
        while self._n >= 8:
            self._n -= 8
            self._buf.append((self._acc >> self._n) & 0xFF)
        self._acc &= (1 << self._n) - 1

    def finish(self) -> bytes:
        if self._n:
            self._buf.append((self._acc << (8 - self._n)) & 0xFF)
            self._acc = 0
            self._n = 0
        return bytes(self._buf)


class _BitReader:
    def __init__(self, data: bytes):
        self._data = data
        self._pos = 0
        self._acc = 0
        self._n = 0

    @property
    def byte_offset(self) -> int:
        return self._pos

    def read(self) -> int:
        if self._n == 0:
            if self._pos >= len(self._data):
                raise DecodeError("bitstream exhausted", self._pos)
            self._acc = self._data[self._pos]
            self._pos += 1
            self._n = 8
        self._n -= 1
        return (self._acc >> self._n) & 1

    def read_bits(self, count: int) -> int:
        v = 0
        for _ in range(count):
            v = (v << 1) | self.read()
        return v


def _magnitude(v: int) -> int:
    return abs(v).bit_length()


def _amplitude_bits(v: int, size: int) -> int:
    return v if v >= 0 else v + (1 << size) - 1


def _amplitude_value(bits: int, size: int) -> int:
    if size == 0:
        return 0
    if bits < (1 << (size - 1)):
        return bits - (1 << size) + 1
    return bits


def encode_coeff_blocks(zz_blocks: np.ndarray) -> bytes:
    """Huffman-encode zigzagged quantized blocks (n, 64) into payload bytes."""
    writer = _BitWriter()
    prev_dc = 0
    for block in zz_blocks:
        diff = int(block[0]) - prev_dc
        prev_dc = int(block[0])
        size = _magnitude(diff)
        code, length = DC_CODES[size]
        writer.write(code, length)
        if size:
            writer.write(_amplitude_bits(diff, size), size)
        run = 0
        nz = np.nonzero(block[1:])[0]
        last_nz = nz[-1] + 1 if nz.size else 0
        for k in range(1, last_nz + 1):
            v = int(block[k])
            if v == 0:
                run += 1
                continue
            while run >= 16:
                code, length = AC_CODES[ZRL]
                writer.write(code, length)
                run -= 16
            size = _magnitude(v)
            code, length = AC_CODES[(run << 4) | size]
            writer.write(code, length)
            writer.write(_amplitude_bits(v, size), size)
            run = 0
        if last_nz < 63:
            code, length = AC_CODES[EOB]
            writer.write(code, length)
    return writer.finish()


def _read_symbol(reader: _BitReader, lookup: dict) -> int:
    code = 0
    for length in range(1, 17):
        code = (code << 1) | reader.read()
        sym = lookup.get((code, length))
        if sym is not None:
            return sym
    raise DecodeError("invalid Huffman code", reader.byte_offset)


def decode_coeff_blocks(payload: bytes, n_blocks: int) -> np.ndarray:
    """Inverse of encode_coeff_blocks; returns (n_blocks, 64) int64."""
    reader = _BitReader(payload)
    out = np.zeros((n_blocks, 64), dtype=np.int64)
    prev_dc = 0
    for b in range(n_blocks):
        size = _read_symbol(reader, DC_LOOKUP)
        diff = _amplitude_value(reader.read_bits(size), size)
        prev_dc += diff
        out[b, 0] = prev_dc
        k = 1
        while k < 64:
            sym = _read_symbol(reader, AC_LOOKUP)
            if sym == EOB:
                break
            if sym == ZRL:
                k += 16
                continue
            run, size = sym >> 4, sym & 0x0F
            k += run
            if k > 63:
                raise DecodeError("AC run past block end", reader.byte_offset)
            out[b, k] = _amplitude_value(reader.read_bits(size), size)
            k += 1
    return out


@dataclass(frozen=True)
class BaseBitstream:
    """Encoded base layer plus exact bit accounting."""

    payload: bytes
    width: int
    height: int
    q: int

    @property
    def bit_count(self) -> int:
        return 8 * len(self.payload)


def _to_blocks(arr: np.ndarray) -> np.ndarray:
    h, w = arr.shape
    return arr.reshape(h // 8, 8, w // 8, 8).transpose(0, 2, 1, 3).reshape(-1, 8, 8)


def _from_blocks(blocks: np.ndarray, h: int, w: int) -> np.ndarray:
    return blocks.reshape(h // 8, w // 8, 8, 8).transpose(0, 2, 1, 3).reshape(h, w)


def base_encode(plane: ImagePlane, q: int) -> BaseBitstream:
    """Encode a grayscale plane at the given quality factor."""
    table = quant_table(q)
    h, w = plane.height, plane.width
    ph, pw = -h % 8, -w % 8
    arr = np.pad(plane.samples, ((0, ph), (0, pw)), mode="edge").astype(np.float64) - 128.0
    blocks = _to_blocks(arr)
    coeffs = np.einsum("ua,nab,vb->nuv", DCT, blocks, DCT)
    quant = round_half_away(coeffs / table).astype(np.int64)
    zz = quant.reshape(-1, 64)[:, ZIGZAG]
    payload = encode_coeff_blocks(zz)
    return BaseBitstream(payload=payload, width=w, height=h, q=q)


def base_decode(stream: BaseBitstream) -> ImagePlane:
    """Decode a base-layer stream back to a grayscale plane."""
    table = quant_table(stream.q)
    h8 = stream.height + (-stream.height % 8)
    w8 = stream.width + (-stream.width % 8)
    n_blocks = (h8 // 8) * (w8 // 8)
    zz = decode_coeff_blocks(stream.payload, n_blocks)
    quant = zz[:, UNZIGZAG].reshape(-1, 8, 8)
    coeffs = quant.astype(np.float64) * table
    blocks = np.einsum("au,nab,bv->nuv", DCT, coeffs, DCT)
    arr = _from_blocks(blocks, h8, w8) + 128.0
    return ImagePlane(to_u8(arr[: stream.height, : stream.width]))


def rate_of(stream: BaseBitstream) -> int:
    """Payload size in bits (container header excluded)."""
    return stream.bit_count


def serialize(stream: BaseBitstream) -> bytes:
    return HEADER.pack(MAGIC, stream.width, stream.height, stream.q, len(stream.payload)) + stream.payload


def deserialize(data: bytes) -> BaseBitstream:
    if len(data) < HEADER_BYTES:
        raise FormatError("header", f"container too short ({len(data)} bytes)")
    magic, width, height, q, plen = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError("magic", f"expected {MAGIC!r}, got {magic!r}")
    if not 1 <= q <= 100:
        raise FormatError("q", f"quality {q} outside [1, 100]")
    if width < 1 or height < 1:
        raise FormatError("width" if width < 1 else "height", "must be >= 1")
    payload = data[HEADER_BYTES:]
    if len(payload) != plen:
        raise FormatError("payload length", f"header says {plen}, container holds {len(payload)}")
    return BaseBitstream(payload=payload, width=width, height=height, q=q)
