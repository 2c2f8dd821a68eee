"""Lossless bi-level codec: context-modeled adaptive binary arithmetic coding.

Wire format (little-endian): magic "MSRM", width u32, height u32, depth u8,
template_id u8, payload length u32, payload bytes.

Everything below is frozen so streams are portable across implementations.

Context template (template_id 0), 10 causal neighbors of site (x, y),
out-of-bounds neighbors read as 0, packed MSB-first into a 10-bit context:

    bit 9..7 : row y-2, offsets x-1, x, x+1
    bit 6..2 : row y-1, offsets x-2, x-1, x, x+1, x+2
    bit 1..0 : row y,   offsets x-2, x-1

Depth-2 planes are coded as two bit-planes through one codeword: first the
LSB plane with the template above (contexts 0..1023), then the MSB plane
whose context additionally includes the co-located LSB bit in bit 10
(contexts 1024..3071).

Coder: 32-bit low/high binary arithmetic coder with pending-bit carry
resolution (Witten-Neal-Cleary style). Per-context counts start at
(c0, c1) = (1, 1); p(0) = c0/(c0+c1); the interval split is
low + (range*c0)//(c0+c1) - 1. After coding a bit, its count increments by
1; when c0+c1 reaches 1024 both counts halve (rounding down, floor 1).
Termination: one disambiguating bit (0 if low < 2^30 else 1) plus pending
inverses; the decoder reads implicit 0 bits past the payload end.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from numba import njit

from .edges import MetadataPlane
from .errors import FormatError

MAGIC = b"MSRM"
HEADER = struct.Struct("<4sIIBBI")
HEADER_BYTES = HEADER.size
TEMPLATE_ID = 0

_HALF = 0x80000000
_QUARTER = 0x40000000
_THREE_QUARTER = 0xC0000000
_MASK32 = 0xFFFFFFFF
_RESCALE = 1024
_N_CTX = 1024 + 2048  # depth-1 contexts + LSB-conditioned MSB contexts


@njit(cache=True)
def _context(plane, y, x, w):
    ctx = 0
    if y >= 2:
        if x >= 1:
            ctx |= plane[y - 2, x - 1] << 9
        ctx |= plane[y - 2, x] << 8
        if x + 1 < w:
            ctx |= plane[y - 2, x + 1] << 7
    if y >= 1:
        if x >= 2:
            ctx |= plane[y - 1, x - 2] << 6
        if x >= 1:
            ctx |= plane[y - 1, x - 1] << 5
        ctx |= plane[y - 1, x] << 4
        if x + 1 < w:
            ctx |= plane[y - 1, x + 1] << 3
        if x + 2 < w:
            ctx |= plane[y - 1, x + 2] << 2
    if x >= 2:
        ctx |= plane[y, x - 2] << 1
    if x >= 1:
        ctx |= plane[y, x - 1]
    return ctx


@njit(cache=True)
def _encode_planes(planes, out_bits):
    nplanes, h, w = planes.shape
    c0 = np.ones(_N_CTX, dtype=np.int64)
    c1 = np.ones(_N_CTX, dtype=np.int64)
    low = 0
    high = _MASK32
    pending = 0
    pos = 0
    for k in range(nplanes):
        plane = planes[k]
        for y in range(h):
            for x in range(w):
                ctx = _context(plane, y, x, w)
                if k == 1:
                    ctx = 1024 + (ctx | (planes[0][y, x] << 10))
                bit = plane[y, x]
                total = c0[ctx] + c1[ctx]
                rng = high - low + 1
                split = low + (rng * c0[ctx]) // total - 1
                if bit == 0:
                    high = split
                else:
                    low = split + 1
                while True:
                    if high < _HALF:
                        out_bits[pos] = 0
                        pos += 1
                        while pending > 0:
                            out_bits[pos] = 1
                            pos += 1
                            pending -= 1
                    elif low >= _HALF:
                        out_bits[pos] = 1
                        pos += 1
                        while pending > 0:
                            out_bits[pos] = 0
                            pos += 1
                            pending -= 1
                        low -= _HALF
                        high -= _HALF
                    elif low >= _QUARTER and high < _THREE_QUARTER:
                        pending += 1
                        low -= _QUARTER
                        high -= _QUARTER
                    else:
                        break
                    low = low << 1
                    high = (high << 1) | 1
                if bit == 0:
                    c0[ctx] += 1
                else:
                    c1[ctx] += 1
                if c0[ctx] + c1[ctx] >= _RESCALE:
                    c0[ctx] = max(1, c0[ctx] >> 1)
                    c1[ctx] = max(1, c1[ctx] >> 1)
    pending += 1
    if low < _QUARTER:
        final, inv = 0, 1
    else:
        final, inv = 1, 0
    out_bits[pos] = final
    pos += 1
    while pending > 0:
        out_bits[pos] = inv
        pos += 1
        pending -= 1
    return pos


@njit(cache=True)
def _decode_planes(data, nplanes, h, w, out_planes):
    n_bits = data.shape[0] * 8
    c0 = np.ones(_N_CTX, dtype=np.int64)
    c1 = np.ones(_N_CTX, dtype=np.int64)
    low = 0
    high = _MASK32
    bitpos = 0
    value = 0
    for _ in range(32):
        b = 0
        if bitpos < n_bits:
            b = (data[bitpos >> 3] >> (7 - (bitpos & 7))) & 1
        bitpos += 1
        value = ((value << 1) | b) & _MASK32
    for k in range(nplanes):
        plane = out_planes[k]
        for y in range(h):
            for x in range(w):
                ctx = _context(plane, y, x, w)
                if k == 1:
                    ctx = 1024 + (ctx | (out_planes[0][y, x] << 10))
                total = c0[ctx] + c1[ctx]
                rng = high - low + 1
                split = low + (rng * c0[ctx]) // total - 1
                if value <= split:
                    bit = 0
                    high = split
                else:
                    bit = 1
                    low = split + 1
                plane[y, x] = bit
                while True:
                    if high < _HALF:
                        pass
                    elif low >= _HALF:
                        low -= _HALF
                        high -= _HALF
                        value -= _HALF
                    elif low >= _QUARTER and high < _THREE_QUARTER:
                        low -= _QUARTER
                        high -= _QUARTER
                        value -= _QUARTER
                    else:
                        break
                    low = low << 1
                    high = (high << 1) | 1
                    b = 0
                    if bitpos < n_bits:
                        b = (data[bitpos >> 3] >> (7 - (bitpos & 7))) & 1
                    bitpos += 1
                    value = ((value << 1) | b) & _MASK32
                if bit == 0:
                    c0[ctx] += 1
                else:
                    c1[ctx] += 1
                if c0[ctx] + c1[ctx] >= _RESCALE:
                    c0[ctx] = max(1, c0[ctx] >> 1)
                    c1[ctx] = max(1, c1[ctx] >> 1)


@dataclass(frozen=True)
class MetaBitstream:
    """Losslessly encoded metadata plane plus exact bit accounting."""

    payload: bytes
    width: int
    height: int
    depth: int
    template_id: int = TEMPLATE_ID

    @property
    def bit_count(self) -> int:
        return 8 * len(self.payload)


def _bitplanes(m: MetadataPlane) -> np.ndarray:
    if m.depth == 1:
        return m.sites[np.newaxis].copy()
    return np.stack([m.sites & 1, m.sites >> 1]).astype(np.uint8)


def meta_encode(m: MetadataPlane) -> MetaBitstream:
    """Encode a metadata plane; round-trips exactly through meta_decode."""
    planes = np.ascontiguousarray(_bitplanes(m))
    n_bits = planes.size
    out_bits = np.empty(16 * n_bits + 64, dtype=np.uint8)
    used = _encode_planes(planes, out_bits)
    payload = np.packbits(out_bits[:used]).tobytes()
    return MetaBitstream(payload=payload, width=m.width, height=m.height, depth=m.depth)


def meta_decode(stream: MetaBitstream) -> MetadataPlane:
    """Exactly reconstruct the metadata plane from its stream."""
    if stream.template_id != TEMPLATE_ID:
        raise FormatError("template_id", f"unsupported template {stream.template_id}")
    nplanes = stream.depth
    out = np.zeros((nplanes, stream.height, stream.width), dtype=np.uint8)
    data = np.frombuffer(stream.payload, dtype=np.uint8)
    _decode_planes(data, nplanes, stream.height, stream.width, out)
    sites = out[0] if stream.depth == 1 else (out[0] | (out[1] << 1))
    return MetadataPlane(sites=sites, depth=stream.depth)


def meta_rate(stream: MetaBitstream) -> int:
    """Total stream size in bits, container header included."""
    return stream.bit_count + 8 * HEADER_BYTES


def serialize(stream: MetaBitstream) -> bytes:
    return (
        HEADER.pack(MAGIC, stream.width, stream.height, stream.depth, stream.template_id, len(stream.payload))
        + stream.payload
    )


def deserialize(data: bytes) -> MetaBitstream:
    if len(data) < HEADER_BYTES:
        raise FormatError("header", f"container too short ({len(data)} bytes)")
    magic, width, height, depth, template_id, plen = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FormatError("magic", f"expected {MAGIC!r}, got {magic!r}")
    if depth not in (1, 2):
        raise FormatError("depth", f"must be 1 or 2, got {depth}")
    if width < 1 or height < 1:
        raise FormatError("width" if width < 1 else "height", "must be >= 1")
    payload = data[HEADER_BYTES:]
    if len(payload) != plen:
        raise FormatError("payload length", f"header says {plen}, container holds {len(payload)}")
    return MetaBitstream(payload=payload, width=width, height=height, depth=depth, template_id=template_id)
