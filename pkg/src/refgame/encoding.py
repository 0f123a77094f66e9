"""Canonical move payload codec.

A payload is one tag byte followed by a fixed number of sections.  Each
section is ``width:u8 | count:u32be | count * width bytes`` holding signed
big-endian two's complement integers.  Element ``i`` of a section sits at a
computable offset, so a referee can read single elements without touching
the rest of the payload.
"""

from __future__ import annotations

import struct
from typing import Iterable, Sequence

MAX_WIDTH = 64
_HDR = struct.Struct(">BI")


class MalformedPayload(ValueError):
    """Raised when a payload does not decode under the canonical layout."""


def _width(values: Sequence[int]) -> int:
    w = 1
    for v in values:
        need = (v.bit_length() + 8) // 8 if v >= 0 else ((-v - 1).bit_length() + 8) // 8
        if need > w:
            w = need
    if w > MAX_WIDTH:
        raise ValueError(f"value too wide for payload encoding ({w} bytes)")
    return w


def encode(tag: int, *sections: Iterable[int]) -> bytes:
    if not 0 <= tag < 256:
        raise ValueError("tag must fit in one byte")
    out = bytearray([tag])
    for sec in sections:
        vals = [int(v) for v in sec]
        w = _width(vals)
        out += _HDR.pack(w, len(vals))
        for v in vals:
            out += v.to_bytes(w, "big", signed=True)
    return bytes(out)


def decode_all(data: bytes, nsections: int) -> tuple[int, list[list[int]]]:
    """Full decode; used by strategies and tooling, never by the referee."""
    view = PayloadView(data, nsections)
    return view.tag, [[view.get(s, i) for i in range(view.count(s))] for s in range(nsections)]


class PayloadView:
    """Random-access reader over one payload.

    Every byte the view hands out is reported to ``meter`` (if given) so the
    referee's read set and cost can be audited afterwards.
    """

    __slots__ = ("data", "tag", "source", "meter", "_secs")

    def __init__(self, data: bytes, nsections: int, meter=None, source: int = 0) -> None:
        self.data = data
        self.meter = meter
        self.source = source
        if len(data) < 1:
            raise MalformedPayload("empty payload")
        self.tag = data[0]
        self._note(0, 1)
        secs = []
        off = 1
        for _ in range(nsections):
            if off + _HDR.size > len(data):
                raise MalformedPayload("truncated section header")
            w, n = _HDR.unpack_from(data, off)
            self._note(off, _HDR.size)
            if not 1 <= w <= MAX_WIDTH:
                raise MalformedPayload(f"bad element width {w}")
            start = off + _HDR.size
            off = start + w * n
            if off > len(data):
                raise MalformedPayload("section overruns payload")
            secs.append((start, w, n))
        if off != len(data):
            raise MalformedPayload("trailing bytes after last section")
        self._secs = secs

    def _note(self, off: int, size: int) -> None:
        if self.meter is not None:
            self.meter.read(self.source, off, self.data[off:off + size])

    def count(self, s: int) -> int:
        return self._secs[s][2]

    def get(self, s: int, i: int) -> int:
        start, w, n = self._secs[s]
        if not 0 <= i < n:
            raise IndexError(f"element {i} outside section {s} of length {n}")
        off = start + i * w
        self._note(off, w)
        return int.from_bytes(self.data[off:off + w], "big", signed=True)

    def span(self, s: int, i: int) -> tuple[int, int]:
        start, w, _ = self._secs[s]
        return start + i * w, w
