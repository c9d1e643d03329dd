"""Prefix-free integer codes: Elias delta, Golomb codes for geometric sources,
tuple encoding, and the binary transcript container.

Bit strings are plain ``str`` objects over ``"01"``, most significant bit first.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import BinaryIO, Iterable, Sequence

MAGIC = b"OQC1"


class DecodeError(ValueError):
    def __init__(self, msg: str, offset: int):
        super().__init__(f"{msg} at bit offset {offset}")
        self.offset = offset


def _check_bits(bits: str) -> None:
    if any(c not in "01" for c in bits):
        raise ValueError("bit strings may only contain '0' and '1'")


# --- Elias delta ---------------------------------------------------------------

def elias_encode(n: int) -> str:
    """(LL-1) zeros, L in LL binary digits, then the low L-1 bits of n."""
    if not isinstance(n, int) or n < 1:
        raise ValueError(f"Elias delta encodes positive integers, got {n!r}")
    L = n.bit_length()
    LL = L.bit_length()
    low = format(n, "b")[1:]
    return "0" * (LL - 1) + format(L, "b") + low


def elias_length(n: int) -> int:
    L = n.bit_length()
    return (L - 1) + 2 * L.bit_length() - 1


def elias_decode(stream: str, offset: int = 0) -> tuple[int, int]:
    """Decode one codeword starting at ``offset``; returns (n, bits consumed)."""
    pos = offset
    end = len(stream)
    zeros = 0
    while pos < end and stream[pos] == "0":
        zeros += 1
        pos += 1
    if pos >= end:
        raise DecodeError("truncated Elias prefix", pos)
    if pos + zeros + 1 > end:
        raise DecodeError("truncated Elias length field", end)
    L = int(stream[pos:pos + zeros + 1], 2)
    pos += zeros + 1
    if L < 1 or L.bit_length() != zeros + 1:
        raise DecodeError("malformed Elias length field", offset)
    if pos + L - 1 > end:
        raise DecodeError("truncated Elias payload", end)
    n = int("1" + stream[pos:pos + L - 1], 2)
    pos += L - 1
    return n, pos - offset


def elias_length_bound_literal(n: int) -> int:
    """ceil(log2 n) + 2 ceil(log2 max(1, log2 n)) + 1 taken literally; gives 2 at n = 2."""
    lg = math.log2(n)
    return math.ceil(lg) + 2 * math.ceil(math.log2(max(1.0, lg))) + 1


def elias_length_bound(n: int) -> int:
    """Length budget ceil(log2 n) + 2 ceil(log2 log2 n) + 1 for n >= 2.

    The log log term is counted as at least 1, which only matters at n = 2 where
    log2 log2 2 = 0; there the budget is 4, the length of "0100".
    """
    if n < 2:
        raise ValueError("the length budget is defined for n >= 2")
    lg = math.log2(n)
    return math.ceil(lg) + 2 * max(1, math.ceil(math.log2(lg))) + 1


# --- tuples ----------------------------------------------------------------------

def tuple_encode(t: Sequence[int]) -> str:
    if len(t) == 0:
        raise ValueError("cannot encode an empty tuple")
    return "".join(elias_encode(int(i)) for i in t)


def tuple_length(t: Sequence[int]) -> int:
    if len(t) == 0:
        raise ValueError("cannot encode an empty tuple")
    return sum(elias_length(int(i)) for i in t)


def tuple_decode(stream: str, r: int, offset: int = 0) -> tuple[tuple[int, ...], int]:
    out = []
    pos = offset
    for _ in range(r):
        n, used = elias_decode(stream, pos)
        out.append(n)
        pos += used
    return tuple(out), pos - offset


def tuple_length_bound(t: Sequence[int]) -> float:
    """log2(prod) + 2 r log2 log2(prod) + 4 r; only meaningful when prod >= 2."""
    r = len(t)
    lp = sum(math.log2(i) for i in t)
    if lp < 1.0:
        raise ValueError("bound is defined for tuples with product >= 2")
    return lp + 2 * r * math.log2(lp) + 4 * r


# --- Golomb code for the geometric index -------------------------------------------

@dataclass(frozen=True)
class GolombCode:
    """Golomb code with parameter M for positive integers k (codes k - 1)."""

    M: int

    def __post_init__(self):
        if self.M < 1:
            raise ValueError("Golomb parameter must be >= 1")

    @property
    def _b(self) -> int:
        return max(1, math.ceil(math.log2(self.M))) if self.M > 1 else 0

    @property
    def _cutoff(self) -> int:
        return (1 << self._b) - self.M if self.M > 1 else 0

    def length(self, k: int) -> int:
        n = k - 1
        q, rem = divmod(n, self.M)
        if self.M == 1:
            return q + 1
        return q + 1 + (self._b - 1 if rem < self._cutoff else self._b)

    def encode(self, k: int) -> str:
        if not isinstance(k, int) or k < 1:
            raise ValueError(f"Golomb code here encodes k >= 1, got {k!r}")
        n = k - 1
        q, rem = divmod(n, self.M)
        head = "1" * q + "0"
        if self.M == 1:
            return head
        b, cut = self._b, self._cutoff
        if rem < cut:
            return head + (format(rem, f"0{b - 1}b") if b > 1 else "")
        return head + format(rem + cut, f"0{b}b")

    def decode(self, stream: str, offset: int = 0) -> tuple[int, int]:
        pos = offset
        q = 0
        while pos < len(stream) and stream[pos] == "1":
            q += 1
            pos += 1
        if pos >= len(stream):
            raise DecodeError("truncated Golomb unary part", pos)
        pos += 1
        rem = 0
        if self.M > 1:
            b, cut = self._b, self._cutoff
            if b > 1:
                if pos + b - 1 > len(stream):
                    raise DecodeError("truncated Golomb remainder", len(stream))
                rem = int(stream[pos:pos + b - 1], 2)
                pos += b - 1
            if rem >= cut:
                if pos >= len(stream):
                    raise DecodeError("truncated Golomb remainder", len(stream))
                rem = rem * 2 + int(stream[pos]) - cut
                pos += 1
        return q * self.M + rem + 1, pos - offset


def geometric_code(delta: float) -> GolombCode:
    """Golomb code for P(k) = (1 - delta^2)^(k-1) delta^2, M = ceil(-1 / log2(1 - delta^2))."""
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta!r}")
    q = 1.0 - delta * delta
    return GolombCode(max(1, math.ceil(-1.0 / math.log2(q))))


def _block_profile(code: GolombCode, delta: float):
    s = delta * delta
    q = 1.0 - s
    M = code.M
    # block j (k = jM+1 .. (j+1)M) has mass q^(jM) * block_mass and lengths base_len + j
    within = [q ** r * s for r in range(M)]
    base_len = [code.length(r + 1) for r in range(M)]
    block_mass = math.fsum(within)
    block_len = math.fsum(w * l for w, l in zip(within, base_len))
    return block_len, block_mass, q ** M


def _remainder(j: int, block_len: float, block_mass: float, qM: float) -> float:
    """sum_{i >= j} qM^i (block_len + i block_mass)."""
    g = 1.0 - qM
    return qM ** j * (block_len / g + block_mass * (j * g + qM) / (g * g))


def expected_length(code: GolombCode, delta: float, tail: float = 1e-13) -> float:
    """E[len] under the geometric law, summed block by block until the exact remainder
    of the series drops below ``tail``."""
    block_len, block_mass, qM = _block_profile(code, delta)
    total = 0.0
    j = 0
    weight = 1.0
    while _remainder(j, block_len, block_mass, qM) > tail and j < 10**7:
        total += weight * (block_len + j * block_mass)
        weight *= qM
        j += 1
    return total


def expected_length_closed_form(code: GolombCode, delta: float) -> float:
    block_len, block_mass, qM = _block_profile(code, delta)
    return _remainder(0, block_len, block_mass, qM)


def geometric_entropy(delta: float) -> float:
    s = delta * delta
    q = 1.0 - s
    if q == 0.0:
        return 0.0
    return (-(q * math.log2(q)) - s * math.log2(s)) / s


# --- transcript container ------------------------------------------------------------

def _write_varint(buf: BinaryIO, n: int) -> None:
    while True:
        byte = n & 0x7F
        n >>= 7
        if n:
            buf.write(bytes([byte | 0x80]))
        else:
            buf.write(bytes([byte]))
            return


def _read_varint(buf: BinaryIO) -> int | None:
    shift = 0
    out = 0
    while True:
        b = buf.read(1)
        if not b:
            if shift == 0:
                return None
            raise ValueError("truncated varint in transcript")
        out |= (b[0] & 0x7F) << shift
        if not b[0] & 0x80:
            return out
        shift += 7


def write_transcript(fh: BinaryIO, messages: Iterable[str]) -> None:
    """Magic "OQC1", then per message a varint bit length and the bits padded to bytes."""
    fh.write(MAGIC)
    for bits in messages:
        _check_bits(bits)
        _write_varint(fh, len(bits))
        padded = bits + "0" * (-len(bits) % 8)
        fh.write(int(padded, 2).to_bytes(len(padded) // 8, "big") if padded else b"")


def read_transcript(fh: BinaryIO) -> list[str]:
    if fh.read(4) != MAGIC:
        raise ValueError("not a transcript file (bad magic)")
    out = []
    while True:
        n = _read_varint(fh)
        if n is None:
            return out
        nbytes = (n + 7) // 8
        raw = fh.read(nbytes)
        if len(raw) != nbytes:
            raise ValueError("truncated transcript record")
        bits = format(int.from_bytes(raw, "big"), f"0{nbytes * 8}b")[:n] if nbytes else ""
        out.append(bits)


def transcript_bytes(messages: Iterable[str]) -> bytes:
    buf = io.BytesIO()
    write_transcript(buf, messages)
    return buf.getvalue()
