"""Streaming and fixed-length (framed) PCDM encoding and decoding.

Bits travel as ``uint8`` arrays (or ``'0'/'1'`` strings on input); amplitudes
as integer arrays.

Framing runs a counter state machine over ``k_rem`` (bits left) and ``n_rem``
(amplitudes left).  Before each PCDM iteration the encoder switches for good to
uniform ``u``-bit mapping once ``k_rem > u * (n_rem - l_max)``.  While the rule
does not fire, one PCDM iteration consumes ``b >= 1`` bits and emits
``s <= l_max`` amplitudes, so afterwards ``u * (n_rem - s) >= u * (n_rem - l_max)
>= k_rem > k_rem - b``: the invariant ``k_rem <= u * n_rem`` survives every
iteration and the uniform tail always fits.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .errors import ConfigInfeasible, LengthMismatch, MalformedBlock, UnmatchableSymbols
from .shaping import PrefixCode


class StreamEncoding(NamedTuple):
    amplitudes: np.ndarray
    consumed: int


class StreamDecoding(NamedTuple):
    bits: np.ndarray
    consumed: int


def as_bitstring(bits) -> str:
    if isinstance(bits, str):
        return bits
    arr = np.asarray(bits, dtype=np.uint8).ravel()
    return arr.tobytes().translate(_BIN_TABLE).decode("ascii")


def as_bitarray(bits) -> np.ndarray:
    if isinstance(bits, str):
        return (np.frombuffer(bits.encode("ascii"), dtype=np.uint8) - 48).astype(np.uint8)
    return np.asarray(bits, dtype=np.uint8).ravel()


_BIN_TABLE = bytes.maketrans(b"\x00\x01", b"01")


def _encode_one(code: PrefixCode, bits: str, pos: int) -> tuple[str | None, int]:
    """Greedy match starting at ``pos``; returns (word, new_pos) or (None, pos)."""
    table = code._encode_map
    end = min(len(bits), pos + code.max_input_len)
    for stop in range(pos + 1, end + 1):
        w = bits[pos:stop]
        if w in table:
            return w, stop
    return None, pos


def encode_stream(code: PrefixCode, bits) -> StreamEncoding:
    """Variable-length encoding; an unmatched tail is left unconsumed."""
    bits = as_bitstring(bits)
    table = code._encode_map
    out: list[int] = []
    pos = 0
    while pos < len(bits):
        word, nxt = _encode_one(code, bits, pos)
        if word is None:
            break
        out.extend(table[word])
        pos = nxt
    return StreamEncoding(np.array(out, dtype=np.int64), pos)


def _decode_one(code: PrefixCode, amps: tuple, pos: int) -> tuple[tuple | None, int]:
    table = code._decode_map
    end = min(len(amps), pos + code.l_max)
    for stop in range(pos + 1, end + 1):
        w = amps[pos:stop]
        if w in table:
            return w, stop
    if end == pos + code.l_max or not _is_proper_prefix(code, amps[pos:end]):
        raise UnmatchableSymbols(f"no output word matches amplitudes at position {pos}")
    return None, pos


def _is_proper_prefix(code: PrefixCode, head: tuple) -> bool:
    n = len(head)
    return any(len(s) > n and s[:n] == head for s in code.output_words)


def decode_stream(code: PrefixCode, amplitudes) -> StreamDecoding:
    """Inverse of :func:`encode_stream`; an incomplete trailing word is left unconsumed."""
    amps = tuple(int(a) for a in np.asarray(amplitudes).ravel())
    table = code._decode_map
    out: list[str] = []
    pos = 0
    while pos < len(amps):
        word, nxt = _decode_one(code, amps, pos)
        if word is None:
            break
        out.append(table[word])
        pos = nxt
    return StreamDecoding(as_bitarray("".join(out)), pos)


@dataclass(frozen=True)
class FramedCodeConfig:
    """A PCDM code operated as a fixed ``k_d``-bit to ``n_d``-amplitude block map."""

    code: PrefixCode
    k_d: int
    n_d: int

    def __post_init__(self):
        if self.k_d < 1:
            raise ConfigInfeasible(f"k_d must be >= 1, got {self.k_d}")
        if self.n_d < self.l_max:
            raise ConfigInfeasible(f"n_d={self.n_d} shorter than longest output word {self.l_max}")
        if self.k_d > self.u * self.n_d:
            raise ConfigInfeasible(
                f"k_d={self.k_d} bits cannot fit in n_d={self.n_d} amplitudes at {self.u} bits each"
            )

    @property
    def l_max(self) -> int:
        return self.code.l_max

    @property
    def u(self) -> int:
        return self.code.alphabet.u

    @property
    def rate(self) -> float:
        return self.k_d / self.n_d


class _FramingTables:
    """Window lookup tables for the framed codec.

    ``enc_row[v]`` is the row whose input word prefixes the ``depth``-bit window
    ``v``; zero-padding the bit buffer makes this also cover virtual
    zero-extension of a trailing partial word.  ``dec_row[v]`` does the same for
    a base-``q`` window of ``l_max`` amplitude indices (``-1``: no match).
    """

    def __init__(self, code: PrefixCode):
        alphabet = code.alphabet
        self.q = alphabet.size
        self.depth = code.max_input_len
        self.l_max = code.l_max
        self.amps = np.array(alphabet.amplitudes, dtype=np.int64)
        rows = code.rows
        self.in_len = [len(b) for b, _ in rows]
        self.out_len = [len(s) for _, s in rows]
        self.out_words = [np.array(s, dtype=np.int64) for _, s in rows]
        self.in_words = [as_bitarray(b) for b, _ in rows]
        self.enc_row = np.empty(1 << self.depth, dtype=np.int64)
        for i, (b, _) in enumerate(rows):
            lo = int(b, 2) << (self.depth - len(b))
            self.enc_row[lo:lo + (1 << (self.depth - len(b)))] = i
        self.dec_row = None
        if self.q ** self.l_max <= _MAX_DECODE_TABLE:
            self.dec_row = np.full(self.q ** self.l_max, -1, dtype=np.int64)
            for i, (_, s) in enumerate(rows):
                v = 0
                for a in s:
                    v = v * self.q + alphabet.index(a)
                span = self.q ** (self.l_max - len(s))
                self.dec_row[v * span:(v + 1) * span] = i
        self.index_of = np.full(int(self.amps[-1]) + 1, -1, dtype=np.int64)
        self.index_of[self.amps] = np.arange(self.q)

    def windows(self, symbols: np.ndarray, base: int, width: int) -> list[int]:
        padded = np.concatenate([symbols, np.zeros(width, dtype=np.int64)])
        v = np.zeros(len(symbols), dtype=np.int64)
        for j in range(width):
            v = v * base + padded[j:j + len(symbols)]
        return v.tolist()


_MAX_DECODE_TABLE = 1 << 22


@lru_cache(maxsize=128)
def _tables(code: PrefixCode) -> _FramingTables:
    return _FramingTables(code)


def encode_framed(config: FramedCodeConfig, bits) -> np.ndarray:
    bits = as_bitarray(bits).astype(np.int64)
    if len(bits) != config.k_d:
        raise LengthMismatch(f"expected {config.k_d} bits, got {len(bits)}")
    t = _tables(config.code)
    u, l_max = config.u, config.l_max
    win = t.windows(bits, 2, t.depth)
    enc_row, in_len, out_len = t.enc_row, t.in_len, t.out_len
    chosen = []
    pos = 0
    k_rem, n_rem = config.k_d, config.n_d
    while k_rem > 0 and k_rem <= u * (n_rem - l_max):
        r = enc_row[win[pos]]
        chosen.append(r)
        pos += in_len[r]
        k_rem -= in_len[r]
        n_rem -= out_len[r]
    parts = [t.out_words[r] for r in chosen]
    if k_rem > 0:
        tail = bits[pos:]
        tail = np.concatenate([tail, np.zeros(-len(tail) % u, dtype=np.int64)]).reshape(-1, u)
        idx = tail @ (1 << np.arange(u - 1, -1, -1))
        parts.append(t.amps[idx])
        n_rem -= len(idx)
    parts.append(np.full(n_rem, t.amps[0], dtype=np.int64))
    return np.concatenate(parts)


def decode_framed(config: FramedCodeConfig, amplitudes) -> np.ndarray:
    """Exact inverse of :func:`encode_framed`.

    Any block that :func:`encode_framed` cannot produce is rejected, so a
    successful decode ``x`` always satisfies ``encode_framed(x) == amplitudes``.
    """
    amps = np.asarray(amplitudes, dtype=np.int64).ravel()
    if len(amps) != config.n_d:
        raise LengthMismatch(f"expected {config.n_d} amplitudes, got {len(amps)}")
    code = config.code
    t = _tables(code)
    if amps.min() < 0 or amps.max() >= len(t.index_of) or (t.index_of[amps] < 0).any():
        bad = next(int(a) for a in amps if a < 0 or a >= len(t.index_of) or t.index_of[a] < 0)
        raise UnmatchableSymbols(f"amplitude {bad} not in alphabet")
    idx = t.index_of[amps]
    u, l_max, n = config.u, config.l_max, config.n_d
    out_len, in_len = t.out_len, t.in_len
    if t.dec_row is not None:
        win = t.windows(idx, t.q, l_max)
        dec_row = t.dec_row
    chosen = []
    pos = 0
    k_rem, n_rem = config.k_d, n
    while k_rem > 0 and k_rem <= u * (n_rem - l_max):
        if t.dec_row is not None:
            r = int(dec_row[win[pos]])
            if r < 0:
                raise UnmatchableSymbols(f"no output word matches amplitudes at position {pos}")
        else:
            word, _ = _decode_one(code, tuple(amps[pos:pos + l_max].tolist()), 0)
            if word is None:
                raise MalformedBlock(f"block ends inside an output word at position {pos}")
            r = code.output_words.index(word)
        if pos + out_len[r] > n:
            raise MalformedBlock(f"block ends inside an output word at position {pos}")
        chosen.append(r)
        pos += out_len[r]
        n_rem -= out_len[r]
        k_rem -= in_len[r]
    parts = [t.in_words[r] for r in chosen]
    if k_rem < 0:
        # the final word ran past k_d: its excess must be the virtual zero-extension
        last = parts[-1]
        if last[len(last) + k_rem:].any():
            raise MalformedBlock("final codeword is not the zero-extension of the remaining bits")
        parts[-1] = last[:len(last) + k_rem]
    elif k_rem > 0:
        n_tail = -(-k_rem // u)
        seg = idx[pos:pos + n_tail]
        tail = ((seg[:, None] >> np.arange(u - 1, -1, -1)) & 1).astype(np.uint8).ravel()
        if tail[k_rem:].any():
            raise MalformedBlock("non-zero padding bits in the uniform tail")
        parts.append(tail[:k_rem])
        pos += n_tail
    if (idx[pos:] != 0).any():
        raise MalformedBlock("padding amplitudes are not the lowest amplitude")
    return np.concatenate(parts).astype(np.uint8) if parts else np.zeros(0, dtype=np.uint8)
