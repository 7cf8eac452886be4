"""PCDM code tables, amplitude alphabets and their asymptotic figures of merit.

A PCDM code is a look-up table whose left column is a complete binary
prefix-free code and whose right column is a prefix-free set of amplitude
sequences.  Feeding IID equiprobable bits, row ``i`` is selected with
probability ``2**-len(bits_i)``, so rate and energy in the limit of many
encoding iterations follow from renewal-reward ratios.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    EmptyOutputWord,
    InputNotPrefixFree,
    KraftDeficit,
    KraftExcess,
    OutputNotPrefixFree,
    ParseError,
    RateOutOfRange,
    SymbolOutOfAlphabet,
)

NU_BRACKET = (0.0, 64.0)
ENTROPY_TOL = 1e-12


@dataclass(frozen=True)
class AmplitudeAlphabet:
    """Positive real amplitudes of a square QAM, ``{1, 3, ..., M-1}``."""

    amplitudes: tuple[int, ...]

    def __post_init__(self):
        amps = tuple(int(a) for a in self.amplitudes)
        object.__setattr__(self, "amplitudes", amps)
        if not amps:
            raise ValueError("alphabet must be non-empty")
        if any(a <= 0 or a % 2 == 0 for a in amps):
            raise ValueError(f"amplitudes must be positive odd integers: {amps}")
        if any(b <= a for a, b in zip(amps, amps[1:])):
            raise ValueError(f"amplitudes must be strictly increasing: {amps}")
        n = len(amps)
        if n & (n - 1):
            raise ValueError(f"alphabet size must be a power of two, got {n}")

    @classmethod
    def for_qam(cls, qam_order: int) -> "AmplitudeAlphabet":
        m_side = math.isqrt(qam_order)
        if m_side * m_side != qam_order or m_side < 2 or m_side & (m_side - 1):
            raise ValueError(f"not a square QAM order: {qam_order}")
        return cls(tuple(range(1, m_side, 2)))

    @property
    def size(self) -> int:
        return len(self.amplitudes)

    @property
    def u(self) -> int:
        """Bits carried by one amplitude under uniform mapping."""
        return self.size.bit_length() - 1

    @property
    def m(self) -> int:
        """Bits per real dimension (sign bit included)."""
        return self.u + 1

    @property
    def qam_order(self) -> int:
        return (2 * self.size) ** 2

    def index(self, amplitude: int) -> int:
        return self.amplitudes.index(amplitude)

    def __contains__(self, amplitude) -> bool:
        return amplitude in self.amplitudes


@dataclass(frozen=True)
class PrefixCode:
    """Validated PCDM look-up table; build it through :func:`validate_code`."""

    rows: tuple[tuple[str, tuple[int, ...]], ...]
    alphabet: AmplitudeAlphabet
    _encode_map: dict = field(init=False, repr=False, compare=False, hash=False)
    _decode_map: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "_encode_map", {b: s for b, s in self.rows})
        object.__setattr__(self, "_decode_map", {s: b for b, s in self.rows})

    @property
    def cardinality(self) -> int:
        return len(self.rows)

    @property
    def input_words(self) -> tuple[str, ...]:
        return tuple(b for b, _ in self.rows)

    @property
    def output_words(self) -> tuple[tuple[int, ...], ...]:
        return tuple(s for _, s in self.rows)

    @property
    def l_max(self) -> int:
        """Longest output word, in amplitudes."""
        return max(len(s) for _, s in self.rows)

    @property
    def max_input_len(self) -> int:
        return max(len(b) for b, _ in self.rows)


@dataclass(frozen=True)
class CodeMetrics:
    rate: Fraction
    energy: Fraction
    mb_energy: float
    gap_db: float


@dataclass(frozen=True)
class MbSolution:
    nu: float
    probabilities: np.ndarray
    entropy: float
    mean_energy: float


def _normalize_bits(word) -> str:
    if isinstance(word, str):
        s = word.strip()
    else:
        s = "".join(str(int(b)) for b in word)
    if s.strip("01"):
        raise ParseError(f"input word is not binary: {word!r}")
    return s


def _has_prefix_pair(words: Sequence) -> tuple | None:
    # after lexicographic sort a prefix is always immediately followed by a word it prefixes
    ordered = sorted(words)
    for a, b in zip(ordered, ordered[1:]):
        if b[: len(a)] == a:
            return a, b
    return None


def kraft_sum(input_words: Iterable[str]) -> Fraction:
    return sum((Fraction(1, 2 ** len(b)) for b in input_words), Fraction(0))


def validate_code(rows, alphabet: AmplitudeAlphabet) -> PrefixCode:
    """Check every structural invariant of a PCDM table and freeze it.

    ``rows`` is an iterable of ``(input_bits, output_amplitudes)`` pairs; input
    bits may be a ``'0'/'1'`` string or a sequence of ints.
    """
    norm = []
    for bits, out in rows:
        b = _normalize_bits(bits)
        s = tuple(int(a) for a in out)
        if not b:
            raise InputNotPrefixFree("empty input word")
        if not s:
            raise EmptyOutputWord(f"row {b!r} has an empty output word")
        bad = [a for a in s if a not in alphabet]
        if bad:
            raise SymbolOutOfAlphabet(
                f"row {b!r} uses {bad[0]} not in alphabet {alphabet.amplitudes}"
            )
        norm.append((b, s))
    if not norm:
        raise ValueError("a code needs at least one row")

    # excess first: a prefix-free binary set can never exceed 1, so an excess
    # is the more specific diagnosis for an overfull tree
    k = kraft_sum(b for b, _ in norm)
    if k > 1:
        raise KraftExcess(f"Kraft sum of input words is {k} > 1")
    pair = _has_prefix_pair([b for b, _ in norm])
    if pair:
        raise InputNotPrefixFree(f"input word {pair[0]!r} is a prefix of {pair[1]!r}")
    pair = _has_prefix_pair([s for _, s in norm])
    if pair:
        raise OutputNotPrefixFree(f"output word {pair[0]} is a prefix of {pair[1]}")
    if k < 1:
        raise KraftDeficit(f"Kraft sum of input words is {k} < 1")
    return PrefixCode(tuple(norm), alphabet)


def asymptotic_metrics(code: PrefixCode) -> tuple[Fraction, Fraction]:
    """Exact (rate, energy) per positive real symbol in the long-run limit."""
    bits = Fraction(0)
    symbols = Fraction(0)
    energy = Fraction(0)
    for b, s in code.rows:
        p = Fraction(1, 2 ** len(b))
        bits += p * len(b)
        symbols += p * len(s)
        energy += p * sum(a * a for a in s)
    return bits / symbols, energy / symbols


def _mb_distribution(amps_sq: np.ndarray, nu: float) -> np.ndarray:
    w = np.exp(-nu * (amps_sq - amps_sq[0]))
    return w / w.sum()


def _entropy_bits(p: np.ndarray) -> float:
    nz = p[p > 0]
    return float(-(nz * np.log2(nz)).sum())


def mb_min_energy(alphabet: AmplitudeAlphabet, target_rate: float) -> MbSolution:
    """Maxwell-Boltzmann distribution with entropy ``target_rate`` on ``alphabet``.

    Its mean energy is the smallest achievable by any IID source of that
    entropy, hence the reference for the energy gap.
    """
    target = float(target_rate)
    h_max = math.log2(alphabet.size)
    if not (target > 0) or target > h_max + 1e-15:
        raise RateOutOfRange(
            f"target rate {target} outside (0, {h_max}] for alphabet {alphabet.amplitudes}"
        )
    amps_sq = np.array(alphabet.amplitudes, dtype=float) ** 2
    lo, hi = NU_BRACKET
    if target >= h_max:
        nu = 0.0
    else:
        # entropy falls strictly with nu
        nu = 0.5 * (lo + hi)
        for _ in range(400):
            nu = 0.5 * (lo + hi)
            h = _entropy_bits(_mb_distribution(amps_sq, nu))
            if abs(h - target) <= ENTROPY_TOL:
                break
            if h > target:
                lo = nu
            else:
                hi = nu
            if hi - lo < 1e-300:
                break
    p = _mb_distribution(amps_sq, nu)
    return MbSolution(nu, p, _entropy_bits(p), float(p @ amps_sq))


def energy_gap(code: PrefixCode) -> CodeMetrics:
    rate, energy = asymptotic_metrics(code)
    mb = mb_min_energy(code.alphabet, float(rate))
    return CodeMetrics(rate, energy, mb.mean_energy, 10 * math.log10(float(energy) / mb.mean_energy))


def stationary_distribution(code: PrefixCode, exact: bool = False):
    """Long-run amplitude frequencies, aligned with ``code.alphabet.amplitudes``."""
    counts = {a: Fraction(0) for a in code.alphabet.amplitudes}
    symbols = Fraction(0)
    for b, s in code.rows:
        p = Fraction(1, 2 ** len(b))
        symbols += p * len(s)
        for a in s:
            counts[a] += p
    probs = [counts[a] / symbols for a in code.alphabet.amplitudes]
    if exact:
        return probs
    return np.array([float(x) for x in probs])


# ---------------------------------------------------------------- .pfc files

def format_pfc(code: PrefixCode, comments: Sequence[str] = ()) -> str:
    lines = ["#alphabet " + ",".join(map(str, code.alphabet.amplitudes))]
    lines += [f"# {c}" for c in comments]
    lines += [f"{b}\t{','.join(map(str, s))}" for b, s in code.rows]
    return "\n".join(lines) + "\n"


def parse_pfc(text: str) -> PrefixCode:
    alphabet = None
    rows = []
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if line.startswith("#alphabet"):
                try:
                    amps = [int(x) for x in line[len("#alphabet"):].strip().split(",")]
                except ValueError as exc:
                    raise ParseError(f"line {lineno}: bad alphabet header") from exc
                if any(a % 2 == 0 for a in amps):
                    raise ParseError(f"line {lineno}: non-odd amplitude in alphabet")
                try:
                    alphabet = AmplitudeAlphabet(tuple(amps))
                except ValueError as exc:
                    raise ParseError(f"line {lineno}: {exc}") from exc
            continue
        parts = line.split("\t") if "\t" in line else line.split()
        if len(parts) != 2:
            raise ParseError(f"line {lineno}: expected '<bits><TAB><amplitudes>'")
        try:
            out = tuple(int(x) for x in parts[1].split(","))
        except ValueError as exc:
            raise ParseError(f"line {lineno}: bad amplitude list {parts[1]!r}") from exc
        if any(a % 2 == 0 for a in out):
            raise ParseError(f"line {lineno}: non-odd amplitude in {parts[1]!r}")
        key = (parts[0], out)
        if key in seen:
            raise ParseError(f"line {lineno}: duplicate row {parts[0]}")
        seen.add(key)
        rows.append((parts[0], out))
    if alphabet is None:
        raise ParseError("missing '#alphabet' header")
    if not rows:
        raise ParseError("no code rows")
    return validate_code(rows, alphabet)


def load_pfc(path) -> PrefixCode:
    return parse_pfc(Path(path).read_text(encoding="utf-8"))


def save_pfc(code: PrefixCode, path, comments: Sequence[str] = ()) -> None:
    Path(path).write_text(format_pfc(code, comments), encoding="utf-8")


# Reference 15-row code "C2" over the 16-QAM amplitudes {1, 3}.
C2_ROWS = (
    ("0", (1, 1, 1, 1, 1, 1)),
    ("100", (1, 1, 3)),
    ("1010", (1, 1, 1, 1, 1, 3)),
    ("1011", (1, 1, 1, 1, 3)),
    ("1100", (1, 1, 1, 3)),
    ("1101", (1, 3, 1, 1)),
    ("1110", (3, 1, 1, 1)),
    ("111100", (1, 3, 3)),
    ("111101", (3, 1, 1, 3)),
    ("1111100", (1, 3, 1, 3)),
    ("1111101", (3, 1, 3, 1)),
    ("1111110", (3, 3, 1, 1)),
    ("11111110", (3, 1, 3, 3)),
    ("111111110", (3, 3, 1, 3)),
    ("111111111", (3, 3, 3, 1)),
)


def c2_code() -> PrefixCode:
    return validate_code(C2_ROWS, AmplitudeAlphabet((1, 3)))
