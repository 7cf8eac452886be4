"""Quasi-cyclic LDPC codes from the two NR base graphs.

Covers lifting, filler-based shortening, two puncturing conventions, systematic
encoding by back-substitution, and flooding belief-propagation decoding.

Conventions: a circulant with shift ``s`` maps row ``i`` of a ``Z x Z`` block
to column ``(i + s) mod Z``, so multiplying a length-``Z`` vector by it is
``np.roll(v, -s)``.  LLRs are ``ln P(0)/P(1)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidLifting,
    LengthInfeasible,
    LengthMismatch,
    ParseError,
    TooLarge,
)

LIFTING_BASES = (2, 3, 5, 7, 9, 11, 13, 15)
Z_VALUES = tuple(sorted(a << j for a in LIFTING_BASES for j in range(9) if (a << j) <= 384))
BG_DIMS = {1: (46, 68, 22), 2: (42, 52, 10)}
LLR_CLIP = 30.0
DEFAULT_ITERATIONS = 12
MIN_SUM_SCALE = 0.8125


def lifting_set_index(z: int) -> int:
    for i, a in enumerate(LIFTING_BASES):
        q, r = divmod(z, a)
        if r == 0 and q & (q - 1) == 0:
            return i
    raise InvalidLifting(f"Z={z} is not a valid lifting size")


@dataclass(frozen=True)
class BaseGraph:
    id: int
    rows: int
    cols: int
    info_cols: int
    shifts: dict = field(repr=False)  # (row, col) -> tuple of 8 set-wise shift values

    def shift(self, row: int, col: int, z: int) -> int:
        vals = self.shifts[(row, col)]
        v = vals[lifting_set_index(z)] if len(vals) > 1 else vals[0]
        return v % z

    def row_entries(self, row: int) -> list[int]:
        return sorted(c for (r, c) in self.shifts if r == row)


def load_base_graph(source) -> BaseGraph:
    """Parse a shift table; ``source`` is 1, 2, ``'bg1'``, ``'bg2'`` or a file path.

    File format: header ``#bg <id> <rows> <cols> <info_cols>``, then lines of
    ``row col shift`` or ``row col s0 .. s7`` (one value per lifting set).
    """
    if isinstance(source, int) or str(source).lower() in ("1", "2", "bg1", "bg2"):
        name = f"bg{str(source)[-1]}.txt"
        text = resources.files("pcdm_rm").joinpath(f"data/{name}").read_text(encoding="utf-8")
    else:
        text = Path(source).read_text(encoding="utf-8")

    header = None
    shifts = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if line.startswith("#bg"):
                try:
                    header = tuple(int(x) for x in line[3:].split())
                except ValueError:
                    raise ParseError(f"line {lineno}: bad header {line!r}") from None
                if len(header) != 4:
                    raise ParseError(f"line {lineno}: header needs '#bg id rows cols info_cols'")
            continue
        try:
            vals = [int(x) for x in line.split()]
        except ValueError:
            raise ParseError(f"line {lineno}: non-integer entry {line!r}") from None
        if len(vals) not in (3, 10):
            raise ParseError(f"line {lineno}: expected 3 or 10 fields, got {len(vals)}")
        r, c, *s = vals
        if any(not 0 <= x <= 383 for x in s):
            raise ParseError(f"line {lineno}: shift outside [0, 383]")
        if (r, c) in shifts:
            raise ParseError(f"line {lineno}: duplicate entry ({r}, {c})")
        shifts[(r, c)] = tuple(s)
    if header is None:
        raise ParseError("missing '#bg' header")
    bg_id, rows, cols, info_cols = header
    if bg_id not in BG_DIMS or BG_DIMS[bg_id] != (rows, cols, info_cols):
        raise DimensionMismatch(f"header {header} does not match base graph {bg_id}")
    if not shifts:
        raise ParseError("no shift entries")
    if any(not (0 <= r < rows and 0 <= c < cols) for r, c in shifts):
        raise DimensionMismatch("entry outside the declared dimensions")
    used_rows = {r for r, _ in shifts}
    if used_rows != set(range(rows)):
        raise ParseError(f"table is truncated: {rows - len(used_rows)} rows have no entries")
    return BaseGraph(bg_id, rows, cols, info_cols, shifts)


def info_block_count(k_c: int, bg: int) -> int:
    """Number of information columns ``K_b`` used to size the lifting."""
    if bg == 1:
        return 22
    if k_c > 640:
        return 10
    if k_c > 560:
        return 9
    if k_c > 192:
        return 8
    return 6


def select_lifting(k_c: int, bg) -> int:
    bg_id = bg.id if isinstance(bg, BaseGraph) else int(bg)
    if k_c < 1:
        raise ValueError("k_c must be positive")
    k_b = info_block_count(k_c, bg_id)
    for z in Z_VALUES:
        if k_b * z >= k_c:
            return z
    raise TooLarge(f"K_C={k_c} exceeds {k_b} x 384 for BG{bg_id}")


class PunctureMode(enum.Enum):
    STANDARD_INFO = "standard"
    PARITY_ONLY = "parity"


_BG_CACHE: dict[int, BaseGraph] = {}


def base_graph(bg_id: int) -> BaseGraph:
    if bg_id not in _BG_CACHE:
        _BG_CACHE[bg_id] = load_base_graph(bg_id)
    return _BG_CACHE[bg_id]


@dataclass(frozen=True)
class QcLdpcCode:
    """A lifted, shortened and punctured code; create it with :func:`build_code`."""

    bg: BaseGraph
    z: int
    k_c: int
    n_c: int
    puncture_mode: PunctureMode

    @property
    def fillers(self) -> int:
        return self.bg.info_cols * self.z - self.k_c

    @property
    def full_length(self) -> int:
        return self.bg.cols * self.z

    @property
    def rate(self) -> float:
        return self.k_c / self.n_c

    @cached_property
    def tx_positions(self) -> np.ndarray:
        """Indices into the full codeword of the ``n_c`` transmitted bits, in order."""
        z, k_full = self.z, self.bg.info_cols * self.z
        if self.puncture_mode is PunctureMode.PARITY_ONLY:
            return np.concatenate([np.arange(self.k_c), k_full + np.arange(self.n_c - self.k_c)])
        buf = np.concatenate([np.arange(2 * z, self.k_c), np.arange(k_full, self.full_length)])
        return buf[: self.n_c]

    @cached_property
    def _core(self):
        # parity columns solved from the first four rows
        bg, z = self.bg, self.z
        core_cols = list(range(bg.info_cols, bg.info_cols + 4))
        odd = []
        for c in core_cols:
            counts: dict[int, int] = {}
            for r in range(4):
                if (r, c) in bg.shifts:
                    s = bg.shift(r, c, z)
                    counts[s] = counts.get(s, 0) ^ 1
            left = [s for s, k in counts.items() if k]
            if left:
                odd.append((c, left))
        if len(odd) != 1 or len(odd[0][1]) != 1:
            raise InvalidLifting("core parity block is not dual-diagonal for this lifting")
        first_col, (first_shift,) = odd[0]
        return core_cols, first_col, first_shift

    @cached_property
    def _rows_used(self) -> int:
        last_col = int(self.tx_positions.max()) // self.z
        return max(4, last_col - self.bg.info_cols + 1)

    def encode_full(self, info_bits: np.ndarray) -> np.ndarray:
        """Whole pre-puncture codeword(s), fillers included; shape ``(..., cols*Z)``."""
        info = np.asarray(info_bits, dtype=np.uint8)
        single = info.ndim == 1
        info = np.atleast_2d(info)
        if info.shape[1] != self.k_c:
            raise LengthMismatch(f"expected {self.k_c} info bits, got {info.shape[1]}")
        bg, z = self.bg, self.z
        batch = info.shape[0]
        blocks = np.zeros((batch, bg.cols, z), dtype=np.uint8)
        flat = blocks.reshape(batch, -1)
        flat[:, : self.k_c] = info

        def row_sum(r, skip=()):
            acc = np.zeros((batch, z), dtype=np.uint8)
            for c in bg.row_entries(r):
                if c in skip:
                    continue
                acc ^= np.roll(blocks[:, c], -bg.shift(r, c, z), axis=1)
            return acc

        core_cols, first_col, first_shift = self._core
        syndromes = [row_sum(r, skip=core_cols) for r in range(4)]
        total = syndromes[0] ^ syndromes[1] ^ syndromes[2] ^ syndromes[3]
        blocks[:, first_col] = np.roll(total, first_shift, axis=1)
        known = {first_col}
        pending = set(range(4))
        while pending:
            for r in sorted(pending):
                unknown = [c for c in core_cols if (r, c) in bg.shifts and c not in known]
                if len(unknown) == 1:
                    c = unknown[0]
                    acc = syndromes[r].copy()
                    for k in core_cols:
                        if k != c and (r, k) in bg.shifts:
                            acc ^= np.roll(blocks[:, k], -bg.shift(r, k, z), axis=1)
                    blocks[:, c] = np.roll(acc, bg.shift(r, c, z), axis=1)
                    known.add(c)
                    pending.discard(r)
                    break
                if not unknown:
                    pending.discard(r)
                    break
            else:
                raise InvalidLifting("core parity back-substitution stalled")
        for r in range(4, bg.rows):
            own = bg.info_cols + r
            blocks[:, own] = row_sum(r, skip=(own,))
        out = blocks.reshape(batch, -1)
        return out[0] if single else out

    def encode(self, info_bits) -> np.ndarray:
        full = self.encode_full(info_bits)
        return full[..., self.tx_positions]

    # ------------------------------------------------------------ decoding

    @cached_property
    def _graph(self):
        bg, z = self.bg, self.z
        n_rows = self._rows_used
        n_cols = bg.info_cols + n_rows
        checks, variables = [], []
        ar = np.arange(z)
        for r in range(n_rows):
            for c in bg.row_entries(r):
                if c >= n_cols:
                    continue
                s = bg.shift(r, c, z)
                checks.append(r * z + ar)
                variables.append(c * z + (ar + s) % z)
        chk = np.concatenate(checks)
        var = np.concatenate(variables)
        order = np.argsort(chk, kind="stable")
        chk, var = chk[order], var[order]
        starts = np.flatnonzero(np.r_[True, chk[1:] != chk[:-1]])
        return chk, var, starts, n_rows * z, n_cols * z

    @cached_property
    def _var_gather(self):
        _, var, _, _, _ = self._graph
        order = np.argsort(var, kind="stable")
        sv = var[order]
        vstarts = np.flatnonzero(np.r_[True, sv[1:] != sv[:-1]])
        return order, vstarts, sv[vstarts]

    def parity_check_submatrix(self):
        """Sparse parity checks actually used by the decoder (rows, cols, n_checks, n_vars)."""
        chk, var, _, m, n = self._graph
        return chk, var, m, n

    def channel_llrs(self, llrs) -> np.ndarray:
        """Map transmitted-bit LLRs onto the decoder's variable nodes."""
        llrs = np.atleast_2d(np.asarray(llrs, dtype=float))
        if llrs.shape[1] != self.n_c:
            raise LengthMismatch(f"expected {self.n_c} LLRs, got {llrs.shape[1]}")
        _, _, _, _, n = self._graph
        full = np.zeros((llrs.shape[0], n))
        full[:, self.tx_positions] = llrs
        full[:, self.k_c:self.bg.info_cols * self.z] = LLR_CLIP
        return full

    def decode(self, llrs, iterations: int = DEFAULT_ITERATIONS, min_sum: bool = False):
        """Flooding belief propagation with early exit.

        Returns ``(info_bits, converged)``; batched inputs of shape ``(B, n_c)``
        give ``(B, k_c)`` bits and a length-``B`` flag array.
        """
        single = np.asarray(llrs).ndim == 1
        prior = np.clip(self.channel_llrs(llrs), -LLR_CLIP, LLR_CLIP)
        chk, var, starts, m, n = self._graph
        order, vstarts, present = self._var_gather
        batch = prior.shape[0]
        result = prior < 0
        converged = np.zeros(batch, dtype=bool)
        active = np.arange(batch)
        v2c = prior[:, var]
        for _ in range(iterations):
            c2v = _check_update(v2c, chk, starts, min_sum)
            total = prior[active]
            total[:, present] += np.add.reduceat(c2v[:, order], vstarts, axis=1)
            decided = total < 0
            synd = np.add.reduceat(decided[:, var].astype(np.uint8), starts, axis=1) & 1
            ok = ~synd.any(axis=1)
            result[active] = decided
            converged[active[ok]] = True
            keep = ~ok
            if not keep.any():
                break
            # converged blocks are frozen; only the rest keep iterating
            active = active[keep]
            v2c = np.clip(total[keep][:, var] - c2v[keep], -LLR_CLIP, LLR_CLIP)
        info = result[:, : self.k_c].astype(np.uint8)
        if single:
            return info[0], bool(converged[0])
        return info, converged


def _phi(x):
    x = np.clip(x, 1e-12, LLR_CLIP)
    return np.log1p(2.0 / np.expm1(x))


def _check_update(v2c, chk, starts, min_sum):
    neg = v2c < 0
    sign_par = np.add.reduceat(neg.astype(np.int8), starts, axis=1) & 1
    sign = np.where((sign_par[:, chk] ^ neg) & 1, -1.0, 1.0)
    mag = np.abs(v2c)
    if min_sum:
        min1 = np.minimum.reduceat(mag, starts, axis=1)
        is_min = mag == min1[:, chk]
        n_min = np.add.reduceat(is_min.astype(np.int16), starts, axis=1)
        min2 = np.minimum.reduceat(np.where(is_min, np.inf, mag), starts, axis=1)
        min2 = np.where(np.isinf(min2), min1, min2)
        ext = np.where(is_min & (n_min[:, chk] == 1), min2[:, chk], min1[:, chk])
        return sign * MIN_SUM_SCALE * ext
    ph = _phi(mag)
    tot = np.add.reduceat(ph, starts, axis=1)
    return sign * _phi(np.maximum(tot[:, chk] - ph, 0.0))


def build_code(bg, z: int, k_c: int, n_c: int, puncture_mode=PunctureMode.PARITY_ONLY) -> QcLdpcCode:
    graph = bg if isinstance(bg, BaseGraph) else base_graph(int(bg))
    if z not in Z_VALUES:
        raise InvalidLifting(f"Z={z} is not a valid lifting size")
    if not 1 <= k_c <= graph.info_cols * z:
        raise InvalidLifting(f"K_C={k_c} does not fit {graph.info_cols} x Z={z} information bits")
    mode = PunctureMode(puncture_mode)
    n_parity = (graph.cols - graph.info_cols) * z
    if mode is PunctureMode.PARITY_ONLY:
        if not k_c <= n_c <= k_c + n_parity:
            raise LengthInfeasible(f"N_C={n_c} outside [{k_c}, {k_c + n_parity}]")
    else:
        avail = k_c - 2 * z + n_parity
        if k_c <= 2 * z or not k_c <= n_c <= avail:
            raise LengthInfeasible(f"N_C={n_c} outside [{k_c}, {avail}] after puncturing 2Z bits")
    return QcLdpcCode(graph, z, k_c, n_c, mode)
