"""Minimum-energy PCDM code construction under rate and cardinality constraints.

The search minimizes the ratio ``E = A / B`` (energy and length per iteration)
subject to ``D >= R* B`` (bits per iteration), where every quantity is a sum
over rows weighted by ``2**-depth``.  Dinkelbach's method turns the ratio into a
sequence of linear objectives ``A - lam * B``; each one is a 0/1 program over
``(word, depth)`` pairs with a Kraft equality, a cardinality equality and one
"at most one word per root-to-leaf chain" constraint for prefix-freeness.

``exhaustive`` mode offers every word up to ``max_word_len`` and every depth up
to ``cardinality - 1`` and solves each program to proven optimality, so the
result is the global optimum of the whole code space.  ``heuristic`` mode keeps
only the most likely words under the Maxwell-Boltzmann distribution at the
target rate and caps branch-and-bound nodes at ``budget`` per step.
"""

from __future__ import annotations

import csv
import heapq
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp
from scipy.sparse import coo_matrix

from .errors import CodeValidationError, EnumerationOverflow, Infeasible, NoFeasibleCode
from .shaping import (
    AmplitudeAlphabet,
    CodeMetrics,
    PrefixCode,
    energy_gap,
    format_pfc,
    mb_min_energy,
    validate_code,
)

EXHAUSTIVE_MAX_CARDINALITY = 8
ENUMERATION_MAX_CARDINALITY = 32
MAX_WORD_LEN = 12
HEURISTIC_MAX_DEPTH = 16
HEURISTIC_CANDIDATES = 400
EXHAUSTIVE_MAX_WORDS = 20000
DINKELBACH_STEPS = 8


@dataclass(frozen=True)
class SearchSpec:
    alphabet: AmplitudeAlphabet
    target_rate: float
    cardinality: int = 24
    budget: int = 4000
    max_word_len: int = MAX_WORD_LEN
    mode: str = "auto"

    def __post_init__(self):
        if self.cardinality < 2:
            raise ValueError("cardinality must be at least 2")
        if not self.target_rate > 0:
            raise ValueError("target rate must be positive")
        if self.mode not in ("auto", "exhaustive", "heuristic"):
            raise ValueError(f"unknown search mode {self.mode!r}")

    @property
    def resolved_mode(self) -> str:
        if self.mode != "auto":
            return self.mode
        return "exhaustive" if self.cardinality <= EXHAUSTIVE_MAX_CARDINALITY else "heuristic"


@dataclass(frozen=True)
class SearchResult:
    code: PrefixCode
    metrics: CodeMetrics
    proven_optimal: bool


# ------------------------------------------------------------ enumeration


def enumerate_input_profiles(cardinality: int) -> list[tuple[int, ...]]:
    """Sorted depth multisets of all complete binary prefix codes with ``cardinality`` words."""
    if cardinality < 2:
        raise ValueError("cardinality must be at least 2")
    if cardinality > ENUMERATION_MAX_CARDINALITY:
        raise EnumerationOverflow(
            f"refusing to enumerate profiles for cardinality {cardinality} > {ENUMERATION_MAX_CARDINALITY}"
        )
    out = []

    def grow(depth, free, left, acc):
        # `free` open nodes at `depth`, `left` words still to place
        if free == 0:
            if left == 0:
                out.append(tuple(acc))
            return
        for leaves in range(min(free, left), -1, -1):
            internal = free - leaves
            if 2 * internal > left - leaves or (internal == 0 and leaves != left):
                continue
            grow(depth + 1, 2 * internal, left - leaves, acc + [depth] * leaves)

    grow(1, 2, cardinality, [])
    return sorted(out)


def canonical_input_words(depths: Sequence[int]) -> list[str]:
    """Canonical (left-to-right) binary words for a sorted depth profile."""
    words = []
    code = 0
    prev = depths[0]
    for i, d in enumerate(depths):
        if i:
            code = (code + 1) << (d - prev)
        words.append(format(code, f"0{d}b"))
        prev = d
    return words


def enumerate_output_profiles(alphabet: AmplitudeAlphabet, lengths: Sequence[int]) -> list[tuple]:
    """All prefix-free word sets over ``alphabet`` with the given length multiset.

    Each set is returned once, as a sorted tuple of words.
    """
    q = alphabet.size
    if sum(Fraction(1, q**L) for L in lengths) > 1:
        raise Infeasible(f"lengths {sorted(lengths)} violate Kraft on a {q}-ary tree")
    lengths = sorted(lengths)
    results = set()

    def place(i, chosen):
        if i == len(lengths):
            results.add(tuple(sorted(chosen)))
            return
        for w in itertools.product(alphabet.amplitudes, repeat=lengths[i]):
            if i and lengths[i] == lengths[i - 1] and w <= chosen[-1]:
                continue
            if any(w[: len(v)] == v for v in chosen):
                continue
            place(i + 1, chosen + [w])

    place(0, [])
    return sorted(results)


# --------------------------------------------------------------- pairing


def _ratio(depths, words):
    p = [2.0 ** -d for d in depths]
    b = sum(pi * len(w) for pi, w in zip(p, words))
    a = sum(pi * sum(x * x for x in w) for pi, w in zip(p, words))
    return a / b


def exchange_pairing(depths: Sequence[int], words: Sequence) -> list:
    """Most probable row gets the lowest-energy word."""
    ds = sorted(depths)
    ws = sorted(words, key=lambda w: (sum(x * x for x in w), len(w), w))
    return list(zip(ds, ws))


def optimal_pairing(depths: Sequence[int], words: Sequence) -> list:
    """Pairing that minimizes energy per amplitude for fixed depths and words.

    At the optimum ``lam``, the pairing minimizes ``sum p (e - lam L)``, which the
    rearrangement inequality solves by sorting words on ``e - lam L``; iterate
    ``lam`` until the pairing stops changing.
    """
    ds = sorted(depths)
    pairs = exchange_pairing(ds, words)
    lam = _ratio(*zip(*pairs))
    for _ in range(4 * len(ds) + 4):
        ws = sorted(words, key=lambda w: (sum(x * x for x in w) - lam * len(w), w))
        nxt = list(zip(ds, ws))
        new_lam = _ratio(*zip(*nxt))
        if new_lam >= lam - 1e-15:
            break
        pairs, lam = nxt, new_lam
    return pairs


# ------------------------------------------------------------- the 0/1 program


class _Program:
    def __init__(self, words, depth_max, cardinality, target_rate):
        self.words = list(words)
        self.depths = np.arange(1, depth_max + 1)
        nd, nw = len(self.depths), len(self.words)
        self.nd = nd
        self.length = np.array([len(w) for w in self.words], dtype=float)
        self.energy = np.array([sum(x * x for x in w) for w in self.words], dtype=float)
        p = 2.0 ** -self.depths
        self.p = p
        wid = {w: i for i, w in enumerate(self.words)}
        letters = sorted({x for w in self.words for x in w})
        maximal = [w for w in self.words if not any(w + (x,) in wid for x in letters)]
        rows, cols = [], []
        for r, v in enumerate(maximal):
            for k in range(1, len(v) + 1):
                i = wid.get(v[:k])
                if i is not None:
                    rows.extend([r] * nd)
                    cols.extend(range(i * nd, (i + 1) * nd))
        nv = nw * nd
        chains = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(maximal), nv)).tocsr()
        kraft = np.tile(2.0 ** (depth_max - self.depths), nw)
        rate = (p[None, :] * (self.depths[None, :] - target_rate * self.length[:, None])).ravel()
        self.constraints = [
            LinearConstraint(chains, 0, 1),
            LinearConstraint(np.ones((1, nv)), cardinality, cardinality),
            LinearConstraint(kraft[None, :], 2.0**depth_max, 2.0**depth_max),
            LinearConstraint(rate[None, :], 1e-12, np.inf),
        ]
        self.nv = nv

    def solve(self, lam, node_limit=None, exact=False):
        c = (self.p[None, :] * (self.energy[:, None] - lam * self.length[:, None])).ravel()
        options = {"disp": False, "mip_rel_gap": 0.0 if exact else 1e-6}
        if node_limit is not None:
            options["node_limit"] = int(node_limit)
        res = milp(c, constraints=self.constraints, integrality=np.ones(self.nv),
                   bounds=Bounds(0, 1), options=options)
        if res.x is None:
            return None, res.status
        sel = np.flatnonzero(res.x > 0.5)
        rows = [(int(self.depths[i % self.nd]), self.words[i // self.nd]) for i in sel]
        return rows, res.status


def _rows_to_code(rows, alphabet):
    depths = sorted(d for d, _ in rows)
    pairs = sorted(rows, key=lambda r: (r[0], r[1]))
    bits = canonical_input_words(depths)
    return validate_code([(b, w) for b, (_, w) in zip(bits, pairs)], alphabet)


def _all_words(alphabet, max_len):
    total = sum(alphabet.size**L for L in range(1, max_len + 1))
    if total > EXHAUSTIVE_MAX_WORDS:
        raise EnumerationOverflow(
            f"{total} output words up to length {max_len} over {alphabet.size} letters; lower max_word_len"
        )
    return [w for L in range(1, max_len + 1) for w in itertools.product(alphabet.amplitudes, repeat=L)]


def _likely_words(alphabet, target_rate, max_len, limit):
    """The ``limit`` most probable words under the MB distribution at ``target_rate``.

    A word is never likelier than its prefixes, so a best-first walk from the root
    visits them in order.
    """
    rate = min(target_rate, math.log2(alphabet.size))
    probs = mb_min_energy(alphabet, rate).probabilities
    cost = [-math.log(max(p, 1e-300)) for p in probs]
    heap = [(c, (a,)) for c, a in zip(cost, alphabet.amplitudes)]
    heapq.heapify(heap)
    out = []
    while heap and len(out) < limit:
        c, w = heapq.heappop(heap)
        out.append(w)
        if len(w) < max_len:
            for ci, a in zip(cost, alphabet.amplitudes):
                heapq.heappush(heap, (c + ci, w + (a,)))
    return sorted(out, key=lambda w: (len(w), w))


def _better(a: SearchResult, b: SearchResult | None) -> bool:
    if b is None:
        return True
    ka = (a.metrics.energy, a.code.l_max, -a.metrics.rate)
    kb = (b.metrics.energy, b.code.l_max, -b.metrics.rate)
    return ka < kb


def search(spec: SearchSpec) -> SearchResult:
    alphabet = spec.alphabet
    n = spec.cardinality
    target = Fraction(spec.target_rate).limit_denominator(10**12)
    if target > math.log2(alphabet.size) + 1e-12:
        raise NoFeasibleCode(
            f"rate {float(target)} exceeds log2|A| = {math.log2(alphabet.size)} for alphabet {alphabet.amplitudes}"
        )
    exhaustive = spec.resolved_mode == "exhaustive"
    if exhaustive:
        words = _all_words(alphabet, spec.max_word_len)
        depth_max = n - 1
        node_limit = None
    else:
        words = _likely_words(alphabet, float(target), spec.max_word_len, HEURISTIC_CANDIDATES)
        depth_max = min(n - 1, HEURISTIC_MAX_DEPTH)
        node_limit = spec.budget
    program = _Program(words, depth_max, n, float(target))

    lam = mb_min_energy(alphabet, float(target)).mean_energy
    best: SearchResult | None = None
    proven = exhaustive
    for step in range(DINKELBACH_STEPS):
        rows, status = program.solve(lam, node_limit=node_limit, exact=exhaustive)
        if rows is None:
            if best is None and status == 2:
                raise NoFeasibleCode(
                    f"no code with |C|={n} reaches rate {float(target)} over {alphabet.amplitudes}"
                )
            proven = proven and status == 0
            break
        if status != 0:
            proven = False
        try:
            code = _rows_to_code(rows, alphabet)
        except CodeValidationError:
            proven = False
            break
        metrics = energy_gap(code)
        cand = SearchResult(code, metrics, False)
        improved = best is None or metrics.energy < best.metrics.energy
        if metrics.rate >= target and _better(cand, best):
            best = cand
        if step > 0 and not improved:
            break
        lam = float(best.metrics.energy) if best is not None else float(metrics.energy)
    if best is None:
        raise NoFeasibleCode(f"search found no code meeting rate {float(target)}")
    return SearchResult(best.code, best.metrics, proven)


# ---------------------------------------------------------------- catalog


@dataclass(frozen=True)
class CatalogEntry:
    target_rate: float
    code: PrefixCode
    metrics: CodeMetrics
    file: str


def catalog_filename(rate: float, qam: int) -> str:
    return f"rd{rate:.3f}_q{qam}.pfc"


def build_catalog(alphabet: AmplitudeAlphabet, rate_grid: Iterable[float], cardinality: int = 24,
                  out_dir=None, budget: int = 4000, bin_width: float = 0.005) -> list[CatalogEntry]:
    """Best code per rate bin; optionally written as ``.pfc`` files plus ``catalog.csv``.

    Each grid rate is the centre of a bin of width ``bin_width``, and the search
    asks for the bin's lower edge. A fixed cardinality cannot always hit a grid
    rate exactly: 24 rows over four amplitudes never reach 2 bits.
    """
    grid = [float(r) for r in rate_grid]
    if not grid:
        raise ValueError("rate grid is empty")
    if any(r <= bin_width / 2 for r in grid):
        raise ValueError(f"grid rates must exceed half the bin width ({bin_width / 2})")
    entries = []
    for r in grid:
        res = search(SearchSpec(alphabet, r - bin_width / 2, cardinality, budget=budget))
        entries.append(CatalogEntry(r, res.code, res.metrics, catalog_filename(r, alphabet.qam_order)))
    if out_dir is not None:
        write_catalog(entries, out_dir)
    return entries


def write_catalog(entries: Sequence[CatalogEntry], out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    index = out / "catalog.csv"
    existing = {}
    if index.exists():
        with index.open(newline="") as fh:
            for row in csv.DictReader(fh):
                existing[row["file"]] = row
    for e in entries:
        m = e.metrics
        (out / e.file).write_text(
            format_pfc(e.code, [f"target_rate {e.target_rate}", f"rate {float(m.rate):.6f}",
                                f"energy {float(m.energy):.6f}", f"gap_db {m.gap_db:.4f}"]),
            encoding="utf-8",
        )
        existing[e.file] = {
            "qam": e.code.alphabet.qam_order, "target_rate": f"{e.target_rate:.3f}",
            "achieved_rate": f"{float(m.rate):.6f}", "energy": f"{float(m.energy):.6f}",
            "mb_energy": f"{m.mb_energy:.6f}", "gap_db": f"{m.gap_db:.4f}", "file": e.file,
        }
    fields = ["qam", "target_rate", "achieved_rate", "energy", "mb_energy", "gap_db", "file"]
    rows = sorted(existing.values(), key=lambda r: (int(r["qam"]), float(r["target_rate"])))
    with index.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
