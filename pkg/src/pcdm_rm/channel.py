"""AWGN channel, soft demapping and the Monte-Carlo BLER harness.

SNR is Es/N0 per complex symbol, with Es measured on each transmitted block, so
a shaped constellation (lower Es) gets proportionally less noise at equal SNR.
Per-real-dimension noise variance is N0/2.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .codec import FramedCodeConfig
from .errors import NotBracketed
from .pas import (
    RmPlanEntry,
    Scheme,
    baseline_ldpc_code,
    gray_index,
    gray_labels,
    pas_ldpc_code,
    pas_receive,
    pas_transmit,
)
from .shaping import AmplitudeAlphabet, PrefixCode, stationary_distribution

BATCH = 250


def awgn(symbols, snr_db, rng: np.random.Generator | None = None, *, noiseless: bool = False,
         normal: np.ndarray | None = None):
    """Add complex Gaussian noise at Es/N0 = ``snr_db``; returns ``(y, n0)``.

    ``normal`` may supply pre-drawn standard normals of shape ``(..., n, 2)``,
    which is how the harness reuses one per-block noise draw across SNR points.
    """
    x = np.asarray(symbols, dtype=complex)
    es = np.mean(np.abs(x) ** 2, axis=-1, keepdims=True)
    if noiseless or snr_db is None or math.isinf(snr_db):
        return x.copy(), np.zeros(es.shape[:-1])
    n0 = es / 10.0 ** (snr_db / 10.0)
    if normal is None:
        normal = rng.standard_normal(x.shape + (2,))
    noise = (normal[..., 0] + 1j * normal[..., 1]) * np.sqrt(n0 / 2.0)
    return x + noise, n0[..., 0]


def demap_llr(y, amplitudes, priors, n0) -> np.ndarray:
    """Bit LLRs ``ln P(b=0|y) / P(b=1|y)`` for each real sample of ``y``.

    Output has a trailing axis of length ``m``: the sign bit (1 means negative)
    followed by the Gray label bits of the amplitude index.  ``n0`` broadcasts
    against ``y``; the per-dimension likelihood is ``exp(-(y - x)^2 / n0)``.
    """
    amps = np.asarray(amplitudes, dtype=float)
    priors = np.asarray(priors, dtype=float)
    q = len(amps)
    u = int(math.log2(q))
    labels = gray_labels(u)
    points = np.concatenate([amps, -amps])
    bits = np.zeros((2 * q, u + 1), dtype=np.uint8)
    bits[q:, 0] = 1
    bits[:, 1:] = np.vstack([labels, labels])
    logp = np.log(np.concatenate([priors, priors]) / 2.0)
    y = np.asarray(y, dtype=float)
    n0 = np.broadcast_to(np.asarray(n0, dtype=float), y.shape)
    metric = logp - (y[..., None] - points) ** 2 / n0[..., None]
    out = np.empty(y.shape + (u + 1,))
    for j in range(u + 1):
        zero = metric[..., bits[:, j] == 0]
        one = metric[..., bits[:, j] == 1]
        out[..., j] = _logsumexp(zero) - _logsumexp(one)
    return out


def _logsumexp(a):
    mx = a.max(axis=-1)
    return mx + np.log(np.exp(a - mx[..., None]).sum(axis=-1))


# ------------------------------------------------------------------ harness


@dataclass(frozen=True)
class SimConfig:
    plan: RmPlanEntry
    snr_grid_db: tuple[float, ...]
    blocks: int = 10_000
    seed: int = 1
    target_bler: float = 1e-2
    iterations: int = 12
    min_sum: bool = False
    noiseless: bool = False
    pcdm_code: PrefixCode | None = None

    def __post_init__(self):
        if self.blocks < 1:
            raise ValueError("blocks must be >= 1")
        grid = list(self.snr_grid_db)
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("SNR grid must be strictly increasing")
        if self.plan.scheme is Scheme.PCDM_RM and self.pcdm_code is None:
            raise ValueError("a PCDM-RM simulation needs a PCDM code")
        object.__setattr__(self, "snr_grid_db", tuple(float(s) for s in grid))


@dataclass(frozen=True)
class SnrRecord:
    snr_db: float
    blocks: int
    block_errors: int
    bit_errors: int
    ldpc_block_errors: int
    info_bits: int = 0

    @property
    def bler(self) -> float:
        return self.block_errors / self.blocks

    @property
    def ber(self) -> float:
        return self.bit_errors / (self.blocks * self.info_bits) if self.info_bits else 0.0


@dataclass(frozen=True)
class SimResult:
    config: SimConfig
    records: tuple[SnrRecord, ...]
    # per-SNR arrays of (info-level error, LDPC systematic error) per trial
    trial_errors: tuple[np.ndarray, ...] = field(repr=False, default=())

    @property
    def required_snr_db(self) -> float | None:
        try:
            return required_snr(self, self.config.target_bler)
        except NotBracketed:
            return None


def block_stream(seed: int, block: int) -> np.random.Generator:
    """Independent generator for one trial, keyed only by (seed, block index)."""
    return np.random.default_rng(np.random.SeedSequence([int(seed) & (2**64 - 1), int(block)]))


class _UniformStack:
    """Gray-mapped uniform QAM with the standard-punctured LDPC code."""

    def __init__(self, plan: RmPlanEntry):
        self.plan = plan
        self.code = baseline_ldpc_code(plan)
        self.alphabet = AmplitudeAlphabet.for_qam(plan.qam_order)
        self.m = self.alphabet.m
        self.priors = np.full(self.alphabet.size, 1.0 / self.alphabet.size)

    @property
    def info_len(self) -> int:
        return self.plan.k_c

    def transmit(self, info):
        cw = self.code.encode(info).reshape(len(info), -1, self.m)
        amps = np.asarray(self.alphabet.amplitudes)[gray_index(cw[..., 1:])]
        reals = np.where(cw[..., 0] == 1, -amps, amps).astype(float)
        return reals[:, 0::2] + 1j * reals[:, 1::2], info

    def receive(self, y, n0, iterations, min_sum):
        reals = np.empty((y.shape[0], 2 * y.shape[1]))
        reals[:, 0::2], reals[:, 1::2] = y.real, y.imag
        llr = demap_llr(reals, self.alphabet.amplitudes, self.priors, n0[:, None])
        info, _ = self.code.decode(llr.reshape(len(y), -1), iterations=iterations, min_sum=min_sum)
        return info, info


class _PasStack:
    def __init__(self, plan: RmPlanEntry, code: PrefixCode):
        self.plan = plan
        self.config = FramedCodeConfig(code, plan.k_d, plan.n_d)
        self.code = pas_ldpc_code(plan)
        self.priors = stationary_distribution(code)

    @property
    def info_len(self) -> int:
        return self.plan.k_d + self.plan.s_info

    def transmit(self, info):
        blk = pas_transmit(self.plan, self.config, self.code, info)
        return blk.symbols, blk.systematic

    def receive(self, y, n0, iterations, min_sum):
        rx = pas_receive(self.plan, self.config, self.code, y, n0, self.priors, iterations, min_sum)
        return rx.info_bits, rx.systematic


def make_stack(plan: RmPlanEntry, pcdm_code: PrefixCode | None = None):
    if plan.scheme is Scheme.PCDM_RM:
        return _PasStack(plan, pcdm_code)
    return _UniformStack(plan)


def run_bler(config: SimConfig, progress=None) -> SimResult:
    """Monte-Carlo block/bit error tallies over the SNR grid.

    Trial ``b`` draws its info bits and unit noise from :func:`block_stream`
    (seed, b) and reuses them at every SNR point, so results do not depend on
    batching and a longer run extends a shorter one.
    """
    stack = make_stack(config.plan, config.pcdm_code)
    k = stack.info_len
    n_sym = config.plan.complex_symbols
    tallies = [[0, 0, 0] for _ in config.snr_grid_db]
    trials = [[] for _ in config.snr_grid_db]
    for lo in range(0, config.blocks, BATCH):
        hi = min(config.blocks, lo + BATCH)
        gens = [block_stream(config.seed, b) for b in range(lo, hi)]
        info = np.stack([g.integers(0, 2, k, dtype=np.uint8) for g in gens])
        normal = np.stack([g.standard_normal((n_sym, 2)) for g in gens])
        x, ref_sys = stack.transmit(info)
        for i, snr in enumerate(config.snr_grid_db):
            y, n0 = awgn(x, snr, noiseless=config.noiseless, normal=normal)
            if config.noiseless:
                n0 = np.full(len(y), 1e-9)
            est, sys_est = stack.receive(y, n0, config.iterations, config.min_sum)
            err_bits = (est != info).sum(axis=1)
            blk_err = err_bits > 0
            ldpc_err = (sys_est != ref_sys).any(axis=1)
            tallies[i][0] += int(blk_err.sum())
            tallies[i][1] += int(err_bits.sum())
            tallies[i][2] += int(ldpc_err.sum())
            trials[i].append(np.stack([blk_err, ldpc_err], axis=1))
        if progress:
            progress(hi, config.blocks)
    records = tuple(SnrRecord(s, config.blocks, t[0], t[1], t[2], k)
                    for s, t in zip(config.snr_grid_db, tallies))
    return SimResult(config, records, tuple(np.concatenate(t) for t in trials))


def required_snr(result_or_points, target_bler: float = 1e-2) -> float:
    """SNR where BLER crosses ``target_bler``, interpolating linearly in log10(BLER).

    Accepts a :class:`SimResult` or a sequence of ``(snr_db, bler)`` pairs; uses
    the first grid interval that brackets the target.
    """
    if isinstance(result_or_points, SimResult):
        pts = [(r.snr_db, r.bler) for r in result_or_points.records]
    else:
        pts = [(float(s), float(b)) for s, b in result_or_points]
    pts.sort()
    for (s0, b0), (s1, b1) in zip(pts, pts[1:]):
        if b0 >= target_bler > b1 or b0 > target_bler >= b1:
            if b1 <= 0:
                # a zero-error point has no log; report the grid point itself (conservative)
                return s1
            l0, l1, lt = math.log10(b0), math.log10(b1), math.log10(target_bler)
            return s0 + (lt - l0) * (s1 - s0) / (l1 - l0)
    raise NotBracketed(f"target BLER {target_bler} is not bracketed by the grid {[p[0] for p in pts]}")


RESULT_HEADER = ["scheme", "qam", "nc", "ir", "snr_db", "blocks", "block_errors", "bit_errors", "bler", "ber"]
SUMMARY_HEADER = ["scheme", "nc", "ir", "qam", "required_snr_db"]


def result_rows(result: SimResult) -> list[list]:
    p = result.config.plan
    return [[p.scheme.value, p.qam_order, p.n_c, f"{float(p.ir):.1f}", f"{r.snr_db:g}", r.blocks,
             r.block_errors, r.bit_errors, f"{r.bler:.6g}", f"{r.ber:.6g}"] for r in result.records]


def summary_row(result: SimResult) -> list:
    p = result.config.plan
    req = result.required_snr_db
    return [p.scheme.value, p.n_c, f"{float(p.ir):.1f}", p.qam_order, "" if req is None else f"{req:.4f}"]


def write_results_csv(results: Sequence[SimResult], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(RESULT_HEADER)
    for res in results:
        w.writerows(result_rows(res))


def write_summary_csv(results: Sequence[SimResult], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(SUMMARY_HEADER)
    for res in results:
        w.writerow(summary_row(res))
