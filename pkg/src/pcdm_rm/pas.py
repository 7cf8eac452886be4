"""Rate-matching planner and the PAS transmit/receive chain.

Two ways to hit a target information rate (IR, information bits per complex
symbol) with a length-``N_C`` LDPC code:

* LDPC-based rate matching picks a uniform QAM order and an LDPC code rate
  ``R_C = IR / (2m)`` for every IR.
* PCDM-based rate matching keeps one LDPC code per QAM order and moves the
  rate into the distribution matcher: ``IR = 2 (1 + R_D - m (1 - R_C))``.

Real-symbol layout inside one PAS block (``N_D`` shaped reals, ``m`` bits each):
the ``m - 1`` amplitude label bits of every real form the head of the
systematic part, followed by ``S_info`` information sign bits; the ``N_D -
S_info`` parity bits of the LDPC code provide the remaining signs.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .codec import FramedCodeConfig, decode_framed, encode_framed
from .errors import InfeasibleRate, LengthMismatch, NegativeRate, NonIntegerK, PcdmError
from .ldpc import PunctureMode, QcLdpcCode, build_code, select_lifting
from .shaping import AmplitudeAlphabet

QAM_ORDERS = (16, 64, 256)
IR_GRID = tuple(Fraction(14 + 2 * i, 10) for i in range(24))  # 1.4 .. 6.0
LDPC_RM_BANDS = {16: (Fraction(14, 10), Fraction(34, 10)),
                 64: (Fraction(28, 10), Fraction(50, 10)),
                 256: (Fraction(44, 10), Fraction(60, 10))}
PCDM_RM_BANDS = {16: (Fraction(14, 10), Fraction(26, 10)),
                 64: (Fraction(26, 10), Fraction(46, 10)),
                 256: (Fraction(42, 10), Fraction(60, 10))}
PCDM_CODE_RATES = {16: Fraction(7, 10), 64: Fraction(4, 5), 256: Fraction(17, 20)}
NC_SET = (600, 1200, 4800)
R_C_MIN, R_C_MAX = Fraction(1, 5), Fraction(8, 9)
BG1_THRESHOLD = Fraction(2, 3)


class Scheme(str, enum.Enum):
    LDPC_RM = "ldpc"
    PCDM_RM = "pcdm"


def as_fraction(x) -> Fraction:
    """Exact value of a decimal rate such as ``1.8`` (via its shortest repr)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


def _bits_per_dim(qam: int) -> int:
    if qam not in QAM_ORDERS:
        raise InfeasibleRate(f"QAM order {qam} not supported; use one of {QAM_ORDERS}")
    return AmplitudeAlphabet.for_qam(qam).m


@dataclass(frozen=True)
class RmPlanEntry:
    scheme: Scheme
    qam_order: int
    bg: int
    z_c: int
    k_c: int
    n_c: int
    ir: Fraction
    n_d: int | None = None
    k_d: int | None = None
    s_info: int | None = None

    @property
    def m(self) -> int:
        return _bits_per_dim(self.qam_order)

    @property
    def r_c(self) -> Fraction:
        return Fraction(self.k_c, self.n_c)

    @property
    def r_d(self) -> Fraction | None:
        return None if self.k_d is None else Fraction(self.k_d, self.n_d)

    @property
    def info_bits(self) -> int:
        """Information bits carried per block."""
        return self.k_c if self.scheme is Scheme.LDPC_RM else self.k_d + self.s_info

    @property
    def complex_symbols(self) -> int:
        return self.n_c // (2 * self.m)

    def csv_row(self) -> list:
        opt = lambda v: "" if v is None else v  # noqa: E731
        return [self.scheme.value, self.qam_order, self.bg, self.z_c, self.k_c, self.n_c,
                opt(self.n_d), opt(self.k_d), opt(self.s_info), f"{float(self.ir):.1f}"]


PLAN_CSV_HEADER = ["scheme", "qam", "bg", "zc", "kc", "nc", "nd", "kd", "s_info", "ir"]


def ir_uniform(m: int, r_c) -> Fraction | float:
    r = as_fraction(r_c)
    if not 0 < r <= 1:
        raise InfeasibleRate(f"code rate {r_c} outside (0, 1]")
    return 2 * m * r if not isinstance(r_c, float) else float(2 * m * r)


def ir_shaped(m: int, r_d, r_c) -> Fraction | float:
    rd, rc = as_fraction(r_d), as_fraction(r_c)
    if rd < 0:
        raise NegativeRate(f"DM rate {r_d} is negative")
    val = 2 * (1 + rd - m * (1 - rc))
    if val < 0:
        raise NegativeRate(f"parity demand m(1-R_C) = {float(m * (1 - rc))} exceeds sign capacity 1 + R_D")
    return float(val) if isinstance(r_d, float) or isinstance(r_c, float) else val


def plan_ldpc_rm(n_c: int, ir, qam: int) -> RmPlanEntry:
    m = _bits_per_dim(qam)
    ir = as_fraction(ir)
    r_c = ir / (2 * m)
    if not R_C_MIN <= r_c <= R_C_MAX:
        raise InfeasibleRate(f"IR {float(ir)} on {qam}-QAM needs R_C = {float(r_c):.4f}, outside [1/5, 8/9]")
    k_c = r_c * n_c
    if k_c.denominator != 1:
        raise NonIntegerK(f"K_C = {float(k_c)} is not an integer for N_C = {n_c}")
    k_c = int(k_c)
    bg = 1 if r_c > BG1_THRESHOLD else 2
    z = select_lifting(k_c, bg)
    return RmPlanEntry(Scheme.LDPC_RM, qam, bg, z, k_c, n_c, ir)


def plan_pcdm_rm(n_c: int, ir, qam: int) -> RmPlanEntry:
    m = _bits_per_dim(qam)
    ir = as_fraction(ir)
    if n_c % m:
        raise NonIntegerK(f"N_C = {n_c} is not a multiple of m = {m}")
    r_c = PCDM_CODE_RATES[qam]
    k_c = r_c * n_c
    if k_c.denominator != 1:
        raise NonIntegerK(f"K_C = {float(k_c)} is not an integer for N_C = {n_c}")
    k_c = int(k_c)
    n_d = n_c // m
    k_d = n_d * (ir / 2 - 1 + m * (1 - r_c))
    if k_d.denominator != 1:
        raise NonIntegerK(f"K_D = {float(k_d)} is not an integer for N_D = {n_d}")
    k_d = int(k_d)
    if not 0 < k_d <= (m - 1) * n_d:
        raise InfeasibleRate(f"IR {float(ir)} on {qam}-QAM needs K_D = {k_d} outside (0, {(m - 1) * n_d}]")
    s_info = k_c - n_d * (m - 1)
    bg = 1 if r_c > BG1_THRESHOLD else 2
    z = select_lifting(k_c, bg)
    return RmPlanEntry(Scheme.PCDM_RM, qam, bg, z, k_c, n_c, ir, n_d, k_d, s_info)


def _band(bands, qam, grid):
    lo, hi = bands[qam]
    return [ir for ir in grid if lo <= ir <= hi]


def ldpc_rm_plans(n_c: int, ir_grid: Iterable = IR_GRID) -> list[RmPlanEntry]:
    grid = [as_fraction(x) for x in ir_grid]
    return [plan_ldpc_rm(n_c, ir, q) for q in QAM_ORDERS for ir in _band(LDPC_RM_BANDS, q, grid)]


def pcdm_rm_plans(n_c: int, ir_grid: Iterable = IR_GRID) -> list[RmPlanEntry]:
    grid = [as_fraction(x) for x in ir_grid]
    return [plan_pcdm_rm(n_c, ir, q) for q in QAM_ORDERS for ir in _band(PCDM_RM_BANDS, q, grid)]


@dataclass(frozen=True)
class PlanSummary:
    n_c_set: tuple[int, ...]
    ldpc_rm_codes: dict[int, int]
    ldpc_rm_z: dict[int, int]
    pcdm_rm_ldpc_codes: dict[int, int]
    pcdm_rm_z: dict[int, int]
    pcdm_codes: int

    @property
    def ldpc_rm_total_codes(self) -> int:
        return sum(self.ldpc_rm_codes.values())

    @property
    def ldpc_rm_total_z(self) -> int:
        return sum(self.ldpc_rm_z.values())

    @property
    def pcdm_rm_total_ldpc_codes(self) -> int:
        return sum(self.pcdm_rm_ldpc_codes.values())

    @property
    def pcdm_rm_total_z(self) -> int:
        return sum(self.pcdm_rm_z.values())

    def rows(self) -> list[list]:
        """Table-style rows: one column per N_C plus a total."""
        head = ["item"] + [f"nc={n}" for n in self.n_c_set] + ["total"]
        cols = self.n_c_set

        def line(name, d, total):
            return [name] + [d[n] for n in cols] + [total]

        return [
            head,
            line("ldpc_rm_ldpc_codes", self.ldpc_rm_codes, self.ldpc_rm_total_codes),
            line("ldpc_rm_submatrix_sizes", self.ldpc_rm_z, self.ldpc_rm_total_z),
            line("pcdm_rm_ldpc_codes", self.pcdm_rm_ldpc_codes, self.pcdm_rm_total_ldpc_codes),
            line("pcdm_rm_submatrix_sizes", self.pcdm_rm_z, self.pcdm_rm_total_z),
            line("pcdm_rm_pcdm_codes", {n: self.pcdm_codes for n in cols}, self.pcdm_codes),
        ]


def plan_summary(n_c_set: Sequence[int] = NC_SET, ir_grid: Iterable = IR_GRID) -> PlanSummary:
    """Implementation counts per code length; totals add the per-length columns.

    LDPC-RM needs one code per operating point; PCDM-RM one LDPC code per QAM
    order and one DM code per (QAM, R_D), shared by all lengths.
    """
    grid = [as_fraction(x) for x in ir_grid]
    n_c_set = tuple(n_c_set)
    ldpc_codes, ldpc_z, pcdm_ldpc, pcdm_z = {}, {}, {}, {}
    dm_codes = set()
    for n_c in n_c_set:
        lp = ldpc_rm_plans(n_c, grid)
        ldpc_codes[n_c] = len(lp)
        # shift tables differ per base graph, so a submatrix size is a (BG, Z) pair
        ldpc_z[n_c] = len({(e.bg, e.z_c) for e in lp})
        pp = pcdm_rm_plans(n_c, grid)
        pcdm_ldpc[n_c] = len({(e.bg, e.z_c, e.k_c) for e in pp})
        pcdm_z[n_c] = len({(e.bg, e.z_c) for e in pp})
        # one DM code per (QAM, R_D); R_D does not depend on N_C
        dm_codes.update((e.qam_order, e.r_d) for e in pp)
    return PlanSummary(n_c_set, ldpc_codes, ldpc_z, pcdm_ldpc, pcdm_z, len(dm_codes))


# ------------------------------------------------------------------ PAS chain


def gray_labels(u: int) -> np.ndarray:
    """``labels[i]``: the ``u`` Gray bits (MSB first) of amplitude index ``i``."""
    i = np.arange(1 << u)
    g = i ^ (i >> 1)
    return ((g[:, None] >> np.arange(u - 1, -1, -1)) & 1).astype(np.uint8)


def gray_index(bits: np.ndarray) -> np.ndarray:
    """Inverse of :func:`gray_labels` along the last axis."""
    bits = np.asarray(bits, dtype=np.int64)
    u = bits.shape[-1]
    out = np.zeros(bits.shape[:-1], dtype=np.int64)
    acc = np.zeros(bits.shape[:-1], dtype=np.int64)
    for j in range(u):
        acc ^= bits[..., j]
        out = (out << 1) | acc
    return out


def _check_pas(plan: RmPlanEntry, config: FramedCodeConfig, code: QcLdpcCode):
    if plan.scheme is not Scheme.PCDM_RM:
        raise ValueError("PAS chain needs a PCDM-RM plan")
    if (config.k_d, config.n_d) != (plan.k_d, plan.n_d):
        raise LengthMismatch(f"framing ({config.k_d}, {config.n_d}) does not match plan ({plan.k_d}, {plan.n_d})")
    if config.code.alphabet.qam_order != plan.qam_order:
        raise LengthMismatch("PCDM code alphabet does not match the plan's QAM order")
    if (code.k_c, code.n_c) != (plan.k_c, plan.n_c) or code.puncture_mode is not PunctureMode.PARITY_ONLY:
        raise LengthMismatch("LDPC code does not match the plan or is not parity-only punctured")


def pas_ldpc_code(plan: RmPlanEntry) -> QcLdpcCode:
    return build_code(plan.bg, plan.z_c, plan.k_c, plan.n_c, PunctureMode.PARITY_ONLY)


def baseline_ldpc_code(plan: RmPlanEntry) -> QcLdpcCode:
    return build_code(plan.bg, plan.z_c, plan.k_c, plan.n_c, PunctureMode.STANDARD_INFO)


class PasBlock(NamedTuple):
    symbols: np.ndarray     # (..., N_D/2) complex
    systematic: np.ndarray  # (..., K_C) LDPC input bits
    amplitudes: np.ndarray  # (..., N_D)


def pas_transmit(plan: RmPlanEntry, pcdm_config: FramedCodeConfig, ldpc_code: QcLdpcCode, info_bits) -> PasBlock:
    """Shape, label, encode and map one block or a batch of blocks (leading axis)."""
    _check_pas(plan, pcdm_config, ldpc_code)
    info = np.asarray(info_bits, dtype=np.uint8)
    single = info.ndim == 1
    info = np.atleast_2d(info)
    if info.shape[1] != plan.k_d + plan.s_info:
        raise LengthMismatch(f"expected {plan.k_d + plan.s_info} info bits, got {info.shape[1]}")
    alphabet = pcdm_config.code.alphabet
    u = alphabet.u
    amps = np.stack([encode_framed(pcdm_config, row[: plan.k_d]) for row in info])
    idx = np.searchsorted(alphabet.amplitudes, amps)
    labels = gray_labels(u)[idx].reshape(len(info), -1)
    systematic = np.concatenate([labels, info[:, plan.k_d:]], axis=1)
    cw = ldpc_code.encode(systematic)
    signs = np.concatenate([info[:, plan.k_d:], cw[:, plan.k_c:]], axis=1)
    reals = np.where(signs == 1, -amps, amps).astype(float)
    symbols = reals[:, 0::2] + 1j * reals[:, 1::2]
    if single:
        return PasBlock(symbols[0], systematic[0], amps[0])
    return PasBlock(symbols, systematic, amps)


class PasReception(NamedTuple):
    info_bits: np.ndarray   # (..., K_D + S_info); zeros where the DM decoder rejected the block
    systematic: np.ndarray  # LDPC decoder's systematic estimate
    dm_ok: np.ndarray       # False where decode_framed rejected the amplitudes
    converged: np.ndarray


def pas_llrs(plan: RmPlanEntry, y: np.ndarray, priors, n0, amplitudes) -> np.ndarray:
    """Decoder-ordered LLRs (``N_C`` per block) for received PAS symbols ``y``."""
    from .channel import demap_llr

    y = np.atleast_2d(y)
    n0 = np.asarray(n0, dtype=float).reshape(-1, 1)
    reals = np.empty((y.shape[0], 2 * y.shape[1]))
    reals[:, 0::2], reals[:, 1::2] = y.real, y.imag
    llr = demap_llr(reals, amplitudes, priors, n0)
    sign = llr[..., 0]
    label = llr[..., 1:].reshape(len(y), -1)
    return np.concatenate([label, sign[:, : plan.s_info], sign[:, plan.s_info:]], axis=1)


def pas_receive(plan: RmPlanEntry, pcdm_config: FramedCodeConfig, ldpc_code: QcLdpcCode, symbols,
                noise_variance, priors=None, iterations: int = 12, min_sum: bool = False) -> PasReception:
    """Demap, decode and de-shape; ``priors`` default to the code's stationary distribution."""
    from .shaping import stationary_distribution

    _check_pas(plan, pcdm_config, ldpc_code)
    y = np.asarray(symbols)
    single = y.ndim == 1
    y = np.atleast_2d(y)
    if y.shape[1] != plan.n_d // 2:
        raise LengthMismatch(f"expected {plan.n_d // 2} symbols, got {y.shape[1]}")
    code = pcdm_config.code
    if priors is None:
        priors = stationary_distribution(code)
    llrs = pas_llrs(plan, y, priors, noise_variance, code.alphabet.amplitudes)
    systematic, converged = ldpc_code.decode(llrs, iterations=iterations, min_sum=min_sum)
    u = code.alphabet.u
    n_lab = plan.n_d * u
    idx = gray_index(systematic[:, :n_lab].reshape(len(y), plan.n_d, u))
    amps = np.asarray(code.alphabet.amplitudes)[idx]
    info = np.zeros((len(y), plan.k_d + plan.s_info), dtype=np.uint8)
    dm_ok = np.ones(len(y), dtype=bool)
    for b in range(len(y)):
        try:
            info[b, : plan.k_d] = decode_framed(pcdm_config, amps[b])
        except PcdmError:
            dm_ok[b] = False
    info[:, plan.k_d:] = systematic[:, n_lab:]
    if single:
        return PasReception(info[0], systematic[0], bool(dm_ok[0]), bool(converged[0]))
    return PasReception(info, systematic, dm_ok, converged)
