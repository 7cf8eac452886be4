"""The PCDM code set used for PCDM-based rate matching.

One cardinality-24 code per (QAM order, IR) operating point.  A code is chosen
among searched codes whose asymptotic rate sits slightly above the block rate
``K_D / N_D``: too little margin makes the framer fall back to uniform mapping
often, too much wastes energy.  The pick minimizes the measured framed energy
gap summed over the code lengths in :data:`pcdm_rm.pas.NC_SET`, so one code
serves every length.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Callable

import numpy as np

from .codec import FramedCodeConfig, encode_framed
from .pas import NC_SET, QAM_ORDERS, RmPlanEntry, as_fraction, pcdm_rm_plans
from .search import SearchSpec, search
from .shaping import AmplitudeAlphabet, PrefixCode, format_pfc, mb_min_energy, parse_pfc

DEFAULT_MARGINS = (0.0, 0.01, 0.02, 0.03, 0.045, 0.06)
CODESET_DIR = "codeset"
INDEX_FILE = "codeset.csv"


def framed_energy(code: PrefixCode, k_d: int, n_d: int, blocks: int = 500, seed: int = 0) -> float:
    """Mean squared amplitude of framed output over random input blocks."""
    cfg = FramedCodeConfig(code, k_d, n_d)
    rng = np.random.default_rng([seed, k_d, n_d])
    total = 0.0
    for _ in range(blocks):
        a = encode_framed(cfg, rng.integers(0, 2, k_d, dtype=np.uint8)).astype(float)
        total += float(np.dot(a, a))
    return total / (blocks * n_d)


def framed_gap_db(code: PrefixCode, k_d: int, n_d: int, blocks: int = 500, seed: int = 0) -> float:
    e_star = mb_min_energy(code.alphabet, k_d / n_d).mean_energy
    return 10 * math.log10(framed_energy(code, k_d, n_d, blocks, seed) / e_star)


def operating_points(n_c: int = 600) -> list[RmPlanEntry]:
    return pcdm_rm_plans(n_c)


def codeset_filename(qam: int, ir) -> str:
    return f"q{qam}_ir{float(as_fraction(ir)):.1f}.pfc"


@dataclass(frozen=True)
class CodeChoice:
    qam: int
    ir: Fraction
    r_d: Fraction
    margin: float
    code: PrefixCode
    score_db: float


def design_code_set(out_dir=None, margins=DEFAULT_MARGINS, budget: int = 300, blocks: int = 200,
                    seed: int = 0, progress: Callable[[str], None] | None = None) -> list[CodeChoice]:
    """Search, evaluate and pick one code per operating point; optionally write them out."""
    choices = []
    for plan in operating_points(600):
        alphabet = AmplitudeAlphabet.for_qam(plan.qam_order)
        m = alphabet.m
        r_d = plan.r_d
        best = None
        for margin in margins:
            target = float(r_d) + margin
            if target > alphabet.u:
                continue
            code = search(SearchSpec(alphabet, target, 24, budget=budget)).code
            score = 0.0
            for n_c in NC_SET:
                n_d = n_c // m
                k_d = int(r_d * n_d)
                score += framed_gap_db(code, k_d, n_d, blocks, seed)
            if progress:
                progress(f"q{plan.qam_order} ir{float(plan.ir):.1f} margin {margin:.3f}: sum gap {score:.3f} dB")
            if best is None or score < best.score_db:
                best = CodeChoice(plan.qam_order, plan.ir, r_d, margin, code, score)
        choices.append(best)
    if out_dir is not None:
        write_code_set(choices, out_dir)
    return choices


def write_code_set(choices, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with (out / INDEX_FILE).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["qam", "ir", "r_d", "margin", "file"])
        for c in choices:
            name = codeset_filename(c.qam, c.ir)
            (out / name).write_text(
                format_pfc(c.code, [f"qam {c.qam} ir {float(c.ir):.1f} r_d {c.r_d}", f"margin {c.margin}"]),
                encoding="utf-8",
            )
            w.writerow([c.qam, f"{float(c.ir):.1f}", str(c.r_d), c.margin, name])


def load_code_set(directory=None) -> dict[tuple[int, Fraction], PrefixCode]:
    """Shipped (or given) code set keyed by ``(qam, ir)``."""
    if directory is None:
        root = resources.files("pcdm_rm").joinpath(f"data/{CODESET_DIR}")
    else:
        root = Path(directory)
    index = root.joinpath(INDEX_FILE).read_text(encoding="utf-8").splitlines()
    out = {}
    for row in csv.DictReader(index):
        code = parse_pfc(root.joinpath(row["file"]).read_text(encoding="utf-8"))
        out[(int(row["qam"]), as_fraction(float(row["ir"])))] = code
    return out


def code_for(qam: int, ir) -> PrefixCode:
    codes = load_code_set()
    key = (int(qam), as_fraction(ir))
    if key not in codes:
        raise KeyError(f"no shipped PCDM code for {qam}-QAM at IR {float(key[1]):.1f}")
    return codes[key]


__all__ = ["QAM_ORDERS", "design_code_set", "load_code_set", "code_for", "framed_gap_db", "framed_energy"]
