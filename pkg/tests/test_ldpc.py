from importlib import resources

import numpy as np
import pytest

from pcdm_rm.errors import DimensionMismatch, InvalidLifting, LengthInfeasible, ParseError, TooLarge
from pcdm_rm.ldpc import (
    Z_VALUES,
    PunctureMode,
    base_graph,
    build_code,
    load_base_graph,
    select_lifting,
)

from oracles import expanded_parity_check


def test_bundled_base_graphs():
    g1, g2 = base_graph(1), base_graph(2)
    assert (g1.rows, g1.cols, g1.info_cols) == (46, 68, 22)
    assert (g2.rows, g2.cols, g2.info_cols) == (42, 52, 10)
    for g in (g1, g2):
        assert all(0 <= s <= 383 for v in g.shifts.values() for s in v)


def test_lifting_sizes_are_the_51_standard_values():
    assert len(Z_VALUES) == 51
    assert Z_VALUES[0] == 2 and Z_VALUES[-1] == 384


def test_truncated_and_mismatched_tables(tmp_path):
    lines = tmp_path / "bg.txt"
    text = resources.files("pcdm_rm").joinpath("data/bg2.txt").read_text().splitlines()
    lines.write_text("\n".join(text[: len(text) // 2]) + "\n")
    with pytest.raises(ParseError):
        load_base_graph(lines)
    lines.write_text("#bg 2 40 52 10\n" + "\n".join(text[1:]) + "\n")
    with pytest.raises(DimensionMismatch):
        load_base_graph(lines)
    lines.write_text("0 0 1 1 1 1 1 1 1 1\n")
    with pytest.raises(ParseError):
        load_base_graph(lines)


@pytest.mark.parametrize("k_c, bg, z", [(420, 1, 20), (210, 2, 28), (510, 1, 24), (270, 2, 36),
                                        (360, 2, 48), (405, 1, 20), (840, 1, 40), (100, 2, 18)])
def test_select_lifting(k_c, bg, z):
    assert select_lifting(k_c, bg) == z


def test_select_lifting_too_large():
    with pytest.raises(TooLarge):
        select_lifting(22 * 384 + 1, 1)
    with pytest.raises(ValueError):
        select_lifting(0, 1)


def test_build_code_fillers_and_errors():
    assert build_code(1, 20, 420, 600, PunctureMode.PARITY_ONLY).fillers == 20
    # K_b = 8 only sizes Z; the encoder keeps all 10 systematic columns
    assert build_code(2, 28, 210, 600, PunctureMode.STANDARD_INFO).fillers == 10 * 28 - 210
    with pytest.raises(InvalidLifting):
        build_code(1, 2, 420, 600)
    with pytest.raises(InvalidLifting):
        build_code(1, 17, 300, 600)
    with pytest.raises(LengthInfeasible):
        build_code(1, 20, 420, 400)


CASES = [(2, 28, 210, 600), (1, 20, 420, 600), (1, 22, 480, 600), (1, 24, 510, 600), (2, 36, 270, 600),
         (2, 52, 390, 600)]


@pytest.mark.parametrize("bg, z, k_c, n_c", CASES)
@pytest.mark.parametrize("mode", list(PunctureMode))
def test_encoder_satisfies_expanded_parity_checks(bg, z, k_c, n_c, mode):
    code = build_code(bg, z, k_c, n_c, mode)
    h = expanded_parity_check(bg, z)
    rng = np.random.default_rng(z)
    info = rng.integers(0, 2, (20, k_c), dtype=np.uint8)
    full = code.encode_full(info)
    assert not ((h @ full.T.astype(np.int64)) % 2).any()
    tx = code.encode(info)
    assert tx.shape == (20, n_c)
    if mode is PunctureMode.PARITY_ONLY:
        assert np.array_equal(tx[:, :k_c], info)


def test_linearity_and_zero_word():
    code = build_code(1, 20, 420, 600)
    rng = np.random.default_rng(1)
    a, b = rng.integers(0, 2, (2, 420), dtype=np.uint8)
    assert not code.encode(np.zeros(420, dtype=np.uint8)).any()
    assert np.array_equal(code.encode(a) ^ code.encode(b), code.encode(a ^ b))


@pytest.mark.parametrize("bg, z, k_c, n_c", CASES)
@pytest.mark.parametrize("min_sum", [False, True])
def test_noiseless_decoding(bg, z, k_c, n_c, min_sum):
    for mode in PunctureMode:
        code = build_code(bg, z, k_c, n_c, mode)
        info = np.random.default_rng(3).integers(0, 2, (8, k_c), dtype=np.uint8)
        llr = 8.0 * (1 - 2 * code.encode(info).astype(float))
        out, ok = code.decode(llr, min_sum=min_sum)
        assert ok.all() and np.array_equal(out, info)


def test_single_flip_is_corrected():
    code = build_code(1, 20, 420, 600)
    info = np.random.default_rng(4).integers(0, 2, 420, dtype=np.uint8)
    llr = 10.0 * (1 - 2 * code.encode(info).astype(float))
    for pos in (0, 137, 419, 599):
        bad = llr.copy()
        bad[pos] = -bad[pos] / 5
        out, ok = code.decode(bad)
        assert ok and np.array_equal(out, info)


def test_decoder_is_deterministic_and_more_iterations_help():
    code = build_code(2, 28, 210, 600, PunctureMode.STANDARD_INFO)
    rng = np.random.default_rng(5)
    info = rng.integers(0, 2, (400, 210), dtype=np.uint8)
    x = 1 - 2 * code.encode(info).astype(float)
    sigma2 = 0.6
    llr = 2 * (x + rng.normal(0, np.sqrt(sigma2), x.shape)) / sigma2
    errs = []
    for it in (1, 3, 12):
        out, _ = code.decode(llr, iterations=it)
        errs.append(int((out != info).any(axis=1).sum()))
    assert errs[0] > errs[1] > errs[2]
    again, _ = code.decode(llr, iterations=12)
    assert int((again != info).any(axis=1).sum()) == errs[2]
