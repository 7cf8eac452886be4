import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pcdm_rm.codec import (
    FramedCodeConfig,
    as_bitstring,
    decode_framed,
    decode_stream,
    encode_framed,
    encode_stream,
)
from pcdm_rm.errors import ConfigInfeasible, LengthMismatch, MalformedBlock, UnmatchableSymbols
from pcdm_rm.shaping import AmplitudeAlphabet, asymptotic_metrics, c2_code, validate_code

C2 = c2_code()
BIN = AmplitudeAlphabet((1, 3))
UNIFORM = validate_code([("0", (1,)), ("1", (3,))], BIN)


def test_stream_worked_example():
    enc = encode_stream(C2, "01100")
    assert enc.amplitudes.tolist() == [1] * 9 + [3]
    assert enc.consumed == 5
    dec = decode_stream(C2, enc.amplitudes)
    assert as_bitstring(dec.bits) == "01100"


def test_stream_single_rows_and_empty():
    assert encode_stream(C2, "100").amplitudes.tolist() == [1, 1, 3]
    assert as_bitstring(decode_stream(C2, [1, 1, 3]).bits) == "100"
    enc = encode_stream(C2, "")
    assert enc.amplitudes.size == 0 and enc.consumed == 0


def test_stream_reports_unconsumed_tail():
    enc = encode_stream(C2, "0111")
    assert enc.consumed == 1
    dec = decode_stream(C2, [1, 1, 1, 1, 1, 1, 3, 3])
    assert dec.consumed == 6


def test_decode_stream_rejects_foreign_symbol():
    with pytest.raises(UnmatchableSymbols):
        decode_stream(C2, [1, 1, 5])


@settings(max_examples=200, deadline=None)
@given(st.text(alphabet="01", max_size=300))
def test_stream_round_trip(bits):
    enc = encode_stream(C2, bits)
    dec = decode_stream(C2, enc.amplitudes)
    assert as_bitstring(dec.bits) == bits[: enc.consumed]


def test_framed_all_zero_trace():
    cfg = FramedCodeConfig(C2, 150, 300)
    out = encode_framed(cfg, "0" * 150)
    assert out.tolist() == [1] * 300
    assert decode_framed(cfg, [1] * 300).tolist() == [0] * 150


def test_framed_rate_one_code_is_transparent():
    cfg = FramedCodeConfig(UNIFORM, 4, 4)
    assert encode_framed(cfg, "0110").tolist() == [1, 3, 3, 1]
    assert as_bitstring(decode_framed(cfg, [1, 3, 3, 1])) == "0110"


def test_framed_random_blocks_have_fixed_length():
    cfg = FramedCodeConfig(C2, 150, 300)
    rng = np.random.default_rng(3)
    for _ in range(500):
        x = rng.integers(0, 2, 150, dtype=np.uint8)
        a = encode_framed(cfg, x)
        assert len(a) == 300
        assert np.array_equal(decode_framed(cfg, a), x)


def test_framed_exhaustive_small_blocks():
    # every input of every small (K_D, N_D) pair round-trips and fills N_D exactly
    for k_d, n_d in [(1, 6), (3, 6), (5, 7), (6, 6), (8, 10), (10, 12)]:
        cfg = FramedCodeConfig(C2, k_d, n_d)
        for bits in itertools.product("01", repeat=k_d):
            x = "".join(bits)
            a = encode_framed(cfg, x)
            assert len(a) == n_d
            assert as_bitstring(decode_framed(cfg, a)) == x


def test_framed_decoder_accepts_only_encoder_image():
    # over all 2^8 blocks of length 8, decode succeeds exactly on encoder outputs
    cfg = FramedCodeConfig(C2, 4, 8)
    image = {tuple(encode_framed(cfg, "".join(b)).tolist()) for b in itertools.product("01", repeat=4)}
    for amps in itertools.product((1, 3), repeat=8):
        try:
            x = decode_framed(cfg, amps)
        except (MalformedBlock, UnmatchableSymbols):
            assert amps not in image
        else:
            assert tuple(encode_framed(cfg, x).tolist()) == amps


def test_framed_energy_excess_shrinks_with_block_length():
    _, energy = asymptotic_metrics(C2)
    rng = np.random.default_rng(11)
    excess = []
    for n_d in (150, 300, 600, 1200):
        cfg = FramedCodeConfig(C2, n_d // 2, n_d)
        e = np.mean([np.mean(encode_framed(cfg, rng.integers(0, 2, n_d // 2, dtype=np.uint8)) ** 2.0)
                     for _ in range(1000)])
        excess.append(e - float(energy))
    assert all(x > 0 for x in excess)
    assert all(b < a for a, b in zip(excess, excess[1:]))


def test_framed_determinism():
    cfg = FramedCodeConfig(C2, 150, 300)
    x = np.random.default_rng(5).integers(0, 2, 150, dtype=np.uint8)
    assert np.array_equal(encode_framed(cfg, x), encode_framed(cfg, x))


@pytest.mark.parametrize("k_d, n_d", [(0, 300), (10, 5), (301, 300)])
def test_framed_config_infeasible(k_d, n_d):
    with pytest.raises(ConfigInfeasible):
        FramedCodeConfig(C2, k_d, n_d)


def test_framed_length_errors():
    cfg = FramedCodeConfig(C2, 150, 300)
    with pytest.raises(LengthMismatch):
        encode_framed(cfg, "0" * 149)
    with pytest.raises(LengthMismatch):
        decode_framed(cfg, [1] * 299)


def test_framed_rejects_bad_padding_and_symbols():
    cfg = FramedCodeConfig(C2, 150, 300)
    good = encode_framed(cfg, "0" * 150)
    bad = good.copy()
    bad[-1] = 3
    with pytest.raises(MalformedBlock):
        decode_framed(cfg, bad)
    bad[-1] = 7
    with pytest.raises(UnmatchableSymbols):
        decode_framed(cfg, bad)


def test_framed_on_larger_alphabet():
    a4 = AmplitudeAlphabet((1, 3, 5, 7))
    rows = [("00", (1,)), ("01", (3, 1)), ("10", (3, 3)), ("110", (5,)), ("111", (7,))]
    code = validate_code(rows, a4)
    cfg = FramedCodeConfig(code, 70, 50)
    rng = np.random.default_rng(9)
    for _ in range(300):
        x = rng.integers(0, 2, 70, dtype=np.uint8)
        a = encode_framed(cfg, x)
        assert len(a) == 50 and np.array_equal(decode_framed(cfg, a), x)
