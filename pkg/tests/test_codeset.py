from fractions import Fraction

import pytest

from pcdm_rm.codeset import (
    CodeChoice,
    code_for,
    codeset_filename,
    framed_energy,
    framed_gap_db,
    load_code_set,
    write_code_set,
)
from pcdm_rm.pas import pcdm_rm_plans
from pcdm_rm.shaping import asymptotic_metrics, c2_code


def test_filenames():
    assert codeset_filename(16, Fraction(9, 5)) == "q16_ir1.8.pfc"
    assert codeset_filename(256, 6) == "q256_ir6.0.pfc"


def test_write_and_load_round_trip(tmp_path):
    choice = CodeChoice(16, Fraction(9, 5), Fraction(1, 2), 0.0, c2_code(), 0.5)
    write_code_set([choice], tmp_path)
    loaded = load_code_set(tmp_path)
    assert loaded == {(16, Fraction(9, 5)): c2_code()}
    assert (tmp_path / "codeset.csv").read_text().splitlines()[1] == "16,1.8,1/2,0.0,q16_ir1.8.pfc"


def test_framed_energy_is_seeded_and_above_asymptotic():
    a = framed_energy(c2_code(), 150, 300, blocks=50, seed=3)
    assert a == framed_energy(c2_code(), 150, 300, blocks=50, seed=3)
    assert a > float(asymptotic_metrics(c2_code())[1])
    assert framed_gap_db(c2_code(), 150, 300, blocks=50) > 0


def test_shipped_set_covers_every_operating_point():
    codes = load_code_set()
    plans = pcdm_rm_plans(600)
    assert len(codes) == len(plans) == 28
    for p in plans:
        code = codes[(p.qam_order, p.ir)]
        rate, _ = asymptotic_metrics(code)
        assert code.cardinality == 24
        assert code.alphabet.qam_order == p.qam_order
        assert rate >= p.r_d
    assert code_for(16, 1.8) == codes[(16, Fraction(9, 5))]
    with pytest.raises(KeyError):
        code_for(16, 5.0)
