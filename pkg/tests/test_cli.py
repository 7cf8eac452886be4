import csv
import io

import numpy as np
import pytest

from pcdm_rm.cli import main
from pcdm_rm.shaping import C2_ROWS, format_pfc, load_pfc, validate_code, AmplitudeAlphabet

from reference_tables import LDPC_RM_600


@pytest.fixture
def c2_file(tmp_path):
    path = tmp_path / "c2.pfc"
    path.write_text(format_pfc(validate_code(C2_ROWS, AmplitudeAlphabet((1, 3)))), encoding="utf-8")
    return path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_analyze_c2(capsys, c2_file):
    code, out, _ = run(capsys, "analyze", c2_file)
    assert code == 0
    assert "R_D           0.50387" in out
    assert "E             1.90402" in out
    gap = float(next(line for line in out.splitlines() if line.startswith("gap_dB")).split()[1])
    assert gap == pytest.approx(0.031, abs=0.005)


def test_analyze_uniform_and_invalid(capsys, tmp_path):
    uni = tmp_path / "u.pfc"
    uni.write_text("#alphabet 1,3\n0\t1\n1\t3\n")
    code, out, _ = run(capsys, "analyze", uni)
    assert code == 0 and "gap_dB        0.0000" in out
    bad = tmp_path / "bad.pfc"
    bad.write_text("#alphabet 1,3\n0\t1\n10\t3\n")
    code, _, err = run(capsys, "analyze", bad)
    assert code == 2 and "KraftDeficit" in err
    code, _, err = run(capsys, "analyze", tmp_path / "missing.pfc")
    assert code == 2


def test_search_commands(capsys, tmp_path):
    out_file = tmp_path / "u.pfc"
    assert run(capsys, "search", "--alphabet", "1,3", "--rate", "1.0", "--cardinality", "2", "--out", out_file)[0] == 0
    assert sorted(load_pfc(out_file).output_words) == [(1,), (3,)]
    code, _, err = run(capsys, "search", "--alphabet", "1,3", "--rate", "1.5", "--cardinality", "4")
    assert code == 2 and "NoFeasibleCode" in err


@pytest.mark.slow
def test_search_reaches_reference_quality(capsys, tmp_path):
    out_file = tmp_path / "c24.pfc"
    code, _, err = run(capsys, "search", "--alphabet", "1,3", "--rate", "0.5038", "--cardinality", "24",
                       "--out", out_file)
    assert code == 0
    energy = float(err.split("E=")[1].split()[0])
    assert energy <= 1.905


def test_encode_decode_round_trip_bits(capsys, tmp_path, c2_file):
    bits = "".join(map(str, np.random.default_rng(0).integers(0, 2, 150)))
    src = tmp_path / "in.txt"
    src.write_text(bits + "\n")
    amps = tmp_path / "amps.txt"
    back = tmp_path / "back.txt"
    assert run(capsys, "encode", "--code", c2_file, "--kd", 150, "--nd", 300, "--in", src, "--out", amps,
               "--bits")[0] == 0
    lines = amps.read_text().splitlines()
    assert len(lines) == 1 and len(lines[0].split(",")) == 300
    assert run(capsys, "decode", "--code", c2_file, "--kd", 150, "--nd", 300, "--in", amps, "--out", back,
               "--bits")[0] == 0
    assert back.read_text().strip() == bits


def test_encode_decode_round_trip_bytes(capsys, tmp_path, c2_file):
    data = bytes(np.random.default_rng(1).integers(0, 256, 150, dtype=np.uint8))
    src, amps, back = tmp_path / "in.bin", tmp_path / "a.txt", tmp_path / "out.bin"
    src.write_bytes(data)
    assert run(capsys, "encode", "--code", c2_file, "--kd", 120, "--nd", 240, "--in", src, "--out", amps)[0] == 0
    assert len(amps.read_text().splitlines()) == 10
    assert run(capsys, "decode", "--code", c2_file, "--kd", 120, "--nd", 240, "--in", amps, "--out", back)[0] == 0
    assert back.read_bytes() == data


def test_encode_wrong_length_is_usage_error(capsys, tmp_path, c2_file):
    src = tmp_path / "in.txt"
    src.write_text("0" * 149)
    code, _, err = run(capsys, "encode", "--code", c2_file, "--kd", 150, "--nd", 300, "--in", src, "--bits")
    assert code == 2 and "K_D" in err
    amps = tmp_path / "a.txt"
    amps.write_text(",".join(["1"] * 299) + "\n")
    code, _, _ = run(capsys, "decode", "--code", c2_file, "--kd", 150, "--nd", 300, "--in", amps)
    assert code == 2


def test_plan_ldpc_full_grid(capsys):
    code, out, _ = run(capsys, "plan", "--scheme", "ldpc", "--nc", 600)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [(int(r["qam"]), int(r["bg"]), int(r["zc"]), int(r["kc"]), float(r["ir"])) for r in rows] == LDPC_RM_600


def test_plan_summary_and_errors(capsys):
    code, out, _ = run(capsys, "plan", "--summary", "--nc", "600,1200,4800")
    assert code == 0
    rows = {r[0]: r[1:] for r in csv.reader(io.StringIO(out))}
    assert rows["ldpc_rm_submatrix_sizes"] == ["10", "7", "10", "27"]
    assert rows["ldpc_rm_ldpc_codes"][-1] == "96"
    assert rows["pcdm_rm_ldpc_codes"][-1] == "9" and rows["pcdm_rm_pcdm_codes"][-1] == "28"
    code, _, err = run(capsys, "plan", "--scheme", "ldpc", "--nc", 600, "--ir", 6.0, "--qam", 16)
    assert code == 2 and "InfeasibleRate" in err
    code, out, _ = run(capsys, "plan", "--scheme", "pcdm", "--nc", 600, "--ir", 1.8, "--qam", 16)
    assert out.splitlines()[1] == "pcdm,16,1,20,420,600,300,150,120,1.8"


def test_simulate_is_seeded_and_noiseless(capsys, tmp_path, c2_file):
    args = ["simulate", "--scheme", "pcdm", "--nc", 600, "--ir", 1.8, "--qam", 16, "--snr", "4:1:6",
            "--blocks", 250, "--code", c2_file]
    code, out1, err = run(capsys, *args)
    assert code == 0 and "# seed = 1" in err
    _, out2, _ = run(capsys, *args)
    assert out1 == out2
    assert out1.splitlines()[0] == "scheme,qam,nc,ir,snr_db,blocks,block_errors,bit_errors,bler,ber"
    code, out, _ = run(capsys, *args, "--noiseless", "--out", tmp_path / "r")
    rows = list(csv.DictReader(open(tmp_path / "r.csv")))
    assert code == 0 and len(rows) == 3 and all(r["block_errors"] == "0" for r in rows)
    assert (tmp_path / "r_summary.csv").exists()


def test_config_file_and_unknown_flags(capsys, tmp_path):
    cfg = tmp_path / "plan.conf"
    cfg.write_text("# plan settings\nscheme = pcdm\nnc = 600\nqam = 64\n")
    code, out, _ = run(capsys, "plan", "--config", cfg)
    assert code == 0 and len(out.splitlines()) == 12
    code, out, _ = run(capsys, "plan", "--config", cfg, "--qam", "256")
    assert len(out.splitlines()) == 11
    assert run(capsys, "plan", "--bogus")[0] == 2
    assert run(capsys, "plan", "--config", tmp_path / "nope.conf")[0] == 2
