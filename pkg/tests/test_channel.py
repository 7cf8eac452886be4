import io

import numpy as np
import pytest

from pcdm_rm.channel import (
    SimConfig,
    awgn,
    demap_llr,
    required_snr,
    run_bler,
    write_results_csv,
    write_summary_csv,
)
from pcdm_rm.errors import NotBracketed
from pcdm_rm.pas import plan_ldpc_rm, plan_pcdm_rm
from pcdm_rm.shaping import c2_code, stationary_distribution

from oracles import posterior_llrs

# Gray labels written out by hand, amplitude index ascending
GRAY = {
    2: [[0], [1]],
    4: [[0, 0], [0, 1], [1, 1], [1, 0]],
    8: [[0, 0, 0], [0, 0, 1], [0, 1, 1], [0, 1, 0], [1, 1, 0], [1, 1, 1], [1, 0, 1], [1, 0, 0]],
}


def test_awgn_variance_and_noiseless():
    rng = np.random.default_rng(0)
    x = np.full(1_000_000, 3 + 1j)
    y, n0 = awgn(x, 7.0, rng)
    assert float(n0) == pytest.approx(10 / 10 ** 0.7)
    assert np.var(y - x) == pytest.approx(float(n0), rel=0.01)
    assert np.var((y - x).real) == pytest.approx(float(n0) / 2, rel=0.01)
    z, _ = awgn(x[:10], 7.0, noiseless=True)
    assert np.array_equal(z, x[:10])


def test_awgn_is_seed_deterministic():
    x = np.ones((4, 100), dtype=complex)
    a, _ = awgn(x, 3.0, np.random.default_rng(9))
    b, _ = awgn(x, 3.0, np.random.default_rng(9))
    assert np.array_equal(a, b)


def test_demapper_sign_llr_is_zero_at_origin():
    for amps in ((1, 3), (1, 3, 5, 7)):
        q = len(amps)
        uniform = np.full(q, 1 / q)
        shaped = np.arange(q, 0, -1) / (q * (q + 1) / 2)
        for pri in (uniform, shaped):
            assert demap_llr(0.0, amps, pri, 0.7)[0] == pytest.approx(0.0, abs=1e-12)


def test_demapper_matches_enumeration_oracle():
    rng = np.random.default_rng(1)
    for amps in ((1, 3), (1, 3, 5, 7), (1, 3, 5, 7, 9, 11, 13, 15)):
        q = len(amps)
        for _ in range(200):
            pri = rng.dirichlet(np.ones(q))
            n0 = float(rng.uniform(0.05, 5))
            y = float(rng.choice(amps) * rng.choice((-1, 1)) + rng.normal(0, np.sqrt(n0 / 2)))
            got = demap_llr(y, amps, pri, n0)
            assert got == pytest.approx(posterior_llrs(y, amps, pri, n0, GRAY[q]), abs=1e-10)


def test_demapper_broadcasts_noise_per_block():
    y = np.array([[0.3, -2.0], [1.1, 4.0]])
    n0 = np.array([[0.5], [2.0]])
    out = demap_llr(y, (1, 3), (0.7, 0.3), n0)
    assert out.shape == (2, 2, 2)
    assert out[1, 0] == pytest.approx(demap_llr(1.1, (1, 3), (0.7, 0.3), 2.0))


def test_required_snr_examples():
    assert required_snr([(5, 1e-1), (6, 1e-3)], 1e-2) == pytest.approx(5.5)
    assert required_snr([(4, 0.9), (5, 0.2), (6, 0.001), (7, 0.0)]) == pytest.approx(
        5 + (np.log10(0.01) - np.log10(0.2)) / (np.log10(0.001) - np.log10(0.2)))
    with pytest.raises(NotBracketed):
        required_snr([(5, 0.5), (6, 0.2)], 1e-2)
    with pytest.raises(NotBracketed):
        required_snr([(5, 0.001), (6, 0.0)], 1e-2)


def test_sim_config_validation():
    plan = plan_ldpc_rm(600, 1.8, 16)
    with pytest.raises(ValueError):
        SimConfig(plan, (3.0, 2.0))
    with pytest.raises(ValueError):
        SimConfig(plan, (3.0,), blocks=0)
    with pytest.raises(ValueError):
        SimConfig(plan_pcdm_rm(600, 1.8, 16), (3.0,))


def test_noiseless_runs_have_no_errors():
    for cfg in (SimConfig(plan_ldpc_rm(600, 1.8, 16), (0.0, 5.0), blocks=60, noiseless=True),
                SimConfig(plan_pcdm_rm(600, 1.8, 16), (0.0, 5.0), blocks=60, noiseless=True, pcdm_code=c2_code())):
        res = run_bler(cfg)
        assert all(r.block_errors == 0 and r.bit_errors == 0 for r in res.records)


def test_seed_determinism_and_prefix_stability():
    plan = plan_pcdm_rm(600, 1.8, 16)
    short = run_bler(SimConfig(plan, (4.0, 6.0), blocks=300, seed=5, pcdm_code=c2_code()))
    again = run_bler(SimConfig(plan, (4.0, 6.0), blocks=300, seed=5, pcdm_code=c2_code()))
    long = run_bler(SimConfig(plan, (4.0, 6.0), blocks=600, seed=5, pcdm_code=c2_code()))
    assert short.records == again.records
    for a, b in zip(short.trial_errors, long.trial_errors):
        assert np.array_equal(a, b[:300])


def test_waterfall_error_equivalence_and_bit_counts():
    plan = plan_pcdm_rm(600, 1.8, 16)
    res = run_bler(SimConfig(plan, (3.0, 5.0, 7.0, 9.0), blocks=500, seed=2, pcdm_code=c2_code()))
    assert res.records[-1].bler < res.records[0].bler
    for rec, trials in zip(res.records, res.trial_errors):
        assert np.array_equal(trials[:, 0], trials[:, 1])
        assert rec.bit_errors >= rec.block_errors == rec.ldpc_block_errors
        assert rec.bler == rec.block_errors / rec.blocks


def test_csv_outputs_are_stable():
    plan = plan_ldpc_rm(600, 1.8, 16)
    res = run_bler(SimConfig(plan, (4.0, 6.0, 8.0), blocks=250, seed=3))
    a, b = io.StringIO(), io.StringIO()
    write_results_csv([res], a)
    write_results_csv([run_bler(SimConfig(plan, (4.0, 6.0, 8.0), blocks=250, seed=3))], b)
    assert a.getvalue() == b.getvalue()
    lines = a.getvalue().splitlines()
    assert lines[0] == "scheme,qam,nc,ir,snr_db,blocks,block_errors,bit_errors,bler,ber"
    assert len(lines) == 4 and lines[1].startswith("ldpc,16,600,1.8,4,250,")
    s = io.StringIO()
    write_summary_csv([res], s)
    assert s.getvalue().splitlines()[0] == "scheme,nc,ir,qam,required_snr_db"


def test_stationary_priors_feed_demapper():
    pri = stationary_distribution(c2_code())
    assert pri.sum() == pytest.approx(1.0) and pri[0] > pri[1]
