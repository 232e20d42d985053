import math

import numpy as np
import pytest
from scipy.stats import kstest

from stellarq import dhd, estimator, fockspace as fs
from stellarq.errors import DomainError

from _oracles import radial_cdf_interp


def test_vacuum_radial_moment():
    # E_Q[|z|^2] = <n> + 1 = 1 for the vacuum
    b = dhd.sample_q(fs.make_fock(0, 8), 100_000, seed=42)
    m = float(np.mean(np.abs(b.samples) ** 2))
    assert 0.99 <= m <= 1.01


def test_single_photon_radial_moment():
    b = dhd.sample_q(fs.make_fock(1, 8), 100_000, seed=43)
    m = float(np.mean(np.abs(b.samples) ** 2))
    assert m == pytest.approx(2.0, rel=0.02)


def test_empty_batch():
    b = dhd.sample_q(fs.make_fock(0, 8), 0, seed=0)
    assert b.n == 0
    assert b.acceptance_rate == 1.0
    with pytest.raises(DomainError):
        dhd.sample_q(fs.make_fock(0, 8), -1, seed=0)


def test_translate_semantics():
    b = dhd.sample_q(fs.make_fock(0, 8), 1000, seed=4)
    assert dhd.translate_samples(b, 0) == b
    alpha = 0.7 - 0.2j
    fwd = dhd.translate_samples(b, alpha)
    np.testing.assert_array_equal(fwd.effective_samples(), b.samples - alpha)
    back = dhd.translate_samples(fwd, -alpha)
    assert back == b  # exact, including the translation bookkeeping


def test_translated_vacuum_estimates_displaced_overlap():
    # translating vacuum samples by alpha and estimating |0><0| yields
    # |<0|D(alpha)|0>|^2 = e^{-|alpha|^2}
    alpha = 1.0
    b = dhd.sample_q(fs.make_fock(0, 8), 200_000, seed=5)
    t = dhd.translate_samples(b, alpha)
    cfg = estimator.EstimatorConfig(
        fs.TargetOperator.fock_projector(0), 3, 0.25, 0.2, None, "clt"
    )
    est = estimator.estimate(t, cfg)
    assert est.value == pytest.approx(math.exp(-1.0), abs=0.05)


def test_unbalanced_zeta_zero_identical():
    st = fs.make_fock(1, 8)
    assert abs(math.log(0.5 / 0.5)) == 0.0  # R = T means zeta = 0, balanced
    b0 = dhd.sample_q(st, 5000, seed=9)
    bz = dhd.sample_unbalanced(st, 0, 5000, seed=9)
    np.testing.assert_array_equal(b0.samples, bz.samples)


def test_unbalanced_squeezed_vacuum_moments():
    # Q of S(r)|0>: Var(Re z) = (1 + e^{-2r})/4, Var(Im z) = (1 + e^{2r})/4
    r = 0.4
    b = dhd.sample_unbalanced(fs.make_fock(0, 16), r, 200_000, seed=10)
    vr = float(np.var(b.samples.real))
    vi = float(np.var(b.samples.imag))
    assert vr == pytest.approx((1 + math.exp(-2 * r)) / 4, rel=0.02)
    assert vi == pytest.approx((1 + math.exp(2 * r)) / 4, rel=0.02)
    assert b.zeta == r


def test_determinism_across_runs_and_workers():
    st = fs.make_lossy_fock(2, 0.8, 8)
    a = dhd.sample_q(st, 30_000, seed=77)
    b = dhd.sample_q(st, 30_000, seed=77)
    assert a == b
    for workers in (4, 8):
        c = dhd.sample_q(st, 30_000, seed=77, n_workers=workers)
        np.testing.assert_array_equal(a.samples, c.samples)
        assert c.acceptance_rate == a.acceptance_rate


def test_kolmogorov_smirnov_radial(reference_states):
    # |alpha| empirical distribution vs the radial CDF from quadrature
    for name in ("vacuum", "one", "two", "squeezed_thermal"):
        state = reference_states[name]
        b = dhd.sample_q(state, 100_000, seed=hash(name) % 2**32)
        cdf = radial_cdf_interp(state, s_max=14.0)
        res = kstest(np.abs(b.samples), cdf)
        assert res.pvalue > 1e-3, (name, res)


def test_envelope_correctness(reference_states):
    rng = np.random.default_rng(21)
    for name in ("one", "lossy2_06", "squeezed_thermal"):
        state = reference_states[name]
        sigma, envelope = dhd.certify_envelope(state)
        z = sigma * (rng.standard_normal(1_000_000) + 1j * rng.standard_normal(1_000_000)) / math.sqrt(2)
        q = fs.husimi_q(state, z)
        proposal = np.exp(-np.abs(z) ** 2 / sigma**2) / (math.pi * sigma**2)
        assert float(np.max(q / (envelope * proposal))) <= 1.0


def test_csv_roundtrip(tmp_path):
    st = fs.make_fock(1, 8)
    b = dhd.sample_unbalanced(st, 0.2 + 0.1j, 500, seed=3)
    b = dhd.translate_samples(b, 0.5)
    path = tmp_path / "samples.csv"
    dhd.save_csv(b, path)
    loaded = dhd.load_csv(path)
    # disk holds effective (already translated) values
    np.testing.assert_array_equal(loaded.samples, b.effective_samples())
    np.testing.assert_array_equal(loaded.effective_samples(), b.effective_samples())
    assert loaded.seed == b.seed
    assert loaded.proposal_sigma == b.proposal_sigma
    assert loaded.acceptance_rate == b.acceptance_rate
    assert loaded.zeta == b.zeta
    header = path.read_text().splitlines()[0]
    assert header.startswith("# seed=3 n=500 sigma=")
    assert "# translation=0.5,0" in path.read_text()


def test_headerless_csv_accepted(tmp_path):
    path = tmp_path / "lab.csv"
    path.write_text("0.5,-0.25\n1.0,2.0\n")
    b = dhd.load_csv(path)
    assert b.n == 2
    assert b.samples[1] == 1.0 + 2.0j
