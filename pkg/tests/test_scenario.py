import numpy as np
import pytest
from scipy import stats

from cyclodet.config import ScenarioConfig
from cyclodet.detectors import cross_correlation_stat, glrt_from_snapshots
from cyclodet.scenario import (
    Hypothesis,
    ObservationPair,
    TrialRngs,
    gen_channel,
    gen_colored_noise,
    gen_cs_source,
    raised_cosine_taps,
    stack_snapshots,
    synth_observation,
)
from cyclodet.transforms import DimSpec
from oracles import dense_z_operator, windows


def lag_corr(x, lag):
    """Normalized sample autocorrelation of each row at ``lag``."""
    num = np.sum(x[:, lag:] * x[:, :x.shape[1] - lag].conj(), axis=1)
    return np.abs(num) / np.sum(np.abs(x) ** 2, axis=1)


def test_raised_cosine_shape():
    h = raised_cosine_taps(2, 1.0, 8)
    assert h.size == 17
    assert np.linalg.norm(h) == pytest.approx(1.0)
    np.testing.assert_allclose(h, h[::-1])
    # zero crossings at nonzero symbol instants
    np.testing.assert_allclose(h[::2][np.arange(9) != 4], 0, atol=1e-15)


def test_source_sps1_is_iid_symbols():
    cfg = ScenarioConfig(sps=1, M=4)
    h = raised_cosine_taps(1, 1.0, 8)
    np.testing.assert_allclose(h, np.eye(9)[4], atol=1e-15)
    x = gen_cs_source(cfg, 100_000, np.random.default_rng(0))
    assert np.all(lag_corr(x, 1) < 0.01)


def test_source_constellation_is_qpsk():
    cfg = ScenarioConfig()
    x = gen_cs_source(cfg, 4000, np.random.default_rng(1))
    counts = []
    for phase in range(cfg.sps):
        pts = np.unique(np.round(x[:, phase::cfg.sps].ravel(), 9))
        counts.append(pts.size)
        if pts.size == 4:
            mags = np.abs(pts)
            np.testing.assert_allclose(mags, mags[0])
    assert 4 in counts


def test_source_is_cyclostationary_at_symbol_rate():
    cfg = ScenarioConfig(rho=2)
    x = gen_cs_source(cfg, 1_000_000, np.random.default_rng(2))
    n = np.arange(x.shape[1])
    power = np.abs(x[0]) ** 2
    cyc_half = abs(np.mean(power * np.exp(-2j * np.pi * n / 2)))
    cyc_third = abs(np.mean(power * np.exp(-2j * np.pi * n / 3)))
    assert cyc_half > 5 * cyc_third


def test_gladyshev_stack_is_wide_sense_stationary():
    # the raw stream's variance depends on the sample phase, the stacked
    # vector's covariance does not
    cfg = ScenarioConfig(rho=2, L=1)
    P = cfg.sps
    x = gen_cs_source(cfg, 400_000, np.random.default_rng(3))[0]
    var_even, var_odd = np.mean(np.abs(x[0::2]) ** 2), np.mean(np.abs(x[1::2]) ** 2)
    assert abs(var_even - var_odd) > 0.2 * max(var_even, var_odd)

    X = x.reshape(-1, P)  # rows are x[n]
    # roll-off 1 pulses leave no correlation beyond lag 1
    for lag in (0, 1):
        cur, prev = X[lag:], X[:X.shape[0] - lag]
        R = [cur[ph::2].T @ prev[ph::2].conj() / cur[ph::2].shape[0] for ph in (0, 1)]
        R_all = cur.T @ prev.conj() / cur.shape[0]
        assert np.linalg.norm(R[0] - R[1]) / np.linalg.norm(R_all) < 0.1


def test_channel_tap_count():
    ch = gen_channel(ScenarioConfig(channel_span_symbols=10, sps=2), np.random.default_rng(0))
    assert ch.n_taps == 20
    assert ch.taps.shape == (20, 2, 2)


def test_channel_taps_are_rayleigh():
    cfg = ScenarioConfig(L=1, rho=1, M=2, sps=1)
    rng = np.random.default_rng(4)
    mags = np.concatenate([np.abs(gen_channel(cfg, rng).taps[:, 0, 0]) for _ in range(100_000)])
    n_taps = cfg.channel_span_symbols * cfg.sps
    result = stats.kstest(mags, stats.rayleigh(scale=np.sqrt(0.5 / n_taps)).cdf)
    assert result.pvalue > 0.01


def test_channel_energy_normalization():
    cfg = ScenarioConfig(L=2, rho=3)
    rng = np.random.default_rng(5)
    energy = np.mean([np.sum(np.abs(gen_channel(cfg, rng).taps) ** 2) for _ in range(10_000)])
    assert energy == pytest.approx(cfg.L * cfg.rho, rel=0.02)


def test_white_noise_when_unfiltered():
    cfg = ScenarioConfig(spatial_corr=0.0, ma_order=0)
    v = gen_colored_noise(cfg, 1_000_000, np.random.default_rng(6))
    assert np.all(lag_corr(v, 1) < 0.01)


def test_ma_noise_correlation_support():
    cfg = ScenarioConfig(ma_order=20, spatial_corr=0.0)
    v = gen_colored_noise(cfg, 1_000_000, np.random.default_rng(7))
    assert np.all(lag_corr(v, 25) < 0.02)
    assert np.all(lag_corr(v, 21) < 0.02)
    short = np.array([lag_corr(v, k) for k in range(1, 21)])
    assert np.all(short.max(axis=0) > 0.05)


def test_noise_spatial_correlation():
    cfg = ScenarioConfig(L=2, spatial_corr=0.5)
    v = gen_colored_noise(cfg, 1_000_000, np.random.default_rng(8))
    powers = np.mean(np.abs(v) ** 2, axis=1)
    rho = np.mean(v[0] * v[1].conj()) / np.sqrt(powers[0] * powers[1])
    assert abs(rho) == pytest.approx(0.5, abs=0.02)
    np.testing.assert_allclose(powers, 1.0, rtol=0.05)


def test_observation_shapes_and_h0_surveillance_is_noise():
    cfg = ScenarioConfig()
    obs = synth_observation(cfg, Hypothesis.H0, 11, return_components=True)
    assert obs.u_s.shape == obs.u_r.shape == (cfg.L, cfg.n_samples)
    np.testing.assert_array_equal(obs.u_s, obs.components["noise_s"])
    assert not np.any(obs.components["signal_s"])


def test_h0_streams_are_uncorrelated():
    cfg = ScenarioConfig()
    bound = 3 / np.sqrt(cfg.n_samples)
    for trial in range(20):
        o = synth_observation(cfg, "H0", TrialRngs.from_seed(21, trial))
        norms = np.sqrt(np.outer(np.sum(np.abs(o.u_s) ** 2, 1), np.sum(np.abs(o.u_r) ** 2, 1)))
        assert np.all(np.abs(o.u_s @ o.u_r.conj().T) / norms < bound)


@pytest.mark.parametrize("snr_s,snr_r", [(-10.0, 0.0), (3.0, -7.5)])
def test_snr_calibration(snr_s, snr_r):
    cfg = ScenarioConfig(snr_s_db=snr_s, snr_r_db=snr_r)
    for trial in range(100):
        c = synth_observation(cfg, "H1", TrialRngs.from_seed(3, trial), return_components=True).components
        for sig, noise, target in ((c["signal_s"], c["noise_s"], snr_s), (c["signal_r"], c["noise_r"], snr_r)):
            realized = 10 * np.log10(np.mean(np.abs(sig) ** 2) / np.mean(np.abs(noise) ** 2))
            assert realized == pytest.approx(target, abs=0.5)


def test_high_snr_cross_correlation_separates_hypotheses():
    cfg = ScenarioConfig(snr_s_db=30.0, snr_r_db=30.0)

    def stat(hyp, trial):
        obs = synth_observation(cfg, hyp, TrialRngs.from_seed(9, trial))
        return cross_correlation_stat(stack_snapshots(obs, cfg.dims)).statistic

    h0 = np.array([stat("H0", t) for t in range(50)])
    h1 = np.array([stat("H1", t) for t in range(20)])
    # the H0 level (LNP)^2/M is pure estimation noise, so compare spreads
    assert h1.min() > h0.max()
    assert np.median(h1) - np.median(h0) > 5 * h0.std()


def test_determinism():
    cfg = ScenarioConfig()
    a = synth_observation(cfg, "H1", TrialRngs.from_seed(42, 1, 7))
    b = synth_observation(cfg, "H1", TrialRngs.from_seed(42, 1, 7))
    assert a.u_s.tobytes() == b.u_s.tobytes() and a.u_r.tobytes() == b.u_r.tobytes()
    c = synth_observation(cfg, "H1", TrialRngs.from_seed(42, 1, 8))
    assert not np.array_equal(a.u_r, c.u_r)


def test_components_use_disjoint_streams():
    cfg = ScenarioConfig()
    base = synth_observation(cfg, "H0", TrialRngs.from_seed(1, 0), return_components=True)
    other = synth_observation(cfg, "H0", TrialRngs.from_seed(1, 0, channel_r=999), return_components=True)
    np.testing.assert_array_equal(base.u_s, other.u_s)
    assert not np.allclose(base.components["signal_r"], other.components["signal_r"])


def test_h0_glr_distribution_ignores_reference_channel():
    cfg = ScenarioConfig()
    dims = cfg.dims

    def run(**override):
        z = np.stack([
            stack_snapshots(synth_observation(cfg, "H0", TrialRngs.from_seed(2, 1, t, **override)), dims).z
            for t in range(2500)
        ])
        return glrt_from_snapshots(z, dims)

    a, b = run(), run(channel_r=12345)
    assert stats.ks_2samp(a, b).statistic < 0.05


def test_stack_trivial_dims():
    dims = DimSpec(L=1, P=1, N=1, M=3)
    u_s = np.array([[1 + 1j, 2.0, 3j]])
    u_r = np.array([[4.0, -5j, 6.0]])
    batch = stack_snapshots(ObservationPair(u_s, u_r, Hypothesis.H1), dims)
    np.testing.assert_allclose(batch.z, np.column_stack([u_s[0], u_r[0]]))


def test_stack_preserves_norms_and_matches_dense():
    cfg = ScenarioConfig(L=2, rho=2, sps=2, N=2, M=8)
    dims = cfg.dims
    obs = synth_observation(cfg, "H1", 5)
    batch = stack_snapshots(obs, dims)
    W = windows(obs, dims.L, dims.N, dims.P, dims.M)
    np.testing.assert_allclose(np.linalg.norm(batch.z, axis=1), np.linalg.norm(W, axis=1), rtol=1e-10)
    A = dense_z_operator(dims.L, dims.N, dims.P)
    np.testing.assert_allclose(batch.z, W @ A.T, atol=1e-10)


def test_stack_length_mismatch():
    dims = DimSpec(L=1, P=1, N=2, M=2)
    obs = ObservationPair(np.ones((1, 5)), np.ones((1, 5)), Hypothesis.H0)
    with pytest.raises(ValueError):
        stack_snapshots(obs, dims)
