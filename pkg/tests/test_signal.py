import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.signal import fftconvolve

from mdgsim.channel import ChannelRealization, LinkConfig, build_channel, normalize_channel
from mdgsim.linops import haar_unitary
from mdgsim.metrics import SnrSpec, mmse_transfer, observed_spectrum_from_equalizer, sigma_mdg
from mdgsim.signal import (
    ConvergenceError,
    EqConfig,
    EqualizerState,
    SignalConfig,
    constellation,
    decide,
    estimate_from_taps,
    generate_frame,
    inband_snr_db,
    lms_equalize,
    load_awgn,
    load_taps,
    map_bits,
    modulate,
    propagate,
    receive,
    rrc_taps,
    save_taps,
    signal_power,
    taps_to_transfer,
)
from mdgsim.signal.pulse import Waveform


def flat(h):
    h = np.atleast_2d(np.asarray(h, dtype=complex))
    return ChannelRealization(np.array([0.0]), h[None], {})


# -- QAM ------------------------------------------------------------------------


def test_constellation_is_gray_16qam():
    pts = constellation()
    assert len(set(np.round(pts * np.sqrt(10), 9))) == 16
    assert np.mean(np.abs(pts) ** 2) == pytest.approx(1.0)
    # horizontally and vertically adjacent points differ in exactly one bit
    levels = np.round(pts * np.sqrt(10)).astype(complex)
    for a in range(16):
        for b in range(16):
            if abs(levels[a] - levels[b]) == 2:
                assert bin(a ^ b).count("1") == 1


def test_map_bits():
    sym = map_bits(np.array([0, 0, 0, 0, 1, 0, 1, 0]))
    np.testing.assert_allclose(sym * np.sqrt(10), [-3 - 3j, 3 + 3j])
    with pytest.raises(ValueError):
        map_bits(np.zeros(5, dtype=int))


def test_frame_full_length_and_alphabet():
    cfg = SignalConfig(symbols_per_stream=400_000)
    fr = generate_frame(cfg, 2, 11)
    assert fr.streams.shape == (2, 400_000)
    for k in range(2):
        uniq = np.unique(np.round(fr.streams[k] / fr.scale[k] * np.sqrt(10), 6))
        assert uniq.size == 16
    np.testing.assert_allclose(np.mean(np.abs(fr.streams) ** 2, axis=1), 1.0, atol=1e-3)


def test_frame_cross_correlation():
    cfg = SignalConfig(symbols_per_stream=400_000)
    a = generate_frame(cfg, 1, 1).streams[0]
    b = generate_frame(cfg, 1, 2).streams[0]
    xc = fftconvolve(a, b[::-1].conj())
    peak = np.max(np.abs(xc)) / np.sqrt(np.sum(np.abs(a) ** 2) * np.sum(np.abs(b) ** 2))
    assert peak < 0.01


def test_frame_streams_independent_and_deterministic():
    cfg = SignalConfig(symbols_per_stream=1000)
    f1, f2 = generate_frame(cfg, 4, 3), generate_frame(cfg, 4, 3)
    assert np.array_equal(f1.streams, f2.streams)
    assert not np.array_equal(f1.streams[0], f1.streams[1])
    with pytest.raises(ValueError):
        generate_frame(cfg, 0, 1)
    with pytest.raises(ValueError):
        generate_frame(SignalConfig(modulation="qpsk"), 1, 1)


def test_decide_recovers_symbols():
    cfg = SignalConfig(symbols_per_stream=500)
    fr = generate_frame(cfg, 2, 5)
    noisy = fr.streams + 0.02 * (1 + 1j)
    np.testing.assert_allclose(decide(noisy, fr.scale), fr.streams, atol=1e-12)


# -- pulse shaping -------------------------------------------------------------------


def test_signal_config_validation_and_rates():
    cfg = SignalConfig()
    assert cfg.tx_sample_rate == 240.0 and cfg.rx_sample_rate == 60.0
    assert cfg.symbol_time == pytest.approx(1000 / 30)
    with pytest.raises(ValueError):
        SignalConfig(tx_oversampling=8, rx_oversampling=3)
    with pytest.raises(ValueError):
        SignalConfig(rolloff=0.0)


def test_rrc_unit_energy_and_length():
    h = rrc_taps(0.01, 8, 256)
    assert h.size == 256 * 8 + 1
    assert np.sum(h**2) == pytest.approx(1.0)
    np.testing.assert_allclose(h, h[::-1], atol=1e-15)


@pytest.mark.parametrize("rolloff", [0.01, 0.25, 1.0])
def test_rrc_cascade_nyquist(rolloff):
    sps = 8
    h = rrc_taps(rolloff, sps, 256)
    rc = np.convolve(h, h)
    c = rc.size // 2
    samples = rc[c % sps::sps]
    main = rc[c]
    isi = np.max(np.abs(np.delete(samples, c // sps))) / main
    assert isi <= 1e-3


def test_rrc_singular_points_are_continuous():
    # alpha = 0.25, sps = 4 puts taps exactly on t = +-1/(4 alpha)
    h = rrc_taps(0.25, 4, 16)
    assert np.all(np.isfinite(h))
    k = h.size // 2 + 4
    assert abs(h[k] - 0.5 * (h[k - 1] + h[k + 1])) < 0.05


def test_modulate_rate_and_linearity():
    cfg = SignalConfig(symbols_per_stream=200, rrc_span=32)
    fr = generate_frame(cfg, 2, 1)
    wf = modulate(fr, cfg)
    assert wf.sample_rate == 240.0 and wf.oversampling == 8
    assert wf.streams.shape == (2, 1600)
    zero = type(fr)(np.zeros_like(fr.streams))
    assert np.all(modulate(zero, cfg).streams == 0)


def test_matched_filter_evm():
    cfg = SignalConfig(symbols_per_stream=20_000)
    fr = generate_frame(cfg, 2, 7)
    rx = receive(modulate(fr, cfg), cfg)
    assert rx.sample_rate == 60.0
    y = rx.streams[:, ::2]
    mid = slice(1000, -1000)
    evm = np.sqrt(np.mean(np.abs(y[:, mid] - fr.streams[:, mid]) ** 2) / np.mean(np.abs(fr.streams) ** 2))
    assert evm < 0.01


# -- propagation and noise ------------------------------------------------------------


def _wave(n_streams=2, n=4096, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n_streams, n)) + 1j * rng.standard_normal((n_streams, n))
    return Waveform(x, 240.0, 30.0)


def test_propagate_identity():
    wf = _wave()
    ch = ChannelRealization(np.linspace(-110, 110, 12), np.broadcast_to(np.eye(2), (12, 2, 2)).copy())
    np.testing.assert_allclose(propagate(wf, ch).streams, wf.streams, atol=1e-9)


def test_propagate_unitary_conserves_power():
    wf = _wave(6)
    ch = normalize_channel(build_channel(LinkConfig(spatial_modes=3, spans=5, sigma_g=0.0, n_bins=40)))
    out = propagate(wf, ch)
    assert signal_power(out) == pytest.approx(signal_power(wf), rel=1e-6)


def test_propagate_flat_attenuation():
    wf = _wave(3)
    a = 10 ** (-3 / 20)
    out = propagate(wf, flat(np.diag([a, a, a])))
    ratio = np.mean(np.abs(out.streams) ** 2, axis=1) / np.mean(np.abs(wf.streams) ** 2, axis=1)
    np.testing.assert_allclose(10 * np.log10(ratio), -3.0, atol=1e-9)


def test_propagate_nearest_bin():
    # two-bin channel: negative frequencies see the first matrix, positive the second
    wf = _wave(1, 1024)
    ch = ChannelRealization(np.array([-60.0, 60.0]), np.array([[[1.0]], [[0.0]]]))
    out = propagate(wf, ch)
    spec = np.fft.fft(out.streams[0])
    f = np.fft.fftfreq(1024, 1 / 240.0)
    assert np.max(np.abs(spec[f > 0.5])) < 1e-9
    np.testing.assert_allclose(spec[f < -0.5], np.fft.fft(wf.streams[0])[f < -0.5], atol=1e-9)


def test_propagate_dimension_mismatch():
    with pytest.raises(ValueError):
        propagate(_wave(2), flat(np.eye(3)))


def test_awgn_infinite_is_identity():
    wf = _wave()
    assert load_awgn(wf, SnrSpec.infinite(), 1) is wf


def _shaped(n_sym=50_000, n_streams=2, seed=3):
    cfg = SignalConfig(symbols_per_stream=n_sym, rrc_span=64)
    return modulate(generate_frame(cfg, n_streams, seed), cfg)


def test_awgn_target_12db():
    clean = _shaped()
    noisy = load_awgn(clean, SnrSpec.from_db(12.0), 9)
    assert inband_snr_db(clean, noisy) == pytest.approx(12.0, abs=0.05)


@settings(max_examples=8)
@given(target=st.floats(0, 30), seed=st.integers(0, 1000))
def test_awgn_target_property(target, seed):
    clean = _shaped(20_000)
    noisy = load_awgn(clean, SnrSpec.from_db(target), seed)
    assert inband_snr_db(clean, noisy) == pytest.approx(target, abs=0.05)


def test_awgn_equal_variance_across_streams():
    clean = _shaped(n_streams=6)
    noise = load_awgn(clean, SnrSpec.from_db(5.0), 4).streams - clean.streams
    var = np.var(noise, axis=1)
    assert np.max(var) / np.min(var) - 1 < 0.01


def test_awgn_launch_reference():
    clean = _shaped()
    weak = Waveform(clean.streams * 0.1, clean.sample_rate, clean.symbol_rate)
    a = load_awgn(weak, SnrSpec.from_db(10.0), 1, signal_power_ref=signal_power(clean))
    # noise is set by the launch level, so the attenuated signal sees 20 dB less SNR
    assert inband_snr_db(weak, a) == pytest.approx(-10.0, abs=0.05)


# -- LMS equalizer ------------------------------------------------------------------------


def _chain(h, snr_db, n_sym, seed=1, taps=60):
    cfg = SignalConfig(symbols_per_stream=n_sym)
    ch = h if isinstance(h, ChannelRealization) else flat(h)
    fr = generate_frame(cfg, ch.dim, seed)
    tx = modulate(fr, cfg)
    clean = propagate(tx, ch)
    noisy = load_awgn(clean, SnrSpec.from_db(snr_db), seed + 1, signal_power_ref=signal_power(tx))
    rx = receive(noisy, cfg)
    state, out = lms_equalize(rx, fr, EqConfig(taps_per_filter=taps))
    return fr, state, out


def test_eq_config_validation():
    with pytest.raises(ValueError):
        EqConfig(taps_per_filter=0)
    with pytest.raises(ValueError):
        EqConfig(step_size=0)
    with pytest.raises(ValueError):
        EqConfig(epochs=0)
    with pytest.raises(ValueError):
        EqConfig(supervised=False)


def test_lms_identity_channel():
    _, state, _ = _chain(np.eye(2), np.inf, 20_000)
    assert np.median(state.mse_trace[5:]) < 1e-3
    t = state.taps
    diag = np.sum(np.abs(t[0, 0]) ** 2 + np.abs(t[1, 1]) ** 2)
    off = np.sum(np.abs(t[0, 1]) ** 2 + np.abs(t[1, 0]) ** 2)
    assert off < 0.01 * diag


def test_lms_filter_count_six_mode_configuration():
    state = EqualizerState.center_spike(12, 100, 60.0, 30.0)
    assert state.taps.shape == (12, 12, 100)
    assert state.taps.shape[0] * state.taps.shape[1] == 144


@pytest.mark.parametrize("snr_db", [20.0, 25.0])
def test_lms_unitary_channel_error_free(snr_db):
    fr, state, out = _chain(haar_unitary(6, 3), snr_db, 40_000, seed=2)
    # 10^4 decisions after convergence, spread over the six streams
    tail = slice(-(10_000 // 6 + 1), None)
    dec = decide(out.streams[:, tail], fr.scale)
    assert dec.size >= 10_000
    assert np.count_nonzero(np.abs(dec - fr.streams[:, tail]) > 1e-9) == 0


def test_lms_mse_trace_decreases_until_floor():
    _, state, _ = _chain(haar_unitary(6, 3), 20.0, 40_000, seed=2)
    tr = state.mse_trace
    floor = np.median(tr[len(tr) // 2:])
    first = np.argmax(tr <= 1.2 * floor)
    assert np.all(np.diff(tr[: first + 1]) < 0)
    assert np.all(tr[first:] <= 1.2 * floor)
    assert state.converged


def test_lms_uses_reference_not_decisions():
    # reference at twice the received amplitude: supervised LMS learns gain 2,
    # decision feedback would stay near unit gain
    cfg = SignalConfig(symbols_per_stream=20_000)
    fr = generate_frame(cfg, 1, 4)
    rx = receive(modulate(fr, cfg), cfg)
    ref = type(fr)(2 * fr.streams, scale=2 * fr.scale)
    state, out = lms_equalize(rx, ref, EqConfig(taps_per_filter=16))
    gain = np.mean(out.streams[0, -2000:] / fr.streams[0, -2000:])
    assert abs(gain - 2) < 0.02


def test_lms_divergence_raises_with_telemetry():
    cfg = SignalConfig(symbols_per_stream=5_000)
    fr = generate_frame(cfg, 2, 1)
    rx = receive(modulate(fr, cfg), cfg)
    with pytest.raises(ConvergenceError) as exc:
        lms_equalize(rx, fr, EqConfig(taps_per_filter=32, step_size=5.0))
    assert "mse_trace" in exc.value.telemetry


# -- tap analysis --------------------------------------------------------------------------


def test_center_spike_transfer_is_identity():
    state = EqualizerState.center_spike(4, 31, 60.0, 30.0)
    f, w = taps_to_transfer(state, 64)
    assert f.size == 64 and w.shape == (64, 4, 4)
    np.testing.assert_allclose(w, np.broadcast_to(np.eye(4), w.shape), atol=1e-12)
    with pytest.raises(ValueError):
        taps_to_transfer(state, 0)


def test_delayed_tap_is_linear_phase():
    state = EqualizerState.center_spike(2, 21, 60.0, 30.0)
    d = 3
    state.taps[0, 0] = 0
    state.taps[0, 0, state.center + d] = 1.0
    f, w = taps_to_transfer(state, 128)
    np.testing.assert_allclose(w[:, 0, 0], np.exp(-2j * np.pi * f * d / 60.0), atol=1e-12)


def test_estimate_requires_snr_for_correction():
    state = EqualizerState.center_spike(2, 11, 60.0, 30.0)
    with pytest.raises(ValueError):
        estimate_from_taps(state, None, corrected=True)
    with pytest.raises(ValueError):
        estimate_from_taps(state, SnrSpec.infinite(), corrected=True)
    r = estimate_from_taps(state)
    assert r.sigma_mdg == 0.0 and r.source == "equalizer-taps"


@pytest.fixture(scope="module")
def coupled_run():
    ch = normalize_channel(
        build_channel(LinkConfig(spatial_modes=3, spans=20, span_length=5.0, sigma_g=0.9, n_bins=200, seed=3))
    )
    band = ch.band(0.505 * 30)
    out = {}
    for snr_db in (np.inf, 10.0):
        _, state, _ = _chain(ch, snr_db, 60_000, seed=5)
        out[snr_db] = state
    return band, out


def test_tap_estimate_tracks_channel(coupled_run):
    band, states = coupled_run
    actual = sigma_mdg(band.spectrum())
    noiseless = estimate_from_taps(states[np.inf])
    assert abs(noiseless.sigma_mdg - actual) <= 0.3
    snr = SnrSpec.from_db(10.0)
    unc = estimate_from_taps(states[10.0], snr, corrected=False)
    corr = estimate_from_taps(states[10.0], snr, corrected=True)
    assert unc.sigma_mdg < actual
    assert abs(corr.sigma_mdg - actual) < abs(unc.sigma_mdg - actual)
    assert corr.corrected and corr.snr_used == snr


def test_tap_estimate_matches_analytic_mmse(coupled_run):
    band, states = coupled_run
    snr = SnrSpec.from_db(10.0)
    analytic = sigma_mdg(observed_spectrum_from_equalizer(mmse_transfer(band.matrices, snr)))
    assert abs(estimate_from_taps(states[10.0], snr).sigma_mdg - analytic) <= 0.5


@pytest.mark.parametrize("name", ["taps.json", "taps.npz", "taps.bin"])
def test_tap_dump_round_trip(tmp_path, name, coupled_run):
    state = coupled_run[1][10.0]
    save_taps(state, tmp_path / name)
    back = load_taps(tmp_path / name)
    np.testing.assert_array_equal(back.taps, state.taps)
    assert back.sample_rate == state.sample_rate and back.symbol_rate == state.symbol_rate
    assert back.converged == state.converged
    np.testing.assert_array_equal(back.mse_trace, state.mse_trace)


def test_load_taps_rejects_foreign_file(tmp_path):
    p = tmp_path / "x.json"
    p.write_text('{"format": "other"}')
    with pytest.raises(ValueError):
        load_taps(p)
