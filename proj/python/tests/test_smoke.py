import os
import subprocess

import numpy as np
import pytest

import clcnet


def test_filterbank_round_trip():
    x = np.random.default_rng(0).standard_normal(4800)
    spec = clcnet.analyze(x)
    assert spec.shape == (99, 49)
    assert spec.dtype == np.complex128
    y = clcnet.synthesize(spec, len(x))
    inner = slice(clcnet.FRAME_LEN, len(x) - clcnet.FRAME_LEN)
    err = np.sum((x[inner] - y[inner]) ** 2) / np.sum(x[inner] ** 2)
    assert 10 * np.log10(err) < -60


def test_latency():
    assert clcnet.algorithmic_latency_ms(1) == pytest.approx(6.0)
    assert clcnet.algorithmic_latency_ms(-1) == pytest.approx(4.0)


def test_levinson_matches_dense_solve():
    rng = np.random.default_rng(1)
    x = rng.standard_normal(200) + 1j * rng.standard_normal(200)
    r = clcnet.autocorrelation(x, 6)
    a, err, refl = clcnet.levinson_durbin(r, 6)
    toeplitz = np.array(
        [[r[j - i] if j >= i else np.conj(r[i - j]) for i in range(6)] for j in range(6)]
    )
    np.testing.assert_allclose(a, np.linalg.solve(toeplitz, r[1:]), rtol=1e-10, atol=1e-12)
    assert err > 0
    assert np.all(np.abs(refl) < 1)


def test_covariance_lpc_predicts_exponentials():
    k = np.arange(300)
    x = np.exp(0.7j * k) + 0.5 * np.exp(-1.9j * k + 0.3)
    a = clcnet.lpc_covariance(x, 2)
    pred = clcnet.lpc_predict(x, a)
    np.testing.assert_allclose(pred, x[2:], atol=1e-9)


def test_clc_at_offset_minus_one_is_lpc():
    spec = clcnet.analyze(np.random.default_rng(2).standard_normal(48 * 40))
    a = np.array([0.4 + 0.1j, -0.2j, 0.1])
    coeffs = np.broadcast_to(a[None, :, None], (spec.shape[0], 3, 48)).copy()
    y = clcnet.apply_clc(spec, coeffs, offset=-1)
    for f in (0, 17, 47):
        pred = clcnet.lpc_predict(np.ascontiguousarray(spec[:, f]), a)
        np.testing.assert_allclose(y[3:, f], pred, rtol=1e-12, atol=1e-14)
    np.testing.assert_array_equal(y[:, 48], spec[:, 48])


def test_oracle_clc_not_worse_than_wiener():
    speech = clcnet.synth_speech(3, 2.0)
    noise = clcnet.synth_noise(4, 2.0, "pink")
    g = np.sqrt(10 ** (clcnet.active_snr_db(speech, noise) / 10))
    noise = noise * g
    assert clcnet.active_snr_db(speech, noise) == pytest.approx(0.0, abs=1e-9)
    noisy = speech + noise
    s, n, x = clcnet.analyze(speech), clcnet.analyze(noise), clcnet.analyze(noisy)
    wf = clcnet.synthesize(x * clcnet.oracle_wiener_gain(s, n), len(noisy))
    coeffs = clcnet.oracle_clc_coeffs(x, s)
    assert coeffs.shape == (x.shape[0], 6, 48)
    clc = clcnet.synthesize(clcnet.apply_clc(x, coeffs), len(noisy))
    inner = slice(96, -96)
    assert clcnet.si_sdr(speech[inner], clc[inner]) >= clcnet.si_sdr(speech[inner], wf[inner])


def test_metrics():
    rng = np.random.default_rng(5)
    ref = rng.standard_normal(8000)
    est = ref + 0.3 * rng.standard_normal(8000)
    assert clcnet.si_sdr(ref, ref) == 100.0
    assert clcnet.si_sdr(ref, 7.0 * est) == pytest.approx(clcnet.si_sdr(ref, est), abs=1e-9)
    assert clcnet.rmse(ref, ref) == 0.0
    speech = clcnet.synth_speech(1, 3.0)
    assert clcnet.stoi(speech, speech) == pytest.approx(1.0, abs=1e-9)
    assert clcnet.stoi(speech, speech + 0.1 * rng.standard_normal(len(speech))) < 1.0


def test_errors_are_typed():
    with pytest.raises(clcnet.DataError):
        clcnet.si_sdr(np.zeros(3), np.zeros(4))
    with pytest.raises(clcnet.DataError):
        clcnet.read_wav("/nonexistent.wav")
    with pytest.raises(clcnet.ConfigError):
        clcnet.synth_noise(1, 1.0, "purple")


@pytest.mark.skipif("CLCNET_CLI" not in os.environ, reason="command-line tool not available")
def test_trained_checkpoint_enhances(tmp_path):
    cfg = tmp_path / "tiny.cfg"
    cfg.write_text(
        "[model]\nhidden_sizes = 8,8\nlookback_ms = 4\n"
        "[train]\nbatch_size = 2\nsnippet_s = 0.25\nval_every = 2\nval_items = 1\n"
        "[data]\nsynthetic_speech_seconds = 1\nsynthetic_noise_seconds = 1\n"
    )
    env = dict(os.environ, CLC_RUN_DIR=str(tmp_path / "runs"))
    subprocess.run(
        [os.environ["CLCNET_CLI"], "train", "--config", str(cfg), "--name", "t", "--steps", "2"],
        check=True, env=env, capture_output=True,
    )
    model = clcnet.Model(str(tmp_path / "runs" / "t" / "checkpoints" / "last.ckpt"))
    assert model.offset == 1 and model.order == 5
    assert model.streaming_delay == 144
    x = clcnet.synth_speech(9, 0.5) + 0.05 * np.random.default_rng(9).standard_normal(12000)
    offline = model.enhance(x)
    streamed = model.enhance_streaming(x)
    assert offline.shape == x.shape == streamed.shape
    d = model.streaming_delay
    np.testing.assert_allclose(streamed[d:], offline[:-d], atol=1e-9)
