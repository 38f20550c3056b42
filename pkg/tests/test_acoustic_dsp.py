"""Oracle suite for the spectral kernels.

Every operation is checked against an independent direct-definition
implementation (plain loops, brute-force DFT) on seeded random inputs.
"""

import math

import numpy as np
import pytest

from ddp.acoustic import (MelConfig, chroma_profile, fft_bin_freqs, hann_window,
                          hz_to_mel, mel_filterbank, mel_spectrogram, mel_to_hz,
                          rms, spectral_bandwidth, spectral_rolloff,
                          zero_crossing_rate)
from ddp.errors import DataError
from ddp.media_ingest import AudioClip

N_FUZZ = 100


# -- independent oracles -------------------------------------------------------

def zcr_oracle(samples):
    count = 0
    for a, b in zip(samples[:-1], samples[1:]):
        sa = 1.0 if a >= 0 else -1.0
        sb = 1.0 if b >= 0 else -1.0
        if sa * sb < 0:
            count += 1
    return count / (len(samples) - 1)


def rms_oracle(samples):
    total = 0.0
    for s in samples:
        total += s * s
    return math.sqrt(total / len(samples))


def rolloff_oracle(magnitudes, freqs, fraction):
    target = fraction * sum(magnitudes)
    running = 0.0
    for k, m in enumerate(magnitudes):
        running += m
        if running >= target:
            return freqs[k]
    return freqs[-1]


def bandwidth_oracle(magnitudes, freqs):
    total = sum(magnitudes)
    centroid = sum(m * f for m, f in zip(magnitudes, freqs)) / total
    spread = sum(m * (f - centroid) ** 2 for m, f in zip(magnitudes, freqs)) / total
    return math.sqrt(spread)


def chroma_oracle(magnitudes, freqs):
    profile = [0.0] * 12
    for m, f in zip(magnitudes, freqs):
        if f <= 0.0:
            continue
        cls = round(12.0 * math.log2(f / 16.3516)) % 12
        profile[cls] += m * m
    peak = max(profile)
    return [v / peak for v in profile]


def dft_power_oracle(frame, window):
    """Brute-force windowed DFT power spectrum, rfft bins only."""
    n = len(frame)
    x = [frame[i] * window[i] for i in range(n)]
    power = []
    for k in range(n // 2 + 1):
        re = sum(x[i] * math.cos(-2.0 * math.pi * k * i / n) for i in range(n))
        im = sum(x[i] * math.sin(-2.0 * math.pi * k * i / n) for i in range(n))
        power.append(re * re + im * im)
    return power


def mel_weights_oracle(config):
    """Triangular filter weights straight from the declared formulas."""
    f_max = config.f_max if config.f_max is not None else config.sample_rate / 2

    def to_mel(f):
        return 2595.0 * math.log10(1.0 + f / 700.0)

    def to_hz(m):
        return 700.0 * (10.0 ** (m / 2595.0) - 1.0)

    mel_lo, mel_hi = to_mel(config.f_min), to_mel(f_max)
    points = [to_hz(mel_lo + (mel_hi - mel_lo) * i / (config.n_mels + 1))
              for i in range(config.n_mels + 2)]
    freqs = [k * config.sample_rate / config.n_fft
             for k in range(config.n_fft // 2 + 1)]
    bank = []
    for i in range(config.n_mels):
        left, center, right = points[i], points[i + 1], points[i + 2]
        row = []
        for f in freqs:
            up = (f - left) / (center - left)
            down = (right - f) / (right - center)
            row.append(max(0.0, min(up, down)))
        bank.append(row)
    return bank


# -- fuzzed comparisons ----------------------------------------------------------

def test_zero_crossing_rate_matches_oracle():
    rng = np.random.default_rng(11)
    for _ in range(N_FUZZ):
        n = int(rng.integers(2, 1000))
        samples = rng.uniform(-1, 1, size=n)
        samples[rng.random(n) < 0.05] = 0.0  # exercise the sign(0) rule
        np.testing.assert_allclose(zero_crossing_rate(samples), zcr_oracle(samples),
                                   rtol=1e-9, atol=1e-12)


def test_zcr_examples():
    assert zero_crossing_rate(np.array([1.0, 1.0, 1.0, 1.0])) == 0.0
    assert zero_crossing_rate(np.array([1.0, -1.0, 1.0, -1.0])) == 1.0
    # sign(0) is positive: [1, 0, -1] has exactly one crossing
    assert zero_crossing_rate(np.array([1.0, 0.0, -1.0])) == 0.5
    with pytest.raises(DataError):
        zero_crossing_rate(np.array([1.0]))


def test_rms_matches_oracle():
    rng = np.random.default_rng(12)
    for _ in range(N_FUZZ):
        samples = rng.uniform(-1, 1, size=int(rng.integers(1, 500)))
        np.testing.assert_allclose(rms(samples), rms_oracle(samples), rtol=1e-12)


def test_rms_examples():
    assert rms(np.zeros(10)) == 0.0
    np.testing.assert_allclose(rms(np.array([3.0, 4.0])), math.sqrt(12.5), rtol=1e-12)
    with pytest.raises(DataError):
        rms(np.array([]))


def test_rolloff_matches_oracle():
    rng = np.random.default_rng(13)
    for _ in range(N_FUZZ):
        n = int(rng.integers(4, 300))
        mags = rng.uniform(0, 1, size=n)
        mags[0] += 1e-6  # never all-zero
        freqs = np.sort(rng.uniform(0, 8000, size=n))
        fraction = float(rng.uniform(0.05, 0.95))
        np.testing.assert_allclose(spectral_rolloff(mags, freqs, fraction),
                                   rolloff_oracle(mags, freqs, fraction), rtol=1e-12)


def test_rolloff_examples():
    freqs = np.arange(10) * 100.0
    single = np.zeros(10)
    single[np.where(freqs == 1000.0 - 100.0 * 0)[0]] = 0.0
    mags = np.zeros(10)
    mags[3] = 2.5  # bin at 300 Hz holds all mass
    for fraction in (0.1, 0.5, 0.85):
        assert spectral_rolloff(mags, freqs, fraction) == 300.0
    # uniform magnitudes over 10 bins, fraction 0.85 -> bin index 8 (cumulative 9 >= 8.5)
    assert spectral_rolloff(np.ones(10), freqs, 0.85) == freqs[8]
    with pytest.raises(DataError):
        spectral_rolloff(np.zeros(4), freqs[:4], 0.85)


def test_bandwidth_matches_oracle():
    rng = np.random.default_rng(14)
    for _ in range(N_FUZZ):
        n = int(rng.integers(2, 300))
        mags = rng.uniform(0, 1, size=n) + 1e-9
        freqs = np.sort(rng.uniform(0, 8000, size=n))
        np.testing.assert_allclose(spectral_bandwidth(mags, freqs),
                                   bandwidth_oracle(mags, freqs), rtol=1e-9)


def test_bandwidth_examples():
    freqs = np.array([400.0, 600.0])
    np.testing.assert_allclose(spectral_bandwidth(np.array([1.0, 1.0]), freqs), 100.0)
    single = np.array([0.0, 3.0, 0.0])
    assert spectral_bandwidth(single, np.array([100.0, 200.0, 300.0])) == 0.0
    with pytest.raises(DataError):
        spectral_bandwidth(np.zeros(3), np.array([1.0, 2.0, 3.0]))


def test_chroma_matches_oracle():
    rng = np.random.default_rng(15)
    for _ in range(N_FUZZ):
        n = int(rng.integers(4, 300))
        mags = rng.uniform(0, 1, size=n)
        mags[-1] += 1e-6
        freqs = np.linspace(0, 8000, n)
        np.testing.assert_allclose(chroma_profile(mags, freqs),
                                   chroma_oracle(mags, freqs), rtol=1e-9, atol=1e-12)


def test_chroma_examples():
    freqs = np.array([0.0, 440.0, 880.0])
    at_440 = chroma_profile(np.array([0.0, 1.0, 0.0]), freqs)
    # round(12*log2(440/16.3516)) mod 12 == 9
    assert at_440[9] == 1.0 and at_440.sum() == 1.0
    at_880 = chroma_profile(np.array([0.0, 0.0, 1.0]), freqs)
    np.testing.assert_allclose(at_440, at_880)  # octave equivalence
    with pytest.raises(DataError):
        chroma_profile(np.array([1.0, 0.0, 0.0]), freqs)  # only DC is nonzero


# -- mel scale and filterbank -------------------------------------------------------

def test_mel_scale_analytic_values():
    assert hz_to_mel(0.0) == 0.0
    np.testing.assert_allclose(hz_to_mel(700.0), 2595.0 * math.log10(2.0), rtol=0)
    freqs = np.array([1.0, 100.0, 1000.0, 7999.0])
    np.testing.assert_allclose(mel_to_hz(hz_to_mel(freqs)), freqs, rtol=1e-12)


@pytest.mark.parametrize("n_mels", [8, 9, 64])
def test_filterbank_invariants(n_mels):
    config = MelConfig(sample_rate=16000, n_fft=512, n_mels=n_mels)
    bank, centers = mel_filterbank(config)
    freqs = fft_bin_freqs(config.n_fft, config.sample_rate)
    assert np.all(bank >= 0.0)
    assert np.all(np.diff(centers) > 0.0)  # strictly increasing peak centers
    for row in bank:
        peak = int(np.argmax(row))
        assert np.all(np.diff(row[:peak + 1]) >= 0.0)  # rises to the peak
        assert np.all(np.diff(row[peak:]) <= 0.0)      # falls after the peak
    inside = (freqs >= centers[0]) & (freqs <= centers[-1])
    assert np.all(bank.sum(axis=0)[inside] > 0.0)


def test_filterbank_matches_direct_formula():
    for n_mels in (8, 64):
        config = MelConfig(sample_rate=16000, n_fft=256, n_mels=n_mels)
        bank, _ = mel_filterbank(config)
        np.testing.assert_allclose(bank, mel_weights_oracle(config), rtol=1e-9, atol=1e-12)


def test_mel_spectrogram_matches_brute_force_dft():
    rng = np.random.default_rng(16)
    config = MelConfig(sample_rate=8000, n_fft=64, hop=32, n_mels=8)
    window = hann_window(config.n_fft)
    bank = np.array(mel_weights_oracle(config))
    for _ in range(6):
        samples = rng.uniform(-1, 1, size=int(rng.integers(64, 200)))
        clip = AudioClip(samples=samples, sample_rate=8000, source_video="fuzz")
        got = mel_spectrogram(clip, config)
        n_frames = 1 + (len(samples) - config.n_fft) // config.hop
        assert got.values.shape == (config.n_mels, n_frames)
        for t in range(n_frames):
            frame = samples[t * config.hop:t * config.hop + config.n_fft]
            power = dft_power_oracle(frame, window)
            expected = 10.0 * np.log10(bank @ np.array(power) + 1e-10)
            np.testing.assert_allclose(got.values[:, t], expected, rtol=1e-9, atol=1e-9)


def test_mel_spectrogram_localizes_pure_tone():
    rate, freq = 16000, 1000.0
    t = np.arange(rate) / rate  # one second
    clip = AudioClip(samples=0.8 * np.sin(2 * np.pi * freq * t), sample_rate=rate,
                     source_video="tone")
    config = MelConfig(sample_rate=rate, n_fft=512, hop=160, n_mels=64)
    mel = mel_spectrogram(clip, config)
    _, centers = mel_filterbank(config)
    expected_band = int(np.argmin(np.abs(centers - freq)))
    interior = mel.values[:, 2:-2]
    hit = np.mean(np.argmax(interior, axis=0) == expected_band)
    assert hit >= 0.90


def test_mel_spectrogram_frame_count_and_short_clip():
    config = MelConfig(sample_rate=8000, n_fft=128, hop=64, n_mels=8)
    clip = AudioClip(samples=np.ones(400), sample_rate=8000, source_video="v")
    assert mel_spectrogram(clip, config).values.shape[1] == 1 + (400 - 128) // 64
    with pytest.raises(DataError):
        mel_spectrogram(AudioClip(samples=np.ones(100), sample_rate=8000,
                                  source_video="v"), config)
