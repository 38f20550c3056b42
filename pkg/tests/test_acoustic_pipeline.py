"""Chunking, padding, augmentation, the 25-slot feature vector, the
normalizer, and the feature caches."""

import numpy as np
import pytest

from ddp.acoustic import (AcousticConfig, AugmentConfig, MelConfig, MelSpectrogram,
                          acoustic_features, apply_normalizer, chunk_audio,
                          extract_feature_rows, fit_normalizer, mask_plan, pad_silence,
                          read_feature_cache, read_mel_cache, spec_augment, time_shift,
                          write_feature_cache, write_mel_cache)
from ddp.errors import ContractError, DataError
from ddp.media_ingest import AudioClip


def clip_of(samples, rate=16000, vid="v0", start=0.0):
    return AudioClip(samples=np.asarray(samples, dtype=np.float64), sample_rate=rate,
                     source_video=vid, start_s=start)


class TestChunking:
    def test_exact_division(self):
        clip = clip_of(np.ones(160000))  # 10 s at 16 kHz
        chunks = chunk_audio(clip, AcousticConfig(chunk_len_s=1.0))
        assert len(chunks) == 10
        assert all(len(c.samples) == 16000 for c in chunks)

    def test_half_remainder_kept_and_padded(self):
        clip = clip_of(np.ones(160000))  # 10 s
        chunks = chunk_audio(clip, AcousticConfig(chunk_len_s=4.0))
        assert len(chunks) == 3  # 2 s remainder = 50% kept
        assert len(chunks[-1].samples) == 64000
        assert np.all(chunks[-1].samples[32000:] == 0.0)

    def test_quarter_remainder_dropped(self):
        clip = clip_of(np.ones(144000))  # 9 s
        chunks = chunk_audio(clip, AcousticConfig(chunk_len_s=4.0))
        assert len(chunks) == 2  # 1 s remainder = 25% dropped

    def test_empty_clip_rejected(self):
        with pytest.raises(DataError):
            chunk_audio(clip_of([]), AcousticConfig())

    def test_concatenation_reconstructs_prefix(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            n = int(rng.integers(1, 90000))
            clip = clip_of(rng.uniform(-1, 1, size=n))
            config = AcousticConfig(chunk_len_s=1.0)
            chunks = chunk_audio(clip, config)
            if not chunks:
                continue
            rebuilt = np.concatenate([c.samples for c in chunks])
            covered = min(len(rebuilt), n)
            np.testing.assert_array_equal(rebuilt[:covered], clip.samples[:covered])
            assert np.all(rebuilt[covered:] == 0.0)  # only padding past the prefix
            for c in chunks:
                assert c.source_video == "v0"

    def test_chunk_start_times(self):
        clip = clip_of(np.ones(48000), start=2.0)  # 3 s starting at t=2
        chunks = chunk_audio(clip, AcousticConfig(chunk_len_s=1.0))
        assert [c.start_s for c in chunks] == [2.0, 3.0, 4.0]


class TestPadSilence:
    def test_identity_when_full(self):
        clip = clip_of([0.1, 0.2])
        assert pad_silence(clip, 2) is clip

    def test_pads_with_zeros(self):
        padded = pad_silence(clip_of([0.5]), 4)
        np.testing.assert_array_equal(padded.samples, [0.5, 0.0, 0.0, 0.0])

    def test_overlong_clip_is_contract_error(self):
        with pytest.raises(ContractError):
            pad_silence(clip_of([1.0, 2.0, 3.0]), 2)


class TestTimeShift:
    def test_zero_fraction_is_identity(self):
        clip = clip_of([1.0, 2.0, 3.0, 4.0])
        shifted = time_shift(clip, AugmentConfig(max_shift_fraction=0.0, seed=1))
        np.testing.assert_array_equal(shifted.samples, clip.samples)

    def test_multiset_and_rms_preserved(self):
        rng = np.random.default_rng(4)
        config = AugmentConfig(max_shift_fraction=0.3, seed=9)
        for i in range(100):
            clip = clip_of(rng.uniform(-1, 1, size=int(rng.integers(4, 400))),
                           vid=f"v{i}")
            shifted = time_shift(clip, config)
            np.testing.assert_array_equal(np.sort(shifted.samples),
                                          np.sort(clip.samples))

    def test_deterministic_per_clip_and_seed(self):
        clip = clip_of(np.arange(64, dtype=np.float64))
        config = AugmentConfig(max_shift_fraction=0.25, seed=5)
        a = time_shift(clip, config)
        b = time_shift(clip, config)
        np.testing.assert_array_equal(a.samples, b.samples)
        other_seed = time_shift(clip, AugmentConfig(max_shift_fraction=0.25, seed=6))
        other_clip = time_shift(clip_of(np.arange(64, dtype=np.float64), vid="w"),
                                config)
        # different seed or clip id gives an independent draw (almost surely different)
        assert (not np.array_equal(a.samples, other_seed.samples)
                or not np.array_equal(a.samples, other_clip.samples))


class TestSpecAugment:
    def _mel(self, rng, shape=(32, 40)):
        return MelSpectrogram(values=rng.normal(size=shape),
                              config=MelConfig(sample_rate=16000, n_mels=shape[0]),
                              clip_id="m0")

    def test_zero_masks_is_identity(self):
        mel = self._mel(np.random.default_rng(5))
        config = AugmentConfig(n_freq_masks=0, n_time_masks=0, seed=1)
        out = spec_augment(mel, config)
        np.testing.assert_array_equal(out.values, mel.values)

    def test_mask_cells_take_matrix_mean(self):
        rng = np.random.default_rng(6)
        mel = self._mel(rng)
        config = AugmentConfig(n_freq_masks=1, n_time_masks=0, max_freq_width=6,
                               max_time_width=6, seed=3)
        out = spec_augment(mel, config)
        plan = mask_plan(mel.values.shape, config, mel.clip_id)
        (axis, start, width), = [p for p in plan if p[0] == 0]
        assert axis == 0
        if width:
            expected = np.full((width, mel.values.shape[1]), mel.values.mean())
            np.testing.assert_array_equal(out.values[start:start + width], expected)

    def test_unmasked_cells_bit_identical(self):
        rng = np.random.default_rng(7)
        for i in range(50):
            mel = self._mel(rng, shape=(int(rng.integers(12, 40)),
                                        int(rng.integers(12, 40))))
            config = AugmentConfig(n_freq_masks=1, n_time_masks=1, max_freq_width=5,
                                   max_time_width=5, seed=i)
            out = spec_augment(mel, config)
            masked = np.zeros(mel.values.shape, dtype=bool)
            for axis, start, width in mask_plan(mel.values.shape, config, mel.clip_id):
                if axis == 0:
                    masked[start:start + width, :] = True
                else:
                    masked[:, start:start + width] = True
            np.testing.assert_array_equal(out.values[~masked], mel.values[~masked])
            assert out.values.shape == mel.values.shape

    def test_oversized_masks_rejected(self):
        mel = self._mel(np.random.default_rng(8), shape=(8, 10))
        with pytest.raises(ContractError):
            spec_augment(mel, AugmentConfig(max_freq_width=8, seed=0))


class TestAcousticFeatures:
    def test_vector_layout_and_finiteness(self):
        rng = np.random.default_rng(9)
        acfg = AcousticConfig()
        mcfg = MelConfig(sample_rate=16000)
        for _ in range(5):
            clip = clip_of(rng.uniform(-1, 1, size=16000))
            vec = acoustic_features(clip, acfg, mcfg)
            assert vec.values.shape == (25,)
            assert np.all(np.isfinite(vec.values))
            assert 0.0 <= vec.values[21] <= 1.0          # ZCR
            assert vec.values[22] >= 0.0                 # RMS
            assert 0.0 <= vec.values[23] <= 8000.0       # rolloff
            assert vec.values[24] >= 0.0                 # bandwidth

    def test_pure_tone_chroma_slot_dominates(self):
        rate = 16000
        t = np.arange(rate) / rate
        clip = clip_of(0.7 * np.sin(2 * np.pi * 440.0 * t), rate=rate)
        vec = acoustic_features(clip, AcousticConfig(), MelConfig(sample_rate=rate))
        assert int(np.argmax(vec.values[:12])) == 9  # pitch class A

    def test_silent_clip_becomes_abstain_row(self):
        acfg = AcousticConfig()
        mcfg = MelConfig(sample_rate=16000)
        silent = clip_of(np.zeros(16000))
        with pytest.raises(DataError):
            acoustic_features(silent, acfg, mcfg)
        loud = clip_of(np.random.default_rng(0).uniform(-1, 1, size=16000), vid="v1")
        rows = extract_feature_rows([silent, loud], acfg, mcfg)
        assert rows[0][2] is None and rows[1][2] is not None

    def test_too_short_clip_rejected(self):
        with pytest.raises(DataError):
            acoustic_features(clip_of(np.ones(100)), AcousticConfig(),
                              MelConfig(sample_rate=16000))


class TestNormalizer:
    def test_single_row_normalizes_to_zero(self):
        stats = fit_normalizer(np.array([[3.0, -1.0, 7.0]]))
        np.testing.assert_array_equal(apply_normalizer(np.array([[3.0, -1.0, 7.0]]), stats),
                                      np.zeros((1, 3)))

    def test_two_point_column(self):
        stats = fit_normalizer(np.array([[1.0], [3.0]]))
        np.testing.assert_allclose(apply_normalizer(np.array([[1.0], [3.0]]), stats),
                                   [[-1.0], [1.0]])

    def test_training_moments_after_fit(self):
        rng = np.random.default_rng(10)
        for _ in range(30):
            rows = rng.normal(size=(int(rng.integers(2, 60)), 25)) * rng.uniform(0.1, 10)
            rows[:, 7] = 4.2  # constant column
            stats = fit_normalizer(rows)
            normalized = apply_normalizer(rows, stats)
            assert np.all(np.abs(normalized.mean(axis=0)) <= 1e-12)
            stds = normalized.std(axis=0)
            assert np.all((np.abs(stds - 1.0) < 1e-9) | (stds == 0.0))
            assert np.all(normalized[:, 7] == 0.0)
            assert np.all(stats.std > 0.0)

    def test_empty_matrix_rejected(self):
        with pytest.raises(DataError):
            fit_normalizer(np.empty((0, 25)))

    def test_apply_uses_stored_stats_unchanged(self):
        train = np.array([[0.0, 10.0], [2.0, 30.0]])
        stats = fit_normalizer(train)
        test = np.array([[1.0, 20.0]])
        np.testing.assert_allclose(apply_normalizer(test, stats), [[0.0, 0.0]])


class TestCaches:
    def test_feature_cache_roundtrip_is_exact(self, tmp_path):
        rng = np.random.default_rng(11)
        rows = [("v0@0.000", 0.0, rng.normal(size=25)),
                ("v0@4.000", 4.0, None),
                ("v0@8.000", 8.0, rng.normal(size=25) * 1e-7)]
        path = write_feature_cache(rows, tmp_path / "v0" / "features.jsonl")
        back = read_feature_cache(path)
        assert [(r[0], r[1]) for r in back] == [(r[0], r[1]) for r in rows]
        assert back[1][2] is None
        np.testing.assert_array_equal(back[0][2], rows[0][2])
        np.testing.assert_array_equal(back[2][2], rows[2][2])

    def test_feature_cache_version_check(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"format_version": "0", "kind": "acoustic_features"}\n')
        with pytest.raises(DataError):
            read_feature_cache(path)

    def test_mel_cache_roundtrip(self, tmp_path):
        mel = MelSpectrogram(values=np.random.default_rng(12).normal(size=(16, 9)),
                             config=MelConfig(sample_rate=8000, n_fft=256, n_mels=16),
                             clip_id="v1@0.000")
        write_mel_cache(mel, tmp_path / "v1" / "mel_0")
        back = read_mel_cache(tmp_path / "v1" / "mel_0")
        np.testing.assert_array_equal(back.values, mel.values)
        assert back.config == mel.config
        assert back.clip_id == mel.clip_id
