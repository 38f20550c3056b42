"""Synthetic corpus: determinism, balance, and per-channel separability."""

import hashlib

import numpy as np
import pytest

from ddp.dataset_registry import Label, load_manifest
from ddp.errors import DataError
from ddp.media_ingest import IngestConfig, RawVideoDecoder, extract_audio, extract_frames
from ddp.synthetic import (DECEPTIVE_MARKERS, TRUTHFUL_MARKERS,
                           generate_synthetic_corpus)


def corpus_digest(root):
    h = hashlib.sha256()
    for path in sorted(p for p in root.rglob("*") if p.is_file()):
        h.update(str(path.relative_to(root)).encode())
        h.update(path.read_bytes())
    return h.hexdigest()


def test_balanced_manifest(tmp_path):
    manifest = generate_synthetic_corpus(8, seed=1, out_dir=tmp_path / "c")
    records = load_manifest(manifest)
    assert len(records) == 8
    labels = [r.label for r in records]
    assert labels.count(Label.DECEPTIVE) == 4
    assert labels.count(Label.TRUTHFUL) == 4
    for rec in records:
        assert (manifest.parent / rec.media_path).is_file()
        assert (manifest.parent / rec.transcript_path).is_file()


def test_same_seed_identical_bytes(tmp_path):
    generate_synthetic_corpus(8, seed=5, out_dir=tmp_path / "a")
    generate_synthetic_corpus(8, seed=5, out_dir=tmp_path / "b")
    assert corpus_digest(tmp_path / "a") == corpus_digest(tmp_path / "b")
    generate_synthetic_corpus(8, seed=6, out_dir=tmp_path / "c")
    assert corpus_digest(tmp_path / "a") != corpus_digest(tmp_path / "c")


def test_invalid_sizes_rejected(tmp_path):
    with pytest.raises(DataError):
        generate_synthetic_corpus(6, seed=1, out_dir=tmp_path)
    with pytest.raises(DataError):
        generate_synthetic_corpus(9, seed=1, out_dir=tmp_path)


def test_threshold_oracles_separate_every_modality(tmp_path):
    """Each raw channel admits a trivial threshold classifier with accuracy
    >= 0.95 by construction."""
    manifest = generate_synthetic_corpus(16, seed=2, out_dir=tmp_path / "c")
    records = load_manifest(manifest)
    decoder = RawVideoDecoder()
    ingest = IngestConfig()
    brightness_correct = tone_correct = marker_correct = 0
    for rec in records:
        media = manifest.parent / rec.media_path
        deceptive = rec.label is Label.DECEPTIVE

        frames = extract_frames(media, ingest, decoder, source_video=rec.id)
        mean_brightness = float(np.mean([f.pixels.mean() for f in frames]))
        assert mean_brightness > 0.7 if deceptive else mean_brightness < 0.3
        brightness_correct += (mean_brightness >= 0.5) == deceptive

        clip = extract_audio(media, ingest, decoder, source_video=rec.id)
        # dominant-frequency proxy: 3 kHz crosses zero far more often than 300 Hz
        signs = np.where(clip.samples >= 0, 1.0, -1.0)
        zcr = float(np.mean(signs[:-1] * signs[1:] < 0))
        tone_correct += (zcr >= 0.2) == deceptive

        text = (manifest.parent / rec.transcript_path).read_text()
        d_hits = sum(text.count(m) for m in DECEPTIVE_MARKERS)
        t_hits = sum(text.count(m) for m in TRUTHFUL_MARKERS)
        marker_correct += (d_hits > t_hits) == deceptive

    n = len(records)
    assert brightness_correct / n >= 0.95
    assert tone_correct / n >= 0.95
    assert marker_correct / n >= 0.95


def test_marker_vocabularies_disjoint():
    assert not set(DECEPTIVE_MARKERS) & set(TRUTHFUL_MARKERS)
