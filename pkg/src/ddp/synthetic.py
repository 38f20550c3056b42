"""Deterministic synthetic corpus for end-to-end acceptance runs.

Each class carries signal in all three channels so every modality is
learnable on its own: deceptive videos get a 3 kHz tone burst, bright
frames (mean > 0.7), and class-specific marker tokens; truthful videos get
a 300 Hz burst, dark frames (mean < 0.3), and a disjoint marker set. Every
channel is corrupted with seeded noise. Same seed, same bytes.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .dataset_registry import Label, VideoRecord, DatasetTag, write_manifest
from .errors import DataError
from .media_ingest import write_ddv

FRAME_RATE = 10.0
AUDIO_RATE = 16000
IMAGE_SIZE = 64

N_FRAMES = 24  # 2.4 s per video; a 4 s chunk keeps the 60% remainder

DECEPTIVE_TONE_HZ = 3000.0
TRUTHFUL_TONE_HZ = 300.0
# Amplitude and noise floor also differ per class so that every slot of the
# acoustic feature vector carries signal (a narrow-band RBF kernel needs
# tight within-class feature clusters).
DECEPTIVE_TONE_AMP = 0.5
TRUTHFUL_TONE_AMP = 0.3
DECEPTIVE_NOISE = 0.10
TRUTHFUL_NOISE = 0.02
DECEPTIVE_BRIGHTNESS = (0.75, 0.92)
TRUTHFUL_BRIGHTNESS = (0.08, 0.25)

DECEPTIVE_MARKERS = ("fabricated", "allegedly", "supposedly", "concocted")
TRUTHFUL_MARKERS = ("genuinely", "honestly", "verified", "confirmed")
SHARED_WORDS = ("the", "witness", "um", "said", "that", "uh", "it", "was",
                "ah", "there", "then", "saw", "night", "house", "door",
                "money", "left", "time", "told", "asked")


def _frames(rng, n_frames, brightness):
    gradient = np.linspace(-0.05, 0.05, IMAGE_SIZE)[:, None, None]
    frames = np.empty((n_frames, IMAGE_SIZE, IMAGE_SIZE, 3))
    for i in range(n_frames):
        wobble = 0.01 * np.sin(2 * np.pi * i / max(n_frames, 1))
        base = brightness + wobble + gradient
        noise = rng.normal(0.0, 0.05, size=(IMAGE_SIZE, IMAGE_SIZE, 3))
        frames[i] = np.clip(base + noise, 0.0, 1.0)
    return frames


def _audio(rng, n_samples, tone_hz, amplitude, noise_sigma):
    # The tone spans the whole recorded clip; chunk padding turns it into a
    # burst inside the fixed-length analysis window. A tone-free stretch
    # would hand max-normalized chroma a random peak class per frame.
    t = np.arange(n_samples) / AUDIO_RATE
    signal = amplitude * np.sin(2 * np.pi * tone_hz * t)
    signal += rng.normal(0.0, noise_sigma, size=n_samples)
    return np.clip(signal, -1.0, 1.0)


def _transcript(rng, markers):
    n_shared = int(rng.integers(18, 30))
    n_markers = int(rng.integers(3, 7))
    words = [SHARED_WORDS[int(rng.integers(0, len(SHARED_WORDS)))] for _ in range(n_shared)]
    positions = sorted(rng.choice(len(words) + 1, size=n_markers, replace=True))
    for offset, pos in enumerate(positions):
        words.insert(pos + offset, markers[int(rng.integers(0, len(markers)))])
    return " ".join(words) + "\n"


def generate_synthetic_corpus(n_videos: int, seed: int, out_dir: Path | str) -> Path:
    """Write media, transcripts, and a labeled manifest; returns the
    manifest path. Labels alternate so every prefix stays balanced."""
    if n_videos < 8 or n_videos % 2 != 0:
        raise DataError(f"n_videos must be even and >= 8, got {n_videos}")
    out_dir = Path(out_dir)
    try:
        (out_dir / "media").mkdir(parents=True, exist_ok=True)
        (out_dir / "transcripts").mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DataError(f"cannot create corpus directories under {out_dir}: {exc}") from exc

    rng = np.random.default_rng(seed)
    records = []
    for i in range(n_videos):
        label = Label.DECEPTIVE if i % 2 == 0 else Label.TRUTHFUL
        vid = f"synth_{i:04d}"
        duration = N_FRAMES / FRAME_RATE
        if label is Label.DECEPTIVE:
            lo, hi = DECEPTIVE_BRIGHTNESS
            tone, amp, sigma = DECEPTIVE_TONE_HZ, DECEPTIVE_TONE_AMP, DECEPTIVE_NOISE
            markers = DECEPTIVE_MARKERS
        else:
            lo, hi = TRUTHFUL_BRIGHTNESS
            tone, amp, sigma = TRUTHFUL_TONE_HZ, TRUTHFUL_TONE_AMP, TRUTHFUL_NOISE
            markers = TRUTHFUL_MARKERS
        brightness = lo + (hi - lo) * rng.random()
        frames = _frames(rng, N_FRAMES, brightness)
        audio = _audio(rng, int(round(duration * AUDIO_RATE)), tone, amp, sigma)
        media_rel = Path("media") / f"{vid}.ddv"
        transcript_rel = Path("transcripts") / f"{vid}.txt"
        write_ddv(out_dir / media_rel, frames, FRAME_RATE, audio, AUDIO_RATE)
        (out_dir / transcript_rel).write_text(_transcript(rng, markers), encoding="utf-8")
        # Paths stay relative to the manifest so the corpus is relocatable.
        records.append(VideoRecord(id=vid, dataset_tag=DatasetTag.SYNTHETIC,
                                   media_path=media_rel, transcript_path=transcript_rel,
                                   label=label, duration_s=duration))
    return write_manifest(records, out_dir / "manifest.jsonl")
