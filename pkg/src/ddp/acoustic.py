"""Acoustic feature extraction: chunking, mel spectrograms, the fixed
25-dimensional spectral feature vector, augmentation, and normalization.

Conventions fixed here and relied on by the test oracles:
  * mel scale m(f) = 2595 * log10(1 + f / 700)
  * periodic Hann window w[n] = 0.5 * (1 - cos(2*pi*n / N))
  * framing without centering: T = 1 + floor((len - n_fft) / hop)
  * dB compression 10 * log10(power + 1e-10)
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ContractError, DataError
from .media_ingest import AudioClip

_DB_FLOOR = 1e-10
_F_C0 = 16.3516  # pitch-class reference frequency (C0), Hz


@dataclass(frozen=True)
class AcousticConfig:
    chunk_len_s: float = 4.0
    remainder_keep_fraction: float = 0.5
    frame_len: int = 512
    hop: int = 160
    rolloff_fraction: float = 0.85
    n_mel_summary_bands: int = 9

    def __post_init__(self):
        if not 0.0 < self.remainder_keep_fraction <= 1.0:
            raise DataError("remainder_keep_fraction must be in (0,1]")
        if self.hop > self.frame_len:
            raise DataError("hop must be <= frame_len")
        if not 0.0 < self.rolloff_fraction < 1.0:
            raise DataError("rolloff_fraction must be in (0,1)")


@dataclass(frozen=True)
class MelConfig:
    sample_rate: int
    n_fft: int = 512
    hop: int = 160
    n_mels: int = 64
    f_min: float = 0.0
    f_max: float | None = None  # defaults to sample_rate / 2

    def __post_init__(self):
        f_max = self.f_max if self.f_max is not None else self.sample_rate / 2
        if not self.f_min < f_max <= self.sample_rate / 2:
            raise DataError(f"need f_min < f_max <= rate/2, got {self.f_min}, {f_max}")
        if self.n_mels < 1:
            raise DataError("n_mels must be >= 1")

    @property
    def effective_f_max(self) -> float:
        return self.f_max if self.f_max is not None else self.sample_rate / 2


@dataclass(frozen=True)
class MelSpectrogram:
    values: np.ndarray  # n_mels x T, dB
    config: MelConfig
    clip_id: str


@dataclass(frozen=True)
class AcousticFeatureVector:
    """Fixed 25-slot layout: [0..11] mean chroma, [12..20] mean log
    mel-band energy (9 bands), [21] mean ZCR, [22] mean RMS,
    [23] mean rolloff (Hz), [24] mean bandwidth (Hz)."""

    values: np.ndarray
    clip_id: str

    def __post_init__(self):
        if self.values.shape != (25,):
            raise ContractError(f"feature vector must have 25 slots, got {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise DataError(f"non-finite acoustic features for {self.clip_id}")


@dataclass(frozen=True)
class AugmentConfig:
    max_shift_fraction: float = 0.2
    n_freq_masks: int = 1
    max_freq_width: int = 8
    n_time_masks: int = 1
    max_time_width: int = 8
    seed: int = 0


@dataclass(frozen=True)
class NormStats:
    mean: np.ndarray
    std: np.ndarray  # sigma replaced by 1 where sigma < 1e-12
    fitted_on: str = ""


def _derived_rng(seed: int, clip_id: str) -> np.random.Generator:
    # Stable across runs and platforms (never the builtin hash()).
    digest = hashlib.sha256(f"{seed}:{clip_id}".encode("utf-8")).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "little"))


# -- chunking and augmentation ---------------------------------------------

def pad_silence(clip: AudioClip, target_len: int) -> AudioClip:
    """Append zeros to reach target_len samples; the prefix is bit-identical."""
    n = len(clip.samples)
    if n > target_len:
        raise ContractError(f"clip of {n} samples exceeds pad target {target_len}")
    if n == target_len:
        return clip
    padded = np.concatenate([clip.samples, np.zeros(target_len - n, dtype=np.float64)])
    return AudioClip(samples=padded, sample_rate=clip.sample_rate,
                     source_video=clip.source_video, start_s=clip.start_s)


def chunk_audio(clip: AudioClip, config: AcousticConfig) -> list[AudioClip]:
    """Consecutive non-overlapping windows of chunk_len_s.

    A final partial window is zero-padded to full length iff its duration is
    at least remainder_keep_fraction of a chunk, else dropped. Every output
    chunk has exactly chunk_len_s * sample_rate samples.
    """
    n = len(clip.samples)
    if n == 0:
        raise DataError(f"empty clip {clip.clip_id}")
    chunk_len = int(round(config.chunk_len_s * clip.sample_rate))
    chunks = []
    n_full = n // chunk_len
    for i in range(n_full):
        seg = clip.samples[i * chunk_len:(i + 1) * chunk_len]
        chunks.append(AudioClip(samples=seg, sample_rate=clip.sample_rate,
                                source_video=clip.source_video,
                                start_s=clip.start_s + i * chunk_len / clip.sample_rate))
    rem = n - n_full * chunk_len
    if rem >= config.remainder_keep_fraction * chunk_len and rem > 0:
        tail = AudioClip(samples=clip.samples[n_full * chunk_len:],
                         sample_rate=clip.sample_rate, source_video=clip.source_video,
                         start_s=clip.start_s + n_full * chunk_len / clip.sample_rate)
        chunks.append(pad_silence(tail, chunk_len))
    return chunks


def time_shift(clip: AudioClip, config: AugmentConfig) -> AudioClip:
    """Circular shift by k samples, k uniform in [-max_shift, +max_shift].

    Deterministic per (clip id, seed); the sample multiset is preserved.
    """
    n = len(clip.samples)
    if n == 0:
        raise DataError(f"empty clip {clip.clip_id}")
    max_shift = int(config.max_shift_fraction * n)
    if max_shift == 0:
        return clip
    rng = _derived_rng(config.seed, f"shift:{clip.clip_id}")
    k = int(rng.integers(-max_shift, max_shift + 1))
    return AudioClip(samples=np.roll(clip.samples, k), sample_rate=clip.sample_rate,
                     source_video=clip.source_video, start_s=clip.start_s)


def mask_plan(shape: tuple[int, int], config: AugmentConfig,
              clip_id: str) -> list[tuple[int, int, int]]:
    """Mask stripes as (axis, start, width); axis 0 = frequency, 1 = time.

    Pure function of (shape, seed, clip id) so tests can reconstruct the
    exact masked coordinates.
    """
    n_mels, n_cols = shape
    if config.max_freq_width >= n_mels or config.max_time_width >= n_cols:
        raise ContractError(f"mask widths must be < axis sizes {shape}")
    rng = _derived_rng(config.seed, f"mask:{clip_id}")
    plan = []
    for _ in range(config.n_freq_masks):
        width = int(rng.integers(0, config.max_freq_width + 1))
        start = int(rng.integers(0, n_mels - width + 1)) if width > 0 else 0
        plan.append((0, start, width))
    for _ in range(config.n_time_masks):
        width = int(rng.integers(0, config.max_time_width + 1))
        start = int(rng.integers(0, n_cols - width + 1)) if width > 0 else 0
        plan.append((1, start, width))
    return plan


def spec_augment(mel: MelSpectrogram, config: AugmentConfig) -> MelSpectrogram:
    """Set horizontal/vertical stripes to the matrix mean; unmasked cells
    stay bit-identical. Deterministic per (seed, clip id)."""
    values = mel.values.copy()
    fill = float(mel.values.mean())
    for axis, start, width in mask_plan(values.shape, config, mel.clip_id):
        if width == 0:
            continue
        if axis == 0:
            values[start:start + width, :] = fill
        else:
            values[:, start:start + width] = fill
    return MelSpectrogram(values=values, config=mel.config, clip_id=mel.clip_id)


# -- spectral kernels --------------------------------------------------------

def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def hann_window(n: int) -> np.ndarray:
    # Periodic variant, the STFT convention.
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * np.arange(n) / n))


def frame_signal(samples: np.ndarray, frame_len: int, hop: int) -> np.ndarray:
    """(T, frame_len) frame matrix with T = 1 + floor((len - frame_len)/hop)."""
    n = len(samples)
    if n < frame_len:
        raise DataError(f"signal of {n} samples shorter than frame_len {frame_len}")
    view = np.lib.stride_tricks.sliding_window_view(samples, frame_len)
    return np.ascontiguousarray(view[::hop])


def fft_bin_freqs(n_fft: int, sample_rate: float) -> np.ndarray:
    return np.arange(n_fft // 2 + 1, dtype=np.float64) * sample_rate / n_fft


def mel_filterbank(config: MelConfig) -> tuple[np.ndarray, np.ndarray]:
    """Triangular filters (n_mels x n_bins) and their peak center frequencies.

    Peak centers are equally spaced on the mel scale between f_min and f_max;
    filter i spans [center_{i-1}, center_{i+1}] with unit peak.
    """
    f_max = config.effective_f_max
    mel_points = np.linspace(hz_to_mel(config.f_min), hz_to_mel(f_max), config.n_mels + 2)
    hz_points = mel_to_hz(mel_points)
    bin_freqs = fft_bin_freqs(config.n_fft, config.sample_rate)
    bank = np.zeros((config.n_mels, len(bin_freqs)))
    for i in range(config.n_mels):
        left, center, right = hz_points[i], hz_points[i + 1], hz_points[i + 2]
        up = (bin_freqs - left) / (center - left)
        down = (right - bin_freqs) / (right - center)
        bank[i] = np.maximum(0.0, np.minimum(up, down))
    return bank, hz_points[1:-1]


def mel_spectrogram(clip: AudioClip, config: MelConfig) -> MelSpectrogram:
    """Hann-windowed power STFT pooled through the triangular mel bank,
    compressed to dB."""
    if len(clip.samples) < config.n_fft:
        raise DataError(
            f"clip {clip.clip_id} shorter than n_fft ({len(clip.samples)} < {config.n_fft})"
        )
    frames = frame_signal(clip.samples, config.n_fft, config.hop)
    window = hann_window(config.n_fft)
    spectra = np.fft.rfft(frames * window, axis=1)
    power = np.abs(spectra) ** 2
    bank, _ = mel_filterbank(config)
    mel_power = power @ bank.T  # (T, n_mels)
    values = 10.0 * np.log10(mel_power.T + _DB_FLOOR)
    return MelSpectrogram(values=values, config=config, clip_id=clip.clip_id)


def zero_crossing_rate(samples: np.ndarray) -> float:
    """Fraction of adjacent pairs with opposite sign; sign(0) counts positive."""
    samples = np.asarray(samples, dtype=np.float64)
    if len(samples) < 2:
        raise DataError("zero_crossing_rate needs >= 2 samples")
    signs = np.where(samples >= 0.0, 1.0, -1.0)
    return float(np.mean(signs[:-1] * signs[1:] < 0.0))


def rms(samples: np.ndarray) -> float:
    samples = np.asarray(samples, dtype=np.float64)
    if len(samples) == 0:
        raise DataError("rms of empty sequence")
    return float(np.sqrt(np.mean(samples ** 2)))


def spectral_rolloff(magnitudes: np.ndarray, bin_freqs: np.ndarray,
                     fraction: float) -> float:
    """Frequency of the smallest K with cumulative magnitude >= fraction of
    the total."""
    magnitudes = np.asarray(magnitudes, dtype=np.float64)
    total = magnitudes.sum()
    if total <= 0.0:
        raise DataError("spectral_rolloff of an all-zero spectrum")
    if not 0.0 < fraction < 1.0:
        raise ContractError(f"rolloff fraction must be in (0,1), got {fraction}")
    cumulative = np.cumsum(magnitudes)
    k = int(np.searchsorted(cumulative, fraction * total))
    return float(bin_freqs[k])


def spectral_bandwidth(magnitudes: np.ndarray, bin_freqs: np.ndarray) -> float:
    """Magnitude-weighted standard deviation of frequency around the centroid."""
    magnitudes = np.asarray(magnitudes, dtype=np.float64)
    bin_freqs = np.asarray(bin_freqs, dtype=np.float64)
    total = magnitudes.sum()
    if total <= 0.0:
        raise DataError("spectral_bandwidth of an all-zero spectrum")
    centroid = float((magnitudes * bin_freqs).sum() / total)
    return float(np.sqrt((magnitudes * (bin_freqs - centroid) ** 2).sum() / total))


def pitch_classes(bin_freqs: np.ndarray) -> np.ndarray:
    """Pitch class per bin: round(12 * log2(f / C0)) mod 12; DC gets -1."""
    bin_freqs = np.asarray(bin_freqs, dtype=np.float64)
    classes = np.full(len(bin_freqs), -1, dtype=np.int64)
    voiced = bin_freqs > 0.0
    classes[voiced] = np.round(12.0 * np.log2(bin_freqs[voiced] / _F_C0)).astype(np.int64) % 12
    return classes


def chroma_profile(magnitudes: np.ndarray, bin_freqs: np.ndarray) -> np.ndarray:
    """12-class pitch profile: per class, sum of squared magnitudes over its
    bins (DC excluded), scaled so the maximum is 1."""
    magnitudes = np.asarray(magnitudes, dtype=np.float64)
    classes = pitch_classes(bin_freqs)
    voiced = classes >= 0
    if not np.any(magnitudes[voiced] > 0.0):
        raise DataError("chroma_profile with no voiced bins")
    profile = np.zeros(12)
    np.add.at(profile, classes[voiced], magnitudes[voiced] ** 2)
    return profile / profile.max()


def acoustic_features(clip: AudioClip, acfg: AcousticConfig,
                      mcfg: MelConfig) -> AcousticFeatureVector:
    """Per-frame features averaged into the fixed 25-slot layout.

    Frames with zero spectral mass (silence padding) are excluded from the
    chroma/rolloff/bandwidth means; ZCR, RMS, and mel-band energies average
    over all frames. An entirely silent clip raises DataError, which the
    row extractor converts into an abstain row.
    """
    if len(clip.samples) < acfg.frame_len:
        raise DataError(f"clip {clip.clip_id} shorter than frame_len {acfg.frame_len}")
    frames = frame_signal(clip.samples, acfg.frame_len, acfg.hop)
    window = hann_window(acfg.frame_len)
    mags = np.abs(np.fft.rfft(frames * window, axis=1))  # (T, bins)
    bin_freqs = fft_bin_freqs(acfg.frame_len, clip.sample_rate)

    voiced = mags.sum(axis=1) > 0.0
    if not np.any(voiced):
        raise DataError(f"all-silent clip {clip.clip_id}")

    band_cfg = MelConfig(sample_rate=clip.sample_rate, n_fft=acfg.frame_len,
                         hop=acfg.hop, n_mels=acfg.n_mel_summary_bands,
                         f_min=mcfg.f_min, f_max=mcfg.f_max)
    bank, _ = mel_filterbank(band_cfg)
    band_energy = 10.0 * np.log10((mags ** 2) @ bank.T + _DB_FLOOR)  # (T, 9)

    chroma = np.array([chroma_profile(m, bin_freqs) for m in mags[voiced]])
    rolloffs = np.array([spectral_rolloff(m, bin_freqs, acfg.rolloff_fraction)
                         for m in mags[voiced]])
    bandwidths = np.array([spectral_bandwidth(m, bin_freqs) for m in mags[voiced]])
    zcrs = np.array([zero_crossing_rate(f) for f in frames])
    rms_vals = np.array([rms(f) for f in frames])

    values = np.concatenate([
        chroma.mean(axis=0),
        band_energy.mean(axis=0),
        [zcrs.mean(), rms_vals.mean(), rolloffs.mean(), bandwidths.mean()],
    ])
    return AcousticFeatureVector(values=values, clip_id=clip.clip_id)


def extract_feature_rows(clips: list[AudioClip], acfg: AcousticConfig,
                         mcfg: MelConfig) -> list[tuple[str, float, np.ndarray | None]]:
    """(clip_id, start_s, values) per chunk; values is None for abstain rows
    (all-silent chunks), which are excluded from training and scored as
    abstentions."""
    rows = []
    for clip in clips:
        try:
            vec = acoustic_features(clip, acfg, mcfg)
            rows.append((clip.clip_id, clip.start_s, vec.values))
        except DataError:
            rows.append((clip.clip_id, clip.start_s, None))
    return rows


# -- normalization ------------------------------------------------------------

def fit_normalizer(rows: np.ndarray, fitted_on: str = "") -> NormStats:
    """Per-dimension z-score statistics (population sigma); constant columns
    get sigma 1 so they normalize to exactly 0."""
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[0] < 1:
        raise DataError(f"fit_normalizer needs a non-empty matrix, got shape {rows.shape}")
    mean = rows.mean(axis=0)
    std = rows.std(axis=0)
    constant = std < 1e-12
    # Snap the mean so constant columns normalize to exactly zero.
    mean = np.where(constant, rows[0], mean)
    std = np.where(constant, 1.0, std)
    return NormStats(mean=mean, std=std, fitted_on=fitted_on)


def apply_normalizer(rows: np.ndarray, stats: NormStats) -> np.ndarray:
    rows = np.asarray(rows, dtype=np.float64)
    return (rows - stats.mean) / stats.std


# -- caches -------------------------------------------------------------------

FEATURE_CACHE_VERSION = "1"


def write_feature_cache(rows: list[tuple[str, float, np.ndarray | None]],
                        path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [json.dumps({"format_version": FEATURE_CACHE_VERSION,
                         "kind": "acoustic_features"}, sort_keys=True)]
    for clip_id, start_s, values in rows:
        rec = {"clip_id": clip_id, "start_s": start_s,
               "values": None if values is None else [float(v) for v in values]}
        lines.append(json.dumps(rec, sort_keys=True))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_feature_cache(path: Path | str) -> list[tuple[str, float, np.ndarray | None]]:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"feature cache not found: {path}")
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise DataError(f"empty feature cache: {path}")
    header = json.loads(lines[0])
    if header.get("format_version") != FEATURE_CACHE_VERSION:
        raise DataError(f"feature cache {path} has format_version "
                        f"{header.get('format_version')!r}, expected {FEATURE_CACHE_VERSION!r}")
    rows = []
    for line in lines[1:]:
        rec = json.loads(line)
        values = rec["values"]
        rows.append((rec["clip_id"], rec["start_s"],
                     None if values is None else np.array(values, dtype=np.float64)))
    return rows


def write_mel_cache(mel: MelSpectrogram, base: Path | str) -> tuple[Path, Path]:
    """Binary matrix (.npy) plus a JSON sidecar describing the transform."""
    base = Path(base)
    base.parent.mkdir(parents=True, exist_ok=True)
    matrix_path = base.with_suffix(".npy")
    np.save(matrix_path, mel.values)
    sidecar = {
        "format_version": FEATURE_CACHE_VERSION,
        "clip_id": mel.clip_id,
        "sample_rate": mel.config.sample_rate,
        "n_fft": mel.config.n_fft,
        "hop": mel.config.hop,
        "n_mels": mel.config.n_mels,
        "f_min": mel.config.f_min,
        "f_max": mel.config.f_max,
    }
    sidecar_path = base.with_suffix(".json")
    sidecar_path.write_text(json.dumps(sidecar, sort_keys=True) + "\n", encoding="utf-8")
    return matrix_path, sidecar_path


def read_mel_cache(base: Path | str) -> MelSpectrogram:
    base = Path(base)
    sidecar_path = base.with_suffix(".json")
    matrix_path = base.with_suffix(".npy")
    if not sidecar_path.is_file() or not matrix_path.is_file():
        raise DataError(f"mel cache not found at {base}")
    sidecar = json.loads(sidecar_path.read_text(encoding="utf-8"))
    if sidecar.get("format_version") != FEATURE_CACHE_VERSION:
        raise DataError(f"mel cache {base} has unsupported format_version")
    config = MelConfig(sample_rate=sidecar["sample_rate"], n_fft=sidecar["n_fft"],
                       hop=sidecar["hop"], n_mels=sidecar["n_mels"],
                       f_min=sidecar["f_min"], f_max=sidecar["f_max"])
    return MelSpectrogram(values=np.load(matrix_path), config=config,
                          clip_id=sidecar["clip_id"])
