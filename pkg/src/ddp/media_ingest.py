"""Demux videos into timestamped frames and a mono audio track.

Decoding sits behind the MediaDecoder interface. The package ships a
decoder for its own uncompressed container (``.ddv``, written by the
synthetic corpus generator and by tests) plus an in-process decoder that
wraps arrays directly. Adapters for system media tools can be plugged in
without touching the ingest contracts.
"""

from __future__ import annotations

import io
import json
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ContractError, DataError


@dataclass(frozen=True)
class IngestConfig:
    frame_step_s: float = 0.1
    target_sample_rate: int = 16000

    def __post_init__(self):
        if self.frame_step_s <= 0:
            raise DataError(f"frame_step_s must be > 0, got {self.frame_step_s}")
        if self.target_sample_rate <= 0:
            raise DataError(f"target_sample_rate must be > 0, got {self.target_sample_rate}")


@dataclass(frozen=True)
class Frame:
    pixels: np.ndarray  # H x W x 3, float64 in [0,1]
    timestamp_s: float
    source_video: str


@dataclass(frozen=True)
class AudioClip:
    samples: np.ndarray  # 1-D float64 in [-1,1]
    sample_rate: int
    source_video: str
    start_s: float = 0.0

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate

    @property
    def clip_id(self) -> str:
        return f"{self.source_video}@{self.start_s:.3f}"


@dataclass(frozen=True)
class RawDocument:
    text: str
    source_video: str


class DecodedMedia(ABC):
    """Decoded view of one video: frame access by time plus the audio track."""

    @property
    @abstractmethod
    def duration_s(self) -> float: ...

    @abstractmethod
    def frame_at(self, t: float) -> np.ndarray:
        """Pixels (H x W x 3, values in [0,1]) at time t in [0, duration)."""

    @abstractmethod
    def audio(self) -> tuple[np.ndarray, int]:
        """(samples, sample_rate); samples are 1-D mono or 2-D (n, channels)."""


class MediaDecoder(ABC):
    @abstractmethod
    def decode(self, path: Path | str) -> DecodedMedia: ...


class ArrayMedia(DecodedMedia):
    """In-process media backed by numpy arrays (test decoder backend)."""

    def __init__(self, frames: np.ndarray, frame_rate: float,
                 audio: np.ndarray, audio_rate: int):
        if frames.ndim != 4 or frames.shape[-1] != 3:
            raise DataError(f"frames must be N x H x W x 3, got shape {frames.shape}")
        self._frames = frames
        self._frame_rate = float(frame_rate)
        self._audio = audio
        self._audio_rate = int(audio_rate)

    @property
    def duration_s(self) -> float:
        n_frames = self._frames.shape[0]
        audio_dur = self._audio.shape[0] / self._audio_rate if self._audio.size else 0.0
        return max(n_frames / self._frame_rate, audio_dur)

    def frame_at(self, t: float) -> np.ndarray:
        idx = min(int(t * self._frame_rate), self._frames.shape[0] - 1)
        idx = max(idx, 0)
        pix = self._frames[idx]
        if pix.dtype == np.uint8:
            return pix.astype(np.float64) / 255.0
        return np.clip(pix.astype(np.float64), 0.0, 1.0)

    def audio(self) -> tuple[np.ndarray, int]:
        return self._audio, self._audio_rate


class ArrayDecoder(MediaDecoder):
    """Maps paths to pre-registered ArrayMedia; used by tests."""

    def __init__(self, media: dict[str, ArrayMedia] | None = None):
        self._media = dict(media or {})

    def register(self, path: Path | str, media: ArrayMedia) -> None:
        self._media[str(path)] = media

    def decode(self, path: Path | str) -> DecodedMedia:
        key = str(path)
        if key not in self._media:
            raise DataError(f"no registered media for {key}")
        return self._media[key]


# -- .ddv raw container ---------------------------------------------------
#
# Layout: b"DDV1\n", one JSON header line, then n_frames*h*w*3 uint8 frame
# bytes followed by n_samples float32 little-endian audio bytes. Every field
# is fixed by the header, so identical inputs produce identical files.

_DDV_MAGIC = b"DDV1\n"


def write_ddv(path: Path | str, frames: np.ndarray, frame_rate: float,
              audio: np.ndarray, audio_rate: int) -> Path:
    if frames.ndim != 4 or frames.shape[-1] != 3:
        raise DataError(f"frames must be N x H x W x 3, got shape {frames.shape}")
    if frames.dtype != np.uint8:
        frames = np.clip(np.asarray(frames, dtype=np.float64), 0.0, 1.0)
        frames = np.round(frames * 255.0).astype(np.uint8)
    audio = np.asarray(audio, dtype=np.float32).reshape(-1)
    header = {
        "n_frames": int(frames.shape[0]),
        "height": int(frames.shape[1]),
        "width": int(frames.shape[2]),
        "frame_rate": float(frame_rate),
        "n_samples": int(audio.shape[0]),
        "audio_rate": int(audio_rate),
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(_DDV_MAGIC)
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n")
        fh.write(frames.tobytes(order="C"))
        fh.write(audio.astype("<f4").tobytes(order="C"))
    return path


def read_ddv(path: Path | str) -> ArrayMedia:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"media not found: {path}")
    with open(path, "rb") as fh:
        magic = fh.read(len(_DDV_MAGIC))
        if magic != _DDV_MAGIC:
            raise DataError(f"not a ddv container: {path}")
        try:
            header = json.loads(fh.readline().decode("utf-8"))
            n, h, w = header["n_frames"], header["height"], header["width"]
            n_samples = header["n_samples"]
            frame_bytes = fh.read(n * h * w * 3)
            frames = np.frombuffer(frame_bytes, dtype=np.uint8).reshape(n, h, w, 3)
            audio = np.frombuffer(fh.read(n_samples * 4), dtype="<f4").astype(np.float64)
        except (KeyError, ValueError, json.JSONDecodeError) as exc:
            raise DataError(f"corrupt ddv container {path}: {exc}") from exc
    if frames.size != n * h * w * 3 or audio.size != n_samples:
        raise DataError(f"truncated ddv container: {path}")
    return ArrayMedia(frames, header["frame_rate"], audio, header["audio_rate"])


class RawVideoDecoder(MediaDecoder):
    """Decoder for the package's own .ddv container."""

    def decode(self, path: Path | str) -> DecodedMedia:
        return read_ddv(path)


# -- ingest operations ----------------------------------------------------

def extract_frames(video: Path | str, config: IngestConfig,
                   decoder: MediaDecoder, source_video: str | None = None) -> list[Frame]:
    """Sample frames at t = 0, step, 2*step, ... for all t < duration.

    Yields exactly ceil(duration / step) frames with strictly increasing
    timestamps; a zero-duration stream yields none.
    """
    media = decoder.decode(video)
    duration = media.duration_s
    if duration <= 0:
        return []
    step = config.frame_step_s
    count = int(math.ceil(duration / step - 1e-9))
    src = source_video if source_video is not None else Path(video).stem
    frames = []
    for i in range(count):
        t = i * step
        pixels = media.frame_at(t)
        if pixels.ndim != 3 or pixels.shape[-1] != 3:
            raise DataError(f"decoder returned bad frame shape {pixels.shape} for {video}")
        frames.append(Frame(pixels=pixels, timestamp_s=t, source_video=src))
    return frames


def extract_audio(video: Path | str, config: IngestConfig,
                  decoder: MediaDecoder, source_video: str | None = None) -> AudioClip:
    """Mono audio at the target rate (channel-averaged, linearly resampled).

    Output length is round(input_length * target_rate / source_rate); values
    are clamped to [-1, 1] after interpolation.
    """
    media = decoder.decode(video)
    samples, rate = media.audio()
    samples = np.asarray(samples, dtype=np.float64)
    if samples.size == 0:
        raise DataError(f"no audio stream in {video}")
    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    elif samples.ndim != 1:
        raise DataError(f"audio must be 1-D or 2-D, got shape {samples.shape}")

    target = config.target_sample_rate
    if rate != target:
        n_out = int(round(len(samples) * target / rate))
        src_idx = np.arange(n_out, dtype=np.float64) * (rate / target)
        samples = np.interp(src_idx, np.arange(len(samples), dtype=np.float64), samples)
    samples = np.clip(samples, -1.0, 1.0)
    src = source_video if source_video is not None else Path(video).stem
    return AudioClip(samples=samples, sample_rate=target, source_video=src, start_s=0.0)


def load_transcript(path: Path | str, source_video: str | None = None) -> RawDocument:
    """Whole-file text, BOM stripped, line endings normalized to \\n."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"transcript not found: {path}")
    try:
        text = path.read_bytes().decode("utf-8")
    except UnicodeDecodeError as exc:
        raise DataError(f"transcript {path} is not valid UTF-8: {exc}") from exc
    if text.startswith("﻿"):
        text = text[1:]
    text = text.replace("\r\n", "\n").replace("\r", "\n")
    src = source_video if source_video is not None else path.stem
    return RawDocument(text=text, source_video=src)


# -- demux cache -----------------------------------------------------------
#
# Layout under <cache_dir>/<video_id>/: frames/<centiseconds>.png (lossless)
# and audio.raw ("rate=<Hz>\n" header then little-endian float32 mono).

def write_frame_cache(frames: list[Frame], cache_dir: Path | str, video_id: str) -> Path:
    from PIL import Image

    out = Path(cache_dir) / video_id / "frames"
    out.mkdir(parents=True, exist_ok=True)
    for frame in frames:
        cs = int(round(frame.timestamp_s * 100))
        arr = np.round(np.clip(frame.pixels, 0.0, 1.0) * 255.0).astype(np.uint8)
        Image.fromarray(arr).save(out / f"{cs:08d}.png")
    return out


def read_frame_cache(cache_dir: Path | str, video_id: str) -> list[Frame]:
    from PIL import Image

    src = Path(cache_dir) / video_id / "frames"
    if not src.is_dir():
        raise DataError(f"no frame cache for {video_id} under {cache_dir}")
    frames = []
    for png in sorted(src.glob("*.png")):
        cs = int(png.stem)
        arr = np.asarray(Image.open(png), dtype=np.float64) / 255.0
        frames.append(Frame(pixels=arr, timestamp_s=cs / 100.0, source_video=video_id))
    return frames


def write_audio_cache(clip: AudioClip, cache_dir: Path | str, video_id: str) -> Path:
    out = Path(cache_dir) / video_id
    out.mkdir(parents=True, exist_ok=True)
    path = out / "audio.raw"
    with open(path, "wb") as fh:
        fh.write(f"rate={clip.sample_rate}\n".encode("ascii"))
        fh.write(np.asarray(clip.samples, dtype="<f4").tobytes())
    return path


def read_audio_cache(cache_dir: Path | str, video_id: str) -> AudioClip:
    path = Path(cache_dir) / video_id / "audio.raw"
    if not path.is_file():
        raise DataError(f"no audio cache for {video_id} under {cache_dir}")
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").strip()
        if not header.startswith("rate="):
            raise DataError(f"bad audio cache header in {path}: {header!r}")
        rate = int(header.split("=", 1)[1])
        samples = np.frombuffer(fh.read(), dtype="<f4").astype(np.float64)
    return AudioClip(samples=samples, sample_rate=rate, source_video=video_id, start_s=0.0)
