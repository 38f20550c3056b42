"""Model-ready face/frame images: detection behind a pluggable interface,
single-face filtering, crop, and bilinear resize.

Three detector implementations ship with the package: an adapter over an
external cascade detector (production, requires a model file), a
deterministic stub (tests), and a trivial full-image detector
(full-frame data where every frame shows exactly one speaker).
"""

from __future__ import annotations

import json
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import ComponentError, DataError
from .media_ingest import Frame


class VisualMode(Enum):
    SINGLE_FACE = "single_face"
    FULL_FRAME = "full_frame"


@dataclass(frozen=True)
class VisualConfig:
    image_size: int = 64
    crop_margin: float = 0.2
    mode: VisualMode = VisualMode.SINGLE_FACE

    def __post_init__(self):
        if self.image_size < 8:
            raise DataError(f"image_size must be >= 8, got {self.image_size}")
        if self.crop_margin < 0:
            raise DataError(f"crop_margin must be >= 0, got {self.crop_margin}")


@dataclass(frozen=True)
class FaceBox:
    x: float
    y: float
    w: float
    h: float
    confidence: float = 1.0


class FaceDetector(ABC):
    name: str = "detector"
    version: str = "0"

    @abstractmethod
    def detect(self, pixels: np.ndarray) -> list[FaceBox]:
        """Boxes for one H x W x 3 image in [0,1]."""


class StubDetector(FaceDetector):
    """Deterministic test detector: returns pre-configured boxes, keyed by
    call order or by a user-supplied function of the frame."""

    name = "stub"
    version = "1"

    def __init__(self, boxes_fn=None, boxes: list[list[FaceBox]] | None = None):
        if (boxes_fn is None) == (boxes is None):
            raise DataError("StubDetector needs exactly one of boxes_fn or boxes")
        self._fn = boxes_fn
        self._queue = list(boxes) if boxes is not None else None
        self._calls = 0

    def detect(self, pixels: np.ndarray) -> list[FaceBox]:
        if self._fn is not None:
            return list(self._fn(pixels))
        idx = min(self._calls, len(self._queue) - 1)
        self._calls += 1
        return list(self._queue[idx])


class FullFrameDetector(FaceDetector):
    """Reports the whole image as a single confident box."""

    name = "full_frame"
    version = "1"

    def detect(self, pixels: np.ndarray) -> list[FaceBox]:
        h, w = pixels.shape[:2]
        return [FaceBox(x=0.0, y=0.0, w=float(w), h=float(h), confidence=1.0)]


class CascadeDetector(FaceDetector):
    """Adapter over an OpenCV cascade classifier (multi-stage detector).

    Requires a cascade model file supplied by the user; the heavy import
    happens lazily so the rest of the package stays light.
    """

    name = "cascade"
    version = "1"

    def __init__(self, model_path: Path | str):
        try:
            import cv2
        except ImportError as exc:
            raise ComponentError(f"opencv is not installed: {exc}") from exc
        model_path = Path(model_path)
        if not model_path.is_file():
            raise DataError(f"cascade model not found: {model_path}")
        self._classifier = cv2.CascadeClassifier(str(model_path))
        if self._classifier.empty():
            raise DataError(f"could not load cascade model: {model_path}")

    def detect(self, pixels: np.ndarray) -> list[FaceBox]:
        gray = np.round(pixels.mean(axis=2) * 255.0).astype(np.uint8)
        hits = self._classifier.detectMultiScale(gray)
        return [FaceBox(x=float(x), y=float(y), w=float(w), h=float(h), confidence=1.0)
                for (x, y, w, h) in hits]


def clamp_box(box: FaceBox, height: int, width: int) -> FaceBox:
    """Clamp a box to image bounds, preserving positive extent."""
    x0 = min(max(box.x, 0.0), width - 1.0)
    y0 = min(max(box.y, 0.0), height - 1.0)
    x1 = min(max(box.x + box.w, x0 + 1.0), float(width))
    y1 = min(max(box.y + box.h, y0 + 1.0), float(height))
    return FaceBox(x=x0, y=y0, w=x1 - x0, h=y1 - y0, confidence=box.confidence)


def detect_faces(frame: Frame, detector: FaceDetector) -> list[FaceBox]:
    """Run the detector on one frame; boxes come back clamped to bounds.

    Detector exceptions surface as ComponentError carrying the frame id.
    """
    h, w = frame.pixels.shape[:2]
    frame_id = f"{frame.source_video}@{frame.timestamp_s:.2f}"
    try:
        boxes = detector.detect(frame.pixels)
    except Exception as exc:
        raise ComponentError(f"face detector failed: {exc}", unit_id=frame_id) from exc
    return [clamp_box(b, h, w) for b in boxes]


def resize_image(pixels: np.ndarray, target: int) -> np.ndarray:
    """Bilinear resize to target x target, half-pixel-center convention,
    output clamped to [0,1]."""
    pixels = np.asarray(pixels, dtype=np.float64)
    h, w = pixels.shape[:2]
    if h < 1 or w < 1:
        raise DataError(f"cannot resize empty image of shape {pixels.shape}")
    ys = np.clip((np.arange(target) + 0.5) * h / target - 0.5, 0.0, h - 1.0)
    xs = np.clip((np.arange(target) + 0.5) * w / target - 0.5, 0.0, w - 1.0)
    y0 = np.floor(ys).astype(int)
    x0 = np.floor(xs).astype(int)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = (ys - y0)[:, None, None]
    wx = (xs - x0)[None, :, None]
    top = pixels[y0][:, x0] * (1 - wx) + pixels[y0][:, x1] * wx
    bottom = pixels[y1][:, x0] * (1 - wx) + pixels[y1][:, x1] * wx
    return np.clip(top * (1 - wy) + bottom * wy, 0.0, 1.0)


def crop_box(pixels: np.ndarray, box: FaceBox, margin: float) -> np.ndarray:
    """Crop the box expanded by margin * size on each side, clamped."""
    h, w = pixels.shape[:2]
    mx, my = margin * box.w, margin * box.h
    x0 = int(max(0, np.floor(box.x - mx)))
    y0 = int(max(0, np.floor(box.y - my)))
    x1 = int(min(w, np.ceil(box.x + box.w + mx)))
    y1 = int(min(h, np.ceil(box.y + box.h + my)))
    return pixels[y0:y1, x0:x1]


def filter_and_crop(frames: list[Frame], detector: FaceDetector,
                    config: VisualConfig) -> list[Frame]:
    """single_face: keep exactly the frames with one detection, crop with
    margin, resize. full_frame: keep everything, resize whole frames.

    An empty result is valid and becomes a visual abstention for the video.
    """
    out = []
    for frame in frames:
        if config.mode is VisualMode.FULL_FRAME:
            pixels = resize_image(frame.pixels, config.image_size)
        else:
            boxes = detect_faces(frame, detector)
            if len(boxes) != 1:
                continue
            patch = crop_box(frame.pixels, boxes[0], config.crop_margin)
            pixels = resize_image(patch, config.image_size)
        out.append(Frame(pixels=pixels, timestamp_s=frame.timestamp_s,
                         source_video=frame.source_video))
    return out


# -- detection cache ---------------------------------------------------------
#
# Per-video line-delimited records so expensive detection runs once; the
# cache key includes the detector name and version.

DETECTION_CACHE_VERSION = "1"


def write_detection_cache(detections: list[tuple[float, list[FaceBox]]],
                          path: Path | str, detector: FaceDetector) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [json.dumps({"format_version": DETECTION_CACHE_VERSION,
                         "detector": detector.name, "detector_version": detector.version},
                        sort_keys=True)]
    for timestamp_s, boxes in detections:
        lines.append(json.dumps(
            {"timestamp_s": timestamp_s,
             "boxes": [{"x": b.x, "y": b.y, "w": b.w, "h": b.h,
                        "confidence": b.confidence} for b in boxes]},
            sort_keys=True))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_detection_cache(path: Path | str,
                         detector: FaceDetector) -> list[tuple[float, list[FaceBox]]]:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"detection cache not found: {path}")
    lines = path.read_text(encoding="utf-8").splitlines()
    header = json.loads(lines[0])
    if header.get("format_version") != DETECTION_CACHE_VERSION:
        raise DataError(f"detection cache {path} has unsupported format_version")
    if (header.get("detector"), header.get("detector_version")) != (detector.name,
                                                                    detector.version):
        raise DataError(f"detection cache {path} was built by "
                        f"{header.get('detector')}:{header.get('detector_version')}, "
                        f"expected {detector.name}:{detector.version}")
    out = []
    for line in lines[1:]:
        rec = json.loads(line)
        boxes = [FaceBox(**b) for b in rec["boxes"]]
        out.append((rec["timestamp_s"], boxes))
    return out
