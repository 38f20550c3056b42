"""Config-driven experiment orchestration.

One run is fully described by an ExperimentConfig: manifest, cache and
output locations, split parameters, per-modality model choices, fusion
mode, and a seed that reaches every stochastic component. The pipeline is
ingest -> per-modality features -> train on the train split only ->
predict the test split -> aggregate -> vote -> metrics, with a runtime
leakage guard on every training and scoring unit. Identical config + seed
reproduces the report byte for byte.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .acoustic import (AcousticConfig, AugmentConfig, MelConfig, apply_normalizer,
                       chunk_audio, extract_feature_rows, fit_normalizer,
                       read_feature_cache, time_shift, write_feature_cache)
from .classifiers import (BoostConfig, CNNConfig, ForestConfig, KernelKind, NBConfig,
                          Prediction, SVMConfig, boost_scores, boost_train, cnn_scores,
                          cnn_train, forest_scores, forest_train, mnb_posterior,
                          mnb_train, svm_predict_scores, svm_train)
from .dataset_registry import (DatasetConfig, Label, SplitPlan, VideoRecord,
                               load_manifest, make_split, resolve_labels)
from .errors import ConfigError, ContractError, DataError
from .fusion import FusedVerdict, FusionMode, Modality, ModalityVerdict, aggregate_units, vote
from .lexical import (EmbeddingConfig, count_transform, embed_document, normalize_text,
                      tfidf_fit, tfidf_transform, train_word_embeddings)
from .media_ingest import (AudioClip, Frame, IngestConfig, MediaDecoder, RawVideoDecoder,
                           extract_audio, extract_frames, load_transcript)
from .metrics import Metrics, evaluate
from .model_io import save_model
from .reference import compare_to_reference
from .visual import (FaceDetector, FullFrameDetector, VisualConfig, VisualMode,
                     filter_and_crop)

REPORT_FORMAT_VERSION = "1"

_ACOUSTIC_MODELS = ("svm", "forest", "boost")
_LEXICAL_MODELS = ("mnb", "svm")
_VISUAL_MODELS = ("cnn",)
_LEXICAL_FEATURES = ("counts", "tfidf", "tfidf_embedding")


def _build(cls, params: dict, what: str):
    try:
        return cls(**params)
    except TypeError as exc:
        raise ConfigError(f"bad {what} parameters {sorted(params)}: {exc}") from exc


@dataclass(frozen=True)
class VisualStageConfig:
    model: str = "cnn"
    mode: str = "full_frame"
    image_size: int = 64
    crop_margin: float = 0.2
    cnn: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.model not in _VISUAL_MODELS:
            raise ConfigError(f"unknown visual model {self.model!r}")
        if self.mode not in (m.value for m in VisualMode):
            raise ConfigError(f"unknown visual mode {self.mode!r}")

    def visual_config(self) -> VisualConfig:
        return VisualConfig(image_size=self.image_size, crop_margin=self.crop_margin,
                            mode=VisualMode(self.mode))

    def cnn_config(self, seed: int) -> CNNConfig:
        params = dict(self.cnn)
        params.setdefault("seed", seed)
        params.setdefault("input_size", self.image_size)
        if "conv_channels" in params:
            params["conv_channels"] = tuple(params["conv_channels"])
        return _build(CNNConfig, params, "visual cnn")


@dataclass(frozen=True)
class AcousticStageConfig:
    model: str = "svm"
    chunk_len_s: float = 4.0
    remainder_keep_fraction: float = 0.5
    frame_len: int = 512
    hop: int = 160
    rolloff_fraction: float = 0.85
    n_mel_summary_bands: int = 9
    augment: bool = False
    augment_params: dict = field(default_factory=dict)
    svm: dict = field(default_factory=lambda: {"C": 2.0, "gamma": 1.0, "kernel": "rbf"})
    forest: dict = field(default_factory=dict)
    boost: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.model not in _ACOUSTIC_MODELS:
            raise ConfigError(f"unknown acoustic model {self.model!r}")

    def acoustic_config(self) -> AcousticConfig:
        return AcousticConfig(chunk_len_s=self.chunk_len_s,
                              remainder_keep_fraction=self.remainder_keep_fraction,
                              frame_len=self.frame_len, hop=self.hop,
                              rolloff_fraction=self.rolloff_fraction,
                              n_mel_summary_bands=self.n_mel_summary_bands)

    def augment_config(self, seed: int) -> AugmentConfig:
        params = dict(self.augment_params)
        params.setdefault("seed", seed)
        return _build(AugmentConfig, params, "acoustic augmentation")

    def model_params(self) -> dict:
        return dict(getattr(self, self.model))


@dataclass(frozen=True)
class LexicalStageConfig:
    model: str = "mnb"
    features: str = ""  # defaulted per model below
    embedding_dim: int = 100
    embedding: dict = field(default_factory=dict)
    mnb: dict = field(default_factory=dict)
    svm: dict = field(default_factory=lambda: {"C": 1.0, "gamma": 9.0, "kernel": "rbf"})

    def __post_init__(self):
        if self.model not in _LEXICAL_MODELS:
            raise ConfigError(f"unknown lexical model {self.model!r}")
        features = self.features or ("counts" if self.model == "mnb" else "tfidf_embedding")
        object.__setattr__(self, "features", features)
        if self.features not in _LEXICAL_FEATURES:
            raise ConfigError(f"unknown lexical features {self.features!r}")
        if self.model == "mnb" and self.features != "counts":
            raise ConfigError("multinomial NB requires features: counts")

    def embedding_config(self, seed: int) -> EmbeddingConfig:
        params = dict(self.embedding)
        params.setdefault("seed", seed)
        params.setdefault("dim", self.embedding_dim)
        return _build(EmbeddingConfig, params, "lexical embedding")


@dataclass(frozen=True)
class ExperimentConfig:
    manifest: Path
    cache_dir: Path
    out_dir: Path
    seed: int = 0
    split: DatasetConfig = field(default_factory=DatasetConfig)
    fusion_mode: FusionMode = FusionMode.HARD_MAJORITY
    frame_step_s: float = 0.1
    target_sample_rate: int = 16000
    visual: VisualStageConfig = field(default_factory=VisualStageConfig)
    acoustic: AcousticStageConfig = field(default_factory=AcousticStageConfig)
    lexical: LexicalStageConfig = field(default_factory=LexicalStageConfig)

    def ingest_config(self) -> IngestConfig:
        return IngestConfig(frame_step_s=self.frame_step_s,
                            target_sample_rate=self.target_sample_rate)

    def echo(self) -> dict:
        def convert(value):
            if dataclasses.is_dataclass(value):
                return {f.name: convert(getattr(value, f.name))
                        for f in dataclasses.fields(value)}
            if isinstance(value, (FusionMode,)):
                return value.value
            if isinstance(value, Path):
                return str(value)
            if isinstance(value, dict):
                return {k: convert(v) for k, v in sorted(value.items())}
            if isinstance(value, tuple):
                return [convert(v) for v in value]
            return value
        return convert(self)


def load_config(source: dict | Path | str, base_dir: Path | None = None) -> ExperimentConfig:
    """Build an ExperimentConfig from a mapping or a YAML file.

    Relative paths resolve against the config file's directory; the
    DDP_CACHE_DIR environment variable overrides the cache location.
    Unknown keys or model kinds fail before any work is done.
    """
    if not isinstance(source, dict):
        import yaml

        path = Path(source)
        if not path.is_file():
            raise DataError(f"config file not found: {path}")
        source = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
        base_dir = path.parent if base_dir is None else base_dir
    base_dir = Path(base_dir) if base_dir is not None else Path.cwd()
    obj = dict(source)

    known = {"manifest", "cache_dir", "out_dir", "seed", "split", "fusion_mode",
             "frame_step_s", "target_sample_rate", "visual", "acoustic", "lexical"}
    unknown = set(obj) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for required in ("manifest", "cache_dir", "out_dir"):
        if required not in obj:
            raise ConfigError(f"config is missing required key {required!r}")

    def respath(value) -> Path:
        p = Path(value)
        return p if p.is_absolute() else base_dir / p

    cache_dir = os.environ.get("DDP_CACHE_DIR") or obj["cache_dir"]
    split = _build(DatasetConfig, dict(obj.get("split", {})), "split")
    fusion_raw = obj.get("fusion_mode", FusionMode.HARD_MAJORITY.value)
    try:
        fusion_mode = FusionMode(fusion_raw)
    except ValueError as exc:
        raise ConfigError(f"unknown fusion_mode {fusion_raw!r}") from exc
    return ExperimentConfig(
        manifest=respath(obj["manifest"]),
        cache_dir=respath(cache_dir),
        out_dir=respath(obj["out_dir"]),
        seed=int(obj.get("seed", 0)),
        split=split,
        fusion_mode=fusion_mode,
        frame_step_s=float(obj.get("frame_step_s", 0.1)),
        target_sample_rate=int(obj.get("target_sample_rate", 16000)),
        visual=_build(VisualStageConfig, dict(obj.get("visual", {})), "visual stage"),
        acoustic=_build(AcousticStageConfig, dict(obj.get("acoustic", {})), "acoustic stage"),
        lexical=_build(LexicalStageConfig, dict(obj.get("lexical", {})), "lexical stage"),
    )


def _svm_config(params: dict) -> SVMConfig:
    params = dict(params)
    if "kernel" in params:
        try:
            params["kernel"] = KernelKind(params["kernel"])
        except ValueError as exc:
            raise ConfigError(f"unknown SVM kernel {params['kernel']!r}") from exc
    return _build(SVMConfig, params, "svm")


def assert_no_leakage(unit_video_ids, allowed: frozenset[str], stage: str) -> None:
    """Runtime guard: every unit must come from a video on the allowed side."""
    stray = {vid for vid in unit_video_ids if vid not in allowed}
    if stray:
        raise ContractError(f"leakage in {stage}: videos {sorted(stray)[:5]} "
                            f"are outside the allowed split side")


@dataclass
class ModalityResult:
    modality: Modality
    verdicts: dict[str, ModalityVerdict]
    model: object
    model_kind: str
    n_train_units: int


class ExperimentRunner:
    """Executes the pipeline stage by stage with content-hash caching."""

    def __init__(self, config: ExperimentConfig, decoder: MediaDecoder | None = None,
                 detector: FaceDetector | None = None):
        self.config = config
        self.decoder = decoder or RawVideoDecoder()
        self.detector = detector or FullFrameDetector()
        self._cache: dict[str, object] = {}

    # -- dataset -------------------------------------------------------------

    @property
    def records(self) -> list[VideoRecord]:
        if "records" not in self._cache:
            records = resolve_labels(load_manifest(self.config.manifest),
                                     self.config.split)
            base = self.config.manifest.parent
            resolved = []
            for rec in records:
                media = rec.media_path if rec.media_path.is_absolute() else base / rec.media_path
                transcript = (rec.transcript_path if rec.transcript_path.is_absolute()
                              else base / rec.transcript_path)
                resolved.append(dataclasses.replace(rec, media_path=media,
                                                    transcript_path=transcript))
            self._cache["records"] = resolved
        return self._cache["records"]

    @property
    def split(self) -> SplitPlan:
        if "split" not in self._cache:
            config = dataclasses.replace(self.config.split, split_seed=self.config.seed) \
                if self.config.split.split_seed == 0 else self.config.split
            self._cache["split"] = make_split(self.records, config)
        return self._cache["split"]

    @property
    def truth(self) -> dict[str, Label]:
        return {rec.id: rec.label for rec in self.records}

    def _record(self, vid: str) -> VideoRecord:
        for rec in self.records:
            if rec.id == vid:
                return rec
        raise DataError(f"unknown video id {vid!r}")

    # -- caching -------------------------------------------------------------

    def _content_key(self, path: Path, stage_config: dict) -> str:
        h = hashlib.sha256()
        h.update(path.read_bytes())
        h.update(json.dumps(stage_config, sort_keys=True).encode("utf-8"))
        return h.hexdigest()[:16]

    # -- acoustic ------------------------------------------------------------

    def _audio_chunks(self, vid: str) -> list[AudioClip]:
        rec = self._record(vid)
        clip = extract_audio(rec.media_path, self.config.ingest_config(),
                             self.decoder, source_video=vid)
        return chunk_audio(clip, self.config.acoustic.acoustic_config())

    def _acoustic_rows(self, vid: str) -> list[tuple[str, float, np.ndarray | None]]:
        rec = self._record(vid)
        acfg = self.config.acoustic.acoustic_config()
        stage_cfg = {"chunk_len_s": acfg.chunk_len_s,
                     "remainder_keep_fraction": acfg.remainder_keep_fraction,
                     "frame_len": acfg.frame_len, "hop": acfg.hop,
                     "rolloff_fraction": acfg.rolloff_fraction,
                     "n_mel_summary_bands": acfg.n_mel_summary_bands,
                     "frame_step_s": self.config.frame_step_s,
                     "target_sample_rate": self.config.target_sample_rate}
        key = self._content_key(rec.media_path, stage_cfg)
        cache_path = self.config.cache_dir / vid / f"acoustic_features_{key}.jsonl"
        if cache_path.is_file():
            return read_feature_cache(cache_path)
        mcfg = MelConfig(sample_rate=self.config.target_sample_rate,
                         n_fft=acfg.frame_len, hop=acfg.hop)
        rows = extract_feature_rows(self._audio_chunks(vid), acfg, mcfg)
        write_feature_cache(rows, cache_path)
        return rows

    def acoustic_result(self) -> ModalityResult:
        if "acoustic" in self._cache:
            return self._cache["acoustic"]
        stage = self.config.acoustic
        acfg = stage.acoustic_config()
        mcfg = MelConfig(sample_rate=self.config.target_sample_rate,
                         n_fft=acfg.frame_len, hop=acfg.hop)
        train_ids = sorted(self.split.train_ids)
        test_ids = sorted(self.split.test_ids)

        rows_by_vid = {vid: self._acoustic_rows(vid) for vid in train_ids + test_ids}
        X_train, y_train, train_sources = [], [], []
        for vid in train_ids:
            label = self.truth[vid]
            for clip_id, _, values in rows_by_vid[vid]:
                if values is None:
                    continue
                X_train.append(values)
                y_train.append(label.value)
                train_sources.append(vid)
        if stage.augment:
            aug = stage.augment_config(self.config.seed)
            for vid in train_ids:
                label = self.truth[vid]
                for chunk in self._audio_chunks(vid):
                    shifted = time_shift(chunk, aug)
                    for _, _, values in extract_feature_rows([shifted], acfg, mcfg):
                        if values is not None:
                            X_train.append(values)
                            y_train.append(label.value)
                            train_sources.append(vid)
        assert_no_leakage(train_sources, self.split.train_ids, "acoustic training")
        if not X_train:
            raise DataError("no usable acoustic training chunks")
        X_train = np.array(X_train)
        y_train = np.array(y_train)
        stats = fit_normalizer(X_train, fitted_on=f"seed={self.split.seed}")
        X_norm = apply_normalizer(X_train, stats)

        kind = stage.model
        if kind == "svm":
            model = svm_train(X_norm, 2.0 * y_train - 1.0, _svm_config(stage.model_params()),
                              seed=self.config.seed)
            score_fn = lambda M, X: svm_predict_scores(M, X)
        elif kind == "forest":
            params = stage.model_params()
            params.setdefault("seed", self.config.seed)
            model = forest_train(X_norm, y_train, _build(ForestConfig, params, "forest"))
            score_fn = forest_scores
        else:
            params = stage.model_params()
            params.setdefault("seed", self.config.seed)
            model = boost_train(X_norm, y_train, _build(BoostConfig, params, "boost"))
            score_fn = boost_scores

        verdicts = {}
        for vid in test_ids:
            preds = []
            scored_rows = [(cid, values) for cid, _, values in rows_by_vid[vid]
                           if values is not None]
            assert_no_leakage([vid] if scored_rows else [], self.split.test_ids,
                              "acoustic scoring")
            if scored_rows:
                X = apply_normalizer(np.array([v for _, v in scored_rows]), stats)
                for (cid, _), score in zip(scored_rows, score_fn(model, X)):
                    preds.append(Prediction(unit_id=cid, score=float(score)))
            verdicts[vid] = aggregate_units(preds, Modality.ACOUSTIC, vid)
        result = ModalityResult(Modality.ACOUSTIC, verdicts, model, kind, len(X_train))
        self._cache["acoustic"] = result
        return result

    # -- lexical ---------------------------------------------------------------

    def _documents(self):
        if "documents" not in self._cache:
            docs = {}
            for rec in self.records:
                raw = load_transcript(rec.transcript_path, source_video=rec.id)
                docs[rec.id] = normalize_text(raw)
            self._cache["documents"] = docs
        return self._cache["documents"]

    def lexical_result(self) -> ModalityResult:
        if "lexical" in self._cache:
            return self._cache["lexical"]
        stage = self.config.lexical
        docs = self._documents()
        train_ids = sorted(self.split.train_ids)
        test_ids = sorted(self.split.test_ids)
        train_docs = [docs[vid] for vid in train_ids if docs[vid].tokens]
        assert_no_leakage([d.source_video for d in train_docs], self.split.train_ids,
                          "lexical training")
        if not train_docs:
            raise DataError("no non-empty training transcripts")
        tfidf = tfidf_fit(train_docs)
        embedding = None
        if stage.features == "tfidf_embedding":
            embedding = train_word_embeddings(train_docs,
                                              config=stage.embedding_config(self.config.seed))

        def featurize(doc) -> np.ndarray | None:
            if not doc.tokens:
                return None
            if stage.features == "counts":
                vec = count_transform(doc, tfidf)
                return vec if vec.sum() > 0 else None
            if stage.features == "tfidf":
                vec = tfidf_transform(doc, tfidf)
                return vec if np.linalg.norm(vec) > 0 else None
            vec = embed_document(doc, tfidf, embedding)
            return vec if np.any(vec != 0.0) else None

        X_train, y_train = [], []
        for doc in train_docs:
            vec = featurize(doc)
            if vec is not None:
                X_train.append(vec)
                y_train.append(self.truth[doc.source_video].value)
        X_train = np.array(X_train)
        y_train = np.array(y_train)

        if stage.model == "mnb":
            params = dict(stage.mnb)
            model = mnb_train(X_train, y_train, _build(NBConfig, params, "mnb"))
            score_fn = lambda M, X: np.array([mnb_posterior(M, x)[1] for x in X])
        else:
            model = svm_train(X_train, 2.0 * y_train - 1.0, _svm_config(dict(stage.svm)),
                              seed=self.config.seed)
            score_fn = lambda M, X: svm_predict_scores(M, X)

        verdicts = {}
        for vid in test_ids:
            vec = featurize(docs[vid])
            preds = []
            if vec is not None:
                score = float(score_fn(model, np.atleast_2d(vec))[0])
                preds.append(Prediction(unit_id=vid, score=score))
            verdicts[vid] = aggregate_units(preds, Modality.LEXICAL, vid)
        result = ModalityResult(Modality.LEXICAL, verdicts, model, stage.model,
                                len(X_train))
        self._cache["lexical"] = result
        return result

    # -- visual ------------------------------------------------------------------

    def _visual_frames(self, vid: str) -> list[Frame]:
        rec = self._record(vid)
        frames = extract_frames(rec.media_path, self.config.ingest_config(),
                                self.decoder, source_video=vid)
        return filter_and_crop(frames, self.detector, self.config.visual.visual_config())

    def visual_result(self) -> ModalityResult:
        if "visual" in self._cache:
            return self._cache["visual"]
        stage = self.config.visual
        train_ids = sorted(self.split.train_ids)
        test_ids = sorted(self.split.test_ids)

        images, labels, sources = [], [], []
        for vid in train_ids:
            for frame in self._visual_frames(vid):
                images.append(frame.pixels)
                labels.append(self.truth[vid].value)
                sources.append(frame.source_video)
        assert_no_leakage(sources, self.split.train_ids, "visual training")
        if not images:
            raise DataError("no usable visual training frames")
        cnn_config = stage.cnn_config(self.config.seed)
        model = cnn_train(np.array(images), np.array(labels, dtype=np.float64), cnn_config)

        verdicts = {}
        for vid in test_ids:
            frames = self._visual_frames(vid)
            assert_no_leakage([f.source_video for f in frames], self.split.test_ids,
                              "visual scoring")
            preds = []
            if frames:
                scores = cnn_scores(model, np.array([f.pixels for f in frames]))
                preds = [Prediction(unit_id=f"{vid}@{f.timestamp_s:.2f}", score=float(s))
                         for f, s in zip(frames, scores)]
            verdicts[vid] = aggregate_units(preds, Modality.VISUAL, vid)
        result = ModalityResult(Modality.VISUAL, verdicts, model, stage.model, len(images))
        self._cache["visual"] = result
        return result

    # -- fusion and reporting ------------------------------------------------------

    def modality_results(self) -> dict[Modality, ModalityResult]:
        return {Modality.VISUAL: self.visual_result(),
                Modality.ACOUSTIC: self.acoustic_result(),
                Modality.LEXICAL: self.lexical_result()}

    def fused_verdicts(self, mode: FusionMode) -> tuple[dict[str, FusedVerdict], list[str]]:
        results = self.modality_results()
        fused: dict[str, FusedVerdict] = {}
        no_evidence: list[str] = []
        for vid in sorted(self.split.test_ids):
            triple = [results[m].verdicts[vid] for m in
                      (Modality.VISUAL, Modality.ACOUSTIC, Modality.LEXICAL)]
            try:
                fused[vid] = vote(triple, mode)
            except DataError:
                no_evidence.append(vid)
        return fused, no_evidence

    def save_models(self) -> dict[str, Path]:
        paths = {}
        out = self.config.out_dir / "models"
        split_id = f"seed={self.split.seed}"
        for modality, result in self.modality_results().items():
            path = out / f"{modality.value}_{result.model_kind}.ddm"
            save_model(result.model, path, split_id=split_id, seed=self.config.seed)
            paths[modality.value] = path
        return paths

    def report_bundle(self) -> dict:
        """Deterministic report: metrics per modality, fused metrics for both
        voting modes, reference comparison, config echo."""
        results = self.modality_results()
        truth = {vid: self.truth[vid] for vid in self.split.test_ids}

        per_modality = {}
        for modality, result in sorted(results.items(), key=lambda kv: kv[0].value):
            labels = {vid: v.label for vid, v in result.verdicts.items()}
            metrics = evaluate(labels, truth)
            per_modality[modality.value] = {
                "model": result.model_kind,
                "n_train_units": result.n_train_units,
                "metrics": metrics.to_dict(),
            }

        fused = {}
        no_evidence_by_mode = {}
        for mode in FusionMode:
            verdicts, no_evidence = self.fused_verdicts(mode)
            labels: dict[str, Label | None] = {vid: None for vid in no_evidence}
            labels.update({vid: fv.label for vid, fv in verdicts.items()})
            fused[mode.value] = evaluate(labels, truth).to_dict()
            no_evidence_by_mode[mode.value] = no_evidence

        ours = {m: per_modality[m]["metrics"]["accuracy"]
                for m in ("visual", "acoustic", "lexical")}
        ours["fused"] = fused[self.config.fusion_mode.value]["accuracy"]

        return {
            "format_version": REPORT_FORMAT_VERSION,
            "seed": self.config.seed,
            "config": self.config.echo(),
            "split": json.loads(self.split.to_json()),
            "per_modality": per_modality,
            "fused": fused,
            "selected_fusion_mode": self.config.fusion_mode.value,
            "no_evidence": no_evidence_by_mode,
            "reference_comparison": compare_to_reference(ours),
        }


def run_experiment(config: ExperimentConfig, decoder: MediaDecoder | None = None,
                   detector: FaceDetector | None = None) -> dict:
    """Full pipeline returning the report bundle dictionary."""
    return ExperimentRunner(config, decoder=decoder, detector=detector).report_bundle()
