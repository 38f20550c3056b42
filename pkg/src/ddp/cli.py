"""Command-line interface.

Subcommands: synth, ingest, features, train, eval, fuse, report.
Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .dataset_registry import load_manifest, resolve_labels
from .errors import ConfigError, DataError, NumericError
from .experiment import ExperimentConfig, ExperimentRunner, load_config
from .fusion import Modality
from .media_ingest import (IngestConfig, RawVideoDecoder, extract_audio, extract_frames,
                           write_audio_cache, write_frame_cache)
from .report import fused_records, write_report
from .synthetic import generate_synthetic_corpus
from .visual import VisualMode, detect_faces, write_detection_cache

MODALITIES = tuple(m.value for m in Modality)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _add_common(sub):
    sub.add_argument("--config", type=Path, help="experiment config file (YAML)")
    sub.add_argument("--manifest", type=Path, help="dataset manifest (JSONL)")
    sub.add_argument("--out", type=Path, help="output directory")
    sub.add_argument("--seed", type=int, help="experiment seed")
    sub.add_argument("--modality", choices=MODALITIES, help="restrict to one modality")


def _resolve_config(args) -> ExperimentConfig:
    if args.config is not None:
        config = load_config(args.config)
    else:
        if args.manifest is None or args.out is None:
            raise ConfigError("either --config or both --manifest and --out are required")
        config = load_config({"manifest": str(args.manifest),
                              "cache_dir": str(args.out / "cache"),
                              "out_dir": str(args.out)}, base_dir=Path.cwd())
    updates = {}
    if args.manifest is not None:
        updates["manifest"] = args.manifest.resolve()
    if args.out is not None:
        updates["out_dir"] = args.out.resolve()
    if args.seed is not None:
        updates["seed"] = args.seed
    return dataclasses.replace(config, **updates) if updates else config


def cmd_synth(args) -> int:
    if args.out is None:
        raise ConfigError("synth requires --out")
    manifest = generate_synthetic_corpus(args.n, args.seed if args.seed is not None else 1,
                                         args.out)
    print(manifest)
    return 0


def cmd_ingest(args) -> int:
    config = _resolve_config(args)
    records = resolve_labels(load_manifest(config.manifest), config.split)
    decoder = RawVideoDecoder()
    ingest = config.ingest_config()
    base = config.manifest.parent
    for rec in records:
        media = rec.media_path if rec.media_path.is_absolute() else base / rec.media_path
        frames = extract_frames(media, ingest, decoder, source_video=rec.id)
        write_frame_cache(frames, config.cache_dir, rec.id)
        clip = extract_audio(media, ingest, decoder, source_video=rec.id)
        write_audio_cache(clip, config.cache_dir, rec.id)
        print(f"{rec.id}: {len(frames)} frames, {len(clip.samples)} audio samples")
    return 0


def cmd_features(args) -> int:
    config = _resolve_config(args)
    runner = ExperimentRunner(config)
    wanted = [args.modality] if args.modality else list(MODALITIES)
    for vid in sorted(r.id for r in runner.records):
        if "acoustic" in wanted:
            rows = runner._acoustic_rows(vid)
            n_ok = sum(1 for _, _, v in rows if v is not None)
            print(f"{vid}: acoustic {n_ok}/{len(rows)} chunks featurized")
        if "lexical" in wanted:
            doc = runner._documents()[vid]
            print(f"{vid}: lexical {len(doc.tokens)} tokens")
        if "visual" in wanted:
            if config.visual.visual_config().mode is VisualMode.SINGLE_FACE:
                rec = runner._record(vid)
                frames = extract_frames(rec.media_path, config.ingest_config(),
                                        runner.decoder, source_video=vid)
                detections = [(f.timestamp_s, detect_faces(f, runner.detector))
                              for f in frames]
                path = config.cache_dir / vid / "detections.jsonl"
                write_detection_cache(detections, path, runner.detector)
                print(f"{vid}: visual {len(detections)} frames detected -> {path}")
            else:
                n = len(runner._visual_frames(vid))
                print(f"{vid}: visual {n} full frames prepared")
    return 0


def cmd_train(args) -> int:
    runner = ExperimentRunner(_resolve_config(args))
    paths = runner.save_models()
    for modality, path in sorted(paths.items()):
        print(f"{modality}: {path}")
    return 0


def cmd_eval(args) -> int:
    runner = ExperimentRunner(_resolve_config(args))
    bundle = runner.report_bundle()
    if args.modality:
        payload = {args.modality: bundle["per_modality"][args.modality]["metrics"]}
    else:
        payload = {m: bundle["per_modality"][m]["metrics"] for m in MODALITIES}
        payload["fused"] = bundle["fused"][bundle["selected_fusion_mode"]]
    print(json.dumps(payload, sort_keys=True, indent=2))
    return 0


def cmd_fuse(args) -> int:
    config = _resolve_config(args)
    runner = ExperimentRunner(config)
    verdicts, no_evidence = runner.fused_verdicts(config.fusion_mode)
    lines = fused_records(verdicts, no_evidence, config.fusion_mode)
    config.out_dir.mkdir(parents=True, exist_ok=True)
    out = config.out_dir / "fused.jsonl"
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(out)
    return 0


def cmd_report(args) -> int:
    config = _resolve_config(args)
    runner = ExperimentRunner(config)
    bundle = runner.report_bundle()
    verdicts, no_evidence = runner.fused_verdicts(config.fusion_mode)
    paths = write_report(bundle, verdicts, no_evidence, config.fusion_mode, config.out_dir)
    for name, path in sorted(paths.items()):
        print(f"{name}: {path}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="ddp", description=__doc__)
    subparsers = parser.add_subparsers(dest="command", required=True)

    synth = subparsers.add_parser("synth", help="generate the synthetic corpus")
    synth.add_argument("--n", type=int, default=40, help="number of videos (even, >= 8)")
    _add_common(synth)
    synth.set_defaults(func=cmd_synth)

    for name, func, help_text in (
        ("ingest", cmd_ingest, "demux videos into the frame/audio caches"),
        ("features", cmd_features, "compute and cache per-modality features"),
        ("train", cmd_train, "train the per-modality models and save artifacts"),
        ("eval", cmd_eval, "evaluate on the test split and print metrics"),
        ("fuse", cmd_fuse, "write line-delimited fused verdicts"),
        ("report", cmd_report, "write the full report with figures"),
    ):
        sub = subparsers.add_parser(name, help=help_text)
        _add_common(sub)
        sub.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"ddp: config error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"ddp: data error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"ddp: numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
