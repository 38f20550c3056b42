"""Report rendering: machine JSON, human Markdown, line-delimited fused
results, and matplotlib figures, all byte-deterministic for a given bundle."""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .fusion import FusedVerdict, FusionMode, Modality

_SAVEFIG_KWARGS = {"dpi": 110, "metadata": {"Software": None}}


def bundle_to_json(bundle: dict) -> str:
    return json.dumps(bundle, sort_keys=True, indent=2) + "\n"


def _pct(x: float) -> str:
    return f"{100.0 * x:.1f}%"


def bundle_to_markdown(bundle: dict) -> str:
    lines = ["# Deception detection run report", ""]
    lines.append(f"- seed: {bundle['seed']}")
    lines.append(f"- format_version: {bundle['format_version']}")
    lines.append(f"- fusion mode: {bundle['selected_fusion_mode']}")
    split = bundle["split"]
    lines.append(f"- split: {len(split['train'])} train / {len(split['test'])} test videos "
                 f"(seed {split['seed']})")
    lines.append("")

    lines.append("## Per-modality metrics")
    lines.append("")
    lines.append("| modality | model | accuracy | precision | recall | F1 | scored | abstained |")
    lines.append("|---|---|---|---|---|---|---|---|")
    for modality in ("visual", "acoustic", "lexical"):
        entry = bundle["per_modality"][modality]
        m = entry["metrics"]
        lines.append(f"| {modality} | {entry['model']} | {_pct(m['accuracy'])} | "
                     f"{_pct(m['precision'])} | {_pct(m['recall'])} | {_pct(m['f1'])} | "
                     f"{m['n_scored']} | {m['n_abstained']} |")
    lines.append("")

    lines.append("## Fused metrics")
    lines.append("")
    lines.append("| mode | accuracy | precision | recall | F1 | scored | no evidence |")
    lines.append("|---|---|---|---|---|---|---|")
    for mode, m in sorted(bundle["fused"].items()):
        n_no_evidence = len(bundle["no_evidence"][mode])
        lines.append(f"| {mode} | {_pct(m['accuracy'])} | {_pct(m['precision'])} | "
                     f"{_pct(m['recall'])} | {_pct(m['f1'])} | {m['n_scored']} | "
                     f"{n_no_evidence} |")
    lines.append("")

    lines.append("## Reference comparison")
    lines.append("")
    lines.append("Published accuracies embedded with their citations; informational only "
                 "(the published evaluation protocol is unstated, so deltas are never "
                 "pass/fail). Conflicting published pairs are shown as ranges.")
    lines.append("")
    lines.append("| dataset | quantity | ours | published | delta | citation |")
    lines.append("|---|---|---|---|---|---|")
    for row in bundle["reference_comparison"]:
        refs = row["reference"]
        cites = ", ".join(row["citations"])
        if row["inconsistent_reference"]:
            ref_text = f"{_pct(min(refs))} - {_pct(max(refs))} (inconsistent)"
            delta_text = " / ".join(f"{100.0 * d:+.1f}pp" for d in row["delta"])
        else:
            ref_text = _pct(refs[0])
            delta_text = f"{100.0 * row['delta'][0]:+.1f}pp"
        lines.append(f"| {row['dataset']} | {row['quantity']} | {_pct(row['ours'])} | "
                     f"{ref_text} | {delta_text} | {cites} |")
    lines.append("")
    return "\n".join(lines) + "\n"


def fused_records(verdicts: dict[str, FusedVerdict],
                  no_evidence: list[str], mode: FusionMode) -> list[str]:
    """Line-delimited fused results: one record per test video."""
    lines = []
    all_ids = sorted(set(verdicts) | set(no_evidence))
    for vid in all_ids:
        if vid in verdicts:
            fv = verdicts[vid]
            scores = {v.modality.value: v.score for v in fv.verdicts}
            obj = {"video_id": vid, "label": fv.label.name.lower(), "mode": mode.value,
                   "modality_scores": {m.value: scores.get(m.value) for m in Modality}}
        else:
            obj = {"video_id": vid, "label": None, "mode": mode.value,
                   "modality_scores": {m.value: None for m in Modality},
                   "error": "no_evidence"}
        lines.append(json.dumps(obj, sort_keys=True))
    return lines


def _accuracy_figure(bundle: dict, path: Path) -> None:
    quantities = ["visual", "acoustic", "lexical", "fused"]
    ours = [bundle["per_modality"][q]["metrics"]["accuracy"] for q in quantities[:3]]
    ours.append(bundle["fused"][bundle["selected_fusion_mode"]]["accuracy"])
    published = {}
    for row in bundle["reference_comparison"]:
        published.setdefault(row["quantity"], {})[row["dataset"]] = row["reference"]

    x = np.arange(len(quantities))
    width = 0.27
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    ax.bar(x - width, ours, width, label="this run", color="#2c7fb8")
    rlt = [min(published[q]["rlt"]) for q in quantities]
    mu3d = [min(published[q]["mu3d"]) for q in quantities]
    ax.bar(x, rlt, width, label="published (trial data)", color="#7fcdbb")
    ax.bar(x + width, mu3d, width, label="published (mu3d)", color="#edf8b1",
           edgecolor="#999999")
    for row in bundle["reference_comparison"]:
        if row["inconsistent_reference"] and row["dataset"] == "rlt":
            i = quantities.index(row["quantity"])
            lo, hi = min(row["reference"]), max(row["reference"])
            ax.vlines(x[i], lo, hi, color="#333333", linewidth=2)
    ax.set_xticks(x, quantities)
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("accuracy")
    ax.set_title("Accuracy by modality vs published results")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, **_SAVEFIG_KWARGS)
    plt.close(fig)


def _confusion_figure(bundle: dict, path: Path) -> None:
    panels = [("visual", bundle["per_modality"]["visual"]["metrics"]),
              ("acoustic", bundle["per_modality"]["acoustic"]["metrics"]),
              ("lexical", bundle["per_modality"]["lexical"]["metrics"]),
              (f"fused ({bundle['selected_fusion_mode']})",
               bundle["fused"][bundle["selected_fusion_mode"]])]
    fig, axes = plt.subplots(1, 4, figsize=(11.0, 3.0))
    for ax, (title, m) in zip(axes, panels):
        c = m["confusion"]
        grid = np.array([[c["tp"], c["fn"]], [c["fp"], c["tn"]]], dtype=float)
        ax.imshow(grid, cmap="Blues", vmin=0, vmax=max(grid.max(), 1))
        for (i, j), value in np.ndenumerate(grid):
            ax.text(j, i, int(value), ha="center", va="center", fontsize=11)
        ax.set_title(title, fontsize=9)
        ax.set_xticks([0, 1], ["pred D", "pred T"], fontsize=7)
        ax.set_yticks([0, 1], ["true D", "true T"], fontsize=7)
    fig.tight_layout()
    fig.savefig(path, **_SAVEFIG_KWARGS)
    plt.close(fig)


def write_report(bundle: dict, verdicts: dict[str, FusedVerdict],
                 no_evidence: list[str], mode: FusionMode,
                 out_dir: Path | str) -> dict[str, Path]:
    """Write report.json, report.md, fused.jsonl, and the figures; returns
    the paths keyed by artifact name."""
    out_dir = Path(out_dir)
    figures = out_dir / "figures"
    figures.mkdir(parents=True, exist_ok=True)

    paths = {
        "report_json": out_dir / "report.json",
        "report_md": out_dir / "report.md",
        "fused_jsonl": out_dir / "fused.jsonl",
        "accuracy_png": figures / "accuracy_comparison.png",
        "confusion_png": figures / "confusion_matrices.png",
    }
    paths["report_json"].write_text(bundle_to_json(bundle), encoding="utf-8")
    paths["report_md"].write_text(bundle_to_markdown(bundle), encoding="utf-8")
    lines = fused_records(verdicts, no_evidence, mode)
    paths["fused_jsonl"].write_text("\n".join(lines) + "\n", encoding="utf-8")
    _accuracy_figure(bundle, paths["accuracy_png"])
    _confusion_figure(bundle, paths["confusion_png"])
    return paths
