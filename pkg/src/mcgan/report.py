"""Comparison reports over one or more evaluation result files.

Renders a track-metric table (accuracy %, FP, FN per method), a segmentation
table (pixel accuracy, IoU), a CSV with the same rows, and bar-chart figures
next to the delimited output.
"""

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .errors import InputError


def load_report(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise InputError(f"report file {path} does not exist")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON: {exc}") from exc
    for key in ("acc", "fp", "fn"):
        if key not in doc:
            raise InputError(f"{path}: missing required key {key!r}")
    return doc


def track_table(reports: dict[str, dict]) -> str:
    """Rows shaped like `name | 95.01 | 0.0401 | 0.0186`."""
    width = max([len(n) for n in reports] + [len("Method")])
    lines = [
        f"{'Method':<{width}} | Accuracy(%) | FP | FN",
        "-" * (width + 30),
    ]
    for name, doc in reports.items():
        lines.append(
            f"{name:<{width}} | {100.0 * doc['acc']:.2f} | {doc['fp']:.4f} | {doc['fn']:.4f}"
        )
    return "\n".join(lines)


def segmentation_table(reports: dict[str, dict]) -> str:
    """Pixel accuracy / IOU rows with one column per method."""
    names = list(reports)
    width = max([len(n) for n in names] + [10])
    header = f"{'Metric':<16} | " + " | ".join(f"{n:<{width}}" for n in names)
    pixel = f"{'Pixel accuracy':<16} | " + " | ".join(
        f"{100.0 * reports[n].get('pixel_accuracy', 0.0):<{width}.2f}" for n in names
    )
    iou = f"{'IOU':<16} | " + " | ".join(
        f"{reports[n].get('mean_iou', 0.0):<{width}.4f}" for n in names
    )
    return "\n".join([header, "-" * len(header), pixel, iou])


def write_csv(reports: dict[str, dict], path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "accuracy_pct", "fp", "fn", "pixel_accuracy_pct", "mean_iou"])
        for name, doc in reports.items():
            writer.writerow(
                [
                    name,
                    f"{100.0 * doc['acc']:.2f}",
                    f"{doc['fp']:.4f}",
                    f"{doc['fn']:.4f}",
                    f"{100.0 * doc.get('pixel_accuracy', 0.0):.2f}",
                    f"{doc.get('mean_iou', 0.0):.4f}",
                ]
            )


def render_figures(reports: dict[str, dict], out_dir) -> list[Path]:
    """Bar charts for the track metrics and the segmentation metrics."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    names = list(reports)
    paths = []

    fig, axes = plt.subplots(1, 3, figsize=(10, 3.2))
    for ax, key, label, scale in (
        (axes[0], "acc", "Accuracy (%)", 100.0),
        (axes[1], "fp", "FP", 1.0),
        (axes[2], "fn", "FN", 1.0),
    ):
        ax.bar(names, [scale * reports[n][key] for n in names], color="#4878a8")
        ax.set_title(label)
        ax.tick_params(axis="x", rotation=30)
    fig.tight_layout()
    track_path = out_dir / "track_metrics.png"
    fig.savefig(track_path, dpi=120)
    plt.close(fig)
    paths.append(track_path)

    fig, axes = plt.subplots(1, 2, figsize=(7, 3.2))
    axes[0].bar(names, [100.0 * reports[n].get("pixel_accuracy", 0.0) for n in names],
                color="#5a9a68")
    axes[0].set_title("Pixel accuracy (%)")
    axes[1].bar(names, [reports[n].get("mean_iou", 0.0) for n in names], color="#5a9a68")
    axes[1].set_title("Mean IoU")
    for ax in axes:
        ax.tick_params(axis="x", rotation=30)
    fig.tight_layout()
    seg_path = out_dir / "segmentation_metrics.png"
    fig.savefig(seg_path, dpi=120)
    plt.close(fig)
    paths.append(seg_path)
    return paths


def build_report(report_paths, out_dir=None) -> str:
    """Load result files, render both tables, optionally write CSV + figures."""
    reports = {}
    for path in report_paths:
        name = Path(path).stem
        base = name
        n = 2
        while name in reports:
            name = f"{base}_{n}"
            n += 1
        reports[name] = load_report(path)
    text = track_table(reports) + "\n\n" + segmentation_table(reports) + "\n"
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "report.txt").write_text(text)
        write_csv(reports, out_dir / "report.csv")
        render_figures(reports, out_dir / "figures")
    return text
