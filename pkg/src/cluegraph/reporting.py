"""Report rendering: delimited per-item tables plus matplotlib figures.

Both the evaluation and training commands can write a report directory
holding a CSV next to PNG figures rendered headlessly.
"""
from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .metrics import MetricReport  # noqa: E402


def write_eval_report(
    rows: list[dict],
    report: MetricReport,
    directory: str | Path,
) -> list[Path]:
    """Per-pair metrics CSV plus a corpus-level score bar figure."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []

    csv_path = directory / "pairs.csv"
    fields = ["index", "bleu_1", "bleu_2", "bleu_3", "bleu_4", "rouge_l", "candidate", "reference"]
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)
    written.append(csv_path)

    fig, ax = plt.subplots(figsize=(6, 3.5))
    labels = [f"BLEU-{n}" for n in sorted(report.bleu)] + ["BLEU avg", "ROUGE-L"]
    values = [report.bleu[n] for n in sorted(report.bleu)] + [
        report.bleu_avg,
        report.rouge_l if report.rouge_l is not None else 0.0,
    ]
    ax.bar(labels, values, color="#4878a8")
    ax.set_ylim(0, 1)
    ax.set_ylabel("score")
    ax.set_title(f"corpus metrics over {report.pairs} pairs")
    for tick in ax.get_xticklabels():
        tick.set_rotation(30)
    fig.tight_layout()
    fig_path = directory / "metrics.png"
    fig.savefig(fig_path, dpi=120)
    plt.close(fig)
    written.append(fig_path)
    return written


def write_train_report(trace: list[float], baseline: float, directory: str | Path) -> list[Path]:
    """Loss trace CSV plus the loss-curve figure."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []

    csv_path = directory / "loss_trace.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "mean_loss"])
        for epoch, value in enumerate(trace, start=1):
            writer.writerow([epoch, value])
    written.append(csv_path)

    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(range(1, len(trace) + 1), trace, marker="o", label="mean loss")
    ax.axhline(baseline, linestyle="--", color="#a84848", label="zero-parameter baseline")
    ax.set_xlabel("epoch")
    ax.set_ylabel("loss")
    ax.legend()
    fig.tight_layout()
    fig_path = directory / "loss_curve.png"
    fig.savefig(fig_path, dpi=120)
    plt.close(fig)
    written.append(fig_path)
    return written
