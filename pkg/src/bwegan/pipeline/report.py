"""Report files and spectrogram images."""

from __future__ import annotations

import csv
import json
import os
from pathlib import Path

import numpy as np

from ..audio_io import AudioBuffer
from ..spectral import StftConfig, power_spectrogram
from .evaluation import EvalReport

# Spectrogram images: log10 power on a fixed scale so images are comparable.
RENDER_CONFIG = StftConfig(fft_size=512, win_size=512, hop=128, center=True)
RENDER_VMIN = -10.0
RENDER_VMAX = 4.0
RENDER_CMAP = "magma"

__all__ = ["emit_report", "render_spectrogram", "spectrogram_image", "RENDER_CONFIG"]


def _fmt(x) -> str:
    return "" if x is None else f"{x:.6f}"


def emit_report(report: EvalReport, out_dir) -> dict:
    """Write ``report.csv``, ``utterances.csv``, ``report.json`` and ``plot_data.json``.

    Returns the written paths by role.
    """
    out = Path(out_dir)
    os.makedirs(out, exist_ok=True)
    paths = {
        "table": out / "report.csv",
        "utterances": out / "utterances.csv",
        "json": out / "report.json",
        "plot": out / "plot_data.json",
    }
    with open(paths["table"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["ratio", "model_lsd", "baseline_lsd", "n_utterances"])
        for r in report.rows:
            w.writerow([r.ratio, _fmt(r.model_lsd), _fmt(r.baseline_lsd), r.n_utterances])
    with open(paths["utterances"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["ratio", "utterance", "n_samples", "model_lsd", "baseline_lsd"])
        for r in report.rows:
            for u in r.utterances:
                w.writerow([r.ratio, u.id, u.n_samples, _fmt(u.model_lsd), _fmt(u.baseline_lsd)])
    paths["json"].write_text(json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    plot = {
        "x_label": "upsampling ratio",
        "y_label": "LSD",
        "ratios": [r.ratio for r in report.rows],
        "model_lsd": [r.model_lsd for r in report.rows],
        "baseline_lsd": [r.baseline_lsd for r in report.rows],
        "seen_in_training": [r.seen_in_training for r in report.rows],
    }
    paths["plot"].write_text(json.dumps(plot, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return paths


def spectrogram_image(buf: AudioBuffer, cfg: StftConfig = RENDER_CONFIG) -> np.ndarray:
    """Log10 power as (bins, frames), row 0 = DC, clipped to the render range."""
    if len(buf) == 0:
        raise ValueError("cannot render an empty buffer")
    values = power_spectrogram(buf, cfg).values.T
    return np.clip(values, RENDER_VMIN, RENDER_VMAX)


def render_spectrogram(buf: AudioBuffer, out, cfg: StftConfig = RENDER_CONFIG) -> None:
    """Save a PNG: time left to right, 0 Hz at the bottom and Nyquist at the top.

    Colors come from the magma map over log10 power in [-10, 4]; one pixel
    per STFT bin and frame.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    img = spectrogram_image(buf, cfg)
    plt.imsave(out, img, cmap=RENDER_CMAP, vmin=RENDER_VMIN, vmax=RENDER_VMAX, origin="lower")
