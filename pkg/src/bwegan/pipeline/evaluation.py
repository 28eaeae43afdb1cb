"""LSD evaluation of a generator against FFT interpolation, per ratio."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .. import nn
from ..audio_io import AudioBuffer
from ..dsp import fft_resample
from ..spectral import LSD_CONFIG, MEL_CONFIG, mel_spectrogram, log_spectral_distance
from .corpus import CorpusManifest, parse_ratio, ratio_key
from .errors import DataError, NumericalError
from .training import PairSource, load_generator

DEFAULT_GRID = (2, 3, 4, 5, 6, 8)

__all__ = [
    "UtteranceResult",
    "RatioResult",
    "EvalReport",
    "evaluate",
    "evaluate_system",
    "baseline",
    "zero_shot_sweep",
    "generator_system",
    "oracle_system",
    "DEFAULT_GRID",
]


@dataclass(frozen=True)
class UtteranceResult:
    id: str
    n_samples: int
    model_lsd: float | None
    baseline_lsd: float


@dataclass
class RatioResult:
    ratio: str
    utterances: list
    seen_in_training: bool | None = None

    @property
    def n_utterances(self) -> int:
        return len(self.utterances)

    @property
    def model_lsd(self) -> float | None:
        vals = [u.model_lsd for u in self.utterances]
        return None if None in vals else float(np.mean(vals))

    @property
    def baseline_lsd(self) -> float:
        return float(np.mean([u.baseline_lsd for u in self.utterances]))


@dataclass
class EvalReport:
    kind: str  # "eval", "sweep" or "baseline"
    rows: list
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.rows.sort(key=lambda r: parse_ratio(r.ratio))

    def row(self, ratio) -> RatioResult:
        key = ratio_key(ratio)
        for r in self.rows:
            if r.ratio == key:
                return r
        raise KeyError(key)

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "metadata": self.metadata,
            "rows": [
                {
                    "ratio": r.ratio,
                    "model_lsd": r.model_lsd,
                    "baseline_lsd": r.baseline_lsd,
                    "n_utterances": r.n_utterances,
                    "seen_in_training": r.seen_in_training,
                    "utterances": [u.__dict__ for u in r.utterances],
                }
                for r in self.rows
            ],
        }


def generator_system(gen):
    """Wrap a generator as ``system(upsampled, reference) -> samples``.

    The upsampled input is zero-padded to a whole number of mel frames so the
    output covers it; the caller trims to the reference length.
    """

    def run(upsampled: AudioBuffer, reference: AudioBuffer) -> np.ndarray:
        n = len(upsampled)
        frames = -(-n // MEL_CONFIG.hop)
        x = np.zeros(frames * MEL_CONFIG.hop)
        x[:n] = upsampled.samples
        mel = mel_spectrogram(AudioBuffer(x, upsampled.sample_rate)).values.T[None]
        with nn.default_dtype(np.float32), nn.no_grad():
            out = gen(mel.astype(np.float32)).data[0, 0].astype(np.float64)
        return out

    return run


def oracle_system(upsampled: AudioBuffer, reference: AudioBuffer) -> np.ndarray:
    """Returns the reference itself; its LSD row is zero by construction."""
    return reference.samples


def evaluate_system(system, manifest: CorpusManifest, ratios, split: str = "test", kind: str = "eval"):
    """Score ``system`` (or only the baseline when ``system`` is None).

    Per utterance and ratio: narrowband (from the manifest, or derived from
    the reference when that variant was not prepared) -> FFT interpolation
    to 16 kHz -> system. The reference and both outputs are trimmed to the
    interpolated length, so every LSD compares equal-length signals.
    """
    entries = manifest.split(split)
    if not entries:
        raise DataError(f"manifest has no {split} utterances")
    ratios = sorted({parse_ratio(r) for r in ratios})
    source = PairSource(manifest)
    rows = []
    for ratio in ratios:
        results = []
        for entry in entries:
            ref_full = source.wideband(entry)
            up = fft_resample(source.narrowband(entry, ratio), manifest.target_rate)
            n = min(len(up), len(ref_full))
            ref = AudioBuffer(ref_full[:n], manifest.target_rate)
            up = AudioBuffer(up.samples[:n], manifest.target_rate)
            base = log_spectral_distance(ref, up)
            model = None
            if system is not None:
                out = np.asarray(system(up, ref))
                if len(out) < n:
                    raise DataError(f"{entry.id}: system produced {len(out)} < {n} samples")
                out = out[:n]
                if not np.all(np.isfinite(out)):
                    raise NumericalError(f"{entry.id}: non-finite output at ratio {ratio}")
                model = log_spectral_distance(ref, AudioBuffer(out, manifest.target_rate))
            results.append(UtteranceResult(entry.id, n, model, base))
        rows.append(RatioResult(ratio_key(ratio), results))
    meta = {
        "split": split,
        "manifest_fingerprint": _manifest_fingerprint(manifest),
        "lsd_config": LSD_CONFIG.as_dict(),
        "mel_config": MEL_CONFIG.as_dict(),
        "baseline": "fft interpolation",
    }
    return EvalReport(kind, rows, meta)


def _manifest_fingerprint(manifest: CorpusManifest) -> str:
    text = json.dumps(manifest.as_dict(), sort_keys=True)
    return hashlib.sha256(text.encode()).hexdigest()


def evaluate(checkpoint, manifest: CorpusManifest, ratios, split: str = "test") -> EvalReport:
    gen, meta = load_generator(checkpoint)
    report = evaluate_system(generator_system(gen), manifest, ratios, split, kind="eval")
    _tag(report, meta)
    return report


def baseline(manifest: CorpusManifest, ratios, split: str = "test") -> EvalReport:
    return evaluate_system(None, manifest, ratios, split, kind="baseline")


def zero_shot_sweep(checkpoint, manifest: CorpusManifest, grid=DEFAULT_GRID, split: str = "test") -> EvalReport:
    """Evaluate one checkpoint over a ratio grid, flagging ratios it never saw."""
    gen, meta = load_generator(checkpoint)
    report = evaluate_system(generator_system(gen), manifest, grid, split, kind="sweep")
    _tag(report, meta)
    return report


def _tag(report: EvalReport, meta: dict) -> None:
    trained = {ratio_key(r) for r in meta["trained_ratios"]}
    for row in report.rows:
        row.seen_in_training = row.ratio in trained
    report.metadata.update(
        {
            "generator_fingerprint": meta["generator_fingerprint"],
            "trained_ratios": sorted(trained, key=parse_ratio),
            "training_steps": meta["step"],
            "mode": meta["run"]["mode"],
        }
    )
