"""Corpus preparation and the manifest that describes it.

Manifest schema (``manifest.json``, version 1)::

    {
      "format": "bwegan-manifest",
      "version": 1,
      "tool_version": "0.1.0",
      "target_rate": 16000,
      "ratios": [2, 4, 8],
      "filter": {...},              # anti-alias design used for decimation
      "normalization": {"method": "peak", "target": 0.95},
      "train_speakers": [...],
      "test_speakers": [...],
      "entries": [
        {"id": "s01/s01_001", "speaker": "s01", "split": "train",
         "n_samples": 16000, "wideband": "wideband/s01/s01_001.wav",
         "narrowband": {"2": "narrowband/x2/s01/s01_001.wav", ...}},
        ...
      ]
    }

Paths are relative to the directory holding the manifest. The file is
written with sorted keys and no timestamps, so the same inputs always give
the same bytes.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .. import __version__
from ..audio_io import AudioBuffer, WavError, peak_normalize, read_wav, write_wav
from ..dsp import (
    DEFAULT_CUTOFF_FRACTION,
    DEFAULT_ORDER,
    DEFAULT_RIPPLE_DB,
    RatioSpec,
    decimate,
    fft_resample,
)
from .errors import ConfigError, DataError

log = logging.getLogger(__name__)

MANIFEST_FORMAT = "bwegan-manifest"
MANIFEST_VERSION = 1
MANIFEST_NAME = "manifest.json"
TARGET_RATE = 16000
PEAK_TARGET = 0.95
MAX_TRAIN_SPEAKERS = 100

__all__ = [
    "CorpusEntry",
    "CorpusManifest",
    "parse_ratio",
    "ratio_key",
    "narrowband_for",
    "prepare_corpus",
    "split_speakers",
]


def parse_ratio(value) -> Fraction:
    try:
        r = Fraction(str(value).strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad ratio {value!r}") from exc
    if r <= 1:
        raise ConfigError(f"ratio must exceed 1, got {value!r}")
    return r


def ratio_key(ratio) -> str:
    """Canonical text form used in manifests and reports: ``"2"``, ``"5/2"``."""
    return str(parse_ratio(ratio))


def _ratio_value(ratio):
    r = parse_ratio(ratio)
    return int(r) if r.denominator == 1 else float(r)


@dataclass(frozen=True)
class CorpusEntry:
    id: str
    speaker: str
    split: str
    n_samples: int
    wideband: str
    narrowband: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "id": self.id,
            "speaker": self.speaker,
            "split": self.split,
            "n_samples": self.n_samples,
            "wideband": self.wideband,
            "narrowband": dict(self.narrowband),
        }


@dataclass
class CorpusManifest:
    entries: list
    ratios: list
    train_speakers: list
    test_speakers: list
    target_rate: int = TARGET_RATE
    filter: dict = field(default_factory=dict)
    normalization: dict = field(default_factory=dict)
    tool_version: str = __version__
    root: Path | None = None  # directory the relative paths resolve against

    def __post_init__(self):
        overlap = set(self.train_speakers) & set(self.test_speakers)
        if overlap:
            raise ConfigError(f"speakers in both splits: {sorted(overlap)}")
        for e in self.entries:
            expected = "train" if e.speaker in self.train_speakers else "test"
            if e.split != expected:
                raise ConfigError(f"{e.id}: split {e.split!r} disagrees with speaker lists")

    def split(self, name: str) -> list:
        if name == "all":
            return list(self.entries)
        if name not in ("train", "test"):
            raise ConfigError(f"unknown split {name!r}")
        return [e for e in self.entries if e.split == name]

    def path(self, relative: str) -> Path:
        return (self.root or Path(".")) / relative

    def load_wideband(self, entry: CorpusEntry) -> AudioBuffer:
        return read_wav(self.path(entry.wideband))

    def as_dict(self) -> dict:
        return {
            "format": MANIFEST_FORMAT,
            "version": MANIFEST_VERSION,
            "tool_version": self.tool_version,
            "target_rate": self.target_rate,
            "ratios": [ratio_key(r) for r in self.ratios],
            "filter": self.filter,
            "normalization": self.normalization,
            "train_speakers": list(self.train_speakers),
            "test_speakers": list(self.test_speakers),
            "entries": [e.as_dict() for e in self.entries],
        }

    def save(self, path) -> None:
        text = json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n"
        Path(path).write_text(text, encoding="utf-8")

    @classmethod
    def load(cls, path) -> "CorpusManifest":
        path = Path(path)
        if path.is_dir():
            path = path / MANIFEST_NAME
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError as exc:
            raise DataError(f"manifest not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: not valid JSON ({exc})") from exc
        if data.get("format") != MANIFEST_FORMAT:
            raise DataError(f"{path}: not a {MANIFEST_FORMAT} file")
        if data.get("version") != MANIFEST_VERSION:
            raise DataError(f"{path}: unsupported manifest version {data.get('version')}")
        entries = [CorpusEntry(**e) for e in data["entries"]]
        return cls(
            entries=entries,
            ratios=[parse_ratio(r) for r in data["ratios"]],
            train_speakers=data["train_speakers"],
            test_speakers=data["test_speakers"],
            target_rate=data["target_rate"],
            filter=data["filter"],
            normalization=data["normalization"],
            tool_version=data["tool_version"],
            root=path.parent,
        )


def split_speakers(speakers, max_train: int = MAX_TRAIN_SPEAKERS, n_train: int | None = None):
    """Sorted speakers; the first ``n_train`` train, the rest test.

    By default ``n_train = min(max_train, n - 1)`` so at least one speaker is
    held out whenever there are two or more.
    """
    speakers = sorted(set(speakers))
    if n_train is None:
        n_train = min(max_train, max(len(speakers) - 1, 1))
    if not 0 < n_train <= len(speakers):
        raise ConfigError(f"cannot put {n_train} of {len(speakers)} speakers in the train split")
    return speakers[:n_train], speakers[n_train:]


def narrowband_for(wide: AudioBuffer, ratio) -> AudioBuffer:
    """Narrowband version of a 16 kHz reference at ratio ``s``.

    Integer ratios use the Chebyshev decimator; other ratios fall back to
    spectral truncation, which is an ideal low-pass followed by resampling.
    """
    r = parse_ratio(ratio)
    if r.denominator == 1:
        return decimate(wide, int(r))
    return fft_resample(wide, RatioSpec(r, wide.sample_rate).f_low)


def _discover(input_dir: Path):
    found = []
    for path in sorted(input_dir.rglob("*")):
        if not path.is_file() or path.suffix.lower() != ".wav":
            continue
        rel = path.relative_to(input_dir)
        speaker = rel.parts[0] if len(rel.parts) > 1 else "default"
        found.append((speaker, rel.with_suffix("").name, path))
    return found


def prepare_corpus(
    input_dir,
    out_dir,
    ratios=(2, 4, 8),
    target_rate: int = TARGET_RATE,
    n_train_speakers: int | None = None,
) -> CorpusManifest:
    """Resample, normalize and decimate every WAV under ``input_dir``.

    Speakers are the first-level subdirectories. Unreadable or too-short
    files are skipped with a warning. Writes ``out_dir/manifest.json``.
    """
    input_dir, out_dir = Path(input_dir), Path(out_dir)
    ratios = sorted({parse_ratio(r) for r in ratios})
    if not ratios:
        raise ConfigError("no ratios given")
    if not input_dir.is_dir():
        raise DataError(f"input directory not found: {input_dir}")

    clips = []
    for speaker, stem, path in _discover(input_dir):
        try:
            buf = read_wav(path)
            if buf.sample_rate != target_rate:
                buf = fft_resample(buf, target_rate)
            if not np.any(buf.samples):
                raise DataError("silent file")
            buf = peak_normalize(buf, PEAK_TARGET)
            narrow = {ratio_key(r): narrowband_for(buf, r) for r in ratios}
        except (WavError, DataError, ValueError, OSError) as exc:
            log.warning("skipping %s: %s", path, exc)
            continue
        clips.append((speaker, stem, buf, narrow))
    if not clips:
        raise DataError(f"no usable WAV files under {input_dir}")

    ids = [f"{sp}/{stem}" for sp, stem, _, _ in clips]
    if len(set(ids)) != len(ids):
        raise DataError("duplicate utterance ids (same file name under one speaker)")
    train, test = split_speakers([c[0] for c in clips], n_train=n_train_speakers)

    entries = []
    for speaker, stem, buf, narrow in clips:
        wide_rel = f"wideband/{speaker}/{stem}.wav"
        _write(out_dir / wide_rel, buf)
        nb_paths = {}
        for key, nb in narrow.items():
            rel = f"narrowband/x{key.replace('/', '_')}/{speaker}/{stem}.wav"
            _write(out_dir / rel, nb)
            nb_paths[key] = rel
        entries.append(
            CorpusEntry(
                id=f"{speaker}/{stem}",
                speaker=speaker,
                split="train" if speaker in train else "test",
                n_samples=len(buf),
                wideband=wide_rel,
                narrowband=nb_paths,
            )
        )

    manifest = CorpusManifest(
        entries=entries,
        ratios=ratios,
        train_speakers=train,
        test_speakers=test,
        target_rate=target_rate,
        filter={
            "type": "chebyshev1",
            "order": DEFAULT_ORDER,
            "ripple_db": DEFAULT_RIPPLE_DB,
            "cutoff_fraction_of_low_nyquist": DEFAULT_CUTOFF_FRACTION,
            "zero_phase": True,
            "non_integer_ratios": "fft truncation",
        },
        normalization={"method": "peak", "target": PEAK_TARGET},
        root=out_dir,
    )
    manifest.save(out_dir / MANIFEST_NAME)
    return manifest


def _write(path: Path, buf: AudioBuffer) -> None:
    os.makedirs(path.parent, exist_ok=True)
    write_wav(buf, path)
