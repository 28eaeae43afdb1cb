"""Training pairs and the alternating discriminator/generator loop."""

from __future__ import annotations

import hashlib
import json
import logging
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .. import nn
from ..audio_io import AudioBuffer, read_wav
from ..dsp import fft_resample
from ..losses import (
    LossWeights,
    MelTransform,
    discriminator_loss,
    feature_matching_loss,
    generator_adversarial_loss,
    mel_reconstruction_loss,
    total_generator_loss,
)
from ..model import DiscriminatorConfig, Discriminators, Generator, GeneratorConfig
from ..spectral import MEL_CONFIG, mel_spectrogram
from .corpus import CorpusEntry, CorpusManifest, narrowband_for, parse_ratio, ratio_key
from .errors import ConfigError, DataError, NumericalError

log = logging.getLogger(__name__)

CHECKPOINT_KIND = "bwegan-checkpoint"
UNIFIED_RATIOS = (2, 4, 8)
HOP = MEL_CONFIG.hop

__all__ = [
    "TrainRun",
    "PairSource",
    "make_training_pair",
    "sample_ratios",
    "parse_mode",
    "train",
    "load_generator",
    "generator_fingerprint",
]


def parse_mode(text: str):
    """``"single:4"`` -> ``("single", (4,))``; ``"unified"`` -> ``("unified", (2, 4, 8))``.

    ``"unified:2,4"`` overrides the ratio set.
    """
    kind, _, rest = str(text).partition(":")
    if kind == "single":
        if not rest or "," in rest:
            raise ConfigError("single mode needs exactly one ratio, e.g. single:4")
        r = parse_ratio(rest)
        return "single", (int(r) if r.denominator == 1 else None,)
    if kind == "unified":
        ratios = tuple(int(r) for r in rest.split(",")) if rest else UNIFIED_RATIOS
        for r in ratios:
            parse_ratio(r)
        return "unified", tuple(sorted(set(ratios)))
    raise ConfigError(f"unknown mode {text!r}; use single:<s> or unified")


@dataclass(frozen=True)
class TrainRun:
    mode: str = "single:2"
    steps: int = 5000
    batch_size: int = 4
    segment_len: int = 8192
    seed: int = 0
    checkpoint_every: int = 0  # 0: only the final checkpoint
    lr_schedule: nn.LrSchedule = field(default_factory=nn.LrSchedule)
    weights: LossWeights = field(default_factory=LossWeights)
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    discriminator: DiscriminatorConfig = field(default_factory=DiscriminatorConfig)
    log_every: int = 1

    def __post_init__(self):
        kind, ratios = parse_mode(self.mode)
        if None in ratios:
            raise ConfigError("training ratios must be integers")
        if self.steps < 0:
            raise ConfigError("steps must be >= 0")
        if self.batch_size < 1:
            raise ConfigError("batch size must be >= 1")
        if self.segment_len <= 0 or self.segment_len % HOP:
            raise ConfigError(f"segment length must be a positive multiple of {HOP}")
        if any(self.segment_len % r for r in ratios):
            raise ConfigError("segment length must be divisible by every training ratio")
        if self.checkpoint_every < 0 or self.log_every < 1:
            raise ConfigError("checkpoint_every must be >= 0 and log_every >= 1")

    @property
    def ratios(self) -> tuple:
        return parse_mode(self.mode)[1]

    def as_dict(self) -> dict:
        d = asdict(self)
        d["lr_schedule"] = asdict(self.lr_schedule)
        d["weights"] = self.weights.as_dict()
        d["generator"] = self.generator.as_dict()
        d["discriminator"] = self.discriminator.as_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TrainRun":
        d = dict(d)
        d["lr_schedule"] = nn.LrSchedule(**d["lr_schedule"])
        d["weights"] = LossWeights(**d["weights"])
        d["generator"] = GeneratorConfig.from_dict(d["generator"])
        d["discriminator"] = DiscriminatorConfig.from_dict(d["discriminator"])
        return cls(**d)


class PairSource:
    """Loads utterances once and serves aligned (narrowband, wideband) crops.

    For each (utterance, ratio) the whole narrowband clip is brought back to
    16 kHz with FFT interpolation and cached; crops are then taken from the
    same offset in both signals, so the input sees no resampling edge
    effects that evaluation would not also see.
    """

    def __init__(self, manifest: CorpusManifest):
        self.manifest = manifest
        self._wide: dict = {}
        self._up: dict = {}

    def wideband(self, entry: CorpusEntry) -> np.ndarray:
        if entry.id not in self._wide:
            self._wide[entry.id] = self.manifest.load_wideband(entry).samples
        return self._wide[entry.id]

    def narrowband(self, entry: CorpusEntry, ratio) -> AudioBuffer:
        key = ratio_key(ratio)
        rel = entry.narrowband.get(key)
        if rel is not None and self.manifest.path(rel).exists():
            return read_wav(self.manifest.path(rel))
        return narrowband_for(AudioBuffer(self.wideband(entry), self.manifest.target_rate), ratio)

    def upsampled(self, entry: CorpusEntry, ratio) -> np.ndarray:
        key = (entry.id, ratio_key(ratio))
        if key not in self._up:
            nb = self.narrowband(entry, ratio)
            self._up[key] = fft_resample(nb, self.manifest.target_rate).samples
        return self._up[key]


def make_training_pair(source: PairSource, entry: CorpusEntry, ratio: int, segment_len: int, rng):
    """One aligned training example.

    Returns ``(mel, wide)``: ``mel`` is (80, segment_len / 256) computed from
    the FFT-upsampled narrowband crop; ``wide`` is the matching reference
    crop of ``segment_len`` samples. The crop offset is a multiple of the
    ratio so narrowband index ``i`` maps to wideband index ``i * ratio``.
    Clips shorter than the segment are zero-padded.
    """
    up = source.upsampled(entry, ratio)
    wide = source.wideband(entry)[: len(up)]
    n = len(up)
    if n >= segment_len:
        start = ratio * int(rng.integers(0, (n - segment_len) // ratio + 1))
        up_seg = up[start : start + segment_len]
        wide_seg = wide[start : start + segment_len]
    else:
        up_seg = np.zeros(segment_len)
        wide_seg = np.zeros(segment_len)
        up_seg[:n] = up
        wide_seg[:n] = wide
    mel = mel_spectrogram(AudioBuffer(up_seg, source.manifest.target_rate)).values.T
    return mel, wide_seg


def sample_ratios(rng, ratios, n: int) -> np.ndarray:
    """``n`` ratios drawn uniformly from ``ratios``."""
    ratios = np.asarray(ratios)
    return ratios[rng.integers(0, len(ratios), size=n)]


def _batch(source, entries, run: TrainRun, rng):
    idx = rng.integers(0, len(entries), size=run.batch_size)
    ratios = sample_ratios(rng, run.ratios, run.batch_size)
    mels, waves = [], []
    for i, r in zip(idx, ratios):
        mel, wave = make_training_pair(source, entries[i], int(r), run.segment_len, rng)
        mels.append(mel)
        waves.append(wave)
    dtype = nn.get_default_dtype()
    return np.stack(mels).astype(dtype), np.stack(waves)[:, None, :].astype(dtype)


def _checkpoint_arrays(gen, disc, opt_g, opt_d) -> dict:
    arrays = {}
    arrays.update({f"generator.{k}": v for k, v in gen.state_dict().items()})
    arrays.update({f"discriminator.{k}": v for k, v in disc.state_dict().items()})
    arrays.update(opt_g.state.to_arrays("optim_g"))
    arrays.update(opt_d.state.to_arrays("optim_d"))
    return arrays


def generator_fingerprint(arrays: dict, cfg: GeneratorConfig) -> str:
    """SHA-256 over generator weights and config; independent of file paths."""
    h = hashlib.sha256(json.dumps(cfg.as_dict(), sort_keys=True).encode())
    for name in sorted(k for k in arrays if k.startswith("generator.")):
        a = np.ascontiguousarray(arrays[name])
        h.update(name.encode())
        h.update(a.dtype.str.encode())
        h.update(a.tobytes())
    return h.hexdigest()


def _save(path, run, step, epoch, gen, disc, opt_g, opt_d, manifest_path):
    arrays = _checkpoint_arrays(gen, disc, opt_g, opt_d)
    meta = {
        "kind": CHECKPOINT_KIND,
        "run": run.as_dict(),
        "step": step,
        "epoch": epoch,
        "trained_ratios": list(run.ratios),
        "optim_g": opt_g.state.hyperparameters(),
        "optim_d": opt_d.state.hyperparameters(),
        "manifest": manifest_path,
        "generator_fingerprint": generator_fingerprint(arrays, run.generator),
    }
    nn.save_checkpoint(path, arrays, meta)


def train(run: TrainRun, manifest: CorpusManifest, out_dir, dtype=np.float32) -> Path:
    """Adversarial training; returns the final checkpoint path.

    Each step first updates the discriminators on real audio and detached
    generator output, then updates the generator on the weighted sum of the
    adversarial, mel and feature-matching losses. The learning rate decays
    once per epoch, where an epoch is one pass worth of examples over the
    train split. ``out_dir`` receives ``loss_log.ndjson`` and checkpoints.
    """
    out_dir = Path(out_dir)
    os.makedirs(out_dir, exist_ok=True)
    entries = manifest.split("train")
    if not entries:
        raise DataError("manifest has no train utterances")
    manifest_path = str((manifest.root or Path(".")).resolve() / "manifest.json")

    with nn.default_dtype(dtype):
        gen = Generator(run.generator, seed=run.seed)
        disc = Discriminators(run.discriminator, seed=run.seed + 1)
        opt_g = nn.AdamW(gen.parameters())
        opt_d = nn.AdamW(disc.parameters())
        mel_tf = MelTransform(manifest.target_rate)
        source = PairSource(manifest)
        rng = np.random.default_rng([run.seed, 1])
        log_path = out_dir / "loss_log.ndjson"
        final = out_dir / "checkpoint_final.ckpt"
        epoch = 0
        with open(log_path, "w", encoding="utf-8") as log_file:
            for step in range(run.steps):
                epoch = step * run.batch_size // len(entries)
                lr = run.lr_schedule.lr_at(epoch)
                mel, wave = _batch(source, entries, run, rng)
                try:
                    record = _train_step(gen, disc, opt_g, opt_d, mel_tf, run.weights, mel, wave, lr)
                except FloatingPointError as exc:
                    dump = out_dir / "nan_batch.npz"
                    np.savez(dump, mel=mel, wave=wave, step=step)
                    raise NumericalError(f"step {step}: {exc}; batch saved to {dump}") from exc
                if step % run.log_every == 0 or step == run.steps - 1:
                    record = {"step": step, "epoch": epoch, "lr": lr, **record}
                    log_file.write(json.dumps(record, sort_keys=True) + "\n")
                    log_file.flush()
                if run.checkpoint_every and (step + 1) % run.checkpoint_every == 0:
                    path = out_dir / f"checkpoint_{step + 1:07d}.ckpt"
                    _save(path, run, step + 1, epoch, gen, disc, opt_g, opt_d, manifest_path)
        _save(final, run, run.steps, epoch, gen, disc, opt_g, opt_d, manifest_path)
    return final


def _train_step(gen, disc, opt_g, opt_d, mel_tf, weights, mel, wave, lr) -> dict:
    real = nn.Tensor(wave)
    fake = gen(mel)

    opt_d.zero_grad()
    d_loss = discriminator_loss(disc(real).scores, disc(fake.detach()).scores)
    if not np.isfinite(d_loss.item()):
        raise FloatingPointError("non-finite discriminator loss")
    nn.backward(d_loss)
    opt_d.step(lr)

    opt_g.zero_grad()
    with nn.no_grad():
        real_out = disc(real)
    with disc.frozen():  # gradients reach the generator only
        fake_out = disc(fake)
        adv = generator_adversarial_loss(fake_out.scores)
        feat = feature_matching_loss(real_out.flat_features(), fake_out.flat_features())
        mel_l = mel_reconstruction_loss(real, fake, mel_tf)
        total, parts = total_generator_loss(adv, mel_l, feat, weights)
        nn.backward(total)
    opt_g.step(lr)
    return {**parts.as_dict(), "disc": d_loss.item()}


def load_generator(path) -> tuple[Generator, dict]:
    """Generator weights and checkpoint metadata."""
    arrays, meta = nn.load_checkpoint(path)
    if meta.get("kind") != CHECKPOINT_KIND:
        raise nn.CheckpointError(f"{path}: not a training checkpoint")
    run = TrainRun.from_dict(meta["run"])
    gen = Generator(run.generator, seed=run.seed)
    prefix = "generator."
    gen.load_state_dict({k[len(prefix) :]: v for k, v in arrays.items() if k.startswith(prefix)})
    return gen, meta
