"""Least-squares adversarial, mel-reconstruction and feature-matching losses."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np

from . import nn
from .nn import Tensor
from .spectral import MEL_CONFIG, N_MELS, POWER_FLOOR, StftConfig, hann_window, mel_filterbank

__all__ = [
    "LossWeights",
    "LossBreakdown",
    "MelTransform",
    "l2_waveform_loss",
    "discriminator_loss",
    "generator_adversarial_loss",
    "mel_reconstruction_loss",
    "feature_matching_loss",
    "total_generator_loss",
]


@dataclass(frozen=True)
class LossWeights:
    lambda_adv: float = 1.1
    lambda_mel: float = 50.0
    lambda_feat: float = 2.0

    def __post_init__(self):
        if min(self.lambda_adv, self.lambda_mel, self.lambda_feat) < 0:
            raise ValueError("loss weights must be non-negative")

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class LossBreakdown:
    adv: float
    mel: float
    feat: float
    total: float
    disc: float = 0.0

    def as_dict(self) -> dict:
        return asdict(self)


class MelTransform:
    """Differentiable log-mel spectrogram matching :func:`spectral.mel_spectrogram`.

    The STFT is a strided conv1d whose kernels are Hann-windowed cosines and
    sines, so gradients flow back to the waveform.
    """

    def __init__(self, sample_rate: float = 16000, cfg: StftConfig = MEL_CONFIG, n_mels: int = N_MELS):
        if cfg.center:
            raise ValueError("MelTransform implements the non-centred frame layout only")
        self.cfg = cfg
        self.kernels, self.fb_t = _mel_kernels(cfg.fft_size, cfg.win_size, float(sample_rate), n_mels)

    def __call__(self, wave) -> Tensor:
        """``wave``: (B, 1, N) -> log-mel (B, frames, n_mels)."""
        wave = nn.as_tensor(wave)
        dtype = wave.data.dtype
        pad = self.cfg.pad
        x = nn.pad_last(wave, pad, pad, "reflect")
        spec = nn.conv1d(x, nn.Tensor(self.kernels, dtype=dtype), stride=self.cfg.hop)
        n_bins = self.cfg.n_bins
        power = nn.square(spec[:, :n_bins]) + nn.square(spec[:, n_bins:])
        mel = nn.matmul(power.transpose(0, 2, 1), nn.Tensor(self.fb_t, dtype=dtype))
        return nn.log(nn.clamp_min(mel, POWER_FLOOR))


@lru_cache(maxsize=8)
def _mel_kernels(fft_size, win_size, sample_rate, n_mels):
    n = np.arange(fft_size)
    k = np.arange(fft_size // 2 + 1)
    phase = 2.0 * np.pi * np.outer(k, n) / fft_size
    window = hann_window(win_size, fft_size)
    kernels = np.concatenate([np.cos(phase) * window, -np.sin(phase) * window])[:, None, :]
    fb_t = mel_filterbank(n_mels, fft_size, sample_rate).T.copy()
    kernels.setflags(write=False)
    fb_t.setflags(write=False)
    return kernels, fb_t


def l2_waveform_loss(pred, target) -> Tensor:
    """Mean squared sample error (the plain regression objective)."""
    pred = nn.as_tensor(pred)
    target = nn.as_tensor(target, pred.data.dtype)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {target.shape}")
    return nn.square(pred - target).mean()


def _check_scores(scores):
    if not scores:
        raise ValueError("score list is empty")
    return [nn.as_tensor(s) for s in scores]


def discriminator_loss(real_scores, fake_scores) -> Tensor:
    """Mean over sub-discriminators of ``mean((1 - D(x))^2) + mean(D(G(x))^2)``.

    Pass fake scores computed from a detached generator output.
    """
    real_scores = _check_scores(real_scores)
    fake_scores = _check_scores(fake_scores)
    if len(real_scores) != len(fake_scores):
        raise ValueError("real and fake score lists differ in length")
    total = None
    for dr, dg in zip(real_scores, fake_scores):
        term = nn.square(1.0 - dr).mean() + nn.square(dg).mean()
        total = term if total is None else total + term
    return total * (1.0 / len(real_scores))


def generator_adversarial_loss(fake_scores) -> Tensor:
    """Mean over sub-discriminators of ``mean((1 - D(G(x)))^2)``."""
    fake_scores = _check_scores(fake_scores)
    total = None
    for dg in fake_scores:
        term = nn.square(1.0 - dg).mean()
        total = term if total is None else total + term
    return total * (1.0 / len(fake_scores))


def mel_reconstruction_loss(real, fake, transform: MelTransform | None = None) -> Tensor:
    """Mean absolute difference of log-mel spectrograms.

    Both waveforms are (B, 1, N); the longer is trimmed to the shorter.
    The reference spectrogram is treated as a constant.
    """
    transform = transform or MelTransform()
    real = nn.as_tensor(real)
    fake = nn.as_tensor(fake)
    n = min(real.shape[-1], fake.shape[-1])
    with nn.no_grad():
        target = transform(real[..., :n])
    return nn.tabs(transform(fake[..., :n]) - target).mean()


def feature_matching_loss(real_features, fake_features) -> Tensor:
    """``sum_k mean(|D_k(x) - D_k(G(x))|)`` over all layers of all sub-discriminators.

    Real features are detached so this term only trains the generator.
    """
    real_features = list(real_features)
    fake_features = list(fake_features)
    if len(real_features) != len(fake_features) or not real_features:
        raise ValueError("feature lists must be non-empty and of equal length")
    total = None
    for fr, fg in zip(real_features, fake_features):
        fr = nn.as_tensor(fr)
        fg = nn.as_tensor(fg)
        if fr.shape != fg.shape:
            raise ValueError(f"feature shape mismatch {fr.shape} vs {fg.shape}")
        term = nn.tabs(fr.detach() - fg).mean()
        total = term if total is None else total + term
    return total


def total_generator_loss(adv, mel, feat, w: LossWeights = LossWeights()):
    """Weighted sum ``l_adv*adv + l_mel*mel + l_feat*feat``.

    Returns ``(total, breakdown)``; ``total`` is a Tensor when any component
    is one, so it can be backpropagated.
    """
    total = adv * w.lambda_adv + mel * w.lambda_mel + feat * w.lambda_feat
    breakdown = LossBreakdown(
        adv=_scalar(adv), mel=_scalar(mel), feat=_scalar(feat), total=_scalar(total)
    )
    for name, value in breakdown.as_dict().items():
        if not np.isfinite(value):
            raise FloatingPointError(f"non-finite {name} loss")
    return total, breakdown


def _scalar(x) -> float:
    return x.item() if isinstance(x, Tensor) else float(x)
