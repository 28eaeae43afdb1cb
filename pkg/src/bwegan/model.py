"""Generator and multi-period / multi-scale discriminators.

The generator maps an 80-band log-mel spectrogram to a waveform with 256
samples per frame: a stack of transposed convolutions, each followed by a
multi-receptive-field fusion block (parallel dilated residual stacks whose
outputs are averaged). Two discriminator families score waveforms: one that
folds the signal by a set of periods into 2-D maps, and one that looks at the
raw, 2x- and 4x-pooled signal.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from math import prod

import numpy as np

from . import nn
from .nn import Conv1d, Conv2d, ConvTranspose1d, Module, Tensor, same_padding

LRELU_SLOPE = 0.1


@dataclass(frozen=True)
class GeneratorConfig:
    upsample_rates: tuple = (8, 8, 2, 2)
    upsample_kernel_sizes: tuple = (16, 16, 4, 4)
    initial_channels: int = 32
    mrf_kernel_sizes: tuple = (3, 7, 11)
    mrf_dilations: tuple = ((1, 3, 5), (1, 3, 5), (1, 3, 5))
    n_mels: int = 80
    hop: int = 256

    def __post_init__(self):
        if len(self.upsample_rates) != len(self.upsample_kernel_sizes):
            raise ValueError("upsample_rates and upsample_kernel_sizes differ in length")
        if prod(self.upsample_rates) != self.hop:
            raise ValueError(f"product of upsample rates {prod(self.upsample_rates)} != hop {self.hop}")
        if len(self.mrf_kernel_sizes) != len(self.mrf_dilations):
            raise ValueError("one dilation list is needed per MRF kernel size")
        for u, k in zip(self.upsample_rates, self.upsample_kernel_sizes):
            if (k - u) % 2:
                raise ValueError(f"kernel {k} - rate {u} must be even for exact upsampling")
        if self.initial_channels % 2 ** len(self.upsample_rates):
            raise ValueError("initial_channels must stay integral after halving at every stage")

    @classmethod
    def full_width(cls) -> "GeneratorConfig":
        """The full-width V1 layout (512 channels); too slow for CPU training."""
        return cls(initial_channels=512)

    def as_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratorConfig":
        d = dict(d)
        d["mrf_dilations"] = tuple(tuple(x) for x in d["mrf_dilations"])
        for key in ("upsample_rates", "upsample_kernel_sizes", "mrf_kernel_sizes"):
            d[key] = tuple(d[key])
        return cls(**d)


@dataclass(frozen=True)
class DiscriminatorConfig:
    mpd_periods: tuple = (2, 3, 5, 7, 11)
    mpd_channels: tuple = (8, 16, 32, 32)
    mpd_kernel_size: int = 5
    mpd_stride: int = 3
    msd_scales: int = 3
    msd_channels: tuple = (8, 8, 16, 16, 32, 32, 32)
    msd_kernel_sizes: tuple = (15, 41, 41, 41, 41, 41, 5)
    msd_strides: tuple = (1, 2, 2, 4, 4, 1, 1)
    msd_pool: tuple = (4, 2, 2)  # kernel, stride, padding between scales

    def __post_init__(self):
        if len(set(self.mpd_periods)) != len(self.mpd_periods):
            raise ValueError("MPD periods must be distinct")
        if self.msd_scales < 1:
            raise ValueError("need at least one MSD scale")
        if not len(self.msd_channels) == len(self.msd_kernel_sizes) == len(self.msd_strides):
            raise ValueError("MSD channel/kernel/stride lists differ in length")

    @classmethod
    def full_width(cls) -> "DiscriminatorConfig":
        return cls(mpd_channels=(32, 128, 512, 1024), msd_channels=(128, 128, 256, 512, 1024, 1024, 1024))

    @property
    def mpd_layers(self) -> int:
        """Feature maps per period sub-discriminator (convs plus output conv)."""
        return len(self.mpd_channels) + 2

    @property
    def msd_layers(self) -> int:
        return len(self.msd_channels) + 1

    @property
    def total_layers(self) -> int:
        return len(self.mpd_periods) * self.mpd_layers + self.msd_scales * self.msd_layers

    def as_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "DiscriminatorConfig":
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in d.items()})


@dataclass
class DiscriminatorOutput:
    """Scores and per-layer feature maps of a group of sub-discriminators."""

    scores: list = field(default_factory=list)  # one Tensor per sub-discriminator
    features: list = field(default_factory=list)  # list of Tensors per sub-discriminator

    def flat_features(self) -> list:
        return [f for per_disc in self.features for f in per_disc]

    def __add__(self, other: "DiscriminatorOutput") -> "DiscriminatorOutput":
        return DiscriminatorOutput(self.scores + other.scores, self.features + other.features)


def receptive_field(kernel_size: int, dilations) -> int:
    """Receptive field of one residual branch: a dilated conv then an
    undilated conv for every entry of ``dilations``."""
    return 1 + (kernel_size - 1) * (sum(dilations) + len(dilations))


class ResidualBranch(Module):
    """``x = x + conv_1(lrelu(conv_d(lrelu(x))))`` for each dilation ``d``."""

    def __init__(self, channels, kernel_size, dilations, rng):
        self.convs1 = [
            Conv1d(channels, channels, kernel_size, rng, dilation=d, padding=same_padding(kernel_size, d))
            for d in dilations
        ]
        self.convs2 = [
            Conv1d(channels, channels, kernel_size, rng, padding=same_padding(kernel_size))
            for _ in dilations
        ]

    def forward(self, x):
        for c1, c2 in zip(self.convs1, self.convs2):
            xt = c1(nn.leaky_relu(x, LRELU_SLOPE))
            xt = c2(nn.leaky_relu(xt, LRELU_SLOPE))
            x = xt + x
        return x


class MRFBlock(Module):
    """Averages parallel residual branches with different kernels/dilations."""

    def __init__(self, channels, kernel_sizes, dilations, rng):
        self.branches = [ResidualBranch(channels, k, d, rng) for k, d in zip(kernel_sizes, dilations)]

    def forward(self, x):
        return mrf_block(x, self.branches)


def mrf_block(x: Tensor, branches) -> Tensor:
    out = None
    for branch in branches:
        y = branch(x)
        out = y if out is None else out + y
    return out * (1.0 / len(branches))


class Generator(Module):
    def __init__(self, cfg: GeneratorConfig = GeneratorConfig(), seed: int = 0, zero_output: bool = False):
        rng = np.random.default_rng(seed)
        self.cfg = cfg
        ch = cfg.initial_channels
        self.conv_pre = Conv1d(cfg.n_mels, ch, 7, rng, padding=3)
        self.ups = []
        self.mrfs = []
        for i, (u, k) in enumerate(zip(cfg.upsample_rates, cfg.upsample_kernel_sizes)):
            c_in, c_out = ch // 2**i, ch // 2 ** (i + 1)
            self.ups.append(ConvTranspose1d(c_in, c_out, k, rng, stride=u, padding=(k - u) // 2))
            self.mrfs.append(MRFBlock(c_out, cfg.mrf_kernel_sizes, cfg.mrf_dilations, rng))
        self.conv_post = Conv1d(ch // 2 ** len(cfg.upsample_rates), 1, 7, rng, padding=3)
        if zero_output:
            self.conv_post.weight.data[:] = 0.0

    def forward(self, mel) -> Tensor:
        """``mel``: (B, n_mels, T) -> waveform (B, 1, T * hop) in (-1, 1)."""
        x = nn.as_tensor(mel)
        if x.ndim != 3 or x.shape[1] != self.cfg.n_mels:
            raise ValueError(f"expected (B, {self.cfg.n_mels}, T) mel input, got {x.shape}")
        x = self.conv_pre(x)
        for up, mrf in zip(self.ups, self.mrfs):
            x = up(nn.leaky_relu(x, LRELU_SLOPE))
            x = mrf(x)
        x = self.conv_post(nn.leaky_relu(x, LRELU_SLOPE))
        return nn.tanh(x)


def generator_forward(mel, cfg: GeneratorConfig, params: dict) -> Tensor:
    """Functional form: build a generator for ``cfg`` with ``params`` and run it.

    ``mel`` is ``(T, n_mels)`` (one utterance) or ``(B, n_mels, T)``.
    """
    gen = Generator(cfg)
    gen.load_state_dict(params)
    x = np.asarray(mel.data if isinstance(mel, Tensor) else mel)
    if x.ndim == 2:
        x = x.T[None]
    return gen(x)


class PeriodDiscriminator(Module):
    def __init__(self, period, cfg: DiscriminatorConfig, rng):
        self.period = period
        k, s = cfg.mpd_kernel_size, cfg.mpd_stride
        chans = (1,) + tuple(cfg.mpd_channels)
        self.convs = [
            Conv2d(chans[i], chans[i + 1], (k, 1), rng, stride=(s, 1), padding=(same_padding(k), 0))
            for i in range(len(cfg.mpd_channels))
        ]
        self.convs.append(Conv2d(chans[-1], chans[-1], (k, 1), rng, padding=(same_padding(k), 0)))
        self.conv_post = Conv2d(chans[-1], 1, (3, 1), rng, padding=(1, 0))

    def fold(self, wave: Tensor) -> Tensor:
        b, c, t = wave.shape
        if t % self.period:
            extra = self.period - t % self.period
            wave = nn.pad_last(wave, 0, extra, "reflect")
            t += extra
        return wave.reshape(b, c, t // self.period, self.period)

    def forward(self, wave):
        x = self.fold(wave)
        feats = []
        for conv in self.convs:
            x = nn.leaky_relu(conv(x), LRELU_SLOPE)
            feats.append(x)
        x = self.conv_post(x)
        feats.append(x)
        return x.reshape(x.shape[0], -1), feats


class ScaleDiscriminator(Module):
    def __init__(self, cfg: DiscriminatorConfig, rng):
        chans = (1,) + tuple(cfg.msd_channels)
        self.convs = [
            Conv1d(chans[i], chans[i + 1], k, rng, stride=s, padding=same_padding(k))
            for i, (k, s) in enumerate(zip(cfg.msd_kernel_sizes, cfg.msd_strides))
        ]
        self.conv_post = Conv1d(chans[-1], 1, 3, rng, padding=1)

    def forward(self, x):
        feats = []
        for conv in self.convs:
            x = nn.leaky_relu(conv(x), LRELU_SLOPE)
            feats.append(x)
        x = self.conv_post(x)
        feats.append(x)
        return x.reshape(x.shape[0], -1), feats


class MultiPeriodDiscriminator(Module):
    def __init__(self, cfg: DiscriminatorConfig, rng):
        self.discs = [PeriodDiscriminator(p, cfg, rng) for p in cfg.mpd_periods]
        self.max_period = max(cfg.mpd_periods)

    def forward(self, wave) -> DiscriminatorOutput:
        wave = _as_wave(wave)
        if wave.shape[2] < 1:
            raise ValueError("empty waveform")
        if wave.shape[2] <= self.max_period:
            raise ValueError(f"waveform of {wave.shape[2]} samples is shorter than period {self.max_period}")
        out = DiscriminatorOutput()
        for d in self.discs:
            score, feats = d(wave)
            out.scores.append(score)
            out.features.append(feats)
        return out


class MultiScaleDiscriminator(Module):
    def __init__(self, cfg: DiscriminatorConfig, rng):
        self.discs = [ScaleDiscriminator(cfg, rng) for _ in range(cfg.msd_scales)]
        self.pool = cfg.msd_pool
        self.min_length = prod(cfg.msd_strides) * 2 ** (cfg.msd_scales - 1)

    def scale_inputs(self, wave: Tensor) -> list:
        k, s, p = self.pool
        inputs = [wave]
        for _ in range(len(self.discs) - 1):
            inputs.append(nn.avg_pool1d(inputs[-1], k, s, p))
        return inputs

    def forward(self, wave) -> DiscriminatorOutput:
        wave = _as_wave(wave)
        if wave.shape[2] < self.min_length:
            raise ValueError(f"waveform of {wave.shape[2]} samples is shorter than {self.min_length}")
        out = DiscriminatorOutput()
        for d, x in zip(self.discs, self.scale_inputs(wave)):
            score, feats = d(x)
            out.scores.append(score)
            out.features.append(feats)
        return out


class Discriminators(Module):
    """MPD and MSD evaluated together; scores and features are concatenated."""

    def __init__(self, cfg: DiscriminatorConfig = DiscriminatorConfig(), seed: int = 1):
        rng = np.random.default_rng(seed)
        self.cfg = cfg
        self.mpd = MultiPeriodDiscriminator(cfg, rng)
        self.msd = MultiScaleDiscriminator(cfg, rng)

    def forward(self, wave) -> DiscriminatorOutput:
        return self.mpd(wave) + self.msd(wave)


def mpd_forward(wave, cfg: DiscriminatorConfig, params: dict | None = None, seed: int = 1) -> DiscriminatorOutput:
    mpd = MultiPeriodDiscriminator(cfg, np.random.default_rng(seed))
    if params is not None:
        mpd.load_state_dict(params)
    return mpd(wave)


def msd_forward(wave, cfg: DiscriminatorConfig, params: dict | None = None, seed: int = 1) -> DiscriminatorOutput:
    msd = MultiScaleDiscriminator(cfg, np.random.default_rng(seed))
    if params is not None:
        msd.load_state_dict(params)
    return msd(wave)


def _as_wave(wave) -> Tensor:
    wave = nn.as_tensor(wave)
    if wave.ndim == 1:
        wave = wave.reshape(1, 1, -1)
    elif wave.ndim == 2:
        wave = wave.reshape(wave.shape[0], 1, wave.shape[1])
    return wave
