"""STFT, log-mel features and the log-spectral distance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio_io import AudioBuffer

__all__ = [
    "StftConfig",
    "MelSpectrogram",
    "PowerSpectrogram",
    "MEL_CONFIG",
    "LSD_CONFIG",
    "POWER_FLOOR",
    "hann_window",
    "stft",
    "power_spectrogram",
    "hz_to_mel",
    "mel_to_hz",
    "mel_filterbank",
    "mel_spectrogram",
    "log_spectral_distance",
]

# Power floor applied before any logarithm.
POWER_FLOOR = 1e-10


@dataclass(frozen=True)
class StftConfig:
    """Frame geometry for a Hann-windowed STFT.

    ``center=True`` reflect-pads ``fft_size // 2`` samples on each side, so a
    signal of ``n`` samples gives ``1 + n // hop`` frames. ``center=False``
    pads ``(fft_size - hop) // 2`` on each side instead, which gives exactly
    ``n // hop`` frames when ``win_size == fft_size``; the vocoder input uses
    that layout so that frames * hop equals the waveform length.
    """

    fft_size: int = 1024
    win_size: int = 1024
    hop: int = 256
    center: bool = False

    def __post_init__(self):
        if self.hop <= 0:
            raise ValueError("hop must be positive")
        if not 0 < self.win_size <= self.fft_size:
            raise ValueError("need 0 < win_size <= fft_size")
        if self.hop > self.win_size:
            raise ValueError("hop must not exceed win_size")

    @property
    def n_bins(self) -> int:
        return self.fft_size // 2 + 1

    @property
    def pad(self) -> int:
        return self.fft_size // 2 if self.center else (self.fft_size - self.hop) // 2

    def n_frames(self, n_samples: int) -> int:
        # short signals are zero-extended to one full frame
        return max(1, 1 + (n_samples + 2 * self.pad - self.fft_size) // self.hop)

    def as_dict(self) -> dict:
        return {
            "fft_size": self.fft_size,
            "win_size": self.win_size,
            "hop": self.hop,
            "center": self.center,
            "window": "hann",
        }


MEL_CONFIG = StftConfig(1024, 1024, 256, center=False)
LSD_CONFIG = StftConfig(2048, 2048, 512, center=True)
N_MELS = 80


@dataclass(frozen=True)
class MelSpectrogram:
    values: np.ndarray  # (frames, n_mels), natural log of mel power
    config: StftConfig
    sample_rate: float

    @property
    def n_frames(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class PowerSpectrogram:
    values: np.ndarray  # (frames, bins), log10 power
    config: StftConfig


def hann_window(win_size: int, fft_size: int | None = None) -> np.ndarray:
    """Periodic Hann window, zero-padded symmetrically to ``fft_size``."""
    fft_size = win_size if fft_size is None else fft_size
    n = np.arange(win_size)
    w = 0.5 - 0.5 * np.cos(2.0 * np.pi * n / win_size)
    left = (fft_size - win_size) // 2
    return np.pad(w, (left, fft_size - win_size - left))


def _reflect_pad(x: np.ndarray, pad: int) -> np.ndarray:
    if pad == 0:
        return x
    if x.shape[-1] < 2:
        return np.pad(x, (pad, pad))
    return np.pad(x, (pad, pad), mode="reflect")


def _frames(samples: np.ndarray, cfg: StftConfig) -> np.ndarray:
    x = _reflect_pad(np.asarray(samples, dtype=np.float64), cfg.pad)
    if x.shape[0] < cfg.fft_size:
        x = np.pad(x, (0, cfg.fft_size - x.shape[0]))
    view = np.lib.stride_tricks.sliding_window_view(x, cfg.fft_size)[:: cfg.hop]
    return view * hann_window(cfg.win_size, cfg.fft_size)


def stft(buf: AudioBuffer | np.ndarray, cfg: StftConfig = LSD_CONFIG) -> np.ndarray:
    """Complex one-sided STFT, shape ``(frames, fft_size // 2 + 1)``."""
    samples = buf.samples if isinstance(buf, AudioBuffer) else np.asarray(buf, dtype=np.float64)
    if samples.shape[0] < 1:
        raise ValueError("empty signal")
    return np.fft.rfft(_frames(samples, cfg), axis=-1)


def power_spectrogram(buf, cfg: StftConfig = LSD_CONFIG) -> PowerSpectrogram:
    """``log10(max(|STFT|^2, POWER_FLOOR))`` per frame and bin."""
    spec = stft(buf, cfg)
    power = spec.real**2 + spec.imag**2
    return PowerSpectrogram(np.log10(np.maximum(power, POWER_FLOOR)), cfg)


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(n_mels: int = N_MELS, fft_size: int = 1024, sample_rate: float = 16000) -> np.ndarray:
    """Triangular HTK-mel filters spanning 0 Hz to Nyquist, unnormalized.

    Returns an ``(n_mels, fft_size // 2 + 1)`` matrix with unit peak height.
    """
    if n_mels < 1 or fft_size < 2 or n_mels >= fft_size // 2:
        raise ValueError(f"invalid sizes n_mels={n_mels}, fft_size={fft_size}")
    if not sample_rate > 0:
        raise ValueError("sample_rate must be positive")
    n_bins = fft_size // 2 + 1
    bin_hz = np.arange(n_bins) * float(sample_rate) / fft_size
    edges = mel_to_hz(np.linspace(0.0, hz_to_mel(float(sample_rate) / 2.0), n_mels + 2))
    lower, centre, upper = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rising = (bin_hz - lower) / (centre - lower)
    falling = (upper - bin_hz) / (upper - centre)
    fb = np.maximum(0.0, np.minimum(rising, falling))
    if np.any(fb.sum(axis=1) <= 0):
        raise ValueError("fft_size too small: some mel filters cover no FFT bin")
    return fb


def mel_spectrogram(
    buf: AudioBuffer, cfg: StftConfig = MEL_CONFIG, n_mels: int = N_MELS
) -> MelSpectrogram:
    """Natural-log mel power, ``log(max(fb @ |STFT|^2, POWER_FLOOR))``."""
    spec = stft(buf, cfg)
    power = spec.real**2 + spec.imag**2
    fb = mel_filterbank(n_mels, cfg.fft_size, buf.sample_rate)
    mel = power @ fb.T
    return MelSpectrogram(np.log(np.maximum(mel, POWER_FLOOR)), cfg, buf.sample_rate)


def log_spectral_distance(x: AudioBuffer, y: AudioBuffer, cfg: StftConfig = LSD_CONFIG) -> float:
    """Frame-mean of the RMS (over bins) log10-power difference.

    Symmetric, zero for identical inputs, and unchanged when both signals
    are scaled by the same constant (up to the power floor).
    """
    xs = x.samples if isinstance(x, AudioBuffer) else np.asarray(x, dtype=np.float64)
    ys = y.samples if isinstance(y, AudioBuffer) else np.asarray(y, dtype=np.float64)
    if xs.shape != ys.shape:
        raise ValueError(f"length mismatch: {xs.shape[0]} vs {ys.shape[0]}")
    if xs.shape[0] == 0:
        raise ValueError("empty signals")
    if isinstance(x, AudioBuffer) and isinstance(y, AudioBuffer) and x.sample_rate != y.sample_rate:
        raise ValueError(f"sample rate mismatch: {x.sample_rate} vs {y.sample_rate}")
    diff = power_spectrogram(xs, cfg).values - power_spectrogram(ys, cfg).values
    return float(np.mean(np.sqrt(np.mean(diff**2, axis=1))))
