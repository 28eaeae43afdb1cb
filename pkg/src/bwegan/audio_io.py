"""Mono PCM waveform I/O and amplitude normalization."""

from __future__ import annotations

import os
import struct
import wave
from dataclasses import dataclass

import numpy as np

__all__ = [
    "AudioBuffer",
    "WavError",
    "MalformedWavError",
    "UnsupportedCodecError",
    "read_wav",
    "write_wav",
    "peak_normalize",
]

_FORMAT_PCM = 0x0001
_FORMAT_FLOAT = 0x0003
_FORMAT_EXTENSIBLE = 0xFFFE


class WavError(Exception):
    """Base class for WAV decoding problems."""


class MalformedWavError(WavError):
    """The file is not a well-formed RIFF/WAVE container."""


class UnsupportedCodecError(WavError):
    """The container is valid but the sample encoding is not supported."""


@dataclass(frozen=True)
class AudioBuffer:
    """A mono waveform with its sampling rate.

    ``sample_rate`` is normally an integer number of Hz. Narrowband signals
    derived with a non-integer ratio (16000 / 3, say) keep their exact rate
    as a float while in memory.
    """

    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError(f"samples must be 1-D, got shape {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples contain NaN or Inf")
        if not self.sample_rate > 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return self.samples.shape[0]

    @property
    def duration_seconds(self) -> float:
        return len(self) / self.sample_rate

    @property
    def nyquist(self) -> float:
        return self.sample_rate / 2.0

    def with_samples(self, samples) -> "AudioBuffer":
        return AudioBuffer(samples, self.sample_rate)


def _iter_chunks(data: bytes):
    pos = 12
    while pos + 8 <= len(data):
        cid, size = struct.unpack("<4sI", data[pos : pos + 8])
        body = data[pos + 8 : pos + 8 + size]
        if len(body) < size and cid != b"data":
            raise MalformedWavError(f"truncated {cid!r} chunk")
        yield cid, body
        pos += 8 + size + (size & 1)


def read_wav(path) -> AudioBuffer:
    """Read a PCM or IEEE-float WAV file as a mono buffer in [-1, 1].

    Integer samples are scaled by ``1 / 2**(bits - 1)`` (8-bit files are
    unsigned and are re-centred first). Multi-channel frames are averaged.
    """
    path = os.fspath(path)
    if not os.path.isfile(path):
        raise FileNotFoundError(path)
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise MalformedWavError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    payload = None
    for cid, body in _iter_chunks(data):
        if cid == b"fmt ":
            if len(body) < 16:
                raise MalformedWavError(f"{path}: short fmt chunk")
            fmt = struct.unpack("<HHIIHH", body[:16])
            if fmt[0] == _FORMAT_EXTENSIBLE:
                if len(body) < 26:
                    raise MalformedWavError(f"{path}: short extensible fmt chunk")
                sub = struct.unpack("<H", body[24:26])[0]
                fmt = (sub,) + fmt[1:]
        elif cid == b"data":
            payload = body
    if fmt is None or payload is None:
        raise MalformedWavError(f"{path}: missing fmt or data chunk")

    codec, channels, rate, _, block_align, bits = fmt
    if channels not in (1, 2):
        raise UnsupportedCodecError(f"{path}: {channels} channels")
    if rate <= 0:
        raise MalformedWavError(f"{path}: sample rate {rate}")
    if codec == _FORMAT_PCM and bits in (8, 16, 24, 32):
        width = bits // 8
        n = len(payload) // width
        raw = np.frombuffer(payload[: n * width], dtype=np.uint8)
        if bits == 8:
            x = (raw.astype(np.float64) - 128.0) / 128.0
        elif bits == 24:
            trip = raw.reshape(-1, 3).astype(np.int32)
            ints = trip[:, 0] | (trip[:, 1] << 8) | (trip[:, 2] << 16)
            ints = np.where(ints >= 1 << 23, ints - (1 << 24), ints)
            x = ints / float(1 << 23)
        else:
            ints = np.frombuffer(payload[: n * width], dtype=f"<i{width}")
            x = ints.astype(np.float64) / float(1 << (bits - 1))
    elif codec == _FORMAT_FLOAT and bits in (32, 64):
        width = bits // 8
        n = len(payload) // width
        x = np.frombuffer(payload[: n * width], dtype=f"<f{width}").astype(np.float64)
    else:
        raise UnsupportedCodecError(f"{path}: codec 0x{codec:04x} with {bits} bits")

    frames = len(x) // channels
    x = x[: frames * channels].reshape(frames, channels).mean(axis=1)
    return AudioBuffer(x, rate)


def write_wav(buf: AudioBuffer, path, bits: int = 16) -> None:
    """Write ``buf`` as mono 16-bit PCM.

    Samples are scaled by 32768 (the inverse of the read scaling) and
    saturated to the int16 range, so a round trip is exact to half a
    quantization step except at +1.0, which is stored as 32767.
    Non-integer in-memory rates are rounded to the nearest Hz in the header.
    """
    if bits != 16:
        raise ValueError("only 16-bit PCM output is supported")
    ints = np.clip(np.round(buf.samples * 32768.0), -32768, 32767).astype("<i2")
    with open(path, "wb") as raw, wave.open(raw, "wb") as fh:
        fh.setnchannels(1)
        fh.setsampwidth(2)
        fh.setframerate(int(round(buf.sample_rate)))
        fh.writeframes(ints.tobytes())


def peak_normalize(buf: AudioBuffer, target: float = 1.0) -> AudioBuffer:
    """Scale so that the largest absolute sample equals ``target``.

    All-zero input is returned unchanged.
    """
    if len(buf) == 0:
        raise ValueError("cannot normalize an empty buffer")
    if not 0.0 < target <= 1.0:
        raise ValueError(f"target must be in (0, 1], got {target}")
    peak = np.max(np.abs(buf.samples))
    if peak == 0.0:
        return buf
    return buf.with_samples(buf.samples * (target / peak))
