"""Anti-alias filter design, decimation and FFT-domain resampling."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.signal

from .audio_io import AudioBuffer

__all__ = [
    "SosFilter",
    "RatioSpec",
    "design_cheby1_lowpass",
    "sosfiltfilt",
    "decimate",
    "fft_resample",
    "frequency_response",
    "DEFAULT_RIPPLE_DB",
    "DEFAULT_CUTOFF_FRACTION",
]

DEFAULT_ORDER = 8
DEFAULT_RIPPLE_DB = 0.05
# Passband edge as a fraction of the post-decimation Nyquist frequency.
DEFAULT_CUTOFF_FRACTION = 0.8


@dataclass(frozen=True)
class SosFilter:
    """Cascade of second-order sections.

    ``sections`` has shape ``(n_sections, 6)`` with rows
    ``(b0, b1, b2, 1, a1, a2)``, the layout scipy uses.
    """

    sections: np.ndarray
    order: int
    ripple_db: float
    cutoff: float

    def __post_init__(self):
        sos = np.asarray(self.sections, dtype=np.float64)
        if sos.ndim != 2 or sos.shape[1] != 6:
            raise ValueError(f"sections must be (n, 6), got {sos.shape}")
        if self.order != 2 * sos.shape[0]:
            raise ValueError("order must equal twice the number of sections")
        sos.setflags(write=False)
        object.__setattr__(self, "sections", sos)

    def poles(self) -> np.ndarray:
        return np.concatenate([np.roots(s[3:]) for s in self.sections])

    def is_stable(self) -> bool:
        return bool(np.max(np.abs(self.poles())) < 1.0)

    def metadata(self) -> dict:
        return {
            "type": "cheby1",
            "order": self.order,
            "ripple_db": self.ripple_db,
            "cutoff_normalized": self.cutoff,
            "application": "zero-phase forward-backward",
            "padding": f"odd reflection, {3 * self.order} samples",
        }


@dataclass(frozen=True)
class RatioSpec:
    """Upsampling ratio ``s`` with the two sampling rates it relates.

    ``f_high == s * f_low`` holds exactly because ``s`` is kept as a
    :class:`fractions.Fraction`.
    """

    s: Fraction
    f_high: Fraction
    f_low: Fraction = field(init=False)

    def __init__(self, s, f_high=16000):
        s = Fraction(s).limit_denominator(10**6)
        if s <= 1:
            raise ValueError(f"upsampling ratio must exceed 1, got {s}")
        f_high = Fraction(f_high)
        if f_high <= 0:
            raise ValueError("f_high must be positive")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "f_high", f_high)
        object.__setattr__(self, "f_low", f_high / s)

    @property
    def b_low(self) -> Fraction:
        return self.f_low / 2

    @property
    def b_high(self) -> Fraction:
        return self.f_high / 2

    @property
    def is_integer(self) -> bool:
        return self.s.denominator == 1

    def __str__(self):
        return str(self.s)


def design_cheby1_lowpass(
    order: int = DEFAULT_ORDER, ripple_db: float = DEFAULT_RIPPLE_DB, cutoff: float = 0.4
) -> SosFilter:
    """Chebyshev type I low-pass as second-order sections.

    ``cutoff`` is the passband edge as a fraction of Nyquist. The overall
    gain is rescaled so the DC response is exactly one; the ripple then
    sits above unity instead of below it.
    """
    if not 0.0 < cutoff < 1.0:
        raise ValueError(f"cutoff must be in (0, 1), got {cutoff}")
    if ripple_db <= 0:
        raise ValueError("ripple_db must be positive")
    if order < 2 or order % 2:
        raise ValueError("only even orders are supported")
    sos = scipy.signal.cheby1(order, ripple_db, cutoff, btype="low", output="sos")
    dc = np.prod(sos[:, :3].sum(axis=1) / sos[:, 3:].sum(axis=1))
    sos[0, :3] /= dc
    return SosFilter(sos, order, float(ripple_db), float(cutoff))


def frequency_response(filt: SosFilter, freqs) -> np.ndarray:
    """Complex response at normalized frequencies (1.0 = Nyquist)."""
    z = np.exp(1j * np.pi * np.asarray(freqs, dtype=np.float64))
    h = np.ones_like(z)
    for b0, b1, b2, a0, a1, a2 in filt.sections:
        h *= (b0 * z**2 + b1 * z + b2) / (a0 * z**2 + a1 * z + a2)
    return h


def sosfiltfilt(filt: SosFilter, buf: AudioBuffer) -> AudioBuffer:
    """Zero-phase (forward then backward) filtering of ``buf``."""
    padlen = 3 * filt.order
    if len(buf) <= padlen:
        raise ValueError(f"buffer of {len(buf)} samples is too short for padding {padlen}")
    # scipy needs writable arrays
    y = scipy.signal.sosfiltfilt(np.array(filt.sections), np.array(buf.samples), padtype="odd", padlen=padlen)
    return buf.with_samples(y)


def _as_ratio(ratio, f_high) -> RatioSpec:
    return ratio if isinstance(ratio, RatioSpec) else RatioSpec(ratio, f_high)


def decimate(buf: AudioBuffer, ratio) -> AudioBuffer:
    """Anti-alias filter then keep every ``s``-th sample.

    The output holds ``floor(len(buf) / s)`` samples at ``f_low``.
    """
    ratio = _as_ratio(ratio, buf.sample_rate)
    if not ratio.is_integer:
        raise ValueError(f"decimate needs an integer ratio, got {ratio.s}; use fft_resample")
    if Fraction(buf.sample_rate).limit_denominator(10**6) != ratio.f_high:
        raise ValueError(f"buffer rate {buf.sample_rate} != ratio f_high {ratio.f_high}")
    s = int(ratio.s)
    filt = design_cheby1_lowpass(DEFAULT_ORDER, DEFAULT_RIPPLE_DB, DEFAULT_CUTOFF_FRACTION / s)
    y = sosfiltfilt(filt, buf).samples
    y = y[::s][: len(buf) // s]
    return AudioBuffer(y, _rate(ratio.f_low))


def _rate(r: Fraction):
    return int(r) if r.denominator == 1 else float(r)


def fft_resample(buf: AudioBuffer, target_rate) -> AudioBuffer:
    """Resample by zero-padding or truncating the spectrum.

    The FFT length is the signal length. The output length is
    ``round(len * target / source)``. When the new grid puts a bin exactly on
    a Nyquist frequency, that bin is split (upsampling) or folded
    (downsampling) so band-limited signals round-trip exactly.
    """
    if len(buf) == 0:
        raise ValueError("cannot resample an empty buffer")
    if not target_rate > 0:
        raise ValueError("target_rate must be positive")
    target_rate = _rate(Fraction(target_rate).limit_denominator(10**6))
    n = len(buf)
    m = int(round(n * float(target_rate) / float(buf.sample_rate)))
    if m < 1:
        raise ValueError("target length would be zero")
    if m == n:
        return AudioBuffer(buf.samples.copy(), target_rate)

    spec = np.fft.rfft(buf.samples)
    out = np.zeros(m // 2 + 1, dtype=np.complex128)
    if m > n:
        out[: spec.shape[0]] = spec
        if n % 2 == 0:
            out[n // 2] *= 0.5
    else:
        out[:] = spec[: m // 2 + 1]
        if m % 2 == 0:
            out[m // 2] = 2.0 * out[m // 2].real
    y = np.fft.irfft(out, n=m) * (m / n)
    return AudioBuffer(y, target_rate)
