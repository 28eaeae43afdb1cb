"""Deterministic speech-like test material.

A small source-filter synthesizer: a glottal pulse train with a jittered,
declining pitch contour and breath noise is passed through a cascade of
time-varying formant resonators; fricatives and stop bursts are shaped noise.
The result has the properties the bandwidth-expansion pipeline cares about:
harmonic structure in the low band, formant envelopes, and broadband
high-frequency energy from fricatives and aspiration.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
import scipy.signal

from .audio_io import AudioBuffer, write_wav

__all__ = ["Speaker", "make_speakers", "synthesize_utterance", "tone", "write_mini_corpus"]

# F1..F3 targets in Hz for an average adult voice.
VOWELS = {
    "a": (730, 1090, 2440),
    "i": (270, 2290, 3010),
    "u": (300, 870, 2240),
    "e": (530, 1840, 2480),
    "o": (570, 840, 2410),
    "ae": (660, 1720, 2410),
}
HIGHER_FORMANTS = (3500.0, 4500.0, 5500.0)
BANDWIDTHS = (80.0, 100.0, 140.0, 200.0, 280.0, 360.0)
# (low Hz, high Hz, relative level)
FRICATIVES = {
    "s": (4200.0, 7600.0, 0.35),
    "sh": (2300.0, 6000.0, 0.30),
    "f": (1200.0, 7800.0, 0.10),
    "h": (600.0, 6000.0, 0.06),
}
BLOCK = 80


@dataclass(frozen=True)
class Speaker:
    name: str
    f0: float
    formant_scale: float
    breathiness: float
    jitter: float


def make_speakers(n: int, seed: int = 0) -> list[Speaker]:
    rng = np.random.default_rng(seed)
    speakers = []
    for i in range(n):
        female = i % 2 == 1
        speakers.append(
            Speaker(
                name=f"s{i + 1:02d}",
                f0=float(rng.uniform(175, 235) if female else rng.uniform(90, 140)),
                formant_scale=float(rng.uniform(1.05, 1.17) if female else rng.uniform(0.9, 1.02)),
                breathiness=float(rng.uniform(0.02, 0.06)),
                jitter=float(rng.uniform(0.004, 0.012)),
            )
        )
    return speakers


def _resonator(freq, bw, fs):
    r = np.exp(-np.pi * bw / fs)
    a1 = -2.0 * r * np.cos(2.0 * np.pi * freq / fs)
    a2 = r * r
    gain = 1.0 + a1 + a2  # unity gain at DC
    return gain, a1, a2


def _plan(rng, duration, speaker):
    """Phone sequence as (kind, label, seconds) covering ``duration``."""
    plan = [("sil", None, rng.uniform(0.04, 0.09))]
    total = plan[0][2]
    while total < duration - 0.08:
        onset = rng.choice(["fric", "stop", "nasal", "none"], p=[0.35, 0.25, 0.15, 0.25])
        if onset == "fric":
            plan.append(("fric", rng.choice(list(FRICATIVES)), rng.uniform(0.06, 0.14)))
        elif onset == "stop":
            plan.append(("sil", None, rng.uniform(0.03, 0.06)))
            plan.append(("burst", None, rng.uniform(0.01, 0.02)))
        elif onset == "nasal":
            plan.append(("nasal", None, rng.uniform(0.05, 0.09)))
        plan.append(("vowel", rng.choice(list(VOWELS)), rng.uniform(0.09, 0.22)))
        if rng.random() < 0.2:
            plan.append(("sil", None, rng.uniform(0.03, 0.12)))
        total = sum(p[2] for p in plan)
    plan.append(("sil", None, max(duration - total, 0.0) + 0.01))
    return plan


def synthesize_utterance(
    speaker: Speaker, duration: float = 1.0, sample_rate: int = 16000, seed: int = 0
) -> AudioBuffer:
    """Render ``duration`` seconds of speech-like audio, peak 0.9."""
    rng = np.random.default_rng(seed)
    n = int(round(duration * sample_rate))
    plan = _plan(rng, duration, speaker)

    # Per-sample control tracks.
    voiced = np.zeros(n)
    fric_amp = np.zeros(n)
    burst = np.zeros(n)
    formants = np.zeros((n, 6))
    fric_band = np.zeros((n, 2))
    pos = 0
    last_formants = np.array(VOWELS["e"] + HIGHER_FORMANTS, dtype=float)
    for kind, label, secs in plan:
        m = min(int(secs * sample_rate), n - pos)
        if m <= 0:
            break
        seg = slice(pos, pos + m)
        if kind == "vowel":
            target = np.array(VOWELS[label] + HIGHER_FORMANTS, dtype=float)
            voiced[seg] = 1.0
        elif kind == "nasal":
            target = np.array((260.0, 1100.0, 2300.0) + HIGHER_FORMANTS)
            voiced[seg] = 0.35
        else:
            target = last_formants
        ramp = np.minimum(np.arange(m) / max(1, int(0.04 * sample_rate)), 1.0)[:, None]
        formants[seg] = last_formants + (target - last_formants) * ramp
        last_formants = target
        if kind == "fric":
            lo, hi, level = FRICATIVES[label]
            fric_amp[seg] = level
            fric_band[seg] = (lo, hi)
        elif kind == "burst":
            burst[seg] = 0.5
            fric_band[seg] = (1500.0, 7500.0)
        pos += m
    formants *= speaker.formant_scale
    nyq = sample_rate / 2.0
    formants = np.minimum(formants, 0.92 * nyq)

    # Smooth the voicing and noise envelopes (~12 ms attack/decay).
    smooth = np.hanning(int(0.012 * sample_rate) * 2 + 1)
    smooth /= smooth.sum()
    voiced = np.convolve(voiced, smooth, mode="same")
    fric_amp = np.convolve(fric_amp, smooth, mode="same")

    # Glottal source: pulse train with declining, jittered pitch.
    t = np.arange(n) / sample_rate
    wander = np.cumsum(rng.normal(0, 1, n)) / np.sqrt(sample_rate) * 6.0
    f0 = speaker.f0 * (1.08 - 0.16 * t / max(duration, 1e-3)) + wander
    f0 *= 1.0 + speaker.jitter * rng.normal(size=n)
    phase = np.cumsum(f0 / sample_rate)
    pulses = np.zeros(n)
    pulses[1:][np.diff(np.floor(phase)) > 0] = 1.0
    glottal = scipy.signal.lfilter([1.0], [1.0, -1.94, 0.9409], pulses)  # double pole at 0.97
    glottal = np.diff(glottal, prepend=0.0)  # lip radiation
    glottal /= np.max(np.abs(glottal)) + 1e-12
    aspiration = rng.normal(size=n) * speaker.breathiness
    source = (glottal + aspiration) * voiced

    # Time-varying formant cascade, block by block with carried state.
    out = source.copy()
    for f in range(6):
        zi = np.zeros(2)
        y = np.empty(n)
        for start in range(0, n, BLOCK):
            stop = min(start + BLOCK, n)
            freq = formants[start, f]
            g, a1, a2 = _resonator(freq, BANDWIDTHS[f] * speaker.formant_scale, sample_rate)
            y[start:stop], zi = scipy.signal.lfilter([g], [1.0, a1, a2], out[start:stop], zi=zi)
        out = 0.5 * out + y if f >= 3 else y  # keep some energy above the upper formants

    # Fricatives and bursts: band-limited noise, band switched per block.
    noise = rng.normal(size=n)
    fric = np.zeros(n)
    amps = np.maximum(fric_amp, burst)
    active = amps > 1e-4
    if active.any():
        # Smoothing spills the envelope past the phone edges; extend each band to cover it.
        defined = np.flatnonzero(fric_band[:, 1] > 0)
        nearest = defined[np.clip(np.searchsorted(defined, np.arange(n)), 0, len(defined) - 1)]
        fric_band = fric_band[nearest]
        for start in range(0, n, BLOCK):
            stop = min(start + BLOCK, n)
            if not active[start:stop].any():
                continue
            lo, hi = fric_band[start:stop][np.argmax(amps[start:stop])]
            hi = min(hi, 0.95 * nyq)
            lo = min(lo, 0.8 * hi)
            sos = scipy.signal.butter(4, [lo / nyq, hi / nyq], btype="band", output="sos")
            pad = noise[max(0, start - 256) : stop]
            fric[start:stop] = scipy.signal.sosfilt(sos, pad)[-(stop - start) :]
        fric *= amps

    sig = out / (np.max(np.abs(out)) + 1e-12) + fric
    sig += rng.normal(size=n) * 3e-4  # room noise floor
    sig *= 0.9 / np.max(np.abs(sig))
    return AudioBuffer(sig, sample_rate)


def tone(freq: float, duration: float, sample_rate: int = 16000, amplitude: float = 0.5) -> AudioBuffer:
    t = np.arange(int(round(duration * sample_rate))) / sample_rate
    return AudioBuffer(amplitude * np.sin(2.0 * np.pi * freq * t), sample_rate)


def write_mini_corpus(
    out_dir,
    n_speakers: int = 5,
    clips_per_speaker: int = 2,
    duration: float = 1.0,
    sample_rate: int = 16000,
    seed: int = 0,
) -> list[str]:
    """Write ``<out_dir>/<speaker>/<speaker>_<nnn>.wav`` clips; returns the paths.

    Clip lengths vary by up to +/-25 % around ``duration``.
    """
    rng = np.random.default_rng(seed)
    paths = []
    for sp in make_speakers(n_speakers, seed):
        os.makedirs(os.path.join(out_dir, sp.name), exist_ok=True)
        for k in range(clips_per_speaker):
            dur = duration * float(rng.uniform(0.75, 1.25))
            buf = synthesize_utterance(sp, dur, sample_rate, seed=int(rng.integers(2**31)))
            path = os.path.join(out_dir, sp.name, f"{sp.name}_{k + 1:03d}.wav")
            write_wav(buf, path)
            paths.append(path)
    return paths
