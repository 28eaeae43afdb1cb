"""
Narrowband input and the interpolation baseline
===============================================

A wideband clip is reduced to a narrowband one by anti-alias filtering and
subsampling. Interpolating it back to 16 kHz restores the sample rate but
not the missing upper band. This gap is what the generator has to fill.
Its size is measured with the log-spectral distance (LSD).
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from bwegan.dsp import decimate, fft_resample
from bwegan.pipeline.report import spectrogram_image
from bwegan.spectral import log_spectral_distance
from bwegan.synth import make_speakers, synthesize_utterance

out = Path("demo_output")
out.mkdir(exist_ok=True)

# %%
# A speech-like clip: glottal pulses through a formant cascade, plus
# fricative noise bursts that reach well above 4 kHz.
speaker = make_speakers(1, seed=3)[0]
wide = synthesize_utterance(speaker, duration=1.5, seed=1)

# %%
# Decimate by s and interpolate back. The baseline gets worse as the ratio
# grows, because less of the spectrum survives.
fig, axes = plt.subplots(1, 4, figsize=(14, 3.5), sharey=True)
axes[0].imshow(spectrogram_image(wide), origin="lower", aspect="auto", cmap="magma", vmin=-10, vmax=4,
               extent=(0, len(wide) / 16000, 0, 8))
axes[0].set_title("wideband reference")
axes[0].set_ylabel("kHz")
for ax, s in zip(axes[1:], (2, 4, 8)):
    narrow = decimate(wide, s)
    up = fft_resample(narrow, 16000)
    ref = wide.samples[: len(up)]
    lsd = log_spectral_distance(type(wide)(ref, 16000), up)
    print(f"s={s}: narrowband {narrow.sample_rate:g} Hz, {len(narrow)} samples, baseline LSD {lsd:.3f}")
    ax.imshow(spectrogram_image(up), origin="lower", aspect="auto", cmap="magma", vmin=-10, vmax=4,
              extent=(0, len(up) / 16000, 0, 8))
    ax.set_title(f"s={s} interpolated, LSD {lsd:.2f}")
    ax.set_xlabel("seconds")
fig.tight_layout()
fig.savefig(out / "baseline_spectrograms.png", dpi=100)
print("wrote", out / "baseline_spectrograms.png")
