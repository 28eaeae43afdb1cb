"""
Training a toy single-ratio model
=================================

A few hundred adversarial steps on four clips are enough for the generator
to put energy back into the empty upper band. The model is scored against
the interpolation baseline on the same clips.

Set ``BWEGAN_DEMO_STEPS`` to change the step count (default 300, about two
minutes on one CPU core).
"""

import json
import os
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from bwegan.audio_io import AudioBuffer
from bwegan.dsp import fft_resample
from bwegan.pipeline import (
    PairSource,
    TrainRun,
    evaluate,
    generator_system,
    load_generator,
    prepare_corpus,
    train,
)
from bwegan.pipeline.report import spectrogram_image
from bwegan.synth import write_mini_corpus

steps = int(os.environ.get("BWEGAN_DEMO_STEPS", 300))
out = Path("demo_output") / "toy"

# %%
# Four clips from two speakers, all used for training.
write_mini_corpus(out / "raw", n_speakers=2, clips_per_speaker=2, seed=0)
manifest = prepare_corpus(out / "raw", out / "prepared", (2,), n_train_speakers=2)

# %%
# Short segments and a small batch keep each step around 0.3 s.
run = TrainRun(mode="single:2", steps=steps, batch_size=2, segment_len=4096, seed=0, log_every=25)
ckpt = train(run, manifest, out / "run")

log = [json.loads(line) for line in (out / "run" / "loss_log.ndjson").read_text().splitlines()]
fig, ax = plt.subplots(figsize=(6, 3.5))
ax.plot([r["step"] for r in log], [r["mel"] for r in log], label="mel L1")
ax.plot([r["step"] for r in log], [r["disc"] for r in log], label="discriminator")
ax.set_xlabel("step")
ax.legend()
fig.tight_layout()
fig.savefig(out / "losses.png", dpi=100)

# %%
# Score on the training clips.
row = evaluate(ckpt, manifest, (2,), split="train").rows[0]
print(f"after {steps} steps: model LSD {row.model_lsd:.3f}, baseline LSD {row.baseline_lsd:.3f}")

# %%
# Compare one clip: reference, interpolated input, generated output.
gen, _ = load_generator(ckpt)
entry = manifest.entries[0]
source = PairSource(manifest)
up = fft_resample(source.narrowband(entry, 2), 16000)
ref = AudioBuffer(source.wideband(entry)[: len(up)], 16000)
fake = AudioBuffer(generator_system(gen)(up, ref)[: len(up)], 16000)
fig, axes = plt.subplots(1, 3, figsize=(12, 3.5), sharey=True)
for ax, (title, buf) in zip(axes, (("reference", ref), ("interpolated", up), ("generated", fake))):
    ax.imshow(spectrogram_image(buf), origin="lower", aspect="auto", cmap="magma", vmin=-10, vmax=4,
              extent=(0, len(buf) / 16000, 0, 8))
    ax.set_title(title)
axes[0].set_ylabel("kHz")
fig.tight_layout()
fig.savefig(out / "spectrograms.png", dpi=100)
upper = np.fft.rfftfreq(len(fake), 1 / 16000) > 4000
print("upper-band energy, generated / interpolated:",
      f"{np.sum(np.abs(np.fft.rfft(fake.samples))[upper] ** 2) / np.sum(np.abs(np.fft.rfft(up.samples))[upper] ** 2):.3g}")
