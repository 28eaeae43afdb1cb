"""Command-line entry point: ``bwegan <command> ...``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__, nn
from .audio_io import WavError, read_wav
from .pipeline import (
    DEFAULT_GRID,
    ConfigError,
    CorpusManifest,
    DataError,
    NumericalError,
    TrainRun,
    baseline,
    emit_report,
    evaluate,
    parse_ratio,
    prepare_corpus,
    render_spectrogram,
    train,
    zero_shot_sweep,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4

log = logging.getLogger("bwegan")


def _ratios(text: str) -> list:
    try:
        return [parse_ratio(t) for t in text.split(",") if t.strip()]
    except ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _cmd_prepare(args) -> None:
    m = prepare_corpus(args.input, args.out, args.ratios, n_train_speakers=args.train_speakers)
    log.info(
        "prepared %d utterances (%d train / %d test speakers) -> %s",
        len(m.entries), len(m.train_speakers), len(m.test_speakers), Path(args.out) / "manifest.json",
    )


def _cmd_train(args) -> None:
    manifest = CorpusManifest.load(args.manifest)
    run = TrainRun(
        mode=args.mode,
        steps=args.steps,
        batch_size=args.batch_size,
        segment_len=args.segment,
        seed=args.seed,
        checkpoint_every=args.checkpoint_every,
        lr_schedule=nn.LrSchedule(lr_init=args.lr),
    )
    out = args.out or Path(args.manifest).resolve().parent / "runs" / f"{args.mode.replace(':', '_')}_seed{args.seed}"
    ckpt = train(run, manifest, out)
    log.info("checkpoint: %s", ckpt)
    print(ckpt)


def _emit(report, out_dir) -> None:
    paths = emit_report(report, out_dir)
    for row in report.rows:
        model = "-" if row.model_lsd is None else f"{row.model_lsd:.4f}"
        print(f"s={row.ratio:>4}  model {model:>8}  baseline {row.baseline_lsd:.4f}  n={row.n_utterances}")
    log.info("report written to %s", paths["table"].parent)


def _cmd_eval(args) -> None:
    manifest = CorpusManifest.load(args.manifest)
    _emit(evaluate(args.ckpt, manifest, args.ratios, split=args.split), args.out)


def _cmd_sweep(args) -> None:
    manifest_path = args.manifest
    if manifest_path is None:
        _, meta = nn.load_checkpoint(args.ckpt)
        manifest_path = meta.get("manifest")
        if not manifest_path:
            raise ConfigError("checkpoint records no manifest; pass --manifest")
    manifest = CorpusManifest.load(manifest_path)
    _emit(zero_shot_sweep(args.ckpt, manifest, args.grid, split=args.split), args.out)


def _cmd_baseline(args) -> None:
    manifest = CorpusManifest.load(args.manifest)
    _emit(baseline(manifest, args.ratios, split=args.split), args.out)


def _cmd_render(args) -> None:
    buf = read_wav(args.wav)
    if len(buf) == 0:
        raise DataError(f"{args.wav} holds no samples")
    try:
        render_spectrogram(buf, args.out)
    except OSError as exc:
        raise DataError(f"cannot write {args.out}: {exc}") from exc


def _cmd_synth(args) -> None:
    from .synth import write_mini_corpus

    paths = write_mini_corpus(args.out, args.speakers, args.clips, args.duration, seed=args.seed)
    log.info("wrote %d clips under %s", len(paths), args.out)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bwegan", description="GAN speech bandwidth expansion")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("prepare", help="resample, normalize and decimate a speaker-organized WAV tree")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--ratios", type=_ratios, default=_ratios("2,4,8"))
    s.add_argument("--train-speakers", type=int, default=None, help="default: all but one, at most 100")
    s.set_defaults(func=_cmd_prepare)

    s = sub.add_parser("train", help="adversarial training")
    s.add_argument("--manifest", required=True)
    s.add_argument("--mode", default="single:2", help="single:<s> or unified[:2,4,8]")
    s.add_argument("--steps", type=int, default=5000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--batch-size", type=int, default=4)
    s.add_argument("--segment", type=int, default=8192)
    s.add_argument("--checkpoint-every", type=int, default=0)
    s.add_argument("--lr", type=float, default=nn.LrSchedule().lr_init)
    s.add_argument("--out", default=None)
    s.set_defaults(func=_cmd_train)

    for name, func, helptext in (
        ("eval", _cmd_eval, "LSD of a checkpoint and of FFT interpolation"),
        ("sweep", _cmd_sweep, "evaluate a checkpoint over a ratio grid"),
        ("baseline", _cmd_baseline, "LSD of FFT interpolation only"),
    ):
        s = sub.add_parser(name, help=helptext)
        if name != "baseline":
            s.add_argument("--ckpt", required=True)
        s.add_argument("--manifest", required=name != "sweep")
        if name == "sweep":
            s.add_argument("--grid", type=_ratios, default=list(DEFAULT_GRID))
        else:
            s.add_argument("--ratios", type=_ratios, default=_ratios("2,4,8"))
        s.add_argument("--split", choices=("train", "test", "all"), default="test")
        s.add_argument("--out", default=f"report_{name}")
        s.set_defaults(func=func)

    s = sub.add_parser("render", help="write a spectrogram PNG of a WAV file")
    s.add_argument("--wav", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=_cmd_render)

    s = sub.add_parser("synth", help="write a synthetic speech-like mini-corpus")
    s.add_argument("--out", required=True)
    s.add_argument("--speakers", type=int, default=5)
    s.add_argument("--clips", type=int, default=2)
    s.add_argument("--duration", type=float, default=1.0)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=_cmd_synth)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with 2 on bad arguments
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s"
    )
    try:
        args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, WavError, FileNotFoundError, nn.CheckpointError, json.JSONDecodeError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalError, FloatingPointError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
