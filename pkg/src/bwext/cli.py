"""Command-line entry point: degrade, train, infer, evaluate, ltas."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import degradation, ltas, metrics
from .audio import AudioBuffer, load_audio, resample, save_audio
from .degradation import CutoffDistribution, FilterSpec, NoiseSpec
from .errors import CutoffNotFoundError
from .generator import save_generator
from .inference import SAMPLE_RATE, PipelineConfig, run_inference
from .metrics import SurrogateEmbeddingProvider
from .trainer import Trainer, parse_config, write_config, write_trace_csv


def _wav_files(path: Path) -> list[Path]:
    if path.is_file():
        return [path]
    return sorted(path.glob("*.wav"))


def _print_effective(args) -> None:
    printable = {k: v for k, v in vars(args).items() if k != "func"}
    print("effective config:", printable)


def cmd_degrade(args):
    _print_effective(args)
    rng = np.random.default_rng(args.seed)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for path in _wav_files(Path(args.input)):
        buf = load_audio(path, SAMPLE_RATE)
        if args.filter == "butterworth":
            spec = FilterSpec("iir-butterworth", args.fc, SAMPLE_RATE)
            out = degradation.apply_butterworth(buf, spec)
        else:
            dist = CutoffDistribution(args.fc, args.fc_std)
            noise = NoiseSpec(args.noise_dbfs, enabled=not args.no_noise)
            ex = degradation.degrade_example(buf, dist, noise, (0.0, 0.0), rng)
            out = ex.degraded
        save_audio(out_dir / path.name, out)
        print(f"degraded {path.name}")
    return 0


def cmd_train(args):
    cfg = parse_config(args.config)
    if args.seed is not None:
        from dataclasses import replace

        cfg = replace(cfg, seed=args.seed)
    print("effective config:", cfg)
    corpus = [load_audio(p, SAMPLE_RATE) for p in _wav_files(Path(args.data))]
    if args.resume:
        trainer = Trainer.load(args.resume, corpus, cfg)
    else:
        trainer = Trainer(cfg, corpus)
    trainer.train_stage1(max(cfg.stage1_steps - trainer.stage1_step, 0))
    trainer.train_stage2(max(cfg.stage2_steps - trainer.stage2_step, 0))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    trainer.save(out_dir / "trainer.ckpt")
    save_generator(out_dir / "generator.ckpt", trainer.generator)
    write_trace_csv(out_dir / "losses.csv", trainer.trace)
    print(f"saved checkpoints and traces to {out_dir}")
    return 0


def cmd_infer(args):
    _print_effective(args)
    noise = NoiseSpec(args.noise_dbfs, enabled=True) if args.noise else None
    cfg = PipelineConfig(
        checkpoint_path=args.checkpoint,
        denoiser_command=args.denoiser_cmd,
        chunk_seconds=args.chunk_seconds,
        overlap_seconds=args.overlap_seconds,
        inference_noise=noise,
        seed=args.seed,
    )
    run_inference(args.infile, args.outfile, cfg)
    print(f"wrote {args.outfile}")
    return 0


def cmd_evaluate(args):
    _print_effective(args)
    provider = SurrogateEmbeddingProvider(seed=args.seed)
    rows = []
    if args.metric == "fad":
        background = [load_audio(p, SAMPLE_RATE) for p in _wav_files(Path(args.background))]
        evaluation = [load_audio(p, SAMPLE_RATE) for p in _wav_files(Path(args.evaluation))]
        value = metrics.fad_protocol(background, evaluation, provider, seed=args.seed)
        rows.append(("fad", "fad", value))
    else:
        ref_files = _wav_files(Path(args.background))
        eval_files = _wav_files(Path(args.evaluation))
        for ref_path, eval_path in zip(ref_files, eval_files):
            ref = load_audio(ref_path, SAMPLE_RATE)
            est = load_audio(eval_path, SAMPLE_RATE)
            if args.metric == "lsd":
                value = metrics.lsd(ref, est)
            else:  # vgg-style embedding distance
                value = metrics.embedding_distance(
                    resample(ref, provider.sample_rate),
                    resample(est, provider.sample_rate),
                    provider,
                )
            rows.append((eval_path.name, args.metric, value))

    lines = ["condition,metric,value,provider,seed"]
    for name, metric, value in rows:
        line = f"{name},{metric},{value:.6f},{provider.descriptor},{args.seed}"
        lines.append(line)
        print(line)
    if args.csv:
        Path(args.csv).write_text("\n".join(lines) + "\n")
    return 0


def cmd_ltas(args):
    _print_effective(args)
    old_curves = [
        ltas.compute_ltas(load_audio(p, SAMPLE_RATE), args.smoothing)
        for p in _wav_files(Path(args.old))
    ]
    modern_curves = [
        ltas.compute_ltas(load_audio(p, SAMPLE_RATE), args.smoothing)
        for p in _wav_files(Path(args.modern))
    ]
    diffs = [ltas.difference_curve(o, m) for o in old_curves for m in modern_curves]
    avg = ltas.average_curves(diffs)
    try:
        cutoff = ltas.estimate_cutoff(avg)
        print(f"estimated -3 dB cutoff: {cutoff:.1f} Hz")
    except CutoffNotFoundError:
        print("no -3 dB crossing found above 2 kHz")
    if args.csv:
        ltas.export_curve_csv(args.csv, avg)
        print(f"wrote {args.csv}")
    if args.plot:
        _plot_curves(diffs, avg, args.plot)
        print(f"wrote {args.plot}")
    return 0


def _plot_curves(diffs, avg, path):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 4))
    for curve in diffs:
        ax.semilogx(curve.frequencies, curve.levels, alpha=0.3, linewidth=0.8)
    ax.semilogx(avg.frequencies, avg.levels, "k", linewidth=2, label="average")
    ax.axhline(-3.0, color="gray", linestyle="--", linewidth=0.8)
    ax.set_xlabel("Frequency (Hz)")
    ax.set_ylabel("Level difference (dB)")
    ax.set_xlim(100, avg.frequencies[-1])
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bwext", description="Bandwidth extension toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("degrade", help="apply training or test lowpass filters to a corpus")
    p.add_argument("--input", required=True, help="WAV file or directory")
    p.add_argument("--out", required=True)
    p.add_argument("--filter", choices=["train-fir", "butterworth"], default="train-fir")
    p.add_argument("--fc", type=float, default=3000.0)
    p.add_argument("--fc-std", type=float, default=300.0)
    p.add_argument("--noise-dbfs", type=float, default=-30.0)
    p.add_argument("--no-noise", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_degrade)

    p = sub.add_parser("train", help="run the two-stage training schedule")
    p.add_argument("--config", required=True)
    p.add_argument("--data", required=True, help="directory of training WAVs")
    p.add_argument("--out", required=True)
    p.add_argument("--resume", default=None, help="trainer checkpoint to resume from")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("infer", help="bandwidth-extend a recording")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", dest="outfile", required=True)
    p.add_argument("--denoiser-cmd", default=None)
    p.add_argument("--noise", action="store_true", help="inject noise before the generator")
    p.add_argument("--noise-dbfs", type=float, default=-30.0)
    p.add_argument("--chunk-seconds", type=float, default=5.0)
    p.add_argument("--overlap-seconds", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("evaluate", help="objective metrics over paired corpora")
    p.add_argument("--metric", choices=["lsd", "vgg", "fad"], required=True)
    p.add_argument("--background", required=True, help="reference/background corpus")
    p.add_argument("--evaluation", required=True, help="evaluation corpus")
    p.add_argument("--provider", default="surrogate")
    p.add_argument("--csv", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("ltas", help="long-term average spectrum difference analysis")
    p.add_argument("--old", required=True)
    p.add_argument("--modern", required=True)
    p.add_argument("--smoothing", type=float, default=1.0 / 3.0)
    p.add_argument("--csv", default=None)
    p.add_argument("--plot", default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_ltas)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
