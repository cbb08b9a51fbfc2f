"""Command-line entry point.

Subcommands cover the full pipeline: dataset generation, both training
stages, sampling, the MSE table, the isomap figure, and the two
end-to-end experiments.  Most commands start from a named preset
("paper" or "desk"); a plain-text config file (key = value lines, keys
are preset fields) and explicit flags override it, flags last.  The
BBGAN_RUNS_ROOT environment variable relocates default run directories.
"""

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import config as cfg_mod
from . import experiments, figures, metrics
from .config import apply_overrides, get_preset, parse_config_file, runs_root
from .data import DatasetConfig, build_dataset
from .manifold import latent_manifold_figure
from .train_frames import load_frame_generator, sample_frames, train_frame_gan
from .train_video import load_video_bundle, swap_frame_generator, train_video_gan


def _preset_from_args(args) -> cfg_mod.ExperimentPreset:
    preset = get_preset(args.preset)
    if getattr(args, "config", None):
        preset = apply_overrides(preset, parse_config_file(args.config))
    if getattr(args, "seed", None) is not None:
        preset = replace(preset, seed=args.seed)
    return preset


def _add_preset_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--preset", default="desk", choices=sorted(cfg_mod.PRESETS),
                   help="experiment preset supplying defaults")
    p.add_argument("--config", type=Path, default=None,
                   help="key = value file overriding preset fields")
    p.add_argument("--seed", type=int, default=None, help="override the preset seed")


def cmd_gen_data(args) -> int:
    preset = _preset_from_args(args)
    dc = DatasetConfig(
        n_clips=args.n_clips if args.n_clips is not None else preset.n_clips,
        n_frames=preset.n_frames,
        n_balls=args.n_balls if args.n_balls is not None else preset.n_balls,
        height=preset.frame_hw[0], width=preset.frame_hw[1],
        base_seed=preset.seed,
        radius=preset.radius, speed=preset.speed,
        index_size=preset.index_size,
    )
    data_path, idx_path = build_dataset(dc, args.out, workers=args.workers)
    print(f"wrote {data_path} and {idx_path}")
    return 0


def cmd_train_frames(args) -> int:
    preset = _preset_from_args(args)
    run_cfg = preset.frames_config()
    if args.epochs is not None:
        run_cfg = replace(run_cfg, epochs=args.epochs)
    if args.k is not None:
        run_cfg = replace(run_cfg, k_discriminators=args.k)
    train_frame_gan(args.data, run_cfg, args.out, progress=print)
    print(f"stage-1 checkpoints in {args.out}")
    return 0


def cmd_train_video(args) -> int:
    preset = _preset_from_args(args)
    run_cfg = preset.video_config()
    if args.epochs is not None:
        run_cfg = replace(run_cfg, epochs=args.epochs)
    if args.k is not None:
        run_cfg = replace(run_cfg, k_discriminators=args.k)
    train_video_gan(args.data, args.frame_ckpt, run_cfg, args.out, progress=print)
    print(f"stage-2 checkpoints in {args.out}")
    return 0


def cmd_sample(args) -> int:
    frames = sample_frames(args.ckpt, args.n, args.seed)
    figures.save_png(figures.frame_sheet(frames.numpy()), args.out)
    print(f"wrote {args.out}")
    return 0


def _composed_from_args(args):
    if getattr(args, "frame_ckpt", None):
        composed, _ = swap_frame_generator(args.video_ckpt, args.frame_ckpt)
    else:
        composed, _ = load_video_bundle(args.video_ckpt)
    return composed


def cmd_sample_video(args) -> int:
    composed = _composed_from_args(args)
    clips = metrics.make_gan_sampler(composed)(args.n, args.seed)
    paths = figures.export_strips(clips, args.out)
    print(f"wrote {len(paths)} strips to {args.out}")
    return 0


def cmd_eval_mse(args) -> int:
    preset = _preset_from_args(args)
    condition = {"random": "random_latent"}.get(args.condition, args.condition)
    if condition == "real":
        sampler = metrics.make_real_sampler(
            n_frames=preset.n_frames, n_balls=args.n_balls or preset.n_balls,
            hw=preset.frame_hw, radius=preset.radius, speed=preset.speed,
        )
    elif condition == "proposed":
        if args.video_ckpt is None:
            raise SystemExit("--video-ckpt is required for --condition proposed")
        sampler = metrics.make_gan_sampler(_composed_from_args(args))
    else:
        if args.frame_ckpt is not None:
            frame_gen, _ = load_frame_generator(args.frame_ckpt)
        elif args.video_ckpt is not None:
            frame_gen = load_video_bundle(args.video_ckpt)[0].frame_gen
        else:
            raise SystemExit("--condition random needs --frame-ckpt or --video-ckpt")
        sampler = metrics.make_random_latent_sampler(frame_gen, preset.n_frames)
    report = metrics.mse_report(sampler, condition, n_videos=args.n,
                                seed=args.seed if args.seed is not None else preset.seed)
    metrics.write_mse_csv([report], args.out)
    print(f"{condition}: mean {report.mean:.6f} std {report.std:.6f} -> {args.out}")
    return 0


def cmd_eval_isomap(args) -> int:
    preset = _preset_from_args(args)
    if args.frame_ckpt:
        composed, _ = swap_frame_generator(args.video_ckpt, args.frame_ckpt)
    else:
        composed, _ = load_video_bundle(args.video_ckpt)
    points = latent_manifold_figure(
        composed.video_gen, composed.frame_gen,
        n_prior=args.n_prior if args.n_prior is not None else preset.isomap_n_prior,
        seed=args.seed if args.seed is not None else preset.seed,
        k_neighbors=args.k,
        out_png=args.out, points_csv=args.points_out,
    )
    print(f"embedded {len(points)} points -> {args.out} and {args.points_out}")
    return 0


def cmd_exp1(args) -> int:
    preset = _preset_from_args(args)
    root = args.root if args.root is not None else runs_root() / f"exp1_{preset.name}"
    experiments.run_experiment_one(preset, root, progress=print)
    return 0


def cmd_exp2(args) -> int:
    preset = _preset_from_args(args)
    root = args.root if args.root is not None else runs_root() / f"exp2_{preset.name}"
    exp1_root = (args.exp1_root if args.exp1_root is not None
                 else runs_root() / f"exp1_{preset.name}")
    experiments.run_experiment_two(preset, root, exp1_root, progress=print)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bbgan",
        description="Two-stage adversarial video generation on bouncing balls.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="write a simulator dataset plus frame index")
    _add_preset_args(p)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--n-clips", type=int, default=None)
    p.add_argument("--n-balls", type=int, default=None)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(fn=cmd_gen_data)

    p = sub.add_parser("train-frames", help="stage 1: frame generator")
    _add_preset_args(p)
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--k", type=int, default=None, help="number of discriminators")
    p.set_defaults(fn=cmd_train_frames)

    p = sub.add_parser("train-video", help="stage 2: video generator over frozen decoder")
    _add_preset_args(p)
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--frame-ckpt", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--k", type=int, default=None, help="number of discriminators")
    p.set_defaults(fn=cmd_train_video)

    p = sub.add_parser("sample", help="sample independent frames to one sheet PNG")
    p.add_argument("--ckpt", type=Path, required=True)
    p.add_argument("--n", type=int, default=30)
    p.add_argument("--seed", type=int, default=10)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(fn=cmd_sample)

    p = sub.add_parser("sample-video", help="sample clips to strip PNGs")
    p.add_argument("--video-ckpt", type=Path, required=True)
    p.add_argument("--frame-ckpt", type=Path, default=None,
                   help="swap in a different frame decoder (transfer)")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--seed", type=int, default=10)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(fn=cmd_sample_video)

    p = sub.add_parser("eval-mse", help="consecutive-frame MSE for one condition")
    _add_preset_args(p)
    p.add_argument("--condition", required=True, choices=["real", "proposed", "random"])
    p.add_argument("--n", type=int, default=30)
    p.add_argument("--video-ckpt", type=Path, default=None)
    p.add_argument("--frame-ckpt", type=Path, default=None)
    p.add_argument("--n-balls", type=int, default=None)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(fn=cmd_eval_mse)

    p = sub.add_parser("eval-isomap", help="latent manifold figure and points CSV")
    _add_preset_args(p)
    p.add_argument("--video-ckpt", type=Path, required=True)
    p.add_argument("--frame-ckpt", type=Path, default=None)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--n-prior", type=int, default=None)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--points-out", type=Path, required=True)
    p.set_defaults(fn=cmd_eval_isomap)

    p = sub.add_parser("exp1", help="full experiment: both stages plus evaluation")
    _add_preset_args(p)
    p.add_argument("--root", type=Path, default=None)
    p.set_defaults(fn=cmd_exp1)

    p = sub.add_parser("exp2", help="transfer experiment: 1-ball decoder swap")
    _add_preset_args(p)
    p.add_argument("--root", type=Path, default=None)
    p.add_argument("--exp1-root", type=Path, default=None)
    p.set_defaults(fn=cmd_exp2)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
