"""Stage 2: train the recurrent video generator over a frozen frame decoder.

The video generator emits a sequence of frame latents; the stage-1 frame
generator decodes them and is never updated here.  Frozenness is enforced
by hashing the decoder's full state before training and after every
epoch, and failing hard on any drift (optimizer exclusion alone would not
catch batch-norm statistics, so the decoder is also pinned to eval mode).
"""

from dataclasses import asdict
from pathlib import Path

import numpy as np
import torch

from . import checkpoints
from .adversarial import (
    LossLog,
    TrainingDivergedError,
    make_projection_bank,
    multi_disc_train_step,
)
from .config import STAGE_VIDEO, TrainRunConfig
from .data import BallDataset
from .models import (
    ComposedVideoGenerator,
    FrameGenerator,
    FrameGeneratorSpec,
    VideoDiscriminator,
    VideoDiscriminatorSpec,
    VideoGenerator,
    VideoGeneratorSpec,
    build_video_generator,
    dcgan_weights_init,
)
from .train_frames import LOSSES_NAME, _epoch_summary, load_frame_generator, shuffled_batches


class FrozenGeneratorError(RuntimeError):
    """The frame generator changed during stage-2 training."""


def video_generator_spec(cfg: TrainRunConfig) -> VideoGeneratorSpec:
    """Reference recurrent architecture sized to the configured sequence."""
    step_features = 128
    return VideoGeneratorSpec(
        latent_dim=cfg.latent_dim,
        encoder_widths=(512, 1024, 2048, cfg.seq_len * step_features),
        seq_len=cfg.seq_len,
        step_features=step_features,
        lstm_hidden=(128, 256),
        out_dim=cfg.latent_dim,
    )


def build_video_discriminators(spec: VideoDiscriminatorSpec, k: int, seed: int):
    discs = []
    for i in range(k):
        torch.manual_seed(seed * 2003 + 11 * i + 5)
        d = VideoDiscriminator(spec)
        d.apply(dcgan_weights_init)
        discs.append(d)
    return discs


def _check_frozen(frame_gen: FrameGenerator, expected_hash: str, when: str) -> None:
    actual = checkpoints.state_dict_hash(frame_gen)
    if actual != expected_hash:
        raise FrozenGeneratorError(
            f"frame generator state changed {when}: "
            f"hash {actual} != {expected_hash}"
        )


def train_video_gan(
    data_path: str | Path,
    frame_ckpt_dir: str | Path,
    cfg: TrainRunConfig,
    out_dir: str | Path,
    progress=None,
) -> Path:
    """Run the full stage-2 schedule; returns the checkpoint directory.

    Checkpoints are self-contained: they embed the frozen frame decoder
    alongside the video generator, so sampling needs only this directory.
    """
    if cfg.stage != STAGE_VIDEO:
        raise ValueError(f"expected a video-stage config, got {cfg.stage!r}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    dataset = BallDataset(data_path)
    if dataset.frame_shape != cfg.frame_hw:
        raise ValueError(
            f"dataset frames are {dataset.frame_shape}, config expects {cfg.frame_hw}"
        )
    if dataset.header.n_frames != cfg.seq_len:
        raise ValueError(
            f"dataset clips have {dataset.header.n_frames} frames, "
            f"config expects {cfg.seq_len}"
        )

    frame_gen, frame_manifest = load_frame_generator(frame_ckpt_dir)
    frame_gen.requires_grad_(False)
    frame_gen.eval()
    frame_hash = checkpoints.state_dict_hash(frame_gen)

    vspec = video_generator_spec(cfg)
    video_gen = build_video_generator(vspec, cfg.seed)
    composed = ComposedVideoGenerator(video_gen, frame_gen)
    video_gen.train()
    frame_gen.eval()  # composed construction must not flip decoder mode

    bank = make_projection_bank(
        cfg.k_discriminators,
        in_shape=cfg.frame_hw,
        seed=cfg.bank_seed(),
        kernel_size=cfg.proj_kernel,
        stride=cfg.proj_stride,
        padding=cfg.proj_padding,
    )
    dspec = VideoDiscriminatorSpec(
        in_thw=(cfg.seq_len, *bank.out_hw()),
        channels=cfg.video_d_channels,
    )
    discriminators = build_video_discriminators(dspec, cfg.k_discriminators, cfg.seed)

    g_opt = torch.optim.RMSprop(video_gen.parameters(), lr=cfg.learning_rate)
    d_opts = [
        torch.optim.RMSprop(d.parameters(), lr=cfg.learning_rate)
        for d in discriminators
    ]

    torch.manual_seed(cfg.seed * 31 + 2)  # training-time noise stream
    batch_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0xC11B]))
    log = LossLog(out_dir / LOSSES_NAME)

    step = 0
    for epoch in range(1, cfg.epochs + 1):
        records = []
        for batch_idx in shuffled_batches(len(dataset), cfg.batch_size, batch_rng):
            real = torch.from_numpy(dataset.clips(batch_idx)).unsqueeze(1)
            try:
                record = multi_disc_train_step(
                    composed, discriminators, bank, real,
                    g_opt, d_opts, gen_loss_mode=cfg.gen_loss_mode,
                    step=step, stage=STAGE_VIDEO,
                )
            except TrainingDivergedError as e:
                raise TrainingDivergedError(
                    f"{e}; checkpoints through epoch {epoch - 1} retained in {out_dir}"
                ) from e
            log.append(record)
            records.append(record)
            step += 1

        _check_frozen(frame_gen, frame_hash, f"by epoch {epoch}")
        payload = {
            "epoch": epoch,
            "video_generator": video_gen.state_dict(),
            "frame_generator": frame_gen.state_dict(),
            "discriminators": [d.state_dict() for d in discriminators],
            "g_optimizer": g_opt.state_dict(),
            "d_optimizers": [o.state_dict() for o in d_opts],
            "video_generator_spec": asdict(vspec),
            "frame_generator_spec": asdict(frame_gen.spec),
            "discriminator_spec": asdict(dspec),
            "bank_kernels": bank.kernels,
            "bank_meta": {
                "stride": bank.stride, "padding": bank.padding,
                "in_hw": bank.in_hw, "seed": bank.seed,
            },
        }
        archive = checkpoints.save_epoch_archive(out_dir, epoch, payload)
        checkpoints.write_manifest(
            out_dir, STAGE_VIDEO, cfg, epoch, archive,
            loss_summary=_epoch_summary(records),
            extra={
                "video_generator_hash": checkpoints.state_dict_hash(video_gen),
                "frame_generator_hash": frame_hash,
                "frame_checkpoint": str(Path(frame_ckpt_dir)),
                "frame_checkpoint_generator_hash": frame_manifest.get("generator_hash"),
                "bank_hash": bank.state_hash(),
            },
        )
        if progress is not None:
            s = _epoch_summary(records)
            progress(
                f"video epoch {epoch}/{cfg.epochs}: "
                f"gen {s['gen_loss']:.4f} disc {s['d_loss_mean']:.4f}"
            )

    _check_frozen(frame_gen, frame_hash, "over the full stage-2 run")
    return out_dir


def load_video_bundle(
    ckpt_dir: str | Path, verify: bool = True
) -> tuple[ComposedVideoGenerator, dict]:
    """Rebuild the composed sampler (video generator plus frozen decoder)."""
    manifest, payload = checkpoints.load_archive(ckpt_dir, verify=verify)
    if manifest["stage"] != STAGE_VIDEO:
        raise checkpoints.ManifestError(
            f"{ckpt_dir} holds a {manifest['stage']!r} checkpoint, expected video"
        )
    video_gen = VideoGenerator(VideoGeneratorSpec(**payload["video_generator_spec"]))
    video_gen.load_state_dict(payload["video_generator"])
    frame_gen = FrameGenerator(FrameGeneratorSpec(**payload["frame_generator_spec"]))
    frame_gen.load_state_dict(payload["frame_generator"])
    composed = ComposedVideoGenerator(video_gen, frame_gen)
    composed.eval()
    return composed, manifest


def swap_frame_generator(
    video_ckpt_dir: str | Path, frame_ckpt_dir: str | Path
) -> tuple[ComposedVideoGenerator, dict]:
    """Compose a trained video generator with a *different* frame decoder.

    This is the transfer construction: latent dynamics learned against one
    decoder, rendered through another.  Latent widths must agree.
    """
    composed, manifest = load_video_bundle(video_ckpt_dir)
    other, _ = load_frame_generator(frame_ckpt_dir)
    swapped = ComposedVideoGenerator(composed.video_gen, other)
    swapped.eval()
    return swapped, manifest


def generate_video(
    sampler: ComposedVideoGenerator, n: int, seed: int
) -> tuple[torch.Tensor, torch.Tensor]:
    """Draw n clips; returns (clips (n,1,T,H,W) in [0,1], latents (n,T,D)).

    Bit-identical for a fixed (sampler state, n, seed).
    """
    gen = torch.Generator().manual_seed(seed)
    z = torch.randn(n, sampler.video_gen.spec.latent_dim, generator=gen)
    with torch.no_grad():
        clips, latents = sampler.clips_from_noise(z)
    return clips, latents
