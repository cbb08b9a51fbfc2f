"""Stage 1: train the frame generator against K projection discriminators.

Every discriminator sees only its own fixed random projection of the
input, never raw pixels.  Checkpoints are written once per epoch together
with a portable JSON manifest carrying SHA-256 hashes, so a finished or
interrupted run can always be reloaded and verified.
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
from .config import STAGE_FRAMES, TrainRunConfig
from .data import BallDataset, read_frames_index
from .models import (
    FrameDiscriminator,
    FrameDiscriminatorSpec,
    FrameGenerator,
    FrameGeneratorSpec,
    build_frame_generator,
    dcgan_weights_init,
)

LOSSES_NAME = "losses.csv"


def shuffled_batches(n_items: int, batch_size: int, rng: np.random.Generator):
    """Yield disjoint shuffled index batches; a trailing partial is dropped."""
    order = rng.permutation(n_items)
    for start in range(0, n_items - batch_size + 1, batch_size):
        yield order[start:start + batch_size]


def build_frame_discriminators(spec: FrameDiscriminatorSpec, k: int, seed: int):
    discs = []
    for i in range(k):
        torch.manual_seed(seed * 1009 + 7 * i + 1)
        d = FrameDiscriminator(spec)
        d.apply(dcgan_weights_init)
        discs.append(d)
    return discs


def _epoch_summary(records) -> dict:
    return {
        "steps": len(records),
        "gen_loss": float(np.mean([r.generator_loss for r in records])),
        "d_loss_mean": float(np.mean([r.d_loss_mean for r in records])),
        "d_loss_min": float(min(r.d_loss_min for r in records)),
        "d_loss_max": float(max(r.d_loss_max for r in records)),
    }


def train_frame_gan(
    data_path: str | Path,
    cfg: TrainRunConfig,
    out_dir: str | Path,
    progress=None,
) -> Path:
    """Run the full stage-1 schedule; returns the checkpoint directory.

    The training set is the precomputed random frame index of the dataset,
    visited in a fresh shuffled order each epoch.  On divergence the run
    aborts with TrainingDivergedError; checkpoints of completed epochs
    stay on disk.
    """
    if cfg.stage != STAGE_FRAMES:
        raise ValueError(f"expected a frames-stage config, got {cfg.stage!r}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    dataset = BallDataset(data_path)
    if dataset.frame_shape != cfg.frame_hw:
        raise ValueError(
            f"dataset frames are {dataset.frame_shape}, config expects {cfg.frame_hw}"
        )
    index = read_frames_index(data_path)

    gspec = FrameGeneratorSpec(
        latent_dim=cfg.latent_dim,
        base_channels=cfg.g_base_channels,
        out_hw=cfg.frame_hw,
    )
    generator = build_frame_generator(gspec, cfg.seed)
    bank = make_projection_bank(
        cfg.k_discriminators,
        in_shape=cfg.frame_hw,
        seed=cfg.bank_seed(),
        kernel_size=cfg.proj_kernel,
        stride=cfg.proj_stride,
        padding=cfg.proj_padding,
    )
    dspec = FrameDiscriminatorSpec(in_hw=bank.out_hw(), base_channels=cfg.d_base_channels)
    discriminators = build_frame_discriminators(dspec, cfg.k_discriminators, cfg.seed)

    g_opt = torch.optim.RMSprop(generator.parameters(), lr=cfg.learning_rate)
    d_opts = [
        torch.optim.RMSprop(d.parameters(), lr=cfg.learning_rate)
        for d in discriminators
    ]

    torch.manual_seed(cfg.seed * 31 + 1)  # training-time noise stream
    batch_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0xBA7C]))
    log = LossLog(out_dir / LOSSES_NAME)

    step = 0
    for epoch in range(1, cfg.epochs + 1):
        records = []
        for batch_idx in shuffled_batches(len(index), cfg.batch_size, batch_rng):
            real = torch.from_numpy(dataset.frames(index[batch_idx])).unsqueeze(1)
            try:
                record = multi_disc_train_step(
                    generator, discriminators, bank, real,
                    g_opt, d_opts, gen_loss_mode=cfg.gen_loss_mode,
                    step=step, stage=STAGE_FRAMES,
                )
            except TrainingDivergedError as e:
                raise TrainingDivergedError(
                    f"{e}; checkpoints through epoch {epoch - 1} retained in {out_dir}"
                ) from e
            log.append(record)
            records.append(record)
            step += 1

        payload = {
            "epoch": epoch,
            "generator": generator.state_dict(),
            "discriminators": [d.state_dict() for d in discriminators],
            "g_optimizer": g_opt.state_dict(),
            "d_optimizers": [o.state_dict() for o in d_opts],
            "generator_spec": asdict(gspec),
            "discriminator_spec": asdict(dspec),
            "bank_kernels": bank.kernels,
            "bank_meta": {
                "stride": bank.stride, "padding": bank.padding,
                "in_hw": bank.in_hw, "seed": bank.seed,
            },
        }
        archive = checkpoints.save_epoch_archive(out_dir, epoch, payload)
        checkpoints.write_manifest(
            out_dir, STAGE_FRAMES, cfg, epoch, archive,
            loss_summary=_epoch_summary(records),
            extra={
                "generator_hash": checkpoints.state_dict_hash(generator),
                "bank_hash": bank.state_hash(),
            },
        )
        if progress is not None:
            s = _epoch_summary(records)
            progress(
                f"frames epoch {epoch}/{cfg.epochs}: "
                f"gen {s['gen_loss']:.4f} disc {s['d_loss_mean']:.4f}"
            )
    return out_dir


def load_frame_generator(
    ckpt_dir: str | Path, verify: bool = True
) -> tuple[FrameGenerator, dict]:
    """Rebuild the trained frame generator from a checkpoint directory."""
    manifest, payload = checkpoints.load_archive(ckpt_dir, verify=verify)
    if manifest["stage"] != STAGE_FRAMES:
        raise checkpoints.ManifestError(
            f"{ckpt_dir} holds a {manifest['stage']!r} checkpoint, expected frames"
        )
    spec = FrameGeneratorSpec(**payload["generator_spec"])
    model = FrameGenerator(spec)
    model.load_state_dict(payload["generator"])
    model.eval()
    return model, manifest


def sample_frames(ckpt_dir: str | Path, n: int, seed: int) -> torch.Tensor:
    """Draw n frames from the checkpointed generator, (n, 1, H, W) in [0, 1].

    Bit-identical for a fixed (checkpoint, n, seed).
    """
    model, _ = load_frame_generator(ckpt_dir)
    gen = torch.Generator().manual_seed(seed)
    z = torch.randn(n, model.spec.latent_dim, generator=gen)
    with torch.no_grad():
        return model(z)
