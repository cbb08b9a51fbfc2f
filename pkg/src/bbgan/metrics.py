"""Consecutive-frame MSE: the smoothness metric and its report table.

The metric for one clip is the mean over adjacent frame pairs of the mean
squared pixel difference, computed in float64 on the dataset's native
[0, 1] range.  Reports aggregate 30 independently sampled videos per
condition; std is the population std over per-video means.

Three conditions are compared: "real" (simulator clips), "proposed" (the
trained video generator driving the frozen frame decoder), and
"random_latent" (one i.i.d. prior latent per frame, each decoded
independently, which destroys temporal continuity and upper-bounds the
metric).
"""

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from . import simulation
from .models import ComposedVideoGenerator, FrameGenerator
from .train_video import generate_video

CONDITIONS = ("real", "proposed", "random_latent")

# Keeps evaluation clip seeds disjoint from dataset clip seeds that use
# the same base seed.
_EVAL_STREAM_TAG = 0x3AE


def consecutive_mse(clip) -> float:
    """Mean squared difference between consecutive frames of one clip.

    Accepts (T, H, W); a singleton channel axis in front or second
    position is squeezed.  Exactly invariant under time reversal (per-pair
    means are combined with an exactly rounded sum).
    """
    x = np.asarray(clip, dtype=np.float64)
    if x.ndim == 4 and x.shape[0] == 1:
        x = x[0]
    elif x.ndim == 4 and x.shape[1] == 1:
        x = x[:, 0]
    if x.ndim != 3:
        raise ValueError(f"expected a (T, H, W) clip, got shape {np.shape(clip)}")
    if x.shape[0] < 2:
        raise ValueError(f"need at least 2 frames, got {x.shape[0]}")
    diffs = np.diff(x, axis=0)
    pair_means = np.mean(np.square(diffs), axis=(1, 2))
    return math.fsum(pair_means) / len(pair_means)


@dataclass(frozen=True)
class MseReport:
    condition: str
    n_videos: int
    mean: float
    std: float
    per_video: tuple[float, ...]

    def __post_init__(self):
        if self.condition not in CONDITIONS:
            raise ValueError(f"condition must be one of {CONDITIONS}, got {self.condition!r}")
        if self.mean < 0 or self.std < 0:
            raise ValueError("mean and std must be nonnegative")


def mse_report(sampler, condition: str, n_videos: int = 30, seed: int = 10) -> MseReport:
    """Sample n_videos clips and aggregate their consecutive-frame MSE.

    `sampler(n, seed)` must return clips shaped (n, T, H, W) with T >= 2,
    deterministically in (n, seed); the report is then bit-reproducible.
    """
    clips = np.asarray(sampler(n_videos, seed), dtype=np.float64)
    per_video = tuple(consecutive_mse(c) for c in clips)
    arr = np.asarray(per_video)
    return MseReport(
        condition=condition,
        n_videos=n_videos,
        mean=float(arr.mean()),
        std=float(arr.std()),  # population convention
        per_video=per_video,
    )


def make_real_sampler(
    n_frames: int = 30,
    n_balls: int = 3,
    hw: tuple[int, int] = (32, 32),
    radius: float = simulation.DEFAULT_RADIUS,
    speed: float = simulation.DEFAULT_SPEED,
    dt: float = simulation.DEFAULT_DT,
):
    """Fresh simulator clips from an evaluation-only seed stream."""

    def sampler(n: int, seed: int) -> np.ndarray:
        base = int(
            np.random.SeedSequence([seed, _EVAL_STREAM_TAG]).generate_state(
                1, np.uint64
            )[0]
        )
        clips = np.empty((n, n_frames, *hw), dtype=np.float64)
        for i in range(n):
            clips[i] = simulation.generate_clip(
                base, i, n_balls=n_balls, n_frames=n_frames,
                radius=radius, speed=speed, dt=dt,
                height=hw[0], width=hw[1],
            )
        return clips

    return sampler


def make_gan_sampler(composed: ComposedVideoGenerator):
    """Clips from a trained (or swapped) video-over-frames sampler."""

    def sampler(n: int, seed: int) -> np.ndarray:
        clips, _ = generate_video(composed, n, seed)
        return clips[:, 0].numpy().astype(np.float64)

    return sampler


def make_random_latent_sampler(frame_gen: FrameGenerator, seq_len: int = 30):
    """Per-frame i.i.d. prior latents, each decoded independently."""

    def sampler(n: int, seed: int) -> np.ndarray:
        gen = torch.Generator().manual_seed(seed)
        d = frame_gen.spec.latent_dim
        z = torch.randn(n * seq_len, d, generator=gen)
        with torch.no_grad():
            frames = frame_gen(z)
        h, w = frames.shape[-2:]
        return frames.view(n, seq_len, h, w).numpy().astype(np.float64)

    return sampler


def write_mse_csv(reports, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["condition", "n_videos", "mean", "std"])
        for r in reports:
            writer.writerow([r.condition, r.n_videos, repr(r.mean), repr(r.std)])
    return path


def read_mse_csv(path: str | Path) -> dict[str, MseReport]:
    """Rows keyed by condition; per_video lists are not stored in the CSV."""
    out = {}
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            out[row["condition"]] = MseReport(
                condition=row["condition"],
                n_videos=int(row["n_videos"]),
                mean=float(row["mean"]),
                std=float(row["std"]),
                per_video=(),
            )
    return out
