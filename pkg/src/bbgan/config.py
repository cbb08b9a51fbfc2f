"""Run configuration, experiment presets, and the key-value config format.

Two presets are built in: "paper" reproduces the published experiment
scale (100,000 clips, 48/16 discriminators, 50/15 epochs, RMSprop 3e-4 /
2e-4, seed 10) and "desk" is a reduced configuration sized so the whole
two-stage pipeline plus evaluation finishes on modest hardware; desk
drives CI and the acceptance suite.

Config files are plain text, one ``key = value`` per line, ``#`` comments;
keys mirror preset field names (e.g. ``n_clips = 2000``).
"""

import os
from dataclasses import dataclass, fields, replace
from pathlib import Path

from . import simulation

RUNS_ROOT_ENV = "BBGAN_RUNS_ROOT"

STAGE_FRAMES = "frames"
STAGE_VIDEO = "video"


def runs_root() -> Path:
    return Path(os.environ.get(RUNS_ROOT_ENV, "runs"))


@dataclass(frozen=True)
class TrainRunConfig:
    """Full parameterization of one training stage."""

    stage: str
    k_discriminators: int
    epochs: int
    batch_size: int
    learning_rate: float
    seed: int = 10
    gen_loss_mode: str = "mean"
    optimizer: str = "rmsprop"
    latent_dim: int = 100
    seq_len: int = 30
    frame_hw: tuple[int, int] = (32, 32)
    # Architecture overrides; defaults follow the DCGAN-style reference
    # widths (256 base for the frame decoder).
    g_base_channels: int = 256
    d_base_channels: int = 64
    video_d_channels: tuple[int, int, int] = (32, 64, 128)
    # Fixed projection geometry: 8x8 unit-norm kernels, stride 4.
    proj_kernel: int = 8
    proj_stride: int = 4
    proj_padding: int = 0

    def __post_init__(self):
        if self.stage not in (STAGE_FRAMES, STAGE_VIDEO):
            raise ValueError(f"unknown stage {self.stage!r}")
        if self.k_discriminators < 1:
            raise ValueError("k_discriminators must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.gen_loss_mode not in ("mean", "sum"):
            raise ValueError(f"gen_loss_mode must be mean or sum, got {self.gen_loss_mode!r}")
        if self.optimizer != "rmsprop":
            raise ValueError("only the rmsprop optimizer is supported")

    def bank_seed(self) -> int:
        # Distinct stream from model init; stable across runs.
        return self.seed * 1000003 + (17 if self.stage == STAGE_FRAMES else 29)


def paper_frames_config(**overrides) -> TrainRunConfig:
    base = dict(stage=STAGE_FRAMES, k_discriminators=48, epochs=50,
                batch_size=64, learning_rate=3e-4, seed=10)
    base.update(overrides)
    return TrainRunConfig(**base)


def paper_video_config(**overrides) -> TrainRunConfig:
    base = dict(stage=STAGE_VIDEO, k_discriminators=16, epochs=15,
                batch_size=8, learning_rate=2e-4, seed=10)
    base.update(overrides)
    return TrainRunConfig(**base)


@dataclass(frozen=True)
class ExperimentPreset:
    """End-to-end experiment parameterization (dataset plus both stages)."""

    name: str
    n_clips: int
    n_frames: int = 30
    n_balls: int = 3
    frame_hw: tuple[int, int] = (32, 32)
    seed: int = 10
    index_size: int | None = None
    radius: float = simulation.DEFAULT_RADIUS
    speed: float = simulation.DEFAULT_SPEED
    frames_k: int = 48
    frames_epochs: int = 50
    frames_batch: int = 64
    frames_lr: float = 3e-4
    video_k: int = 16
    video_epochs: int = 15
    video_batch: int = 8
    video_lr: float = 2e-4
    gen_loss_mode: str = "mean"
    g_base_channels: int = 256
    eval_n_videos: int = 30
    isomap_k: int = 10
    isomap_n_prior: int = 60

    def frames_config(self) -> TrainRunConfig:
        return TrainRunConfig(
            stage=STAGE_FRAMES, k_discriminators=self.frames_k,
            epochs=self.frames_epochs, batch_size=self.frames_batch,
            learning_rate=self.frames_lr, seed=self.seed,
            gen_loss_mode=self.gen_loss_mode, frame_hw=self.frame_hw,
            seq_len=self.n_frames, g_base_channels=self.g_base_channels,
        )

    def video_config(self) -> TrainRunConfig:
        return TrainRunConfig(
            stage=STAGE_VIDEO, k_discriminators=self.video_k,
            epochs=self.video_epochs, batch_size=self.video_batch,
            learning_rate=self.video_lr, seed=self.seed,
            gen_loss_mode=self.gen_loss_mode, frame_hw=self.frame_hw,
            seq_len=self.n_frames, g_base_channels=self.g_base_channels,
        )


PRESETS = {
    "paper": ExperimentPreset(name="paper", n_clips=100_000),
    "desk": ExperimentPreset(
        name="desk", n_clips=10_000,
        frames_k=8, frames_epochs=10,
        video_k=4, video_epochs=3,
    ),
}


def get_preset(name: str) -> ExperimentPreset:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; available: {sorted(PRESETS)}") from None


def parse_config_file(path: str | Path) -> dict[str, str]:
    """Parse ``key = value`` lines; '#' starts a comment."""
    values: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key] = value
    return values


def apply_overrides(preset: ExperimentPreset, overrides: dict[str, str]) -> ExperimentPreset:
    """Apply string-valued overrides with per-field type coercion."""
    by_name = {f.name: f for f in fields(ExperimentPreset)}
    coerced = {}
    for key, raw in overrides.items():
        if key not in by_name:
            raise KeyError(f"unknown config key {key!r}; valid keys: {sorted(by_name)}")
        current = getattr(preset, key)
        coerced[key] = _coerce(raw, current, key)
    return replace(preset, **coerced)


def _coerce(raw: str, current, key: str):
    if isinstance(current, bool):
        return raw.lower() in ("1", "true", "yes")
    if isinstance(current, int):
        return int(raw)
    if isinstance(current, float):
        return float(raw)
    if isinstance(current, tuple):
        parts = [p for p in raw.replace(",", " ").split() if p]
        return tuple(type(current[0])(p) for p in parts)
    if current is None:
        return int(raw)  # only optional int fields exist
    return raw
