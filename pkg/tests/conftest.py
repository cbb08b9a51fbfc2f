"""Shared fixtures: one tiny dataset and tiny trained checkpoints per session.

The tiny configs (a handful of clips, K=2, one epoch) exist to exercise
real training, checkpointing, and evaluation paths in seconds; they make
no claim about sample quality.  Acceptance-scale artifacts are handled
separately in test_acceptance.py.
"""

from dataclasses import replace
from pathlib import Path

import pytest

from bbgan.config import get_preset
from bbgan.data import DatasetConfig, build_dataset
from bbgan.train_frames import train_frame_gan
from bbgan.train_video import train_video_gan


TINY_N_CLIPS = 12


@pytest.fixture(scope="session")
def tiny_preset():
    return replace(
        get_preset("desk"), name="tiny", n_clips=TINY_N_CLIPS,
        frames_k=2, frames_epochs=1, frames_batch=8,
        video_k=2, video_epochs=1, video_batch=2,
        eval_n_videos=3,
    )


@pytest.fixture(scope="session")
def tiny_dataset(tiny_preset, tmp_path_factory) -> Path:
    out = tmp_path_factory.mktemp("data") / "tiny.bin"
    cfg = DatasetConfig(
        n_clips=tiny_preset.n_clips, n_frames=tiny_preset.n_frames,
        n_balls=3, base_seed=tiny_preset.seed,
    )
    build_dataset(cfg, out)
    return out


@pytest.fixture(scope="session")
def tiny_dataset_one_ball(tiny_preset, tmp_path_factory) -> Path:
    out = tmp_path_factory.mktemp("data1") / "tiny1.bin"
    cfg = DatasetConfig(
        n_clips=tiny_preset.n_clips, n_frames=tiny_preset.n_frames,
        n_balls=1, base_seed=tiny_preset.seed,
    )
    build_dataset(cfg, out)
    return out


@pytest.fixture(scope="session")
def tiny_frames_ckpt(tiny_preset, tiny_dataset, tmp_path_factory) -> Path:
    out = tmp_path_factory.mktemp("ckpt") / "frames"
    return train_frame_gan(tiny_dataset, tiny_preset.frames_config(), out)


@pytest.fixture(scope="session")
def tiny_frames_ckpt_one_ball(tiny_preset, tiny_dataset_one_ball, tmp_path_factory) -> Path:
    out = tmp_path_factory.mktemp("ckpt1") / "frames"
    return train_frame_gan(tiny_dataset_one_ball, tiny_preset.frames_config(), out)


@pytest.fixture(scope="session")
def tiny_video_ckpt(tiny_preset, tiny_dataset, tiny_frames_ckpt, tmp_path_factory) -> Path:
    out = tmp_path_factory.mktemp("ckpt") / "video"
    return train_video_gan(tiny_dataset, tiny_frames_ckpt, tiny_preset.video_config(), out)
