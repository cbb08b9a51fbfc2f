"""Two-stage adversarial video generation on a bouncing-balls corpus.

Stage 1 trains a convolutional frame generator against many frozen
random-projection discriminators; stage 2 trains a recurrent latent
sequence generator over the frozen frame decoder.  The package also
ships the deterministic simulator, the dataset format, and the full
evaluation suite (consecutive-frame MSE, decoder-swap transfer, isomap
latent analysis).
"""

__version__ = "0.1.0"

from .adversarial import disc_loss, gen_loss_multi, gen_loss_single, make_projection_bank
from .config import PRESETS, ExperimentPreset, TrainRunConfig, get_preset
from .data import BallDataset, DatasetConfig, build_dataset
from .metrics import MseReport, consecutive_mse, mse_report
from .manifold import EmbeddingPoint, isomap_embed, latent_manifold_figure
from .simulation import WorldState, init_world, render, step
from .train_frames import sample_frames, train_frame_gan
from .train_video import generate_video, swap_frame_generator, train_video_gan

__all__ = [
    "BallDataset", "DatasetConfig", "EmbeddingPoint", "ExperimentPreset",
    "MseReport", "PRESETS", "TrainRunConfig", "WorldState", "build_dataset",
    "consecutive_mse", "disc_loss", "gen_loss_multi", "gen_loss_single",
    "generate_video", "get_preset", "init_world", "isomap_embed",
    "latent_manifold_figure", "make_projection_bank", "mse_report", "render",
    "sample_frames", "step", "swap_frame_generator", "train_frame_gan",
    "train_video_gan",
]
