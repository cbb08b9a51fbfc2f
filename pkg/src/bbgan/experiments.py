"""End-to-end experiment runners with resumable per-step state.

Each experiment owns one run directory.  Progress is tracked in
run_state.json: a failed step leaves a marker there and the next
invocation resumes after the last completed step.  Completed run
directories are never mutated again.  A lock file serializes training
stages per directory; evaluation steps are read-only over checkpoints.

Experiment 1 trains both stages on the same corpus and evaluates the
MSE table and the latent manifold figure.  Experiment 2 retrains only
the frame decoder on a 1-ball corpus, mounts the experiment-1 video
generator on top of it without any fine-tuning, and evaluates the
transfer.
"""

import json
import os
from contextlib import contextmanager
from pathlib import Path

from . import figures, metrics
from .config import ExperimentPreset
from .data import BallDataset, DatasetConfig, build_dataset
from .manifold import DisconnectedGraphError, latent_manifold_figure
from .train_frames import sample_frames, train_frame_gan
from .train_video import load_video_bundle, swap_frame_generator, train_video_gan

STATE_NAME = "run_state.json"
LOCK_NAME = ".train.lock"
DATASET_NAME = "dataset.bin"
FRAMES_CKPT = "frames_ckpt"
VIDEO_CKPT = "video_ckpt"
STRIPS_DIR = "strips"
MSE_NAME = "mse.csv"
ISOMAP_PNG = "isomap.png"
ISOMAP_CSV = "isomap_points.csv"

EVAL_SEED = 401


class StepFailedError(RuntimeError):
    """A pipeline step failed; state marker written for resume."""


class RunState:
    """Append-only step ledger backing run_state.json."""

    def __init__(self, root: Path):
        self.path = Path(root) / STATE_NAME
        if self.path.exists():
            self._state = json.loads(self.path.read_text())
        else:
            self._state = {"completed": [], "failed": None, "complete": False}

    @property
    def complete(self) -> bool:
        return bool(self._state["complete"])

    def done(self, step: str) -> bool:
        return step in self._state["completed"]

    def mark_done(self, step: str) -> None:
        if step not in self._state["completed"]:
            self._state["completed"].append(step)
        self._state["failed"] = None
        self._write()

    def mark_failed(self, step: str, error: str) -> None:
        self._state["failed"] = {"step": step, "error": error}
        self._write()

    def mark_complete(self) -> None:
        self._state["complete"] = True
        self._write()

    def _write(self) -> None:
        tmp = self.path.with_suffix(".tmp")
        tmp.write_text(json.dumps(self._state, indent=2) + "\n")
        os.replace(tmp, self.path)


@contextmanager
def stage_lock(root: Path):
    """One training stage at a time per run directory."""
    lock = Path(root) / LOCK_NAME
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise RuntimeError(
            f"{lock} exists: another training stage is active in this run "
            f"directory (remove the file if that run died)"
        ) from None
    try:
        os.write(fd, f"{os.getpid()}\n".encode())
        os.close(fd)
        yield
    finally:
        lock.unlink(missing_ok=True)


def _run_step(state: RunState, name: str, fn, progress) -> None:
    if state.done(name):
        if progress is not None:
            progress(f"[{name}] already complete, skipping")
        return
    if progress is not None:
        progress(f"[{name}] running")
    try:
        fn()
    except BaseException as e:
        state.mark_failed(name, f"{type(e).__name__}: {e}")
        raise
    state.mark_done(name)


def _dataset_config(preset: ExperimentPreset, n_balls: int) -> DatasetConfig:
    return DatasetConfig(
        n_clips=preset.n_clips,
        n_frames=preset.n_frames,
        n_balls=n_balls,
        height=preset.frame_hw[0],
        width=preset.frame_hw[1],
        base_seed=preset.seed,
        radius=preset.radius,
        speed=preset.speed,
        index_size=preset.index_size,
    )


def embed_with_k_escalation(video_gen, frame_gen, preset, out_png, points_csv):
    """Isomap with doubled k on disconnection (sparse latent clouds)."""
    k = preset.isomap_k
    for attempt in range(3):
        try:
            return latent_manifold_figure(
                video_gen, frame_gen,
                n_prior=preset.isomap_n_prior, seed=preset.seed,
                k_neighbors=k, out_png=out_png, points_csv=points_csv,
            )
        except DisconnectedGraphError:
            if attempt == 2:
                raise
            k *= 2


def run_experiment_one(
    preset: ExperimentPreset, root: str | Path, progress=None
) -> Path:
    """Dataset -> stage 1 -> stage 2 -> strips, MSE table, isomap figure."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    state = RunState(root)
    if state.complete:
        if progress is not None:
            progress(f"run {root} already complete; leaving it untouched")
        return root
    data_path = root / DATASET_NAME

    def do_dataset():
        build_dataset(_dataset_config(preset, preset.n_balls), data_path)

    def do_frames():
        with stage_lock(root):
            train_frame_gan(data_path, preset.frames_config(), root / FRAMES_CKPT,
                            progress=progress)

    def do_video():
        with stage_lock(root):
            train_video_gan(data_path, root / FRAMES_CKPT, preset.video_config(),
                            root / VIDEO_CKPT, progress=progress)

    def do_strips():
        strips = root / STRIPS_DIR
        dataset = BallDataset(data_path)
        figures.export_strips(dataset.clip(0), strips, prefix="real")
        frames = sample_frames(root / FRAMES_CKPT, 30, seed=EVAL_SEED)
        figures.save_png(figures.frame_sheet(frames.numpy()), strips / "frame_samples.png")
        composed, _ = load_video_bundle(root / VIDEO_CKPT)
        clips = metrics.make_gan_sampler(composed)(3, EVAL_SEED)
        figures.export_strips(clips, strips, prefix="video")

    def do_mse():
        composed, _ = load_video_bundle(root / VIDEO_CKPT)
        reports = evaluate_mse_conditions(
            composed, preset, n_balls=preset.n_balls,
            n_videos=preset.eval_n_videos, seed=preset.seed,
        )
        metrics.write_mse_csv(reports, root / MSE_NAME)

    def do_isomap():
        composed, _ = load_video_bundle(root / VIDEO_CKPT)
        embed_with_k_escalation(
            composed.video_gen, composed.frame_gen, preset,
            out_png=root / ISOMAP_PNG, points_csv=root / ISOMAP_CSV,
        )

    _run_step(state, "dataset", do_dataset, progress)
    _run_step(state, "frames", do_frames, progress)
    _run_step(state, "video", do_video, progress)
    _run_step(state, "strips", do_strips, progress)
    _run_step(state, "mse", do_mse, progress)
    _run_step(state, "isomap", do_isomap, progress)
    state.mark_complete()
    if progress is not None:
        progress(f"experiment 1 complete: {root}")
    return root


def evaluate_mse_conditions(composed, preset, n_balls, n_videos, seed):
    """The three-condition report set for one composed sampler."""
    real = metrics.make_real_sampler(
        n_frames=preset.n_frames, n_balls=n_balls, hw=preset.frame_hw,
        radius=preset.radius, speed=preset.speed,
    )
    gan = metrics.make_gan_sampler(composed)
    rand = metrics.make_random_latent_sampler(composed.frame_gen, preset.n_frames)
    return [
        metrics.mse_report(real, "real", n_videos=n_videos, seed=seed),
        metrics.mse_report(gan, "proposed", n_videos=n_videos, seed=seed),
        metrics.mse_report(rand, "random_latent", n_videos=n_videos, seed=seed),
    ]


def run_experiment_two(
    preset: ExperimentPreset,
    root: str | Path,
    exp1_root: str | Path,
    progress=None,
) -> Path:
    """1-ball decoder under the 3-ball video generator, no fine-tuning.

    exp1_root must contain (or will first be given) a completed
    experiment-1 run; its stage-2 checkpoint supplies the video generator.
    """
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    exp1_root = Path(exp1_root)
    if not (exp1_root / VIDEO_CKPT / "manifest.json").exists():
        if progress is not None:
            progress(f"no trained video generator under {exp1_root}; running experiment 1 first")
        run_experiment_one(preset, exp1_root, progress=progress)

    state = RunState(root)
    if state.complete:
        if progress is not None:
            progress(f"run {root} already complete; leaving it untouched")
        return root
    data_path = root / DATASET_NAME

    def do_dataset():
        build_dataset(_dataset_config(preset, 1), data_path)

    def do_frames():
        with stage_lock(root):
            train_frame_gan(data_path, preset.frames_config(), root / FRAMES_CKPT,
                            progress=progress)

    def swapped():
        composed, _ = swap_frame_generator(exp1_root / VIDEO_CKPT, root / FRAMES_CKPT)
        return composed

    def do_strips():
        clips = metrics.make_gan_sampler(swapped())(3, EVAL_SEED)
        figures.export_strips(clips, root / STRIPS_DIR, prefix="transfer")

    def do_mse():
        reports = evaluate_mse_conditions(
            swapped(), preset, n_balls=1,
            n_videos=preset.eval_n_videos, seed=preset.seed,
        )
        metrics.write_mse_csv(reports, root / MSE_NAME)

    _run_step(state, "dataset", do_dataset, progress)
    _run_step(state, "frames", do_frames, progress)
    _run_step(state, "strips", do_strips, progress)
    _run_step(state, "mse", do_mse, progress)
    state.mark_complete()
    if progress is not None:
        progress(f"experiment 2 complete: {root}")
    return root
