"""Binary clip dataset: file format, builder, and readers.

Layout (little-endian): an on-disk header
``magic "BBALLSV1" | u32 version | u32 n_clips | u32 n_frames | u32 h |
u32 w | u64 base_seed`` followed by the pixel payload as uint8 (0 or 255)
in clip-major, frame-major, row-major order.  A sibling frames-index file
(``<dataset>.idx``) holds uniformly sampled (u32 clip, u32 frame) pairs
that define the frame-level training set.
"""

import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import simulation
from .simulation import generate_clip

MAGIC = b"BBALLSV1"
DATASET_VERSION = 1
_HEADER_STRUCT = struct.Struct("<8sIIIIIQ")
HEADER_SIZE = _HEADER_STRUCT.size

# Tag mixed into the base seed for the frames-index stream so it never
# collides with a clip stream.
_INDEX_SEED_TAG = 0x1D8

INDEX_SUFFIX = ".idx"


class DatasetFormatError(RuntimeError):
    """Bad magic, version, or payload size."""


@dataclass(frozen=True)
class DatasetHeader:
    magic: bytes
    version: int
    n_clips: int
    n_frames: int
    height: int
    width: int
    base_seed: int

    def payload_bytes(self) -> int:
        return self.n_clips * self.n_frames * self.height * self.width

    def pack(self) -> bytes:
        return _HEADER_STRUCT.pack(
            self.magic, self.version, self.n_clips, self.n_frames,
            self.height, self.width, self.base_seed,
        )

    @classmethod
    def unpack(cls, raw: bytes) -> "DatasetHeader":
        magic, version, n_clips, n_frames, h, w, base_seed = _HEADER_STRUCT.unpack(raw)
        return cls(magic, version, n_clips, n_frames, h, w, base_seed)


@dataclass(frozen=True)
class DatasetConfig:
    """Everything needed to regenerate a dataset bit-exactly."""

    n_clips: int
    n_frames: int = 30
    n_balls: int = 3
    height: int = simulation.DEFAULT_HEIGHT
    width: int = simulation.DEFAULT_WIDTH
    base_seed: int = 10
    radius: float = simulation.DEFAULT_RADIUS
    speed: float = simulation.DEFAULT_SPEED
    dt: float = simulation.DEFAULT_DT
    # Frame-training set size; 3 frames per clip keeps stage-1 epochs short
    # while covering the corpus.  None means 3 * n_clips, capped at the
    # total frame count.
    index_size: int | None = None

    def resolved_index_size(self) -> int:
        total = self.n_clips * self.n_frames
        if self.index_size is None:
            return min(3 * self.n_clips, total)
        if not 0 < self.index_size <= total:
            raise ValueError(
                f"index_size must lie in [1, {total}], got {self.index_size}"
            )
        return self.index_size


def index_path_for(dataset_path: str | Path) -> Path:
    p = Path(dataset_path)
    return p.with_name(p.name + INDEX_SUFFIX)


def _clip_bytes(args) -> bytes:
    cfg, clip_index = args
    clip = generate_clip(
        cfg.base_seed, clip_index, cfg.n_balls, cfg.n_frames,
        radius=cfg.radius, speed=cfg.speed, dt=cfg.dt,
        height=cfg.height, width=cfg.width,
    )
    return ((clip > 0.5).astype(np.uint8) * 255).tobytes()


def build_dataset(
    config: DatasetConfig,
    out_path: str | Path,
    workers: int = 1,
) -> tuple[Path, Path]:
    """Write the dataset file and its frames index; returns both paths.

    Clip payloads depend only on (base_seed, clip_index), so any worker
    count produces identical bytes.
    """
    out_path = Path(out_path)
    header = DatasetHeader(
        MAGIC, DATASET_VERSION, config.n_clips, config.n_frames,
        config.height, config.width, config.base_seed,
    )
    jobs = [(config, i) for i in range(config.n_clips)]
    try:
        out_path.parent.mkdir(parents=True, exist_ok=True)
        with open(out_path, "wb") as f:
            f.write(header.pack())
            if workers <= 1:
                for job in jobs:
                    f.write(_clip_bytes(job))
            else:
                with ProcessPoolExecutor(max_workers=workers) as pool:
                    for raw in pool.map(_clip_bytes, jobs, chunksize=64):
                        f.write(raw)
    except OSError as e:
        raise OSError(f"failed writing dataset to {out_path}: {e}") from e

    idx_path = index_path_for(out_path)
    pairs = sample_frames_index(config)
    try:
        with open(idx_path, "wb") as f:
            f.write(pairs.astype("<u4").tobytes())
    except OSError as e:
        raise OSError(f"failed writing frames index to {idx_path}: {e}") from e
    return out_path, idx_path


def sample_frames_index(config: DatasetConfig) -> np.ndarray:
    """Uniformly sample (clip, frame) pairs without replacement, fixed seed."""
    total = config.n_clips * config.n_frames
    size = config.resolved_index_size()
    rng = np.random.default_rng(
        np.random.SeedSequence([config.base_seed, _INDEX_SEED_TAG])
    )
    flat = rng.choice(total, size=size, replace=False)
    pairs = np.stack([flat // config.n_frames, flat % config.n_frames], axis=1)
    return pairs.astype(np.uint32)


def read_frames_index(path: str | Path) -> np.ndarray:
    """Read the (clip, frame) pairs for a dataset or index path."""
    path = Path(path)
    if path.suffix != INDEX_SUFFIX:
        path = index_path_for(path)
    raw = np.fromfile(path, dtype="<u4")
    if raw.size % 2 != 0:
        raise DatasetFormatError(f"frames index {path} has odd entry count")
    return raw.reshape(-1, 2)


def read_header(path: str | Path) -> DatasetHeader:
    path = Path(path)
    with open(path, "rb") as f:
        raw = f.read(HEADER_SIZE)
    if len(raw) < HEADER_SIZE:
        raise DatasetFormatError(f"{path}: file shorter than header")
    header = DatasetHeader.unpack(raw)
    if header.magic != MAGIC:
        raise DatasetFormatError(f"{path}: bad magic {header.magic!r}")
    if header.version != DATASET_VERSION:
        raise DatasetFormatError(
            f"{path}: unsupported version {header.version}, "
            f"expected {DATASET_VERSION}"
        )
    actual = path.stat().st_size - HEADER_SIZE
    if actual != header.payload_bytes():
        raise DatasetFormatError(
            f"{path}: payload is {actual} bytes, header declares "
            f"{header.payload_bytes()}"
        )
    return header


class BallDataset:
    """Memory-mapped reader for a written dataset."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.header = read_header(self.path)
        h = self.header
        self._pixels = np.memmap(
            self.path, dtype=np.uint8, mode="r", offset=HEADER_SIZE,
            shape=(h.n_clips, h.n_frames, h.height, h.width),
        )

    def __len__(self) -> int:
        return self.header.n_clips

    @property
    def frame_shape(self) -> tuple[int, int]:
        return self.header.height, self.header.width

    def clip(self, i: int) -> np.ndarray:
        """Clip i as float32 (n_frames, h, w) with values in {0, 1}."""
        return np.asarray(self._pixels[i], dtype=np.float32) / 255.0

    def clips(self, indices) -> np.ndarray:
        return np.asarray(self._pixels[np.asarray(indices)], dtype=np.float32) / 255.0

    def frames(self, pairs: np.ndarray) -> np.ndarray:
        """Frames for (clip, frame) index pairs as float32 (len, h, w)."""
        pairs = np.asarray(pairs)
        out = self._pixels[pairs[:, 0], pairs[:, 1]]
        return np.asarray(out, dtype=np.float32) / 255.0
