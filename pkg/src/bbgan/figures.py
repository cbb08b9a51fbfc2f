"""Film-strip PNG export: frames of a clip laid out left to right."""

from pathlib import Path

import numpy as np
from PIL import Image

SEPARATOR_VALUE = 128


def quantize(frame: np.ndarray) -> np.ndarray:
    """[0, 1] floats to 8-bit gray: round(255 * pixel), clipped."""
    return np.clip(np.rint(np.asarray(frame, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)


def strip_image(clip, separator_px: int = 1, separator_value: int = SEPARATOR_VALUE) -> np.ndarray:
    """One clip as a horizontal uint8 strip, (H, T*W + (T-1)*separator_px).

    Accepts (T, H, W); a singleton channel axis in front or second
    position is squeezed.
    """
    x = np.asarray(clip, dtype=np.float64)
    if x.ndim == 4 and x.shape[0] == 1:
        x = x[0]
    elif x.ndim == 4 and x.shape[1] == 1:
        x = x[:, 0]
    if x.ndim != 3 or x.shape[0] == 0:
        raise ValueError(f"expected a nonempty (T, H, W) clip, got shape {np.shape(clip)}")
    frames = [quantize(f) for f in x]
    if separator_px > 0:
        sep = np.full((x.shape[1], separator_px), separator_value, dtype=np.uint8)
        columns = []
        for f in frames:
            columns += [f, sep]
        columns.pop()
        return np.concatenate(columns, axis=1)
    return np.concatenate(frames, axis=1)


def save_png(image: np.ndarray, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(image, mode="L").save(path, format="PNG")
    return path


def export_strips(
    clips,
    out_dir: str | Path,
    prefix: str = "strip",
    separator_px: int = 1,
    separator_value: int = SEPARATOR_VALUE,
) -> list[Path]:
    """Write one strip PNG per clip into out_dir as {prefix}_NNN.png.

    Re-exporting equal clips produces byte-identical files.
    """
    clips = np.asarray(clips, dtype=np.float64)
    if clips.ndim == 5 and clips.shape[1] == 1:  # (N, 1, T, H, W)
        clips = clips[:, 0]
    if clips.ndim == 3:
        clips = clips[None]
    if clips.ndim != 4 or clips.shape[0] == 0:
        raise ValueError(f"expected nonempty (N, T, H, W) clips, got shape {clips.shape}")
    out_dir = Path(out_dir)
    paths = []
    for i, clip in enumerate(clips):
        image = strip_image(clip, separator_px=separator_px, separator_value=separator_value)
        paths.append(save_png(image, out_dir / f"{prefix}_{i:03d}.png"))
    return paths


def frame_sheet(frames, n_columns: int = 10, separator_px: int = 1,
                separator_value: int = SEPARATOR_VALUE) -> np.ndarray:
    """Independent frames tiled row-major onto one uint8 sheet."""
    x = np.asarray(frames, dtype=np.float64)
    if x.ndim == 4 and x.shape[1] == 1:
        x = x[:, 0]
    if x.ndim != 3 or x.shape[0] == 0:
        raise ValueError(f"expected nonempty (N, H, W) frames, got shape {np.shape(frames)}")
    n, h, w = x.shape
    n_columns = min(n_columns, n)
    n_rows = (n + n_columns - 1) // n_columns
    pad = n_rows * n_columns - n
    if pad:
        x = np.concatenate([x, np.zeros((pad, h, w))], axis=0)
    rows = [
        strip_image(x[r * n_columns:(r + 1) * n_columns],
                    separator_px=separator_px, separator_value=separator_value)
        for r in range(n_rows)
    ]
    if separator_px > 0 and n_rows > 1:
        sep = np.full((separator_px, rows[0].shape[1]), separator_value, dtype=np.uint8)
        stacked = []
        for r in rows:
            stacked += [r, sep]
        stacked.pop()
        return np.concatenate(stacked, axis=0)
    return np.concatenate(rows, axis=0)
