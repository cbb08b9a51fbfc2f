"""Checkpoint archives and portable JSON manifests.

A training run directory holds one torch archive per epoch plus a
``manifest.json`` describing the run: stage, config snapshot, final epoch,
archive paths with SHA-256 hashes, and a loss summary.  Hashes are
recomputed on load so truncation or tampering surfaces as an explicit
error instead of silently wrong weights.
"""

import hashlib
import json
from dataclasses import asdict, dataclass, is_dataclass
from datetime import datetime, timezone
from pathlib import Path

import torch

MANIFEST_VERSION = 1
MANIFEST_NAME = "manifest.json"


class ManifestError(RuntimeError):
    """Missing, corrupt, or incompatible checkpoint data."""


def tensor_bytes_hash(*tensors: torch.Tensor) -> str:
    h = hashlib.sha256()
    for t in tensors:
        a = t.detach().cpu().contiguous().numpy()
        h.update(str(a.dtype).encode())
        h.update(str(a.shape).encode())
        h.update(a.tobytes())
    return h.hexdigest()


def state_dict_hash(module_or_state) -> str:
    """Canonical SHA-256 over parameters and buffers, order-independent."""
    state = (
        module_or_state.state_dict()
        if isinstance(module_or_state, torch.nn.Module)
        else module_or_state
    )
    h = hashlib.sha256()
    for name in sorted(state):
        value = state[name]
        h.update(name.encode())
        if isinstance(value, torch.Tensor):
            a = value.detach().cpu().contiguous().numpy()
            h.update(str(a.dtype).encode())
            h.update(str(a.shape).encode())
            h.update(a.tobytes())
        else:
            h.update(repr(value).encode())
    return h.hexdigest()


def file_sha256(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _jsonable(config) -> dict:
    if is_dataclass(config):
        return asdict(config)
    return dict(config)


def save_epoch_archive(out_dir: str | Path, epoch: int, payload: dict) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"epoch_{epoch:03d}.pt"
    torch.save(payload, path)
    return path


def write_manifest(
    out_dir: str | Path,
    stage: str,
    config,
    epoch: int,
    archive_path: Path,
    loss_summary: dict,
    extra: dict | None = None,
) -> Path:
    out_dir = Path(out_dir)
    manifest = {
        "format_version": MANIFEST_VERSION,
        "stage": stage,
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "config": _jsonable(config),
        "epoch": epoch,
        "archives": {
            "checkpoint": {
                "path": archive_path.name,
                "sha256": file_sha256(archive_path),
            }
        },
        "loss_summary": loss_summary,
    }
    if extra:
        manifest.update(extra)
    path = out_dir / MANIFEST_NAME
    with open(path, "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def load_manifest(ckpt_dir: str | Path) -> dict:
    path = Path(ckpt_dir) / MANIFEST_NAME
    if not path.exists():
        raise ManifestError(f"no {MANIFEST_NAME} in {ckpt_dir}")
    with open(path) as f:
        manifest = json.load(f)
    version = manifest.get("format_version")
    if version != MANIFEST_VERSION:
        raise ManifestError(
            f"{path}: manifest format {version} not supported "
            f"(expected {MANIFEST_VERSION})"
        )
    return manifest


def load_archive(ckpt_dir: str | Path, verify: bool = True) -> tuple[dict, dict]:
    """Load (manifest, archive payload), verifying the recorded hash."""
    ckpt_dir = Path(ckpt_dir)
    manifest = load_manifest(ckpt_dir)
    entry = manifest["archives"]["checkpoint"]
    archive_path = ckpt_dir / entry["path"]
    if not archive_path.exists():
        raise ManifestError(f"archive {archive_path} is missing")
    if verify:
        actual = file_sha256(archive_path)
        if actual != entry["sha256"]:
            raise ManifestError(
                f"archive {archive_path} is corrupt: sha256 {actual} does not "
                f"match manifest {entry['sha256']}"
            )
    try:
        payload = torch.load(archive_path, map_location="cpu", weights_only=False)
    except Exception as e:
        raise ManifestError(f"archive {archive_path} failed to load: {e}") from e
    return manifest, payload
