"""Isomap embedding of latent sequences, plus the latent-space figure.

Pipeline: symmetrized k-nearest-neighbor graph with Euclidean edge
weights, all-pairs shortest-path geodesic distances, then classical MDS
(double-centering of squared distances, top eigenpairs).  Axis signs are
fixed by making each axis's maximum-magnitude coordinate positive, so the
embedding is fully deterministic.

The figure gathers three point populations in latent space: the per-frame
latent sequences of generated videos, i.i.d. draws from the prior, and
straight-line interpolations between random prior pairs, then embeds the
union jointly.
"""

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

from .models import FrameGenerator, VideoGenerator


class DisconnectedGraphError(ValueError):
    """The kNN graph splits into multiple components."""

    def __init__(self, n_components: int, k_neighbors: int):
        self.n_components = n_components
        self.k_neighbors = k_neighbors
        super().__init__(
            f"kNN graph with k={k_neighbors} has {n_components} connected "
            f"components; increase k_neighbors"
        )


class EmbeddingError(ValueError):
    """Classical MDS could not produce the requested dimensions."""


def pairwise_distances(points: np.ndarray) -> np.ndarray:
    x = np.asarray(points, dtype=np.float64)
    sq = np.sum(x * x, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.maximum(d2, 0.0, out=d2)
    np.fill_diagonal(d2, 0.0)
    return np.sqrt(d2)


def knn_graph(points: np.ndarray, k_neighbors: int) -> csr_matrix:
    """Symmetrized kNN graph: an edge if either endpoint selects the other."""
    dist = pairwise_distances(points)
    m = dist.shape[0]
    if not 1 <= k_neighbors < m:
        raise ValueError(f"need 1 <= k_neighbors < n_points, got k={k_neighbors}, n={m}")
    # k smallest distances per row, self excluded
    order = np.argsort(dist, axis=1, kind="stable")
    mask = np.zeros_like(dist, dtype=bool)
    rows = np.arange(m)[:, None]
    neighbors = order[:, 1:k_neighbors + 1]
    mask[rows, neighbors] = True
    mask |= mask.T
    return csr_matrix(np.where(mask, dist, 0.0))


def geodesic_distances(graph: csr_matrix, k_neighbors: int = 0) -> np.ndarray:
    n_comp, _ = connected_components(graph, directed=False)
    if n_comp != 1:
        raise DisconnectedGraphError(n_comp, k_neighbors)
    return shortest_path(graph, method="D", directed=False)


def classical_mds(distances: np.ndarray, out_dim: int = 2) -> np.ndarray:
    """Coordinates whose Euclidean distances best match `distances`.

    Double-centers the squared distance matrix and takes the top out_dim
    eigenpairs; requires that many strictly positive eigenvalues.  Axis
    signs are canonical: the maximum-magnitude coordinate of each axis is
    nonnegative.
    """
    d = np.asarray(distances, dtype=np.float64)
    m = d.shape[0]
    if d.shape != (m, m):
        raise ValueError(f"distance matrix must be square, got {d.shape}")
    d2 = d * d
    row = d2.mean(axis=1, keepdims=True)
    col = d2.mean(axis=0, keepdims=True)
    b = -0.5 * (d2 - row - col + d2.mean())
    eigvals, eigvecs = np.linalg.eigh(b)
    top = np.argsort(eigvals)[::-1][:out_dim]
    vals = eigvals[top]
    # Relative cutoff: eigenvalues at the noise floor of the dominant one
    # do not carry a usable axis.
    tol = 1e-9 * max(float(eigvals.max(initial=0.0)), 0.0)
    n_pos = int(np.sum(vals > tol))
    if n_pos < out_dim:
        raise EmbeddingError(
            f"only {n_pos} positive eigenvalues; "
            f"cannot embed in {out_dim} dimensions"
        )
    coords = eigvecs[:, top] * np.sqrt(vals)
    for axis in range(out_dim):
        extreme = np.argmax(np.abs(coords[:, axis]))
        if coords[extreme, axis] < 0:
            coords[:, axis] = -coords[:, axis]
    return coords


def isomap_embed(points: np.ndarray, k_neighbors: int, out_dim: int = 2) -> np.ndarray:
    """(M, d) points -> (M, out_dim) geodesic MDS embedding."""
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise ValueError(f"expected (M, d) points, got shape {points.shape}")
    graph = knn_graph(points, k_neighbors)
    geo = geodesic_distances(graph, k_neighbors)
    return classical_mds(geo, out_dim=out_dim)


@dataclass(frozen=True)
class EmbeddingPoint:
    """One embedded latent with its provenance.

    source is "video" (sequence_id = video index), "prior" (sequence_id =
    draw index, step 0), or "interpolation" (sequence_id = pair index).
    """

    source: str
    sequence_id: int
    step: int
    x: float
    y: float

    def __post_init__(self):
        if self.source not in ("video", "prior", "interpolation"):
            raise ValueError(f"unknown source {self.source!r}")
        if not (np.isfinite(self.x) and np.isfinite(self.y)):
            raise ValueError("embedding coordinates must be finite")


def collect_latent_points(
    video_gen: VideoGenerator,
    n_videos: int = 6,
    n_prior: int = 60,
    n_interp_pairs: int = 2,
    seed: int = 10,
) -> tuple[np.ndarray, list[tuple[str, int, int]]]:
    """Latent point populations for the manifold figure, in plot order.

    Returns (points (M, latent_dim), labels [(source, sequence_id, step)]):
    the latent sequences of n_videos generated videos, n_prior prior
    draws, and n_interp_pairs straight 30-step segments between fresh
    prior pairs (point j at t = j/(T-1), endpoints included).
    """
    spec = video_gen.spec
    gen = torch.Generator().manual_seed(seed)
    labels: list[tuple[str, int, int]] = []
    chunks = []

    z = torch.randn(n_videos, spec.latent_dim, generator=gen)
    with torch.no_grad():
        latents = video_gen(z)
    chunks.append(latents.reshape(-1, spec.out_dim).numpy())
    labels += [("video", v, t) for v in range(n_videos) for t in range(spec.seq_len)]

    prior = torch.randn(n_prior, spec.out_dim, generator=gen)
    chunks.append(prior.numpy())
    labels += [("prior", i, 0) for i in range(n_prior)]

    t = np.linspace(0.0, 1.0, spec.seq_len)[:, None]
    for pair in range(n_interp_pairs):
        a = torch.randn(spec.out_dim, generator=gen).numpy()
        b = torch.randn(spec.out_dim, generator=gen).numpy()
        chunks.append((1.0 - t) * a + t * b)
        labels += [("interpolation", pair, j) for j in range(spec.seq_len)]

    return np.concatenate(chunks, axis=0).astype(np.float64), labels


def latent_manifold_figure(
    video_gen: VideoGenerator,
    frame_gen: FrameGenerator,
    n_videos: int = 6,
    n_prior: int = 60,
    n_interp_pairs: int = 2,
    seed: int = 10,
    k_neighbors: int = 10,
    out_png: str | Path | None = None,
    points_csv: str | Path | None = None,
) -> list[EmbeddingPoint]:
    """Embed video/prior/interpolation latents together; optionally plot.

    frame_gen fixes the latent space the populations live in; its width
    must match what video_gen emits.
    """
    if frame_gen.spec.latent_dim != video_gen.spec.out_dim:
        raise ValueError(
            f"video generator emits {video_gen.spec.out_dim}-dim latents but the "
            f"frame generator's latent space is {frame_gen.spec.latent_dim}-dim"
        )
    points, labels = collect_latent_points(
        video_gen, n_videos=n_videos, n_prior=n_prior,
        n_interp_pairs=n_interp_pairs, seed=seed,
    )
    coords = isomap_embed(points, k_neighbors=k_neighbors)
    embedded = [
        EmbeddingPoint(source, sequence_id, step, float(x), float(y))
        for (source, sequence_id, step), (x, y) in zip(labels, coords)
    ]
    if points_csv is not None:
        write_points_csv(embedded, points_csv)
    if out_png is not None:
        _scatter_figure(embedded, out_png)
    return embedded


def write_points_csv(points: list[EmbeddingPoint], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["source", "sequence_id", "step", "x", "y"])
        for p in points:
            writer.writerow([p.source, p.sequence_id, p.step, repr(p.x), repr(p.y)])
    return path


def read_points_csv(path: str | Path) -> list[EmbeddingPoint]:
    with open(path, newline="") as f:
        return [
            EmbeddingPoint(
                row["source"], int(row["sequence_id"]), int(row["step"]),
                float(row["x"]), float(row["y"]),
            )
            for row in csv.DictReader(f)
        ]


def _scatter_figure(points: list[EmbeddingPoint], out_png: str | Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 6))
    video_ids = sorted({p.sequence_id for p in points if p.source == "video"})
    cmap = plt.get_cmap("tab10")
    for v in video_ids:
        xs = [p.x for p in points if p.source == "video" and p.sequence_id == v]
        ys = [p.y for p in points if p.source == "video" and p.sequence_id == v]
        ax.scatter(xs, ys, s=28, marker="o", facecolors="none",
                   edgecolors=cmap(v % 10), label=f"video {v}")
    xs = [p.x for p in points if p.source == "prior"]
    ys = [p.y for p in points if p.source == "prior"]
    ax.scatter(xs, ys, s=30, marker="x", color="green", label="prior")
    xs = [p.x for p in points if p.source == "interpolation"]
    ys = [p.y for p in points if p.source == "interpolation"]
    ax.scatter(xs, ys, s=26, marker="^", color="black", label="interpolation")
    ax.set_xlabel("isomap dim 1")
    ax.set_ylabel("isomap dim 2")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    out_png = Path(out_png)
    out_png.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_png, dpi=150)
    plt.close(fig)
