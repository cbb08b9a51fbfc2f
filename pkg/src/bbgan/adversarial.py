"""Non-saturating GAN losses, fixed random projections, and the shared
multi-discriminator training step.

Every discriminator k owns one frozen convolution kernel of unit L2 norm;
it never sees a raw input, only the k-th projection.  Within a training
iteration each discriminator is updated independently on its own
projection, after which the generator takes a single step against the
combined loss over all K discriminators.
"""

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F

# Probabilities are clamped away from {0, 1} before logs.
PROB_EPS = 1e-7

GEN_LOSS_MODES = ("mean", "sum")


class TrainingDivergedError(RuntimeError):
    """A loss became non-finite during training."""


class ProjectionShapeError(ValueError):
    """Input tensor does not match the projection bank geometry."""


def _as_prob(x) -> torch.Tensor:
    t = torch.as_tensor(x)
    if not t.is_floating_point():
        t = t.double()
    return torch.clamp(t, PROB_EPS, 1.0 - PROB_EPS)


def disc_loss(d_real, d_fake) -> torch.Tensor:
    """-log D(x) - log(1 - D(G(z))), averaged over the batch."""
    pr = _as_prob(d_real)
    pf = _as_prob(d_fake)
    loss = (-torch.log(pr) - torch.log(1.0 - pf)).mean()
    if not torch.isfinite(loss):
        raise TrainingDivergedError("discriminator loss is non-finite")
    return loss


def gen_loss_single(d_fake) -> torch.Tensor:
    """Non-saturating generator loss -log D(G(z)), batch-averaged."""
    loss = (-torch.log(_as_prob(d_fake))).mean()
    if not torch.isfinite(loss):
        raise TrainingDivergedError("generator loss is non-finite")
    return loss


def gen_loss_multi(d_fakes, mode: str = "mean") -> torch.Tensor:
    """Combined generator loss over K discriminator outputs.

    "sum" accumulates -log D_k over all k; "mean" (the default) divides by
    K so the gradient scale does not grow with the discriminator count.
    With K = 1 both modes reduce to `gen_loss_single`.
    """
    if mode not in GEN_LOSS_MODES:
        raise ValueError(f"mode must be one of {GEN_LOSS_MODES}, got {mode!r}")
    losses = [gen_loss_single(d) for d in d_fakes]
    if not losses:
        raise ValueError("need at least one discriminator output")
    total = torch.stack(losses).sum()
    if mode == "mean":
        total = total / len(losses)
    return total


@dataclass(frozen=True)
class ProjectionBank:
    """K frozen unit-norm convolution kernels, one per discriminator.

    kernels has shape (K, out_channels, in_channels, k_h, k_w); each
    kernel's flattened L2 norm is 1.  Kernels are regenerable from the
    stored seed and never touched by optimizers.
    """

    kernels: torch.Tensor
    stride: int
    padding: int
    in_hw: tuple[int, int]
    seed: int

    @property
    def K(self) -> int:
        return self.kernels.shape[0]

    @property
    def kernel_hw(self) -> tuple[int, int]:
        return self.kernels.shape[-2], self.kernels.shape[-1]

    def out_hw(self) -> tuple[int, int]:
        kh, kw = self.kernel_hw
        h = (self.in_hw[0] + 2 * self.padding - kh) // self.stride + 1
        w = (self.in_hw[1] + 2 * self.padding - kw) // self.stride + 1
        return h, w

    def state_hash(self) -> str:
        from .checkpoints import tensor_bytes_hash
        return tensor_bytes_hash(self.kernels)


def make_projection_bank(
    K: int,
    in_shape: tuple[int, int] = (32, 32),
    seed: int = 0,
    kernel_size: int = 8,
    stride: int = 4,
    padding: int = 0,
) -> ProjectionBank:
    """Draw K kernels from a standard normal and rescale each to unit norm."""
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    for size in in_shape:
        if (size + 2 * padding - kernel_size) // stride + 1 < 1:
            raise ValueError(
                f"kernel {kernel_size} with stride {stride}, padding {padding} "
                f"produces no output over input {tuple(in_shape)}"
            )
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal((K, 1, 1, kernel_size, kernel_size))
    norms = np.sqrt((raw ** 2).sum(axis=(1, 2, 3, 4), keepdims=True))
    kernels = torch.from_numpy((raw / norms).astype(np.float32))
    kernels.requires_grad_(False)
    return ProjectionBank(kernels, stride, padding, tuple(in_shape), seed)


def apply_projection(bank: ProjectionBank, k: int, x: torch.Tensor) -> torch.Tensor:
    """Convolve kernel k over a frame batch (B, 1, H, W) or clip batch
    (B, 1, T, H, W); clips are projected frame by frame with the same 2D
    kernel, preserving temporal length."""
    if not 0 <= k < bank.K:
        raise IndexError(f"discriminator index {k} out of range for K={bank.K}")
    if x.dim() not in (4, 5):
        raise ProjectionShapeError(
            f"expected (B, 1, H, W) frames or (B, 1, T, H, W) clips, "
            f"got shape {tuple(x.shape)}"
        )
    if x.shape[1] != 1 or tuple(x.shape[-2:]) != bank.in_hw:
        raise ProjectionShapeError(
            f"input shape {tuple(x.shape)} does not match bank geometry "
            f"(1 channel, spatial {bank.in_hw})"
        )
    weight = bank.kernels[k]
    if x.dim() == 4:
        return F.conv2d(x, weight, stride=bank.stride, padding=bank.padding)
    b, _, t, h, w = x.shape
    flat = x.transpose(1, 2).reshape(b * t, 1, h, w)
    proj = F.conv2d(flat, weight, stride=bank.stride, padding=bank.padding)
    return proj.reshape(b, t, 1, *proj.shape[-2:]).transpose(1, 2)


@dataclass
class LossRecord:
    step: int
    stage: str
    per_discriminator_loss: list[float]
    generator_loss: float

    @property
    def d_loss_min(self) -> float:
        return min(self.per_discriminator_loss)

    @property
    def d_loss_mean(self) -> float:
        return sum(self.per_discriminator_loss) / len(self.per_discriminator_loss)

    @property
    def d_loss_max(self) -> float:
        return max(self.per_discriminator_loss)


class LossLog:
    """Appends one CSV row per training step."""

    COLUMNS = ("step", "stage", "gen_loss", "d_loss_min", "d_loss_mean", "d_loss_max")

    def __init__(self, path: str | Path):
        self.path = Path(path)
        if not self.path.exists():
            with open(self.path, "w", newline="") as f:
                csv.writer(f).writerow(self.COLUMNS)

    def append(self, record: LossRecord) -> None:
        with open(self.path, "a", newline="") as f:
            csv.writer(f).writerow([
                record.step, record.stage, f"{record.generator_loss:.6f}",
                f"{record.d_loss_min:.6f}", f"{record.d_loss_mean:.6f}",
                f"{record.d_loss_max:.6f}",
            ])


def multi_disc_train_step(
    generator,
    discriminators,
    bank: ProjectionBank,
    real_batch: torch.Tensor,
    g_optimizer,
    d_optimizers,
    gen_loss_mode: str = "mean",
    step: int = 0,
    stage: str = "frames",
) -> LossRecord:
    """One full adversarial iteration against K projection discriminators.

    Each discriminator k is updated independently on projection k of the
    real batch and of a shared generated batch (detached).  The generator
    then takes one step against fresh evaluations of all updated
    discriminators.  Projection kernels are never part of any optimizer.

    `generator` must expose sample_batch(n) returning a graph-attached
    batch shaped like `real_batch`.
    """
    if len(discriminators) != bank.K or len(d_optimizers) != bank.K:
        raise ValueError(
            f"got {len(discriminators)} discriminators and "
            f"{len(d_optimizers)} optimizers for bank K={bank.K}"
        )
    if real_batch.shape[0] == 0:
        raise ValueError("real batch is empty")

    fake = generator.sample_batch(real_batch.shape[0])
    fake_detached = fake.detach()

    d_losses = []
    for k, (disc, opt) in enumerate(zip(discriminators, d_optimizers)):
        opt.zero_grad()
        p_real = disc(apply_projection(bank, k, real_batch))
        p_fake = disc(apply_projection(bank, k, fake_detached))
        try:
            loss_k = disc_loss(p_real, p_fake)
        except TrainingDivergedError as e:
            raise TrainingDivergedError(
                f"discriminator {k} diverged at {stage} step {step}"
            ) from e
        loss_k.backward()
        opt.step()
        d_losses.append(float(loss_k.detach()))

    g_optimizer.zero_grad()
    d_fakes = [
        disc(apply_projection(bank, k, fake))
        for k, disc in enumerate(discriminators)
    ]
    try:
        g_loss = gen_loss_multi(d_fakes, mode=gen_loss_mode)
    except TrainingDivergedError as e:
        raise TrainingDivergedError(
            f"generator diverged at {stage} step {step}"
        ) from e
    g_loss.backward()
    g_optimizer.step()

    return LossRecord(step, stage, d_losses, float(g_loss.detach()))
