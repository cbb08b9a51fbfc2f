"""Generator and discriminator architectures for both training stages.

The frame generator is a DCGAN-style transposed-convolution decoder from a
100-dim latent to one grayscale frame.  The video generator maps one
latent to a whole sequence of frame latents through a dense encoder, a
two-layer bidirectional LSTM, and a per-step linear head.  Discriminators
never see raw inputs; they operate on the fixed random projections, with
2D convolutions for frames and 3D convolutions for clips.
"""

import math
from dataclasses import dataclass

import torch
import torch.nn as nn


def dcgan_weights_init(m: nn.Module) -> None:
    name = m.__class__.__name__
    if "Conv" in name:
        nn.init.normal_(m.weight.data, 0.0, 0.02)
        if m.bias is not None:
            nn.init.zeros_(m.bias.data)
    elif "BatchNorm" in name:
        nn.init.normal_(m.weight.data, 1.0, 0.02)
        nn.init.zeros_(m.bias.data)


@dataclass(frozen=True)
class FrameGeneratorSpec:
    """Decoder from latent_dim to a (1, H, W) frame in [0, 1].

    Channels start at base_channels on a 4x4 grid and halve on each
    upsampling stage; H and W must be equal powers of two, at least 8.
    """

    latent_dim: int = 100
    base_channels: int = 256
    out_hw: tuple[int, int] = (32, 32)

    def n_upsample(self) -> int:
        h, w = self.out_hw
        if h != w or h < 8 or (h & (h - 1)) != 0:
            raise ValueError(f"output size must be a square power of two >= 8, got {self.out_hw}")
        n = int(math.log2(h // 4))
        if self.base_channels // 2 ** (n - 1) < 1:
            raise ValueError(
                f"base_channels={self.base_channels} too small for {h}x{w} output"
            )
        return n


class FrameGenerator(nn.Module):
    """DCGAN-like decoder; outputs lie in [0, 1] via a rescaled tanh."""

    def __init__(self, spec: FrameGeneratorSpec):
        super().__init__()
        self.spec = spec
        n_up = spec.n_upsample()
        ch = spec.base_channels
        layers = [
            nn.ConvTranspose2d(spec.latent_dim, ch, 4, 1, 0, bias=False),
            nn.BatchNorm2d(ch),
            nn.ReLU(inplace=True),
        ]
        for _ in range(n_up - 1):
            layers += [
                nn.ConvTranspose2d(ch, ch // 2, 4, 2, 1, bias=False),
                nn.BatchNorm2d(ch // 2),
                nn.ReLU(inplace=True),
            ]
            ch //= 2
        layers += [
            nn.ConvTranspose2d(ch, 1, 4, 2, 1, bias=False),
            nn.Tanh(),
        ]
        self.net = nn.Sequential(*layers)

    def forward(self, z: torch.Tensor) -> torch.Tensor:
        if z.dim() == 2:
            z = z.view(*z.shape, 1, 1)
        return (self.net(z) + 1.0) * 0.5

    def sample_batch(self, n: int) -> torch.Tensor:
        z = torch.randn(n, self.spec.latent_dim, device=next(self.parameters()).device)
        return self(z)


def build_frame_generator(spec: FrameGeneratorSpec, seed: int) -> FrameGenerator:
    """Construct with DCGAN initialization, deterministic in seed."""
    torch.manual_seed(seed)
    model = FrameGenerator(spec)
    model.apply(dcgan_weights_init)
    return model


@dataclass(frozen=True)
class FrameDiscriminatorSpec:
    """Convolution stack over one projected frame, sigmoid scalar out."""

    in_hw: tuple[int, int] = (7, 7)
    base_channels: int = 64


class FrameDiscriminator(nn.Module):
    def __init__(self, spec: FrameDiscriminatorSpec):
        super().__init__()
        self.spec = spec
        c = spec.base_channels
        h, w = spec.in_hw
        h1, w1 = (h + 1) // 2, (w + 1) // 2
        h2, w2 = (h1 + 1) // 2, (w1 + 1) // 2
        self.net = nn.Sequential(
            nn.Conv2d(1, c, 3, 2, 1),
            nn.LeakyReLU(0.2, inplace=True),
            nn.Conv2d(c, 2 * c, 3, 2, 1),
            nn.LeakyReLU(0.2, inplace=True),
            nn.Flatten(),
            nn.Linear(2 * c * h2 * w2, 1),
            nn.Sigmoid(),
        )

    def forward(self, projected: torch.Tensor) -> torch.Tensor:
        return self.net(projected).squeeze(1)


@dataclass(frozen=True)
class VideoGeneratorSpec:
    """Dense encoder, two-layer bidirectional LSTM, per-step linear head.

    The encoder output must factor exactly into seq_len steps of
    step_features, and the head input equals both LSTM directions of the
    second layer concatenated.
    """

    latent_dim: int = 100
    encoder_widths: tuple[int, ...] = (512, 1024, 2048, 3840)
    seq_len: int = 30
    step_features: int = 128
    lstm_hidden: tuple[int, int] = (128, 256)
    out_dim: int = 100

    def __post_init__(self):
        if self.encoder_widths[-1] != self.seq_len * self.step_features:
            raise ValueError(
                f"encoder output {self.encoder_widths[-1]} != "
                f"{self.seq_len} steps x {self.step_features} features"
            )

    def head_in(self) -> int:
        return 2 * self.lstm_hidden[1]


class VideoGenerator(nn.Module):
    """Maps one latent to a (seq_len, out_dim) sequence of frame latents.

    The encoder output is reshaped step-major: features [128*i, 128*(i+1))
    become recurrent input step i.  The head is shared across steps and
    linear, leaving the emitted latents unbounded like the frame prior.
    """

    def __init__(self, spec: VideoGeneratorSpec):
        super().__init__()
        self.spec = spec
        widths = [spec.latent_dim, *spec.encoder_widths]
        enc = []
        for a, b in zip(widths[:-1], widths[1:]):
            enc += [nn.Linear(a, b), nn.ReLU(inplace=True)]
        enc.pop()  # no activation on the reshape boundary
        self.encoder = nn.Sequential(*enc)
        self.lstm1 = nn.LSTM(
            spec.step_features, spec.lstm_hidden[0],
            batch_first=True, bidirectional=True,
        )
        self.lstm2 = nn.LSTM(
            2 * spec.lstm_hidden[0], spec.lstm_hidden[1],
            batch_first=True, bidirectional=True,
        )
        self.head = nn.Linear(spec.head_in(), spec.out_dim)

    def encode(self, z: torch.Tensor) -> torch.Tensor:
        """(B, latent_dim) -> (B, seq_len, step_features), pre-recurrence."""
        h = self.encoder(z)
        return h.view(z.shape[0], self.spec.seq_len, self.spec.step_features)

    def dynamics(self, steps: torch.Tensor) -> torch.Tensor:
        """Recurrent block and head over encoded steps."""
        h, _ = self.lstm1(steps)
        h, _ = self.lstm2(h)
        return self.head(h)

    def forward(self, z: torch.Tensor) -> torch.Tensor:
        return self.dynamics(self.encode(z))


def build_video_generator(spec: VideoGeneratorSpec, seed: int) -> VideoGenerator:
    torch.manual_seed(seed)
    return VideoGenerator(spec)


@dataclass(frozen=True)
class VideoDiscriminatorSpec:
    """3D-convolution stack over a projected clip, sigmoid scalar out."""

    in_thw: tuple[int, int, int] = (30, 7, 7)
    channels: tuple[int, int, int] = (32, 64, 128)


def _conv3d_out(size: int, kernel: int, stride: int, pad: int) -> int:
    return (size + 2 * pad - kernel) // stride + 1


class VideoDiscriminator(nn.Module):
    """Four 3D-conv stages mixing time (temporal kernel 3 throughout)."""

    def __init__(self, spec: VideoDiscriminatorSpec):
        super().__init__()
        self.spec = spec
        t, h, w = spec.in_thw
        c1, c2, c3 = spec.channels
        kh1, kw1 = min(4, h), min(4, w)
        layers = [
            nn.Conv3d(1, c1, (3, kh1, kw1), stride=(2, 2, 2), padding=(1, 1, 1)),
            nn.LeakyReLU(0.2, inplace=True),
        ]
        t = _conv3d_out(t, 3, 2, 1)
        h = _conv3d_out(h, kh1, 2, 1)
        w = _conv3d_out(w, kw1, 2, 1)
        kh2, kw2 = min(3, h), min(3, w)
        layers += [
            nn.Conv3d(c1, c2, (3, kh2, kw2), stride=(2, 1, 1), padding=(1, 0, 0)),
            nn.LeakyReLU(0.2, inplace=True),
        ]
        t = _conv3d_out(t, 3, 2, 1)
        h = _conv3d_out(h, kh2, 1, 0)
        w = _conv3d_out(w, kw2, 1, 0)
        kh3, kw3 = min(3, h), min(3, w)
        layers += [
            nn.Conv3d(c2, c3, (3, kh3, kw3), stride=(2, 1, 1), padding=(1, 0, 0)),
            nn.LeakyReLU(0.2, inplace=True),
        ]
        t = _conv3d_out(t, 3, 2, 1)
        h = _conv3d_out(h, kh3, 1, 0)
        w = _conv3d_out(w, kw3, 1, 0)
        if t < 1 or h < 1 or w < 1:
            raise ValueError(f"projected clip {spec.in_thw} too small for the conv stack")
        layers += [
            nn.Conv3d(c3, 1, (t, h, w)),
            nn.Sigmoid(),
        ]
        self.net = nn.Sequential(*layers)

    def forward(self, projected: torch.Tensor) -> torch.Tensor:
        return self.net(projected).reshape(projected.shape[0])


class ComposedVideoGenerator(nn.Module):
    """Video generator driving a frozen frame generator.

    sample_batch draws z_v from the standard normal prior, produces the
    latent sequence, and decodes every step independently through the
    frame generator, yielding clips shaped (B, 1, T, H, W).
    """

    def __init__(self, video_gen: VideoGenerator, frame_gen: FrameGenerator):
        super().__init__()
        if video_gen.spec.out_dim != frame_gen.spec.latent_dim:
            raise ValueError(
                f"video generator emits {video_gen.spec.out_dim}-dim latents but "
                f"frame generator expects {frame_gen.spec.latent_dim}"
            )
        self.video_gen = video_gen
        self.frame_gen = frame_gen

    def clips_from_noise(self, z: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        latents = self.video_gen(z)
        b, t, d = latents.shape
        frames = self.frame_gen(latents.reshape(b * t, d))
        clips = frames.view(b, t, 1, *frames.shape[-2:]).transpose(1, 2)
        return clips, latents

    def sample_batch(self, n: int) -> torch.Tensor:
        z = torch.randn(n, self.video_gen.spec.latent_dim,
                        device=next(self.video_gen.parameters()).device)
        clips, _ = self.clips_from_noise(z)
        return clips
