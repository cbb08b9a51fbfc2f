"""Architectures: shapes, ranges, validation, determinism, composition."""

import pytest
import torch

from bbgan.models import (
    ComposedVideoGenerator,
    FrameDiscriminator,
    FrameDiscriminatorSpec,
    FrameGenerator,
    FrameGeneratorSpec,
    VideoDiscriminator,
    VideoDiscriminatorSpec,
    VideoGenerator,
    VideoGeneratorSpec,
    build_frame_generator,
    build_video_generator,
)


class TestFrameGenerator:
    def test_output_shape_and_range(self):
        g = build_frame_generator(FrameGeneratorSpec(), seed=0)
        out = g(torch.randn(4, 100))
        assert out.shape == (4, 1, 32, 32)
        assert out.min() >= 0.0 and out.max() <= 1.0

    def test_accepts_flat_or_spatial_latents(self):
        g = build_frame_generator(FrameGeneratorSpec(), seed=0)
        z = torch.randn(3, 100)
        torch.testing.assert_close(g(z), g(z.view(3, 100, 1, 1)))

    def test_nonsquare_output_rejected(self):
        with pytest.raises(ValueError):
            FrameGeneratorSpec(out_hw=(32, 16)).n_upsample()

    def test_non_power_of_two_rejected(self):
        with pytest.raises(ValueError):
            FrameGeneratorSpec(out_hw=(24, 24)).n_upsample()

    def test_build_determinism(self):
        a = build_frame_generator(FrameGeneratorSpec(), seed=3)
        b = build_frame_generator(FrameGeneratorSpec(), seed=3)
        for pa, pb in zip(a.parameters(), b.parameters()):
            assert torch.equal(pa, pb)
        c = build_frame_generator(FrameGeneratorSpec(), seed=4)
        assert any(
            not torch.equal(pa, pc)
            for pa, pc in zip(a.parameters(), c.parameters())
        )

    def test_sample_batch_shape(self):
        g = build_frame_generator(FrameGeneratorSpec(base_channels=32), seed=0)
        assert g.sample_batch(5).shape == (5, 1, 32, 32)


class TestFrameDiscriminator:
    def test_probability_output(self):
        d = FrameDiscriminator(FrameDiscriminatorSpec())
        out = d(torch.randn(6, 1, 7, 7))
        assert out.shape == (6,)
        assert torch.all((out > 0) & (out < 1))


class TestVideoGenerator:
    def test_spec_factorization_enforced(self):
        with pytest.raises(ValueError):
            VideoGeneratorSpec(encoder_widths=(512, 1024, 2048, 3800))

    def test_reference_widths(self):
        spec = VideoGeneratorSpec()
        assert spec.encoder_widths == (512, 1024, 2048, 3840)
        assert spec.seq_len * spec.step_features == 3840
        assert spec.head_in() == 512

    def test_shapes(self):
        g = build_video_generator(VideoGeneratorSpec(), seed=0)
        z = torch.randn(2, 100)
        steps = g.encode(z)
        assert steps.shape == (2, 30, 128)
        out = g(z)
        assert out.shape == (2, 30, 100)

    def test_forward_is_dynamics_of_encode(self):
        g = build_video_generator(VideoGeneratorSpec(), seed=0)
        z = torch.randn(2, 100)
        torch.testing.assert_close(g(z), g.dynamics(g.encode(z)))

    def test_batch_permutation_equivariance(self):
        g = build_video_generator(VideoGeneratorSpec(), seed=0).eval()
        z = torch.randn(4, 100)
        perm = torch.tensor([2, 0, 3, 1])
        with torch.no_grad():
            torch.testing.assert_close(g(z[perm]), g(z)[perm], atol=1e-5, rtol=1e-5)

    def test_head_is_affine_not_squashed(self):
        # Scaling the head weights scales the outputs exactly: no final
        # activation, so emitted latents live on the prior's scale freely.
        g = build_video_generator(VideoGeneratorSpec(), seed=0).eval()
        z = torch.randn(2, 100)
        with torch.no_grad():
            base = g(z)
            g.head.weight.mul_(100.0)
            g.head.bias.mul_(100.0)
            scaled = g(z)
        torch.testing.assert_close(scaled, base * 100.0, atol=1e-3, rtol=1e-4)


class TestVideoDiscriminator:
    def test_probability_output(self):
        d = VideoDiscriminator(VideoDiscriminatorSpec())
        out = d(torch.randn(3, 1, 30, 7, 7))
        assert out.shape == (3,)
        assert torch.all((out > 0) & (out < 1))

    def test_degenerate_input_rejected(self):
        with pytest.raises(ValueError, match="too small"):
            VideoDiscriminator(VideoDiscriminatorSpec(in_thw=(0, 7, 7)))

    def test_tiny_but_valid_input_accepted(self):
        d = VideoDiscriminator(VideoDiscriminatorSpec(in_thw=(2, 1, 1)))
        assert d(torch.randn(2, 1, 2, 1, 1)).shape == (2,)


class TestComposed:
    def _models(self):
        fg = build_frame_generator(FrameGeneratorSpec(base_channels=16), seed=0)
        vg = build_video_generator(VideoGeneratorSpec(), seed=0)
        return ComposedVideoGenerator(vg, fg)

    def test_latent_width_mismatch_rejected(self):
        fg = build_frame_generator(FrameGeneratorSpec(latent_dim=64, base_channels=16), seed=0)
        vg = build_video_generator(VideoGeneratorSpec(), seed=0)
        with pytest.raises(ValueError, match="latent"):
            ComposedVideoGenerator(vg, fg)

    def test_clip_shapes(self):
        comp = self._models()
        clips, latents = comp.clips_from_noise(torch.randn(2, 100))
        assert clips.shape == (2, 1, 30, 32, 32)
        assert latents.shape == (2, 30, 100)
        assert clips.min() >= 0.0 and clips.max() <= 1.0

    def test_clips_decode_the_latents(self):
        comp = self._models().eval()
        with torch.no_grad():
            clips, latents = comp.clips_from_noise(torch.randn(2, 100))
            for b in (0, 1):
                for t in (0, 7, 29):
                    frame = comp.frame_gen(latents[b, t].unsqueeze(0))[0]
                    torch.testing.assert_close(clips[b, :, t], frame)

    def test_sample_batch(self):
        comp = self._models()
        assert comp.sample_batch(3).shape == (3, 1, 30, 32, 32)
