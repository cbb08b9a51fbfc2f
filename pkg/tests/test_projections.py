"""Frozen random projections: norms, shapes, per-frame video application."""

import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from bbgan.adversarial import (
    ProjectionShapeError,
    apply_projection,
    make_projection_bank,
)


@pytest.fixture(scope="module")
def bank():
    return make_projection_bank(4, in_shape=(32, 32), seed=7)


class TestBank:
    def test_kernel_geometry(self, bank):
        assert bank.kernels.shape == (4, 1, 1, 8, 8)
        assert bank.K == 4
        assert bank.out_hw() == (7, 7)

    def test_unit_l2_norms(self, bank):
        norms = bank.kernels.flatten(1).norm(dim=1)
        np.testing.assert_allclose(norms.numpy(), 1.0, atol=1e-6)

    def test_frozen(self, bank):
        assert not bank.kernels.requires_grad

    def test_seed_determinism(self):
        a = make_projection_bank(3, in_shape=(32, 32), seed=5)
        b = make_projection_bank(3, in_shape=(32, 32), seed=5)
        assert torch.equal(a.kernels, b.kernels)
        c = make_projection_bank(3, in_shape=(32, 32), seed=6)
        assert not torch.equal(a.kernels, c.kernels)

    def test_state_hash_tracks_content(self):
        a = make_projection_bank(3, in_shape=(32, 32), seed=5)
        b = make_projection_bank(3, in_shape=(32, 32), seed=5)
        c = make_projection_bank(3, in_shape=(32, 32), seed=6)
        assert a.state_hash() == b.state_hash()
        assert a.state_hash() != c.state_hash()

    def test_kernels_distinct_per_discriminator(self, bank):
        for i in range(bank.K):
            for j in range(i + 1, bank.K):
                assert not torch.equal(bank.kernels[i], bank.kernels[j])

    def test_output_size_formula(self):
        b = make_projection_bank(1, in_shape=(16, 16), seed=0, kernel_size=8, stride=4)
        assert b.out_hw() == (3, 3)

    def test_kernel_larger_than_input_rejected(self):
        with pytest.raises(ValueError):
            make_projection_bank(1, in_shape=(4, 4), seed=0, kernel_size=8, stride=4)


class TestApply:
    def test_frame_batch_shape(self, bank):
        out = apply_projection(bank, 0, torch.randn(5, 1, 32, 32))
        assert out.shape == (5, 1, 7, 7)

    def test_video_batch_shape(self, bank):
        out = apply_projection(bank, 1, torch.randn(2, 1, 30, 32, 32))
        assert out.shape == (2, 1, 30, 7, 7)

    def test_video_equals_per_frame(self, bank):
        clip = torch.randn(2, 1, 6, 32, 32)
        video_out = apply_projection(bank, 2, clip)
        for t in range(6):
            frame_out = apply_projection(bank, 2, clip[:, :, t])
            torch.testing.assert_close(video_out[:, :, t], frame_out)

    def test_k_out_of_range(self, bank):
        with pytest.raises(IndexError):
            apply_projection(bank, 4, torch.randn(1, 1, 32, 32))

    def test_wrong_spatial_shape_rejected(self, bank):
        with pytest.raises(ProjectionShapeError):
            apply_projection(bank, 0, torch.randn(1, 1, 16, 16))

    def test_wrong_rank_rejected(self, bank):
        with pytest.raises(ProjectionShapeError):
            apply_projection(bank, 0, torch.randn(1, 32, 32))

    @given(st.floats(-3, 3), st.floats(-3, 3))
    @settings(max_examples=20, deadline=None)
    def test_linearity(self, a, b):
        bank = make_projection_bank(1, in_shape=(16, 16), seed=3)
        x = torch.randn(2, 1, 16, 16, generator=torch.Generator().manual_seed(0))
        y = torch.randn(2, 1, 16, 16, generator=torch.Generator().manual_seed(1))
        lhs = apply_projection(bank, 0, a * x + b * y)
        rhs = a * apply_projection(bank, 0, x) + b * apply_projection(bank, 0, y)
        torch.testing.assert_close(lhs, rhs, atol=1e-4, rtol=1e-4)

    def test_distinct_projections_give_distinct_views(self, bank):
        x = torch.randn(1, 1, 32, 32)
        assert not torch.allclose(
            apply_projection(bank, 0, x), apply_projection(bank, 1, x)
        )
