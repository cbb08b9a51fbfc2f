"""Oracles shared between unit tests and the acceptance suite."""

import itertools
import math
from dataclasses import replace

import numpy as np
import torch
from torch import nn

from bbgan.adversarial import ProjectionBank, apply_projection, gen_loss_multi


def toy_generator_gradient_error(seed: int = 0) -> float:
    """Max relative error, analytic vs central-difference generator gradient.

    The toy pipeline is the real one in miniature and double precision:
    a <=50-parameter linear generator to 6x6 frames, two unit-norm random
    projections, fixed tiny discriminators, multi-discriminator
    generator loss (sum mode).
    """
    torch.manual_seed(seed)
    # 2*16 weights + 16 biases = 48 parameters
    gen = nn.Sequential(nn.Linear(2, 16, bias=True), nn.Tanh()).double()

    class Tiny(nn.Module):
        def __init__(self):
            super().__init__()
            self.net = gen

        def forward(self, z):
            return self.net(z).view(-1, 1, 4, 4)

    g = Tiny()
    bank32 = ProjectionBank(
        kernels=torch.randn(2, 1, 1, 2, 2), stride=1, padding=0,
        in_hw=(4, 4), seed=seed,
    )
    kernels = bank32.kernels.double()
    kernels = kernels / kernels.flatten(1).norm(dim=1).view(-1, 1, 1, 1, 1)
    bank = replace(bank32, kernels=kernels)
    discs = [
        nn.Sequential(nn.Flatten(), nn.Linear(9, 1), nn.Sigmoid()).double()
        for _ in range(bank.K)
    ]
    for d in discs:
        d.requires_grad_(False)
    z = torch.randn(3, 2, dtype=torch.float64)

    def loss_value() -> torch.Tensor:
        fake = g(z)
        d_fakes = [
            discs[k](apply_projection(bank, k, fake)).squeeze(1)
            for k in range(bank.K)
        ]
        return gen_loss_multi(d_fakes, mode="sum")

    g.zero_grad()
    loss_value().backward()
    analytic = torch.cat([p.grad.flatten() for p in g.parameters()])

    params = [p for p in g.parameters()]
    n_params = sum(p.numel() for p in params)
    assert n_params <= 50, n_params
    eps = 1e-6
    numeric = torch.zeros(n_params, dtype=torch.float64)
    i = 0
    with torch.no_grad():
        for p in params:
            flat = p.view(-1)
            for j in range(flat.numel()):
                orig = flat[j].item()
                flat[j] = orig + eps
                hi = loss_value().item()
                flat[j] = orig - eps
                lo = loss_value().item()
                flat[j] = orig
                numeric[i] = (hi - lo) / (2 * eps)
                i += 1
    denom = torch.maximum(analytic.abs(), numeric.abs()).clamp_min(1e-8)
    return float(((analytic - numeric).abs() / denom).max())


def brute_force_geodesics(graph_dense: np.ndarray) -> np.ndarray:
    """All-pairs shortest paths by exhaustive path enumeration (M <= 8).

    graph_dense[i, j] > 0 is an edge weight, 0 means no edge (i != j).
    """
    m = graph_dense.shape[0]
    assert m <= 8, "enumeration oracle is exponential"
    best = np.full((m, m), np.inf)
    np.fill_diagonal(best, 0.0)
    nodes = list(range(m))
    for a in nodes:
        for b in nodes:
            if a == b:
                continue
            others = [v for v in nodes if v not in (a, b)]
            for r in range(len(others) + 1):
                for mid in itertools.permutations(others, r):
                    path = (a, *mid, b)
                    length = 0.0
                    for u, v in zip(path[:-1], path[1:]):
                        w = graph_dense[u, v]
                        if w <= 0:
                            length = np.inf
                            break
                        length += w
                    best[a, b] = min(best[a, b], length)
    return best


def mean_pairwise_l2(frames: np.ndarray) -> float:
    """Mean of all pairwise L2 distances between flattened frames."""
    x = np.asarray(frames, dtype=np.float64).reshape(len(frames), -1)
    sq = np.sum(x * x, axis=1)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * (x @ x.T), 0.0)
    d = np.sqrt(d2)
    m = len(x)
    return float(d[np.triu_indices(m, k=1)].mean())


def expected_gen_loss_multi_mean(d_values) -> float:
    """Independent oracle for the mean-mode multi-discriminator loss."""
    return math.fsum(-math.log(d) for d in d_values) / len(d_values)
