"""Learned channel codec and the AWGN channel.

Symbols are carried as real tensors of shape ``(N, k, 2)`` holding the
in-phase and quadrature parts, so every operation stays real-valued for
autograd; :meth:`SymbolBlock.complex` gives the complex view.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
from torch import nn

from .config import is_noiseless


@dataclass
class SymbolBlock:
    iq: torch.Tensor  # (N, k, 2)

    @property
    def k(self) -> int:
        return self.iq.shape[1]

    def complex(self) -> torch.Tensor:
        return torch.view_as_complex(self.iq.contiguous())

    def flat(self) -> torch.Tensor:
        return self.iq.reshape(self.iq.shape[0], -1)

    def block_power(self) -> torch.Tensor:
        """Mean squared magnitude per node block."""
        return self.iq.pow(2).sum(dim=(1, 2)) / self.k


def power_normalize(z: torch.Tensor, k: int, tol: float = 1e-6) -> SymbolBlock:
    """Scale each node's ``2k`` reals so its ``k`` complex symbols have unit mean power."""
    if not torch.isfinite(z).all():
        raise FloatingPointError("non-finite values reached the channel encoder")
    iq = z.reshape(z.shape[0], k, 2)
    energy = iq.pow(2).sum(dim=(1, 2), keepdim=True)
    block = SymbolBlock(iq * torch.sqrt(k / energy.clamp_min(1e-12)))
    if block.iq.numel():
        err = (block.block_power().detach() - 1).abs().max().item()
        assert err <= tol, f"power normalisation violated by {err}"
    return block


class ChannelEncoder(nn.Module):
    def __init__(self, d_z: int, k: int, hidden: int = 256):
        super().__init__()
        self.k = k
        self.net = nn.Sequential(nn.Linear(d_z, hidden), nn.ReLU(), nn.Linear(hidden, 2 * k))

    def forward(self, x: torch.Tensor) -> SymbolBlock:
        return power_normalize(self.net(x), self.k)


class ChannelDecoder(nn.Module):
    def __init__(self, d_z: int, k: int, hidden: int = 256):
        super().__init__()
        self.k = k
        self.net = nn.Sequential(nn.Linear(2 * k, hidden), nn.ReLU(), nn.Linear(hidden, d_z))

    def forward(self, received: SymbolBlock) -> torch.Tensor:
        return self.net(received.flat())


def noise_variance(snr_db: float) -> float:
    """Complex noise variance for unit signal power."""
    return 10.0 ** (-snr_db / 10.0)


def awgn_apply(s: SymbolBlock, snr_db: float, seed: int | None = None,
               generator: torch.Generator | None = None) -> SymbolBlock:
    """Add circularly-symmetric complex Gaussian noise.

    ``snr_db = +inf`` returns the input unchanged. Noise is drawn from
    ``generator`` if given, else from a fresh generator seeded with ``seed``.
    """
    if is_noiseless(snr_db):
        return s
    if generator is None:
        generator = torch.Generator().manual_seed(0 if seed is None else int(seed))
    std = math.sqrt(noise_variance(snr_db) / 2)
    noise = torch.randn(s.iq.shape, generator=generator, dtype=s.iq.dtype) * std
    return SymbolBlock(s.iq + noise)
