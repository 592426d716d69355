"""Semantic encoders: GINE message passing over text features, and a per-node bottleneck."""

from __future__ import annotations

import torch
from torch import nn

from .config import ConfigError, EncoderConfig


def gine_forward(x: torch.Tensor, edge_feats: torch.Tensor, edge_index: torch.Tensor,
                 eps: torch.Tensor | float, h_theta: nn.Module,
                 edge_projection: nn.Module | None = None) -> torch.Tensor:
    """One GINE update.

    ``out_i = h((1 + eps) * x_i + sum_{j -> i} relu(x_j + e_ji))`` with the sum
    over edges whose target is ``i``. ``edge_index`` is ``(2, E)`` with row 0 the
    source and row 1 the target.
    """
    if edge_projection is not None:
        edge_feats = edge_projection(edge_feats)
    if edge_feats.shape[-1] != x.shape[-1]:
        raise ConfigError(f"edge feature dim {edge_feats.shape[-1]} != node dim {x.shape[-1]}")
    agg = (1 + eps) * x
    if edge_index.numel():
        src, dst = edge_index[0], edge_index[1]
        messages = torch.relu(x[src] + edge_feats)
        agg = agg.index_add(0, dst, messages)
    return h_theta(agg)


class GineLayer(nn.Module):
    def __init__(self, in_dim: int, out_dim: int, edge_dim: int | None = None):
        super().__init__()
        edge_dim = in_dim if edge_dim is None else edge_dim
        self.eps = nn.Parameter(torch.zeros(()))
        self.h_theta = nn.Sequential(nn.Linear(in_dim, out_dim), nn.ReLU(), nn.Linear(out_dim, out_dim))
        self.edge_projection = nn.Linear(edge_dim, in_dim) if edge_dim != in_dim else None
        self.out_dim = out_dim

    def forward(self, x, edge_feats, edge_index):
        return gine_forward(x, edge_feats, edge_index, self.eps, self.h_theta, self.edge_projection)


class GnnEncoder(nn.Module):
    """Stacked GINE layers, ``in_dim -> hidden -> ... -> d_z`` with ReLU in between."""

    def __init__(self, cfg: EncoderConfig, edge_dim: int | None = None):
        super().__init__()
        edge_dim = cfg.in_dim if edge_dim is None else edge_dim
        widths = [cfg.in_dim] + [cfg.hidden] * (cfg.layers - 1) + [cfg.d_z]
        self.layers = nn.ModuleList(
            GineLayer(widths[k], widths[k + 1], edge_dim) for k in range(cfg.layers))
        self.reverse_edges = cfg.reverse_edges
        self.d_z = cfg.d_z

    def forward(self, x, edge_feats, edge_index):
        if self.reverse_edges and edge_index.numel():
            edge_index = torch.cat([edge_index, edge_index.flip(0)], dim=1)
            edge_feats = torch.cat([edge_feats, edge_feats], dim=0)
        for k, layer in enumerate(self.layers):
            x = layer(x, edge_feats, edge_index)
            if k < len(self.layers) - 1:
                x = torch.relu(x)
        return x


class FfnEncoder(nn.Module):
    """Per-node bottleneck; graph topology is ignored."""

    def __init__(self, cfg: EncoderConfig):
        super().__init__()
        self.net = nn.Sequential(nn.Linear(cfg.in_dim, cfg.hidden), nn.ReLU(), nn.Linear(cfg.hidden, cfg.d_z))
        self.d_z = cfg.d_z

    def forward(self, x, edge_feats=None, edge_index=None):
        return self.net(x)


def build_encoder(cfg: EncoderConfig, edge_dim: int | None = None) -> nn.Module:
    if cfg.variant == "llm_gnn":
        return GnnEncoder(cfg, edge_dim)
    return FfnEncoder(cfg)
