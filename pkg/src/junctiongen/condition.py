"""Condition model: scene graph -> condition volume.

Three graph-attention layers embed entity information into the lattice
sub-graph; the lattice embeddings are reshaped into a latent image (one pixel
per grid node, channels = embedding width); four transpose-convolution stages
each double the spatial size, producing the condition volume that drives the
generator's normalization layers.
"""
from __future__ import annotations

from typing import Sequence

import torch
import torch.nn.functional as F
from torch import nn

from .config import ModelConfig, SPATIAL_SCALE, UPSAMPLE_STAGES
from .errors import DomainError
from .scenegraph import SceneGraph


def graph_tensors(
    graph: SceneGraph, dtype: torch.dtype = torch.float32, device=None
) -> tuple[torch.Tensor, torch.Tensor]:
    """Node feature matrix (N, F) and directed edge index (2, E) for a graph."""
    x = torch.as_tensor(graph.node_features, dtype=dtype, device=device)
    if len(graph.edges):
        edge_index = torch.as_tensor(graph.edges.T, dtype=torch.long, device=device)
    else:
        edge_index = torch.zeros((2, 0), dtype=torch.long, device=device)
    return x, edge_index


def add_self_loops(edge_index: torch.Tensor, num_nodes: int) -> torch.Tensor:
    loops = torch.arange(num_nodes, dtype=torch.long, device=edge_index.device)
    return torch.cat([edge_index, torch.stack([loops, loops])], dim=1)


class GATLayer(nn.Module):
    """Single graph-attention layer with additive attention.

    Per-edge logits come from learned projections of the transformed endpoint
    features, are passed through a leaky ReLU, and are softmax-normalized over
    each node's in-neighborhood (self-loops included). Multi-head outputs are
    concatenated when `concat` else averaged.
    """

    def __init__(
        self,
        in_features: int,
        out_features: int,
        heads: int = 1,
        concat: bool = True,
        negative_slope: float = 0.2,
    ):
        super().__init__()
        self.in_features = in_features
        self.out_features = out_features
        self.heads = heads
        self.concat = concat
        self.negative_slope = negative_slope
        self.weight = nn.Parameter(torch.empty(heads, in_features, out_features))
        self.attn_src = nn.Parameter(torch.empty(heads, out_features))
        self.attn_dst = nn.Parameter(torch.empty(heads, out_features))
        self.reset_parameters()

    def reset_parameters(self) -> None:
        for h in range(self.heads):
            nn.init.xavier_uniform_(self.weight[h])
        nn.init.xavier_uniform_(self.attn_src.view(self.heads, 1, -1))
        nn.init.xavier_uniform_(self.attn_dst.view(self.heads, 1, -1))

    @property
    def output_width(self) -> int:
        return self.out_features * self.heads if self.concat else self.out_features

    def forward(
        self, x: torch.Tensor, edge_index: torch.Tensor, return_attention: bool = False
    ):
        if x.shape[1] != self.in_features:
            raise DomainError(
                f"embedding width {x.shape[1]} does not match layer input {self.in_features}"
            )
        n = x.shape[0]
        edge_index = add_self_loops(edge_index, n)
        src, dst = edge_index[0], edge_index[1]

        h = torch.einsum("nf,hfo->nho", x, self.weight)  # (N, H, O)
        logit_src = (h * self.attn_src).sum(dim=-1)  # (N, H)
        logit_dst = (h * self.attn_dst).sum(dim=-1)
        logits = F.leaky_relu(logit_src[src] + logit_dst[dst], self.negative_slope)  # (E, H)

        # Numerically stable softmax over each destination's in-neighborhood.
        shift = torch.full((n, self.heads), float("-inf"), dtype=x.dtype, device=x.device)
        dst_cols = dst.unsqueeze(1).expand(-1, self.heads)
        shift.scatter_reduce_(0, dst_cols, logits.detach(), reduce="amax", include_self=True)
        weights = torch.exp(logits - shift[dst])
        denom = torch.zeros((n, self.heads), dtype=x.dtype, device=x.device)
        denom = denom.index_add(0, dst, weights)
        alpha = weights / denom[dst]

        out = torch.zeros((n, self.heads, self.out_features), dtype=x.dtype, device=x.device)
        out = out.index_add(0, dst, h[src] * alpha.unsqueeze(-1))
        out = out.reshape(n, -1) if self.concat else out.mean(dim=1)
        out = F.elu(out)
        if return_attention:
            return out, (edge_index, alpha)
        return out


def extract_latent_image(
    embeddings: torch.Tensor, lattice_index: dict[tuple[int, int], int], rows: int, cols: int
) -> torch.Tensor:
    """Copy grid-node embeddings into a (C, rows, cols) pixel grid.

    Entity-node embeddings are dropped; their information reaches the lattice
    through attention.
    """
    try:
        order = [lattice_index[(r, c)] for r in range(rows) for c in range(cols)]
    except KeyError as exc:
        raise DomainError(f"lattice index missing grid node {exc.args[0]}") from exc
    idx = torch.as_tensor(order, dtype=torch.long, device=embeddings.device)
    return embeddings[idx].reshape(rows, cols, -1).permute(2, 0, 1)


class ConditionModel(nn.Module):
    """GAT stack + latent-image extraction + 4 transpose-convolution stages."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        in_width = config.variant.feature_width
        h1, h2, h3 = config.gat_heads
        self.gat1 = GATLayer(in_width, config.gat_hidden, heads=h1, concat=True)
        self.gat2 = GATLayer(self.gat1.output_width, config.gat_hidden, heads=h2, concat=True)
        self.gat3 = GATLayer(
            self.gat2.output_width, config.latent_channels, heads=h3, concat=False
        )

        stages = []
        c_in = config.latent_channels
        for c_out in config.upsample_channels:
            stages += [
                nn.ConvTranspose2d(c_in, c_out, kernel_size=4, stride=2, padding=1),
                nn.InstanceNorm2d(c_out, affine=True),
                nn.ReLU(inplace=True),
            ]
            c_in = c_out
        self.upsampler = nn.Sequential(*stages)

    @property
    def dtype(self) -> torch.dtype:
        return self.gat1.weight.dtype

    @property
    def device(self) -> torch.device:
        return self.gat1.weight.device

    def embed_nodes(self, x: torch.Tensor, edge_index: torch.Tensor) -> torch.Tensor:
        x = self.gat1(x, edge_index)
        x = self.gat2(x, edge_index)
        return self.gat3(x, edge_index)

    def latent_image(self, graph: SceneGraph) -> torch.Tensor:
        """(C, rows, cols) latent image for one scene graph."""
        if graph.variant is not self.config.variant:
            raise DomainError(
                f"graph variant {graph.variant.value!r} does not match model "
                f"variant {self.config.variant.value!r}"
            )
        if (graph.lattice.rows, graph.lattice.cols) != (self.config.rows, self.config.cols):
            raise DomainError("graph lattice does not match model configuration")
        x, edge_index = graph_tensors(graph, dtype=self.dtype, device=self.device)
        emb = self.embed_nodes(x, edge_index)
        return extract_latent_image(emb, graph.lattice_index, self.config.rows, self.config.cols)

    def forward_graphs(
        self, graphs: Sequence[SceneGraph]
    ) -> tuple[torch.Tensor, torch.Tensor]:
        """Condition volumes and latent images for a batch of graphs.

        Returns (omega (B, C_w, rows*16, cols*16), latent (B, C, rows, cols)).
        """
        latents = torch.stack([self.latent_image(g) for g in graphs])
        omega = self.upsampler(latents)
        return omega, latents

    def forward(self, graphs: Sequence[SceneGraph]):
        return self.forward_graphs(graphs)
