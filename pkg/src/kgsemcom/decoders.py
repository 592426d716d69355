"""Semantic decoder: node classifier, pairwise relation classifier, graph assembly."""

from __future__ import annotations

import torch
from torch import nn

from .kg import NONE_RELATION, KnowledgeGraph, Vocabulary


class VocabularyMismatch(ValueError):
    pass


class NodeClassifier(nn.Module):
    """MLP with additive skip connections from the input into each hidden layer."""

    def __init__(self, d_z: int, num_entities: int, hidden: int = 512):
        super().__init__()
        self.fc1 = nn.Linear(d_z, hidden)
        self.fc2 = nn.Linear(hidden, hidden)
        self.skip1 = nn.Linear(d_z, hidden, bias=False)
        self.skip2 = nn.Linear(d_z, hidden, bias=False)
        self.out = nn.Linear(hidden, num_entities)
        self.num_entities = num_entities

    def forward(self, y: torch.Tensor) -> torch.Tensor:
        h = torch.relu(self.fc1(y)) + self.skip1(y)
        h = torch.relu(self.fc2(h)) + self.skip2(y)
        return self.out(h)


class RelationClassifier(nn.Module):
    """Transformer encoder over the 2-token sequence ``(y_i, y_j)``.

    Learned role embeddings mark source and target, so scoring is direction
    sensitive. The two output tokens are concatenated into a linear head.
    """

    def __init__(self, d_z: int, num_relations: int, heads: int = 4, ff_dim: int = 256):
        super().__init__()
        if d_z % heads:
            heads = 1
        self.role = nn.Parameter(torch.randn(2, d_z) * 0.02)
        layer = nn.TransformerEncoderLayer(d_model=d_z, nhead=heads, dim_feedforward=ff_dim,
                                           dropout=0.0, batch_first=True)
        self.encoder = nn.TransformerEncoder(layer, num_layers=1, enable_nested_tensor=False)
        self.head = nn.Linear(2 * d_z, num_relations)
        self.num_relations = num_relations

    def forward(self, y_src: torch.Tensor, y_dst: torch.Tensor) -> torch.Tensor:
        seq = torch.stack([y_src, y_dst], dim=1) + self.role
        out = self.encoder(seq)
        return self.head(out.reshape(out.shape[0], -1))

    def score_pairs(self, y: torch.Tensor, pair_index: torch.Tensor) -> torch.Tensor:
        if (pair_index[0] == pair_index[1]).any():
            raise ValueError("self-pairs (i == j) are not scored")
        return self(y[pair_index[0]], y[pair_index[1]])


def classify_nodes(y: torch.Tensor, model: NodeClassifier, vocab: Vocabulary):
    if model.num_entities != vocab.num_entities:
        raise VocabularyMismatch(f"classifier has {model.num_entities} classes, vocabulary {vocab.num_entities}")
    logits = model(y)
    return logits, logits.argmax(dim=-1)


def classify_relations(y_i: torch.Tensor, y_j: torch.Tensor, model: RelationClassifier, vocab: Vocabulary):
    if model.num_relations != vocab.num_relations:
        raise VocabularyMismatch(f"classifier has {model.num_relations} classes, vocabulary {vocab.num_relations}")
    logits = model(y_i, y_j)
    return logits, logits.argmax(dim=-1)


def all_pairs(n: int) -> torch.Tensor:
    """Ordered pairs ``(i, j)``, ``i != j``, as a ``(2, n*(n-1))`` index tensor."""
    idx = torch.arange(n)
    src = idx.repeat_interleave(n)
    dst = idx.repeat(n)
    keep = src != dst
    return torch.stack([src[keep], dst[keep]])


def assemble_graph(node_labels, pair_index, relation_ids, vocab: Vocabulary, graph_id: str = "") -> KnowledgeGraph:
    """Build the decoded graph; pairs predicted as "none" add no edge."""
    nodes = tuple(vocab.entity_name(int(c)) for c in node_labels)
    edges = []
    for i, j, r in zip(pair_index[0].tolist(), pair_index[1].tolist(), [int(r) for r in relation_ids]):
        label = vocab.relation_name(r)
        if label != NONE_RELATION:
            edges.append((i, j, label))
    return KnowledgeGraph(nodes, tuple(edges), graph_id=graph_id)
