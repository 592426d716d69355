"""Semantic transmission of knowledge graphs: GNN encoder, learned channel code, node and relation decoders."""

from .config import ExperimentConfig, load_config
from .kg import KnowledgeGraph, Triple, Vocabulary, triples_to_graph

__all__ = ["ExperimentConfig", "KnowledgeGraph", "Triple", "Vocabulary", "load_config", "triples_to_graph"]
__version__ = "0.1.0"
