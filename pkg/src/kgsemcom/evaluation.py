"""Metrics: exact-match triple F1, node accuracy, and transmitted bits per graph."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .kg import KnowledgeGraph, graph_to_triples, serialize_for_baseline

SEMANTIC_SCHEMES = ("semantic_gnn", "semantic_ffn")
BASELINE_SCHEMES = ("huffman", "sixbit")


@dataclass(frozen=True)
class F1Report:
    precision: float
    recall: float
    f1: float
    matched: int
    predicted: int
    reference: int


def f1_from_counts(matched: int, predicted: int, reference: int) -> F1Report:
    p = matched / predicted if predicted else 0.0
    r = matched / reference if reference else 0.0
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return F1Report(p, r, f1, matched, predicted, reference)


def match_triples(predicted: Sequence[tuple], reference: Sequence[tuple]) -> int:
    """Greedy one-to-one exact matching; each reference triple is used at most once."""
    available = Counter(reference)
    matched = 0
    for t in predicted:
        if available[t] > 0:
            available[t] -= 1
            matched += 1
    return matched


def triple_f1(predicted: KnowledgeGraph, reference: KnowledgeGraph) -> F1Report:
    pred = [t.as_tuple() for t in graph_to_triples(predicted)]
    ref = [t.as_tuple() for t in graph_to_triples(reference)]
    return f1_from_counts(match_triples(pred, ref), len(pred), len(ref))


def triple_f1_from_triples(predicted: Sequence[tuple], reference: Sequence[tuple]) -> F1Report:
    return f1_from_counts(match_triples(predicted, reference), len(predicted), len(reference))


def node_accuracy(predicted, reference) -> float:
    predicted = np.asarray(predicted)
    reference = np.asarray(reference)
    if predicted.shape != reference.shape:
        raise ValueError(f"shape mismatch {predicted.shape} vs {reference.shape}")
    if reference.size == 0:
        return 0.0
    return float((predicted == reference).mean())


@dataclass(frozen=True)
class BitAccount:
    scheme: str
    bits_per_graph: float
    nodes: int


def semantic_bits(num_nodes: int, k: int, bits_per_symbol: int = 6) -> int:
    return num_nodes * k * bits_per_symbol


def bits_per_graph(g: KnowledgeGraph, scheme: str, k: int = 5, bits_per_symbol: int = 6,
                   huffman=None, sixbit=None) -> BitAccount:
    """Bits sent for one graph.

    Semantic schemes send ``k`` symbols per node at ``bits_per_symbol`` each;
    baselines count the coded length of the serialized triples.
    """
    if scheme in SEMANTIC_SCHEMES:
        bits = semantic_bits(g.num_nodes, k, bits_per_symbol)
    elif scheme == "huffman":
        if huffman is None:
            raise ValueError("huffman scheme needs a HuffmanCode")
        bits = huffman.encoded_length(serialize_for_baseline(g))
    elif scheme == "sixbit":
        width = sixbit.bits_per_char if sixbit is not None else 6
        bits = width * len(serialize_for_baseline(g))
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    return BitAccount(scheme, float(bits), g.num_nodes)


def snr_to_reach(snrs: Sequence[float], values: Sequence[float], fraction: float = 0.9) -> float:
    """Lowest SNR at which ``values`` reaches ``fraction`` of its maximum.

    Linear interpolation between grid points; ``snrs`` must be increasing.
    Returns the first grid SNR if the curve starts above the threshold.
    """
    snrs = np.asarray(snrs, dtype=float)
    values = np.asarray(values, dtype=float)
    threshold = fraction * values.max()
    above = np.nonzero(values >= threshold)[0]
    first = int(above[0])
    if first == 0:
        return float(snrs[0])
    x0, x1 = snrs[first - 1], snrs[first]
    y0, y1 = values[first - 1], values[first]
    return float(x0 + (threshold - y0) * (x1 - x0) / (y1 - y0))
