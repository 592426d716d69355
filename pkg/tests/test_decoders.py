import pytest
import torch

from kgsemcom.decoders import (NodeClassifier, RelationClassifier, VocabularyMismatch, all_pairs, assemble_graph,
                               classify_nodes, classify_relations)
from kgsemcom.kg import Vocabulary, graph_to_triples


def vocab():
    return Vocabulary({"a": 0, "b": 1, "c": 2}, {"none": 0, "likes": 1})


def test_all_pairs():
    p = all_pairs(3)
    assert p.shape == (2, 6)
    assert set(map(tuple, p.T.tolist())) == {(i, j) for i in range(3) for j in range(3) if i != j}
    assert all_pairs(1).shape == (2, 0)


def test_node_classifier_probabilities():
    model = NodeClassifier(8, 3, hidden=16)
    logits, labels = classify_nodes(torch.randn(5, 8), model, vocab())
    torch.testing.assert_close(logits.softmax(-1).sum(-1), torch.ones(5))
    assert labels.shape == (5,)


def test_relation_classifier_is_direction_sensitive():
    torch.manual_seed(0)
    model = RelationClassifier(8, 2, heads=4, ff_dim=16)
    a, b = torch.randn(1, 8), torch.randn(1, 8)
    assert not torch.allclose(model(a, b), model(b, a))


def test_relation_classifier_rejects_self_pairs():
    model = RelationClassifier(8, 2)
    with pytest.raises(ValueError):
        model.score_pairs(torch.randn(3, 8), torch.tensor([[0, 1], [0, 2]]))


def test_vocabulary_mismatch():
    with pytest.raises(VocabularyMismatch):
        classify_nodes(torch.randn(2, 8), NodeClassifier(8, 4), vocab())
    with pytest.raises(VocabularyMismatch):
        classify_relations(torch.randn(2, 8), torch.randn(2, 8), RelationClassifier(8, 3), vocab())


def test_assemble_skips_none():
    pairs = all_pairs(3)
    rels = torch.zeros(6, dtype=torch.long)
    rels[0] = 1  # (0, 1)
    g = assemble_graph(torch.tensor([0, 1, 2]), pairs, rels, vocab())
    assert [t.as_tuple() for t in graph_to_triples(g)] == [("a", "likes", "b")]
    assert g.num_nodes == 3
