import math

import numpy as np
import pytest
import torch
import torch.nn.functional as F

from kgsemcom.config import config_from_dict
from kgsemcom.decoders import VocabularyMismatch
from kgsemcom.experiments import Workspace, train_model
from kgsemcom.kg import Vocabulary
from kgsemcom.training import (Trainer, TrainingDiverged, collate, compute_loss, fit_mine, mine_estimate,
                               pair_targets_for, relation_class_weights)

from conftest import tiny_config


def gaussian_pair(n, rho, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    y = rho * x + math.sqrt(1 - rho ** 2) * rng.standard_normal(n)
    return torch.tensor(x, dtype=torch.float32)[:, None], torch.tensor(y, dtype=torch.float32)[:, None]


def test_mine_independent_variables_near_zero():
    x, _ = gaussian_pair(10_000, 0.0, 0)
    _, y = gaussian_pair(10_000, 0.0, 1)
    est = fit_mine(x, y, steps=1500, seed=0)
    mi = est.estimate(x, y, torch.Generator().manual_seed(5)).item()
    assert abs(mi) < 0.05


def test_mine_tracks_gaussian_mi():
    rho = 0.8
    truth = -0.5 * math.log(1 - rho ** 2)
    x, y = gaussian_pair(10_000, rho, 0)
    est = fit_mine(x, y, steps=2000, seed=0)
    mi = est.estimate(x, y, torch.Generator().manual_seed(5)).item()
    assert abs(mi - truth) < 0.15 * truth


def test_mine_needs_two_samples():
    est = fit_mine(torch.randn(4, 1), torch.randn(4, 1), steps=1)
    with pytest.raises(ValueError):
        mine_estimate(est.T, torch.randn(1, 1), torch.randn(1, 1))


def test_compute_loss_parts():
    torch.manual_seed(0)
    nl, nt = torch.randn(5, 4), torch.randint(4, (5,))
    rl, rt = torch.randn(6, 3), torch.randint(3, (6,))
    mi = torch.tensor(0.7)
    loss, parts = compute_loss(nl, nt, rl, rt, mi, alpha=0.5)
    expected = F.cross_entropy(nl, nt) + F.cross_entropy(rl, rt) - 0.35
    torch.testing.assert_close(loss, expected)
    loss0, _ = compute_loss(nl, nt, rl, rt, mi, alpha=0.0)
    torch.testing.assert_close(loss0, parts["ce_nodes"] + parts["ce_relations"])


def test_compute_loss_without_pairs():
    nl, nt = torch.randn(1, 4), torch.tensor([2])
    loss, parts = compute_loss(nl, nt, torch.zeros(0, 3), torch.zeros(0, dtype=torch.long), torch.tensor(0.0), 0.01)
    assert parts["ce_relations"].item() == 0.0
    torch.testing.assert_close(loss, F.cross_entropy(nl, nt))


def test_loss_gradients_match_finite_differences():
    torch.manual_seed(0)
    nt, rt = torch.randint(4, (5,)), torch.randint(3, (6,))
    w = relation_class_weights(rt, 3).double()

    def fn(nl, rl, mi):
        return compute_loss(nl, nt, rl, rt, mi, 0.3, w)[0]

    inputs = (torch.randn(5, 4, dtype=torch.float64, requires_grad=True),
              torch.randn(6, 3, dtype=torch.float64, requires_grad=True),
              torch.tensor(0.4, dtype=torch.float64, requires_grad=True))
    assert torch.autograd.gradcheck(fn, inputs, eps=1e-6, atol=1e-8, rtol=1e-3)


def test_relation_class_weights():
    w = relation_class_weights(torch.tensor([0, 0, 0, 1, 2, 0]), 3)
    assert w.tolist() == [0.5, 1.0, 1.0]


def test_pair_targets_first_edge_wins(tiny_workspace):
    from kgsemcom.kg import KnowledgeGraph
    vocab = Vocabulary({"a": 0, "b": 1}, {"none": 0, "p": 1, "q": 2})
    g = KnowledgeGraph(("a", "b"), ((0, 1, "q"), (0, 1, "p")))
    pairs, targets = pair_targets_for(g, vocab)
    assert pairs.T.tolist() == [[0, 1], [1, 0]]
    assert targets.tolist() == [2, 0]


def test_collate_offsets(tiny_workspace):
    items = tiny_workspace.train[:3]
    b = collate(items)
    assert b.node_ptr[-1] == sum(it.graph.num_nodes for it in items)
    assert b.edge_index.max().item() < b.node_ptr[-1]
    n1 = items[0].graph.num_nodes
    assert b.pair_index[:, b.pair_ptr[1]:].min().item() >= n1


def test_training_reduces_loss(tiny_workspace):
    cfg = tiny_config(train={"epochs": 5})
    trainer = Trainer(cfg, tiny_workspace.vocab)
    losses = [trainer.train_epoch(tiny_workspace.train, 14.0)["loss"] for _ in range(5)]
    assert all(b < a for a, b in zip(losses, losses[1:]))
    assert losses[-1] < 0.9 * losses[0]


def test_training_is_deterministic(tiny_workspace, tmp_path):
    cfg = tiny_config(train={"epochs": 2})
    train_model(cfg, tiny_workspace, metrics_path=tmp_path / "a.csv")
    train_model(cfg, tiny_workspace, metrics_path=tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_nan_features_raise_divergence(tiny_workspace):
    import dataclasses
    items = [dataclasses.replace(it, node_feats=np.full_like(it.node_feats, np.nan)) for it in tiny_workspace.train[:4]]
    trainer = Trainer(tiny_config(), tiny_workspace.vocab)
    with pytest.raises(TrainingDiverged):
        trainer.train_epoch(items, 14.0)


def test_checkpoint_roundtrip(tiny_workspace, tmp_path):
    trainer = Trainer(tiny_config(), tiny_workspace.vocab)
    trainer.train_epoch(tiny_workspace.train, 14.0)
    trainer.save(tmp_path / "c.pt")
    loaded = Trainer.load(tmp_path / "c.pt", tiny_workspace.vocab)
    a = trainer.evaluate(tiny_workspace.test, 10.0, seed=2)
    b = loaded.evaluate(tiny_workspace.test, 10.0, seed=2)
    assert (a["node_acc"], a["f1"]) == (b["node_acc"], b["f1"])
    other = Vocabulary({"zz": 0}, {"none": 0})
    with pytest.raises(VocabularyMismatch):
        Trainer.load(tmp_path / "c.pt", other)


def test_evaluate_shapes(tiny_workspace):
    trainer = Trainer(tiny_config(), tiny_workspace.vocab)
    ev = trainer.evaluate(tiny_workspace.test, math.inf)
    assert len(ev["decoded"]) == len(tiny_workspace.test)
    assert 0.0 <= ev["node_acc"] <= 1.0 and 0.0 <= ev["f1"] <= 1.0
