"""MINE estimator, loss assembly, batching and the two-step training epoch."""

from __future__ import annotations

import logging
import math
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from .channel import ChannelDecoder, ChannelEncoder, SymbolBlock, awgn_apply
from .config import ExperimentConfig, TrainConfig, config_from_dict
from .decoders import NodeClassifier, RelationClassifier, VocabularyMismatch, all_pairs, assemble_graph
from .encoders import build_encoder
from .evaluation import node_accuracy, triple_f1
from .features import TextEmbedder
from .kg import KnowledgeGraph, Vocabulary

log = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "kgsemcom-checkpoint"
CHECKPOINT_VERSION = 1


class TrainingDiverged(RuntimeError):
    pass


# --- mutual information -----------------------------------------------------

class StatisticsNetwork(nn.Module):
    """T(x, y) -> scalar."""

    def __init__(self, x_dim: int, y_dim: int, hidden: int = 64):
        super().__init__()
        self.net = nn.Sequential(nn.Linear(x_dim + y_dim, hidden), nn.ELU(),
                                 nn.Linear(hidden, hidden), nn.ELU(), nn.Linear(hidden, 1))

    def forward(self, x, y):
        return self.net(torch.cat([x, y], dim=-1)).squeeze(-1)


def _shuffled(y: torch.Tensor, generator: torch.Generator | None) -> torch.Tensor:
    return y[torch.randperm(y.shape[0], generator=generator)]


def mine_estimate(T: nn.Module, x: torch.Tensor, y: torch.Tensor,
                  generator: torch.Generator | None = None, shuffles: int = 1) -> torch.Tensor:
    """Donsker-Varadhan bound: ``mean T(x, y) - log mean exp T(x, y_shuffled)``.

    ``shuffles > 1`` pools several independent shufflings into the marginal
    term, which lowers its variance without changing what is estimated.
    """
    if x.shape[0] < 2:
        raise ValueError("MINE needs at least 2 samples to form shuffled marginals")
    joint = T(x, y)
    marginal = torch.cat([T(x, _shuffled(y, generator)) for _ in range(shuffles)])
    return joint.mean() - (torch.logsumexp(marginal, dim=0) - math.log(marginal.shape[0]))


class MineEstimator:
    """Statistics network plus the moving-average bias correction of the gradient."""

    def __init__(self, x_dim: int, y_dim: int, hidden: int = 64, lr: float = 1e-4, ema: float = 0.99):
        self.T = StatisticsNetwork(x_dim, y_dim, hidden)
        self.ema = ema
        self.running = None
        self.trace: list[tuple[int, float]] = []
        self.optimizer = torch.optim.Adam(self.T.parameters(), lr=lr)

    def step(self, x: torch.Tensor, y: torch.Tensor, generator: torch.Generator | None = None) -> float:
        """One ascent step on the bound; inputs are treated as constants."""
        x, y = x.detach(), y.detach()
        joint = self.T(x, y)
        marginal = self.T(x, _shuffled(y, generator))
        exp_mean = marginal.exp().mean()
        if self.running is None:
            self.running = exp_mean.detach()
        else:
            self.running = self.ema * self.running + (1 - self.ema) * exp_mean.detach()
        # d/dθ log E[e^T] replaced by E[∇ e^T] / running mean
        loss = -(joint.mean() - exp_mean / self.running)
        self.optimizer.zero_grad()
        loss.backward()
        self.optimizer.step()
        with torch.no_grad():
            return (joint.mean() - exp_mean.log()).item()

    def estimate(self, x, y, generator=None, shuffles: int = 1) -> torch.Tensor:
        return mine_estimate(self.T, x, y, generator, shuffles)

    def freeze(self, frozen: bool = True) -> None:
        for p in self.T.parameters():
            p.requires_grad_(not frozen)

    def state_dict(self):
        return {"T": self.T.state_dict(), "running": self.running, "opt": self.optimizer.state_dict()}

    def load_state_dict(self, state):
        self.T.load_state_dict(state["T"])
        self.running = state["running"]
        self.optimizer.load_state_dict(state["opt"])


def fit_mine(x: torch.Tensor, y: torch.Tensor, steps: int = 3000, batch_size: int = 512,
             lr: float = 1e-3, hidden: int = 64, seed: int = 0, ema: float = 0.99,
             trace_every: int = 0, trace_shuffles: int = 20) -> MineEstimator:
    """Train a standalone estimator on paired samples by minibatch ascent.

    With ``trace_every > 0`` the full-sample bound is recorded every that many
    steps in ``est.trace`` as ``(step, estimate)``.
    """
    torch.manual_seed(seed)
    est = MineEstimator(x.shape[1], y.shape[1], hidden=hidden, lr=lr, ema=ema)
    gen = torch.Generator().manual_seed(seed)
    n = x.shape[0]
    for step in range(1, steps + 1):
        idx = torch.randint(n, (min(batch_size, n),), generator=gen)
        est.step(x[idx], y[idx], gen)
        if trace_every and step % trace_every == 0:
            with torch.no_grad():
                mi = est.estimate(x, y, torch.Generator().manual_seed(seed + 1), trace_shuffles)
            est.trace.append((step, mi.item()))
    return est


# --- loss -------------------------------------------------------------------

def relation_class_weights(targets: torch.Tensor, num_relations: int) -> torch.Tensor:
    """Down-weight the "none" class by the positive/negative pair ratio."""
    weights = torch.ones(num_relations, dtype=torch.float32)
    neg = int((targets == 0).sum())
    pos = int((targets != 0).sum())
    if neg and pos:
        weights[0] = pos / neg
    return weights


def compute_loss(node_logits, node_targets, rel_logits, rel_targets, mi, alpha: float,
                 relation_weights: torch.Tensor | None = None):
    """``CE_nodes + CE_relations - alpha * I``; returns the loss and its parts."""
    ce_nodes = F.cross_entropy(node_logits, node_targets)
    if rel_logits.shape[0]:
        w = None if relation_weights is None else relation_weights.to(rel_logits.dtype)
        ce_rel = F.cross_entropy(rel_logits, rel_targets, weight=w)
    else:
        ce_rel = node_logits.new_zeros(())
    loss = ce_nodes + ce_rel - alpha * mi
    return loss, {"ce_nodes": ce_nodes.detach(), "ce_relations": ce_rel.detach(),
                  "mi": mi.detach() if torch.is_tensor(mi) else torch.tensor(float(mi))}


# --- batching ---------------------------------------------------------------

@dataclass
class GraphItem:
    graph: KnowledgeGraph
    node_feats: np.ndarray
    edge_feats: np.ndarray
    node_targets: np.ndarray
    pair_index: np.ndarray
    pair_targets: np.ndarray


@dataclass
class GraphBatch:
    """Block-diagonal batch of graphs with per-graph offsets."""

    graphs: list[KnowledgeGraph]
    node_feats: torch.Tensor
    edge_feats: torch.Tensor
    edge_index: torch.Tensor
    node_targets: torch.Tensor
    pair_index: torch.Tensor
    pair_targets: torch.Tensor
    node_ptr: list[int]
    pair_ptr: list[int]


def pair_targets_for(g: KnowledgeGraph, vocab: Vocabulary) -> tuple[np.ndarray, np.ndarray]:
    """Target relation per ordered pair; the first edge wins when a pair has several."""
    pairs = all_pairs(g.num_nodes).numpy()
    lookup: dict[tuple[int, int], int] = {}
    for i, j, r in g.edges:
        lookup.setdefault((i, j), vocab.relation_id(r))
    targets = np.array([lookup.get((i, j), 0) for i, j in pairs.T], dtype=np.int64)
    return pairs, targets


def prepare_items(graphs: Sequence[KnowledgeGraph], embedder: TextEmbedder, vocab: Vocabulary) -> list[GraphItem]:
    feats = embedder.embed_graphs(graphs)
    items = []
    for g, (nf, ef) in zip(graphs, feats):
        pairs, targets = pair_targets_for(g, vocab)
        items.append(GraphItem(g, nf, ef, np.array([vocab.entity_id(n) for n in g.nodes], dtype=np.int64),
                               pairs, targets))
    return items


def collate(items: Sequence[GraphItem], feat_dim: int | None = None) -> GraphBatch:
    feat_dim = feat_dim or items[0].node_feats.shape[1]
    node_ptr, pair_ptr = [0], [0]
    edge_index, pair_index = [], []
    for it in items:
        off = node_ptr[-1]
        g = it.graph
        if g.num_edges:
            edge_index.append(np.array([[i for i, _, _ in g.edges], [j for _, j, _ in g.edges]]) + off)
        pair_index.append(it.pair_index + off)
        node_ptr.append(off + g.num_nodes)
        pair_ptr.append(pair_ptr[-1] + it.pair_index.shape[1])
    ef = [it.edge_feats for it in items if it.edge_feats.shape[0]]
    return GraphBatch(
        graphs=[it.graph for it in items],
        node_feats=torch.from_numpy(np.concatenate([it.node_feats for it in items])),
        edge_feats=torch.from_numpy(np.concatenate(ef)) if ef else torch.zeros(0, feat_dim),
        edge_index=torch.from_numpy(np.concatenate(edge_index, axis=1)) if edge_index
        else torch.zeros(2, 0, dtype=torch.long),
        node_targets=torch.from_numpy(np.concatenate([it.node_targets for it in items])),
        pair_index=torch.from_numpy(np.concatenate(pair_index, axis=1)).long(),
        pair_targets=torch.from_numpy(np.concatenate([it.pair_targets for it in items])),
        node_ptr=node_ptr,
        pair_ptr=pair_ptr,
    )


# --- the end-to-end system ---------------------------------------------------

class SemanticSystem(nn.Module):
    """Semantic encoder, channel codec and semantic decoder in one module."""

    def __init__(self, cfg: ExperimentConfig, vocab: Vocabulary):
        super().__init__()
        d_z, k = cfg.encoder.d_z, cfg.channel.k
        self.cfg = cfg
        self.encoder = build_encoder(cfg.encoder)
        self.channel_encoder = ChannelEncoder(d_z, k, cfg.channel.hidden)
        self.channel_decoder = ChannelDecoder(d_z, k, cfg.channel.hidden)
        self.node_classifier = NodeClassifier(d_z, vocab.num_entities, cfg.decoder.node_hidden)
        self.relation_classifier = RelationClassifier(d_z, vocab.num_relations, cfg.decoder.heads,
                                                      cfg.decoder.ff_dim)

    def transmit(self, batch: GraphBatch) -> tuple[torch.Tensor, SymbolBlock]:
        x_prime = self.encoder(batch.node_feats, batch.edge_feats, batch.edge_index)
        return x_prime, self.channel_encoder(x_prime)

    def forward(self, batch: GraphBatch, snr_db: float, generator: torch.Generator | None = None):
        x_prime, tx = self.transmit(batch)
        rx = awgn_apply(tx, snr_db, generator=generator)
        y = self.channel_decoder(rx)
        node_logits = self.node_classifier(y)
        rel_logits = self.relation_classifier.score_pairs(y, batch.pair_index) if batch.pair_index.numel() \
            else y.new_zeros(0, self.relation_classifier.num_relations)
        return {"x_prime": x_prime, "tx": tx, "rx": rx, "y": y,
                "node_logits": node_logits, "rel_logits": rel_logits}


def set_determinism(seed: int, deterministic: bool = True) -> None:
    random.seed(seed)
    np.random.seed(seed % 2**32)
    torch.manual_seed(seed)
    if deterministic:
        torch.use_deterministic_algorithms(True)
        torch.set_num_threads(1)


def _mix(*parts: int) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


class Trainer:
    def __init__(self, cfg: ExperimentConfig, vocab: Vocabulary):
        self.cfg = cfg
        self.vocab = vocab
        set_determinism(cfg.train.seed, cfg.train.deterministic)
        self.system = SemanticSystem(cfg, vocab)
        tc: TrainConfig = cfg.train
        self.mine = MineEstimator(2 * cfg.channel.k, 2 * cfg.channel.k, tc.mine_hidden, tc.mine_lr, tc.mine_ema)
        self.optimizer = torch.optim.Adam(self.system.parameters(), lr=tc.lr)
        self.epoch = 0

    def _set_lr(self, epoch: int) -> None:
        tc = self.cfg.train
        lr = tc.lr
        if tc.lr_schedule == "cosine" and tc.epochs > 1:
            lr = 0.5 * tc.lr * (1 + math.cos(math.pi * min(epoch, tc.epochs - 1) / (tc.epochs - 1)))
        for group in self.optimizer.param_groups:
            group["lr"] = lr

    def _batches(self, items: Sequence[GraphItem], epoch: int) -> list[GraphBatch]:
        order = np.random.default_rng(_mix(self.cfg.train.seed, epoch)).permutation(len(items))
        bs = self.cfg.train.batch_size
        return [collate([items[i] for i in order[k:k + bs]]) for k in range(0, len(order), bs)]

    def _guard(self, fn, *args):
        try:
            return fn(*args)
        except FloatingPointError as exc:
            raise TrainingDiverged(f"epoch {self.epoch}: {exc}") from exc

    def train_epoch(self, items: Sequence[GraphItem], snr_db: float | None = None) -> dict[str, float]:
        """Step 1 calibrates MINE on fresh channel pairs; step 2 trains the rest with MINE frozen."""
        tc = self.cfg.train
        snr_db = tc.reference_snr_db if snr_db is None else snr_db
        epoch = self.epoch
        batches = self._batches(items, epoch)
        noise = torch.Generator().manual_seed(_mix(tc.seed, epoch, 1))
        shuffle = torch.Generator().manual_seed(_mix(tc.seed, epoch, 2))

        self.system.eval()
        self.mine.freeze(False)
        mine_steps = tc.mine_steps if tc.mine_steps is not None else len(batches)
        for s in range(mine_steps):
            batch = batches[s % len(batches)]
            with torch.no_grad():
                _, tx = self._guard(self.system.transmit, batch)
                rx = awgn_apply(tx, snr_db, generator=noise)
            if tx.iq.shape[0] >= 2:
                self.mine.step(tx.flat(), rx.flat(), shuffle)

        self._set_lr(epoch)
        self.system.train()
        self.mine.freeze(True)
        sums = {"ce_nodes": 0.0, "ce_relations": 0.0, "mi": 0.0, "loss": 0.0}
        correct = total = 0
        for batch in batches:
            out = self._guard(self.system, batch, snr_db, noise)
            if out["tx"].iq.shape[0] >= 2:
                mi = self.mine.estimate(out["tx"].flat(), out["rx"].flat(), shuffle)
            else:
                mi = out["y"].new_zeros(())
            weights = (relation_class_weights(batch.pair_targets, self.vocab.num_relations)
                       if self.cfg.decoder.none_weighting else None)
            loss, parts = compute_loss(out["node_logits"], batch.node_targets, out["rel_logits"],
                                       batch.pair_targets, mi, tc.alpha, weights)
            if not torch.isfinite(loss):
                raise TrainingDiverged(f"non-finite loss at epoch {epoch}: {parts}")
            self.optimizer.zero_grad()
            loss.backward()
            if tc.grad_clip:
                nn.utils.clip_grad_norm_(self.system.parameters(), tc.grad_clip)
            self.optimizer.step()
            for key in ("ce_nodes", "ce_relations", "mi"):
                sums[key] += float(parts[key])
            sums["loss"] += float(loss.detach())
            correct += int((out["node_logits"].argmax(-1) == batch.node_targets).sum())
            total += batch.node_targets.numel()
        self.epoch += 1
        metrics = {k: v / len(batches) for k, v in sums.items()}
        metrics["train_node_acc"] = correct / max(total, 1)
        return metrics

    @torch.no_grad()
    def evaluate(self, items: Sequence[GraphItem], snr_db: float, seed: int = 0,
                 batch_size: int = 64) -> dict:
        """Decode every graph at ``snr_db``; returns accuracy, F1 and the decoded graphs."""
        self.system.eval()
        noise = torch.Generator().manual_seed(seed)
        decoded, pred_nodes, true_nodes, f1s = [], [], [], []
        matched = predicted = reference = 0
        for k in range(0, len(items), batch_size):
            chunk = items[k:k + batch_size]
            batch = collate(chunk)
            out = self.system(batch, snr_db, noise)
            labels = out["node_logits"].argmax(-1)
            rels = out["rel_logits"].argmax(-1)
            pred_nodes.append(labels)
            true_nodes.append(batch.node_targets)
            for b, it in enumerate(chunk):
                n0, n1 = batch.node_ptr[b], batch.node_ptr[b + 1]
                p0, p1 = batch.pair_ptr[b], batch.pair_ptr[b + 1]
                g_hat = assemble_graph(labels[n0:n1], torch.from_numpy(it.pair_index), rels[p0:p1],
                                       self.vocab, graph_id=it.graph.graph_id)
                rep = triple_f1(g_hat, it.graph)
                decoded.append(g_hat)
                f1s.append(rep.f1)
                matched += rep.matched
                predicted += rep.predicted
                reference += rep.reference
        p = matched / predicted if predicted else 0.0
        r = matched / reference if reference else 0.0
        return {
            "node_acc": node_accuracy(torch.cat(pred_nodes), torch.cat(true_nodes)),
            "f1": float(np.mean(f1s)) if f1s else 0.0,
            "micro_f1": 2 * p * r / (p + r) if p + r else 0.0,
            "decoded": decoded,
        }

    # --- checkpoints ---

    def save(self, path: str | Path) -> None:
        torch.save({
            "format": CHECKPOINT_FORMAT,
            "version": CHECKPOINT_VERSION,
            "config": self.cfg.to_dict(),
            "vocab_digest": self.vocab.digest(),
            "epoch": self.epoch,
            "system": self.system.state_dict(),
            "mine": self.mine.state_dict(),
            "optimizer": self.optimizer.state_dict(),
        }, path)

    @classmethod
    def load(cls, path: str | Path, vocab: Vocabulary) -> "Trainer":
        state = torch.load(path, map_location="cpu", weights_only=False)
        if state.get("format") != CHECKPOINT_FORMAT:
            raise ValueError(f"{path} is not a {CHECKPOINT_FORMAT} file")
        if state["vocab_digest"] != vocab.digest():
            raise VocabularyMismatch(f"{path} was trained with a different vocabulary")
        trainer = cls(config_from_dict(state["config"]), vocab)
        trainer.system.load_state_dict(state["system"])
        trainer.mine.load_state_dict(state["mine"])
        trainer.optimizer.load_state_dict(state["optimizer"])
        trainer.epoch = state["epoch"]
        return trainer
