"""Experiment drivers: training runs and the accuracy / F1 / bit-count sweeps."""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .baselines import HuffmanCode, SixBitCode, classical_pipeline_run, huffman_build
from .config import ExperimentConfig
from .evaluation import (BASELINE_SCHEMES, SEMANTIC_SCHEMES, bits_per_graph, f1_from_counts, snr_to_reach,
                         triple_f1_from_triples)
from .features import TextEmbedder, load_encoder
from .kg import DatasetSplit, KnowledgeGraph, Vocabulary, build_vocabulary, graph_to_triples, load_webnlg, \
    serialize_for_baseline
from .synthetic import generate_split
from .training import GraphItem, Trainer, prepare_items

log = logging.getLogger(__name__)

METRICS_COLUMNS = ["epoch", "ce_nodes", "ce_relations", "mi", "node_acc", "f1"]
FIG2_COLUMNS = ["variant", "d_z", "compression_factor", "node_acc", "f1"]
FIG3_COLUMNS = ["scheme", "snr_db", "f1", "micro_f1", "node_acc"]
FIG4_COLUMNS = ["nodes", "graphs", "semantic_gnn", "semantic_ffn", "huffman", "sixbit"]

_SCHEME_OF = {"llm_gnn": "semantic_gnn", "llm_ffn": "semantic_ffn"}


def load_dataset(cfg: ExperimentConfig) -> DatasetSplit:
    d = cfg.data
    if d.webnlg_dir:
        ds = load_webnlg(d.webnlg_dir)
    else:
        ds = generate_split(d.synthetic_graphs, seed=d.synthetic_seed)
    if d.max_graphs:
        ds = subset(ds, d.max_graphs)
    return ds


def subset(ds: DatasetSplit, max_graphs: int) -> DatasetSplit:
    """Keep at most ``max_graphs`` graphs, split 80/10/10 in original order."""
    n_eval = max(1, max_graphs // 10)
    return DatasetSplit(train=ds.train[:max_graphs - 2 * n_eval], dev=ds.dev[:n_eval], test=ds.test[:n_eval],
                        provenance=ds.provenance, skipped=ds.skipped)


@dataclass
class Workspace:
    """Dataset, closed vocabulary and precomputed text features."""

    dataset: DatasetSplit
    vocab: Vocabulary
    embedder: TextEmbedder
    train: list[GraphItem]
    dev: list[GraphItem]
    test: list[GraphItem]

    @classmethod
    def build(cls, cfg: ExperimentConfig, dataset: DatasetSplit | None = None) -> "Workspace":
        ds = dataset if dataset is not None else load_dataset(cfg)
        vocab = build_vocabulary(ds)
        embedder = TextEmbedder(load_encoder(cfg.data.text_model), cfg.data.cache_path)
        ws = cls(ds, vocab, embedder, prepare_items(ds.train, embedder, vocab),
                 prepare_items(ds.dev, embedder, vocab), prepare_items(ds.test, embedder, vocab))
        embedder.flush()
        return ws


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x) if math.isfinite(x) else ("inf" if x > 0 else "-inf")
    return str(x)


def write_csv(path: str | Path, columns: Sequence[str], rows: Sequence[dict]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in columns])
    return path


def train_model(cfg: ExperimentConfig, ws: Workspace, snr_db: float | None = None,
                metrics_path: str | Path | None = None) -> Trainer:
    """Train for ``cfg.train.epochs``; one metrics row per epoch (dev split at the training SNR)."""
    snr = cfg.train.reference_snr_db if snr_db is None else snr_db
    trainer = Trainer(cfg, ws.vocab)
    eval_items = ws.dev or ws.test
    rows = []
    for epoch in range(cfg.train.epochs):
        m = trainer.train_epoch(ws.train, snr)
        ev = trainer.evaluate(eval_items, snr, seed=cfg.eval.seed) if eval_items else {"node_acc": 0.0, "f1": 0.0}
        rows.append({"epoch": epoch, "ce_nodes": m["ce_nodes"], "ce_relations": m["ce_relations"],
                     "mi": m["mi"], "node_acc": ev["node_acc"], "f1": ev["f1"]})
        log.info("epoch %d loss %.4f node_acc %.4f f1 %.4f", epoch, m["loss"], ev["node_acc"], ev["f1"])
        if metrics_path is not None:
            write_csv(metrics_path, METRICS_COLUMNS, rows)
    return trainer


def _variant_cfg(cfg: ExperimentConfig, variant: str, **encoder) -> ExperimentConfig:
    return dataclasses.replace(cfg, encoder=dataclasses.replace(cfg.encoder, variant=variant, **encoder))


def run_fig2(cfg: ExperimentConfig, out_dir: str | Path, ws: Workspace | None = None,
             variants: Sequence[str] = ("llm_gnn", "llm_ffn")) -> list[dict]:
    """Noiseless node accuracy against embedding size for both encoders."""
    out_dir = Path(out_dir)
    ws = ws or Workspace.build(cfg)
    rows = []
    for d_z in cfg.eval.d_z_grid:
        for variant in variants:
            vcfg = _variant_cfg(cfg, variant, d_z=int(d_z))
            trainer = train_model(vcfg, ws, snr_db=math.inf,
                                  metrics_path=out_dir / f"metrics_{variant}_dz{d_z}.csv")
            ev = trainer.evaluate(ws.test, math.inf, seed=cfg.eval.seed)
            rows.append({"variant": variant, "d_z": int(d_z), "compression_factor": vcfg.encoder.compression_factor,
                         "node_acc": ev["node_acc"], "f1": ev["f1"]})
    write_csv(out_dir / "fig2.csv", FIG2_COLUMNS, rows)
    _plot_fig2(rows, out_dir / "fig2.png")
    return rows


def baseline_codebooks(ds: DatasetSplit) -> tuple[HuffmanCode, SixBitCode]:
    """Codebooks from the training serialization, shared by both ends."""
    train_text = "".join(serialize_for_baseline(g) for g in ds.train)
    all_chars = "".join(sorted({c for g in ds.all_graphs() for c in serialize_for_baseline(g)}))
    return huffman_build(train_text, extra_symbols=all_chars), SixBitCode.from_corpus(train_text)


def baseline_curve(graphs: Sequence[KnowledgeGraph], coder: str, snr_grid: Sequence[float], seed: int,
                   huffman: HuffmanCode | None = None, sixbit: SixBitCode | None = None,
                   repeats: int = 1) -> list[dict]:
    rows = []
    for s_idx, snr in enumerate(snr_grid):
        f1s = []
        matched = predicted = reference = 0
        for rep in range(repeats):
            for g_idx, g in enumerate(graphs):
                res = classical_pipeline_run(g, coder, snr, seed=_seed(seed, s_idx, rep, g_idx),
                                             huffman=huffman, sixbit=sixbit)
                r = triple_f1_from_triples(res.triples, [t.as_tuple() for t in graph_to_triples(g)])
                f1s.append(r.f1)
                matched, predicted, reference = matched + r.matched, predicted + r.predicted, reference + r.reference
        rows.append({"scheme": coder, "snr_db": float(snr), "f1": float(np.mean(f1s)),
                     "micro_f1": f1_from_counts(matched, predicted, reference).f1, "node_acc": float("nan")})
    return rows


def _seed(*parts: int) -> int:
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])


def semantic_curve(trainer: Trainer, items: Sequence[GraphItem], scheme: str, snr_grid: Sequence[float],
                   seed: int, repeats: int = 1) -> list[dict]:
    rows = []
    for s_idx, snr in enumerate(snr_grid):
        evs = [trainer.evaluate(items, snr, seed=_seed(seed, s_idx, rep)) for rep in range(repeats)]
        rows.append({"scheme": scheme, "snr_db": float(snr),
                     "f1": float(np.mean([e["f1"] for e in evs])),
                     "micro_f1": float(np.mean([e["micro_f1"] for e in evs])),
                     "node_acc": float(np.mean([e["node_acc"] for e in evs]))})
    return rows


def summarize_fig3(rows: Sequence[dict], fraction: float = 0.9) -> dict:
    by_scheme = defaultdict(list)
    for r in rows:
        by_scheme[r["scheme"]].append(r)
    out = {}
    for scheme, rs in by_scheme.items():
        rs = sorted(rs, key=lambda r: r["snr_db"])
        f1 = [r["f1"] for r in rs]
        out[scheme] = {"max_f1": max(f1), "snr_at_90pct": snr_to_reach([r["snr_db"] for r in rs], f1, fraction)}
    return out


def run_fig3(cfg: ExperimentConfig, out_dir: str | Path, ws: Workspace | None = None,
             variants: Sequence[str] = ("llm_gnn", "llm_ffn"), trainers: dict | None = None) -> dict:
    """F1 against SNR for the semantic encoders (trained at the reference SNR) and both baselines."""
    out_dir = Path(out_dir)
    ws = ws or Workspace.build(cfg)
    grid = [float(s) for s in cfg.eval.snr_grid]
    trainers = dict(trainers or {})
    rows: list[dict] = []
    for variant in variants:
        if variant not in trainers:
            trainers[variant] = train_model(_variant_cfg(cfg, variant), ws,
                                            metrics_path=out_dir / f"metrics_{variant}.csv")
        rows += semantic_curve(trainers[variant], ws.test, _SCHEME_OF[variant], grid, cfg.eval.seed,
                               cfg.eval.repeats)
    huff, six = baseline_codebooks(ws.dataset)
    for coder in BASELINE_SCHEMES:
        rows += baseline_curve(ws.dataset.test, coder, grid, cfg.eval.seed, huff, six, cfg.eval.repeats)
    write_csv(out_dir / "fig3.csv", FIG3_COLUMNS, rows)
    summary = summarize_fig3(rows)
    (out_dir / "fig3_summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    _plot_fig3(rows, out_dir / "fig3.png")
    return {"rows": rows, "summary": summary, "trainers": trainers}


def fig4_table(ds: DatasetSplit, k: int = 5, bits_per_symbol: int = 6) -> tuple[list[dict], dict]:
    """Mean bits per test graph grouped by node count, plus overall compression gains."""
    huff, six = baseline_codebooks(ds)
    groups: dict[int, dict[str, list[float]]] = defaultdict(lambda: defaultdict(list))
    totals: dict[str, float] = defaultdict(float)
    for g in ds.test:
        for scheme in SEMANTIC_SCHEMES + BASELINE_SCHEMES:
            b = bits_per_graph(g, scheme, k, bits_per_symbol, huffman=huff, sixbit=six).bits_per_graph
            groups[g.num_nodes][scheme].append(b)
            totals[scheme] += b
    rows = []
    for n in sorted(groups):
        row = {"nodes": n, "graphs": len(groups[n]["huffman"])}
        row.update({s: float(np.mean(groups[n][s])) for s in SEMANTIC_SCHEMES + BASELINE_SCHEMES})
        rows.append(row)
    sem = totals["semantic_gnn"]
    summary = {
        "graphs": len(ds.test),
        "mean_bits": {s: totals[s] / max(len(ds.test), 1) for s in totals},
        "gain_vs_huffman": totals["huffman"] / sem if sem else float("nan"),
        "gain_vs_sixbit": totals["sixbit"] / sem if sem else float("nan"),
        "k": k,
        "bits_per_symbol": bits_per_symbol,
    }
    return rows, summary


def run_fig4(cfg: ExperimentConfig, out_dir: str | Path, dataset: DatasetSplit | None = None) -> dict:
    out_dir = Path(out_dir)
    ds = dataset if dataset is not None else load_dataset(cfg)
    rows, summary = fig4_table(ds, cfg.channel.k, cfg.eval.bits_per_symbol)
    write_csv(out_dir / "fig4.csv", FIG4_COLUMNS, rows)
    (out_dir / "fig4_summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    _plot_fig4(rows, out_dir / "fig4.png")
    return summary


# --- plots -------------------------------------------------------------------

def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def _plot_fig2(rows, path):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for variant in sorted({r["variant"] for r in rows}):
        rs = sorted((r for r in rows if r["variant"] == variant), key=lambda r: r["d_z"])
        ax.plot([r["d_z"] for r in rs], [r["node_acc"] for r in rs], marker="o", label=variant)
    ax.set_xscale("log", base=2)
    ax.set_xlabel("node embedding dimension")
    ax.set_ylabel("node classification accuracy")
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _plot_fig3(rows, path):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for scheme in dict.fromkeys(r["scheme"] for r in rows):
        rs = sorted((r for r in rows if r["scheme"] == scheme), key=lambda r: r["snr_db"])
        ax.plot([r["snr_db"] for r in rs], [r["f1"] for r in rs], marker="o", label=scheme)
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel("triple F1")
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _plot_fig4(rows, path):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 3.5))
    nodes = [r["nodes"] for r in rows]
    for scheme in ("semantic_gnn", "huffman", "sixbit"):
        ax.plot(nodes, [r[scheme] for r in rows], marker="o",
                label="semantic" if scheme == "semantic_gnn" else scheme)
    ax.set_xlabel("nodes per graph")
    ax.set_ylabel("bits per graph")
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
