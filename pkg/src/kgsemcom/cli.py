"""Command-line entry point: ``kgsemcom <subcommand> [--config FILE] [--set section.key=value ...]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections import Counter
from pathlib import Path

from .config import ConfigError, ExperimentConfig, load_config
from .training import TrainingDiverged

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED = 0, 2, 3

log = logging.getLogger("kgsemcom")


def _common(p: argparse.ArgumentParser, out_default: str) -> None:
    p.add_argument("--config", help="YAML experiment config")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE",
                   help="override a config value; repeatable")
    p.add_argument("--out", default=out_default, help="run directory")


def _prepare(args) -> tuple[ExperimentConfig, Path]:
    cfg = load_config(args.config, args.overrides)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg.dump(out / "config.yaml")
    return cfg, out


def cmd_ingest(args) -> int:
    from .kg import build_vocabulary, graph_to_triples, load_webnlg
    ds = load_webnlg(args.webnlg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    vocab = build_vocabulary(ds)
    vocab.write_manifest(out)
    data = {split: [{"id": g.graph_id, "category": g.category,
                     "triples": [list(t.as_tuple()) for t in graph_to_triples(g)]}
                    for g in getattr(ds, split)] for split in ("train", "dev", "test")}
    (out / "dataset.json").write_text(json.dumps(data, indent=1, sort_keys=True))
    stats = {
        "graphs": {s: len(getattr(ds, s)) for s in ("train", "dev", "test")},
        "skipped_entries": ds.skipped,
        "entities": vocab.num_entities,
        "relations": vocab.num_relations,
        "test_node_histogram": dict(sorted(Counter(g.num_nodes for g in ds.test).items())),
        "vocab_digest": vocab.digest(),
    }
    (out / "manifest.json").write_text(json.dumps(stats, indent=2, sort_keys=True) + "\n")
    print(json.dumps(stats, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_synth(args) -> int:
    from .synthetic import generate_corpus
    path = generate_corpus(args.out, n_graphs=args.graphs, seed=args.seed)
    print(f"wrote synthetic WebNLG-format corpus to {path}")
    return EXIT_OK


def cmd_train(args) -> int:
    from .experiments import Workspace, train_model
    cfg, out = _prepare(args)
    ws = Workspace.build(cfg)
    ws.vocab.write_manifest(out)
    trainer = train_model(cfg, ws, metrics_path=out / "metrics.csv")
    trainer.save(out / "checkpoint.pt")
    print(f"checkpoint: {out / 'checkpoint.pt'}")
    return EXIT_OK


def cmd_eval(args) -> int:
    from .config import config_from_dict
    from .experiments import FIG3_COLUMNS, Workspace, semantic_curve, write_csv
    from .training import Trainer
    import torch
    state = torch.load(args.checkpoint, map_location="cpu", weights_only=False)
    cfg = config_from_dict(state["config"])
    ws = Workspace.build(cfg)
    trainer = Trainer.load(args.checkpoint, ws.vocab)
    grid = [float(s) for s in args.snr] if args.snr else cfg.eval.snr_grid
    scheme = "semantic_gnn" if cfg.encoder.variant == "llm_gnn" else "semantic_ffn"
    rows = semantic_curve(trainer, ws.test, scheme, grid, cfg.eval.seed, cfg.eval.repeats)
    out = Path(args.out)
    write_csv(out / "eval.csv", FIG3_COLUMNS, rows)
    for r in rows:
        print(f"{r['snr_db']:>6} dB  node_acc {r['node_acc']:.4f}  f1 {r['f1']:.4f}")
    return EXIT_OK


def cmd_fig2(args) -> int:
    from .experiments import run_fig2
    cfg, out = _prepare(args)
    for r in run_fig2(cfg, out):
        print(f"{r['variant']:8s} d_z={r['d_z']:<4d} node_acc {r['node_acc']:.4f}")
    return EXIT_OK


def cmd_fig3(args) -> int:
    from .experiments import run_fig3
    cfg, out = _prepare(args)
    res = run_fig3(cfg, out)
    print(json.dumps(res["summary"], indent=2, sort_keys=True))
    return EXIT_OK


def cmd_fig4(args) -> int:
    from .experiments import run_fig4
    cfg, out = _prepare(args)
    print(json.dumps(run_fig4(cfg, out), indent=2, sort_keys=True))
    return EXIT_OK


def cmd_baseline(args) -> int:
    from .experiments import FIG3_COLUMNS, baseline_codebooks, baseline_curve, load_dataset, write_csv
    cfg, out = _prepare(args)
    ds = load_dataset(cfg)
    huff, six = baseline_codebooks(ds)
    huff.export(out / "huffman_codebook.tsv")
    grid = [float(s) for s in args.snr] if args.snr else cfg.eval.snr_grid
    rows = []
    for coder in args.coder:
        rows += baseline_curve(ds.test, coder, grid, cfg.eval.seed, huff, six, cfg.eval.repeats)
    write_csv(out / "baseline.csv", FIG3_COLUMNS, rows)
    for r in rows:
        print(f"{r['scheme']:8s} {r['snr_db']:>6} dB  f1 {r['f1']:.4f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kgsemcom", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse a WebNLG release and write vocabulary manifests")
    p.add_argument("--webnlg", required=True, help="release root containing train/dev/test")
    p.add_argument("--out", default="runs/ingest")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("synth", help="write a synthetic corpus in WebNLG XML layout")
    p.add_argument("--out", default="data/synthetic")
    p.add_argument("--graphs", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train one end-to-end system")
    _common(p, "runs/train")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint over an SNR grid")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--snr", nargs="*", help="SNR values in dB (default: eval.snr_grid)")
    p.add_argument("--out", default="runs/eval")
    p.set_defaults(func=cmd_eval)

    for name, func, helptext in (("fig2", cmd_fig2, "node accuracy vs embedding size"),
                                 ("fig3", cmd_fig3, "F1 vs SNR, semantic and classical"),
                                 ("fig4", cmd_fig4, "bits per graph vs node count")):
        p = sub.add_parser(name, help=helptext)
        _common(p, f"runs/{name}")
        p.set_defaults(func=func)

    p = sub.add_parser("baseline", help="classical Huffman / 6-bit + 64-QAM chain over an SNR grid")
    _common(p, "runs/baseline")
    p.add_argument("--coder", nargs="+", default=["huffman", "sixbit"], choices=["huffman", "sixbit"])
    p.add_argument("--snr", nargs="*")
    p.set_defaults(func=cmd_baseline)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TrainingDiverged as exc:
        print(f"training aborted: {exc}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
