#!/usr/bin/env python3
"""Node accuracy against embedding size for the GNN and FFN encoders (noiseless)."""

import argparse
import json

from kgsemcom.config import load_config
from kgsemcom.experiments import run_fig2


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default="configs/fig2_desk.yaml")
    ap.add_argument("--set", dest="overrides", action="append", default=[])
    ap.add_argument("--out", default="runs/fig2")
    args = ap.parse_args()
    cfg = load_config(args.config, args.overrides)
    rows = run_fig2(cfg, args.out)
    cfg.dump(f"{args.out}/config.yaml")
    print(json.dumps(rows, indent=2))


if __name__ == "__main__":
    main()
