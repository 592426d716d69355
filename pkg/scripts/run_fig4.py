#!/usr/bin/env python3
"""Mean bits per graph by node count on the test split, and overall compression gains."""

import argparse
import json

from kgsemcom.config import load_config
from kgsemcom.experiments import run_fig4


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=None)
    ap.add_argument("--webnlg", help="WebNLG release root (overrides data.webnlg_dir)")
    ap.add_argument("--set", dest="overrides", action="append", default=[])
    ap.add_argument("--out", default="runs/fig4")
    args = ap.parse_args()
    overrides = list(args.overrides) + ([f"data.webnlg_dir={args.webnlg}"] if args.webnlg else [])
    cfg = load_config(args.config, overrides)
    summary = run_fig4(cfg, args.out)
    cfg.dump(f"{args.out}/config.yaml")
    print(json.dumps(summary, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
