#!/usr/bin/env python3
"""Write a seeded DBpedia-style corpus in the WebNLG XML release layout (train/dev/test)."""

import argparse

from kgsemcom.synthetic import generate_corpus


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="data/synthetic")
    ap.add_argument("--graphs", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--quoted-rate", type=float, default=0.5,
                    help="share of cities/people that also appear as quoted literals")
    args = ap.parse_args()
    print(generate_corpus(args.out, n_graphs=args.graphs, seed=args.seed, quoted_rate=args.quoted_rate))


if __name__ == "__main__":
    main()
