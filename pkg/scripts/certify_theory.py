"""Run the certification checks for identity, leaky-ReLU and ReLU generators.

Writes one report directory per activation under --out and prints the verdicts.

    python3 scripts/certify_theory.py --out runs/theory
"""

import argparse
from pathlib import Path

from gencs.cli import main as cli_main


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--dims", default="2,5,10")
    p.add_argument("--m", type=int, default=8)
    p.add_argument("--outliers", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="runs/theory")
    args = p.parse_args()
    for act in ("identity", "leaky", "relu"):
        out = Path(args.out) / act
        code = cli_main(["theory", "--activation", act, "--dims", args.dims, "--m", str(args.m),
                         "--outliers", str(args.outliers), "--seed", str(args.seed),
                         "--out", str(out)])
        print(f"== {act}: exit {code}, report in {out}\n")


if __name__ == "__main__":
    main()
