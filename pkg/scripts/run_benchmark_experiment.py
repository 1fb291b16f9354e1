#!/usr/bin/env python3
"""Regenerate the benchmark suite and run the full comparison protocol.

Equivalent to `rvrp generate` followed by `rvrp experiment`; kept as one
script so the whole study is a single reproducible command.
"""

import argparse
import sys
from pathlib import Path

from rvrp.cli import main as cli_main


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--runs", type=int, default=20)
    parser.add_argument("--jobs", type=int, default=4)
    parser.add_argument("--population", type=int, default=100)
    parser.add_argument("--suite", default="benchmark")
    parser.add_argument("--out", default="results")
    args = parser.parse_args()

    if not (Path(args.suite) / "suite-manifest.json").exists():
        code = cli_main(["generate", "--seed", str(args.seed), "--out", args.suite])
        if code != 0:
            return code
    return cli_main(
        [
            "experiment",
            "--suite", args.suite,
            "--runs", str(args.runs),
            "--seed", str(args.seed),
            "--jobs", str(args.jobs),
            "--population", str(args.population),
            "--out", args.out,
        ]
    )


if __name__ == "__main__":
    sys.exit(main())
