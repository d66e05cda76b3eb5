#!/usr/bin/env python3
"""Coverage and band-width study over a grid of population sizes and
sampling fractions.

Runs the full simulation for each (N, alpha) cell and prints one report
per cell; optionally writes the machine-readable CSVs next to it.  With
the defaults (B = 1000 replications, 1000 Gaussian draws per band) the
six-cell grid takes a few minutes on one core.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from cpsband import SimConfig, format_report, run_experiment


def parse_cell(text: str) -> tuple[int, float]:
    left, right = text.split(":")
    return int(left), float(right)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--cells",
        nargs="+",
        default=["500:0.05", "500:0.10", "1000:0.05", "1000:0.10",
                 "2000:0.05", "2000:0.10"],
        help="population:fraction pairs, e.g. 500:0.10",
    )
    parser.add_argument("--replications", type=int, default=1000)
    parser.add_argument("--quantile-draws", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=20260818)
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument(
        "--design", choices=["equal", "proportional"], default="equal"
    )
    parser.add_argument(
        "--out-dir", default=None, help="write per-cell CSV reports here"
    )
    args = parser.parse_args()

    out_dir = Path(args.out_dir) if args.out_dir else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)

    for cell in args.cells:
        n_units, fraction = parse_cell(cell)
        config = SimConfig(
            population_size=n_units,
            sampling_fraction=fraction,
            replications=args.replications,
            quantile_draws=args.quantile_draws,
            master_seed=args.seed,
            design=args.design,
            threads=args.threads,
        )
        report = run_experiment(config)
        text, csv_text = format_report(report)
        print(text, end="")
        print(f"runtime={report.runtime_seconds:.1f}s\n")
        if out_dir is not None:
            stem = f"coverage_N{n_units}_a{fraction:g}_{args.design}"
            (out_dir / f"{stem}.csv").write_text(csv_text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
