#!/usr/bin/env python3
"""Side-by-side coverage runs under the two calibration designs.

The equal design gives every unit inclusion probability n/N; the
proportional design calibrates on the lognormal sizes, concentrating
inclusion on large units.  Because the outcome variance grows with the
size variable, proportional calibration inflates the weighted process
at the small-probability units and the bands come out several times
wider.  This script quantifies that gap at one configuration.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from cpsband import SimConfig, format_report, run_experiment


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--population-size", type=int, default=500)
    parser.add_argument("--sampling-fraction", type=float, default=0.10)
    parser.add_argument("--replications", type=int, default=200)
    parser.add_argument("--quantile-draws", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--threads", type=int, default=1)
    args = parser.parse_args()

    widths = {}
    for design in ("equal", "proportional"):
        config = SimConfig(
            population_size=args.population_size,
            sampling_fraction=args.sampling_fraction,
            replications=args.replications,
            quantile_draws=args.quantile_draws,
            master_seed=args.seed,
            design=design,
            threads=args.threads,
        )
        report = run_experiment(config)
        text, _ = format_report(report)
        print(text)
        widths[design] = {
            (c.estimator, c.level): c.avg_width for c in report.cells
        }

    print("width ratio proportional / equal:")
    for key in sorted(widths["equal"]):
        ratio = widths["proportional"][key] / widths["equal"][key]
        print(f"  {key[0]:<5} level={key[1]:g}: {ratio:.2f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
