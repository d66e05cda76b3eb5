"""Command-line surface: calibrate, sample, band, simulate, oracle-check.

All file outputs are written atomically (temp file in the target
directory, then rename) as UTF-8 with LF line endings, so reruns with
identical inputs and seed produce identical bytes.  Worker count
resolution order: --threads flag, then the CPSBAND_THREADS environment
variable, then the config file value.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from .calibration import (
    InclusionProbabilities,
    PopulationFrame,
    cps_inclusion_from_poisson,
    pips_probabilities,
    poisson_from_cps_inclusion,
)
from .inference import (
    build_band,
    cholesky_psd,
    coverage_check,
    estimate_cov_hajek,
    estimate_cov_ht,
    simulate_sup_quantile,
)
from .oracle import (
    empirical_cps_distribution,
    enumerate_cps_distribution,
    exact_design_moments,
    exact_inclusion_orders,
    total_variation,
)
from .processes import ThresholdGrid, hajek_evaluate, htep_evaluate, sup_norm_cdf
from .samplers import (
    RngStream,
    SampleIndicators,
    cps_sample_rejection,
    cps_sample_sequential,
    cps_sample_sequential_batch,
)
from .simulate import SimConfig, format_report, run_experiment

__all__ = ["main"]

THREADS_ENV_VAR = "CPSBAND_THREADS"


def _atomic_write_text(path: Path, text: str) -> None:
    directory = path.parent if str(path.parent) else Path(".")
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _csv_text(header: list[str], rows: list[list[object]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def _fmt(value: float) -> str:
    """Shortest decimal text that parses back to the same float."""
    return repr(float(value))


def _read_population(path: Path) -> tuple[list[str], PopulationFrame]:
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header != ["unit", "y", "x"]:
            raise ValueError(f"{path}: expected header unit,y,x")
        units, ys, xs = [], [], []
        for row in reader:
            if not row:
                continue
            units.append(row[0])
            ys.append(float(row[1]))
            xs.append(float(row[2]))
    return units, PopulationFrame(y=np.array(ys), x=np.array(xs))


def _read_sample(path: Path, units: list[str]) -> SampleIndicators:
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        fields = reader.fieldnames or []
        if "unit" not in fields or "s" not in fields:
            raise ValueError(f"{path}: sample CSV needs unit and s columns")
        by_unit = {row["unit"]: int(row["s"]) for row in reader}
    missing = [u for u in units if u not in by_unit]
    if missing or len(by_unit) != len(units):
        raise ValueError(f"{path}: sample units do not match the population")
    return SampleIndicators.from_array(np.array([by_unit[u] for u in units]))


def _resolve_threads(flag: int | None, fallback: int) -> int:
    if flag is not None:
        return flag
    env = os.environ.get(THREADS_ENV_VAR)
    if env:
        return int(env)
    return fallback


def _log_resolution(args: argparse.Namespace, **extra: object) -> None:
    detail = " ".join(f"{k}={v}" for k, v in extra.items())
    print(f"resolved: command={args.command} {detail}".rstrip())


def _cmd_calibrate(args: argparse.Namespace) -> int:
    units, pop = _read_population(Path(args.population))
    _log_resolution(args, population=args.population, size=args.size)
    incl = pips_probabilities(pop.x, args.size)
    params = poisson_from_cps_inclusion(incl)
    rows = [
        [unit, _fmt(x), _fmt(prob), _fmt(p)]
        for unit, x, prob, p in zip(units, pop.x, incl.pi, params.p)
    ]
    _atomic_write_text(Path(args.out), _csv_text(["unit", "x", "pi", "p"], rows))
    print(f"sum pi={incl.pi.sum():.12g} sum p={params.p.sum():.12g} n={args.size}")
    return 0


def _cmd_sample(args: argparse.Namespace) -> int:
    units, pop = _read_population(Path(args.population))
    _log_resolution(
        args, population=args.population, size=args.size,
        seed=args.seed, method=args.method,
    )
    incl = pips_probabilities(pop.x, args.size)
    params = poisson_from_cps_inclusion(incl)
    rng = RngStream(args.seed)
    if args.method == "sequential":
        sample = cps_sample_sequential(params, rng)
    else:
        sample = cps_sample_rejection(params, rng)
    rows = [
        [unit, _fmt(x), _fmt(prob), int(ind)]
        for unit, x, prob, ind in zip(units, pop.x, incl.pi, sample.s)
    ]
    _atomic_write_text(Path(args.out), _csv_text(["unit", "x", "pi", "s"], rows))
    print(f"drawn size={sample.count}")
    return 0


def _estimated_cdf(
    pop: PopulationFrame,
    incl: InclusionProbabilities,
    sample: SampleIndicators,
    grid: ThresholdGrid,
    estimator: str,
) -> np.ndarray:
    weights = sample.s / incl.pi
    if estimator == "hajek":
        weights = weights / weights.sum()
    else:
        weights = weights / pop.size
    order = np.argsort(pop.y, kind="stable")
    cum = np.concatenate(([0.0], np.cumsum(weights[order])))
    return cum[np.searchsorted(pop.y[order], grid.t, side="right")]


def _cmd_band(args: argparse.Namespace) -> int:
    units, pop = _read_population(Path(args.population))
    sample = _read_sample(Path(args.sample), units)
    _log_resolution(
        args, population=args.population, sample=args.sample,
        estimator=args.estimator, gamma=args.gamma, seed=args.seed,
    )
    n = sample.count
    incl = pips_probabilities(pop.x, n)
    grid = ThresholdGrid.from_population(pop.y)
    if args.estimator == "hajek":
        evaluation = hajek_evaluate(pop, incl, sample, grid)
        cov = estimate_cov_hajek(pop, incl, sample, np.sort(pop.y[sample.s == 1]))
    else:
        evaluation = htep_evaluate(pop, incl, sample, grid)
        cov = estimate_cov_ht(pop, incl, sample, np.sort(pop.y[sample.s == 1]))
    sup_stat = sup_norm_cdf(evaluation)
    factor = cholesky_psd(cov)
    quantile = simulate_sup_quantile(
        factor.lower, args.gamma, args.quantile_draws, RngStream(args.seed)
    )
    band = build_band(
        _estimated_cdf(pop, incl, sample, grid, args.estimator), quantile, pop.size
    )
    rows = [
        [_fmt(t), _fmt(c), _fmt(lo), _fmt(hi)]
        for t, c, lo, hi in zip(grid.t, band.center, band.lower, band.upper)
    ]
    _atomic_write_text(
        Path(args.out), _csv_text(["t", "center", "lower", "upper"], rows)
    )
    covered = coverage_check(sup_stat, quantile)
    print(
        f"sup={sup_stat:.6f} q_hat={quantile.q_hat:.6f} covered={covered} "
        f"width={band.width:.6f} jitter={factor.jitter:.3g}"
    )
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    with open(args.config, encoding="utf-8") as handle:
        raw = json.load(handle)
    if args.seed is not None:
        raw["master_seed"] = args.seed
    raw["threads"] = _resolve_threads(args.threads, int(raw.get("threads", 1)))
    if "levels" in raw:
        raw["levels"] = tuple(raw["levels"])
    config = SimConfig(**raw)
    _log_resolution(
        args,
        config=args.config,
        design=config.design,
        seed=config.master_seed,
        threads=config.threads,
    )
    report = run_experiment(config)
    text, csv_text = format_report(report)
    out = Path(args.out)
    _atomic_write_text(out.with_suffix(".txt"), text)
    _atomic_write_text(out.with_suffix(".csv"), csv_text)
    sys.stdout.write(text)
    print(f"runtime={report.runtime_seconds:.1f}s")
    return 0


def _oracle_instance(gen: np.random.Generator) -> tuple[np.ndarray, int]:
    n_units = int(gen.integers(4, 9))
    n = int(gen.integers(1, n_units))
    x = gen.lognormal(0.0, 0.5, n_units)
    return x, n


def _cmd_oracle_check(args: argparse.Namespace) -> int:
    _log_resolution(args, seed=args.seed, instances=args.instances)
    gen = np.random.default_rng(args.seed)
    failures = 0

    def report(name: str, ok: bool, detail: str) -> None:
        nonlocal failures
        failures += 0 if ok else 1
        print(f"{'PASS' if ok else 'FAIL'} {name} seed={args.seed} {detail}")

    for i in range(args.instances):
        x, n = _oracle_instance(gen)
        incl = pips_probabilities(x, n)
        params = poisson_from_cps_inclusion(incl)
        round_trip = np.abs(cps_inclusion_from_poisson(params).pi - incl.pi).max()
        report(f"round-trip[{i}]", round_trip < 1e-10, f"err={round_trip:.2e}")

        exact = enumerate_cps_distribution(params.p, n)
        pi_exact, pi_second = exact_inclusion_orders(exact)
        forward = np.abs(pi_exact - cps_inclusion_from_poisson(params).pi).max()
        report(f"forward-map[{i}]", forward < 1e-12, f"err={forward:.2e}")

        outer = np.outer(pi_exact, pi_exact)
        off = ~np.eye(len(pi_exact), dtype=bool)
        excess = (pi_second - outer)[off].max()
        report(f"neg-assoc[{i}]", excess <= 1e-12, f"excess={excess:.2e}")

        y = gen.normal(size=len(x))
        mean, _ = exact_design_moments(
            exact, lambda s: float((s * y / pi_exact).sum())
        )
        bias = abs(mean - y.sum())
        report(f"ht-unbiased[{i}]", bias < 1e-9 * max(1.0, abs(y.sum())),
               f"bias={bias:.2e}")

    x, n = _oracle_instance(gen)
    params = poisson_from_cps_inclusion(pips_probabilities(x, n))
    draws = cps_sample_sequential_batch(params, RngStream(args.seed), 20_000)
    tv = total_variation(
        empirical_cps_distribution(draws), enumerate_cps_distribution(params.p, n)
    )
    report("sampler-tv", tv < 0.08, f"tv={tv:.4f} draws=20000")

    print(f"{'all checks passed' if failures == 0 else f'{failures} checks FAILED'}")
    return 0 if failures == 0 else 1


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="cpsband",
        description=(
            "Fixed-size sampling designs, design-based empirical processes, "
            "and uniform confidence bands for the population CDF."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    cal = sub.add_parser("calibrate", help="inclusion probabilities and design parameters")
    cal.add_argument("--population", required=True, help="population CSV (unit,y,x)")
    cal.add_argument("--size", type=int, required=True, help="sample size n")
    cal.add_argument("--out", required=True, help="output CSV (unit,x,pi,p)")
    cal.set_defaults(func=_cmd_calibrate)

    smp = sub.add_parser("sample", help="draw one fixed-size sample")
    smp.add_argument("--population", required=True, help="population CSV (unit,y,x)")
    smp.add_argument("--size", type=int, required=True, help="sample size n")
    smp.add_argument("--seed", type=int, default=0, help="master seed")
    smp.add_argument("--method", choices=["sequential", "rejection"],
                     default="sequential")
    smp.add_argument("--out", required=True, help="output CSV (unit,x,pi,s)")
    smp.set_defaults(func=_cmd_sample)

    band = sub.add_parser("band", help="uniform confidence band for the CDF")
    band.add_argument("--population", required=True, help="population CSV (unit,y,x)")
    band.add_argument("--sample", required=True, help="sample CSV with unit,s columns")
    band.add_argument("--estimator", choices=["ht", "hajek"], default="ht")
    band.add_argument("--gamma", type=float, default=0.95, help="confidence level")
    band.add_argument("--quantile-draws", type=int, default=1000)
    band.add_argument("--seed", type=int, default=0, help="master seed")
    band.add_argument("--out", required=True, help="output CSV (t,center,lower,upper)")
    band.set_defaults(func=_cmd_band)

    sim = sub.add_parser("simulate", help="coverage experiment")
    sim.add_argument("--config", required=True, help="JSON config with SimConfig fields")
    sim.add_argument("--seed", type=int, default=None, help="override master_seed")
    sim.add_argument("--threads", type=int, default=None,
                     help=f"worker count (or set {THREADS_ENV_VAR})")
    sim.add_argument("--out", required=True, help="output path prefix (.txt and .csv)")
    sim.set_defaults(func=_cmd_simulate)

    orc = sub.add_parser("oracle-check", help="enumeration-based property checks")
    orc.add_argument("--seed", type=int, default=0, help="master seed")
    orc.add_argument("--instances", type=int, default=5)
    orc.set_defaults(func=_cmd_oracle_check)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
