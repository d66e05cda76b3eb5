"""Coverage experiment for uniform CDF confidence bands.

Each replication generates a fresh population from a heteroscedastic
lognormal size model, calibrates a fixed-size design, draws one sample,
and checks whether the true population CDF stays inside the simulated
bands around the Horvitz-Thompson and Hájek CDF estimators.  The design
either spreads inclusion evenly across units ("equal") or follows the
auxiliary sizes ("proportional").  Replications are independent and own
substreams keyed by their index, so reports are identical no matter how
many workers run them.
"""

from __future__ import annotations

import io
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .calibration import (
    CanonicalPoissonParams,
    PopulationFrame,
    pips_probabilities,
    poisson_from_cps_inclusion,
)
from .inference import (
    CovarianceEstimate,
    cholesky_psd,
    estimate_cov_hajek,
    estimate_cov_ht,
    simulate_sup_quantile,
)
from .processes import ThresholdGrid, hajek_evaluate, htep_evaluate, sup_norm_cdf
from .samplers import (
    RngStream,
    SampleIndicators,
    cps_sample_rejection,
    cps_sample_sequential,
)

__all__ = [
    "CoverageReport",
    "ReplicationRecord",
    "ReportCell",
    "SimConfig",
    "format_report",
    "generate_population",
    "run_experiment",
    "run_replication",
]


@dataclass(frozen=True)
class SimConfig:
    """Parameters of one coverage experiment.

    ``design`` picks the calibration size variable: "equal" hands the
    calibrator a constant size, so every unit gets inclusion probability
    n/N, while "proportional" calibrates on the auxiliary x, tilting
    inclusion toward large units.  Equal inclusion is the default; the
    reference coverage and width figures were produced under it.
    """

    population_size: int
    sampling_fraction: float
    replications: int
    levels: tuple[float, ...] = (0.90, 0.95, 0.99)
    quantile_draws: int = 1000
    master_seed: int = 0
    sampler: Literal["sequential", "rejection"] = "sequential"
    design: Literal["equal", "proportional"] = "equal"
    threads: int = 1

    def __post_init__(self) -> None:
        if self.population_size < 2:
            raise ValueError("population_size must be at least 2")
        if not 0.0 < self.sampling_fraction <= 1.0:
            raise ValueError("sampling_fraction must lie in (0, 1]")
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        if not all(0.0 < g < 1.0 for g in self.levels):
            raise ValueError("levels must lie in (0, 1)")
        if self.sampler not in ("sequential", "rejection"):
            raise ValueError(f"unknown sampler {self.sampler!r}")
        if self.design not in ("equal", "proportional"):
            raise ValueError(f"unknown design {self.design!r}")
        if self.threads < 1:
            raise ValueError("threads must be at least 1")
        object.__setattr__(self, "levels", tuple(float(g) for g in self.levels))

    @property
    def sample_size(self) -> int:
        return max(1, round(self.sampling_fraction * self.population_size))


@dataclass(frozen=True)
class ReplicationRecord:
    """Sup statistics and simulated quantiles of one replication."""

    rep_index: int
    sup_ht: float
    sup_hajek: float
    q_ht: tuple[float, ...]
    q_hajek: tuple[float, ...]
    jitter_ht: float
    jitter_hajek: float

    def covered_ht(self, level_index: int) -> bool:
        return self.sup_ht <= self.q_ht[level_index]

    def covered_hajek(self, level_index: int) -> bool:
        return self.sup_hajek <= self.q_hajek[level_index]


@dataclass(frozen=True)
class ReportCell:
    """Aggregate for one (estimator, level) pair."""

    estimator: Literal["HT", "HAJEK"]
    level: float
    coverage: float
    avg_width: float
    max_width: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.coverage <= 1.0:
            raise ValueError("coverage must lie in [0, 1]")
        if self.max_width < self.avg_width:
            raise ValueError("max width cannot be below the average width")


@dataclass(frozen=True)
class CoverageReport:
    """Coverage and band-width aggregates over all replications."""

    config: SimConfig
    cells: tuple[ReportCell, ...]
    runtime_seconds: float = field(compare=False)


def generate_population(n_units: int, rng: RngStream) -> PopulationFrame:
    """Sizes X lognormal with ln X ~ N(0,1); outcomes Y = X + U with
    U | X ~ N(0, X²)."""
    if n_units < 2:
        raise ValueError("population must have at least 2 units")
    gen = rng.generator()
    x = gen.lognormal(mean=0.0, sigma=1.0, size=n_units)
    y = x + gen.normal(loc=0.0, scale=x)
    return PopulationFrame(y=y, x=x)


def _draw_sample(
    params: CanonicalPoissonParams,
    sampler: str,
    rng: RngStream,
) -> SampleIndicators:
    if sampler == "sequential":
        return cps_sample_sequential(params, rng)
    return cps_sample_rejection(params, rng)


def run_replication(
    config: SimConfig,
    rep_index: int,
    population: PopulationFrame | None = None,
) -> ReplicationRecord:
    """One full pass: population, calibration, sample, sup statistics,
    covariance estimation, and quantile simulation at every level.

    Both covariance factors are pushed through the same Gaussian
    substream, so the two estimators' quantiles come from one shared
    set of standard normal vectors.
    """
    rng = RngStream(config.master_seed).substream(rep_index)
    if population is None:
        population = generate_population(config.population_size, rng.substream(0))
    n = config.sample_size
    if config.design == "proportional":
        sizes = population.x
    else:
        sizes = np.ones(config.population_size)
    incl = pips_probabilities(sizes, n)
    params = poisson_from_cps_inclusion(incl)
    sample = _draw_sample(params, config.sampler, rng.substream(1))

    grid = ThresholdGrid.from_population(population.y)
    sup_ht = sup_norm_cdf(htep_evaluate(population, incl, sample, grid))
    sup_hajek = sup_norm_cdf(hajek_evaluate(population, incl, sample, grid))

    thresholds = np.sort(population.y[sample.s == 1])
    if float((incl.pi * (1.0 - incl.pi)).sum()) == 0.0:
        zero = np.zeros((n, n))
        cov_ht = CovarianceEstimate(matrix=zero, kind="HT", thresholds=thresholds)
        cov_hajek = CovarianceEstimate(
            matrix=zero, kind="HAJEK", thresholds=thresholds
        )
    else:
        cov_ht = estimate_cov_ht(population, incl, sample, thresholds)
        cov_hajek = estimate_cov_hajek(population, incl, sample, thresholds)
    factor_ht = cholesky_psd(cov_ht)
    factor_hajek = cholesky_psd(cov_hajek)

    gauss = rng.substream(2)
    q_ht = tuple(
        simulate_sup_quantile(factor_ht.lower, g, config.quantile_draws, gauss).q_hat
        for g in config.levels
    )
    q_hajek = tuple(
        simulate_sup_quantile(
            factor_hajek.lower, g, config.quantile_draws, gauss
        ).q_hat
        for g in config.levels
    )
    return ReplicationRecord(
        rep_index=rep_index,
        sup_ht=sup_ht,
        sup_hajek=sup_hajek,
        q_ht=q_ht,
        q_hajek=q_hajek,
        jitter_ht=factor_ht.jitter,
        jitter_hajek=factor_hajek.jitter,
    )


def _replication_task(args: tuple[SimConfig, int]) -> ReplicationRecord:
    config, rep_index = args
    try:
        return run_replication(config, rep_index)
    except Exception as exc:
        raise RuntimeError(
            f"replication {rep_index} (seed {config.master_seed}) failed: {exc}"
        ) from exc


def run_experiment(config: SimConfig) -> CoverageReport:
    """All replications, aggregated; deterministic for a fixed seed no
    matter how many worker processes share the load."""
    started = time.perf_counter()
    tasks = [(config, rep) for rep in range(config.replications)]
    if config.threads == 1:
        records = [_replication_task(t) for t in tasks]
    else:
        chunk = max(1, config.replications // (4 * config.threads))
        with ProcessPoolExecutor(max_workers=config.threads) as pool:
            records = list(pool.map(_replication_task, tasks, chunksize=chunk))

    scale = 2.0 / np.sqrt(config.population_size)
    cells = []
    for estimator in ("HT", "HAJEK"):
        for j, level in enumerate(config.levels):
            if estimator == "HT":
                flags = [r.covered_ht(j) for r in records]
                widths = np.array([r.q_ht[j] for r in records]) * scale
            else:
                flags = [r.covered_hajek(j) for r in records]
                widths = np.array([r.q_hajek[j] for r in records]) * scale
            cells.append(
                ReportCell(
                    estimator=estimator,
                    level=level,
                    coverage=float(np.mean(flags)),
                    avg_width=float(widths.mean()),
                    max_width=float(widths.max()),
                )
            )
    return CoverageReport(
        config=config,
        cells=tuple(cells),
        runtime_seconds=time.perf_counter() - started,
    )


def format_report(report: CoverageReport) -> tuple[str, str]:
    """Human-readable table plus machine CSV.

    Runtime is deliberately left out of both forms so that reports from
    runs with different worker counts compare byte for byte.
    """
    cfg = report.config
    text = io.StringIO()
    text.write(
        "coverage experiment: N={n} alpha={a:g} n={m} B={b} B'={bp} "
        "design={d} sampler={s} seed={seed}\n".format(
            n=cfg.population_size,
            a=cfg.sampling_fraction,
            m=cfg.sample_size,
            b=cfg.replications,
            bp=cfg.quantile_draws,
            d=cfg.design,
            s=cfg.sampler,
            seed=cfg.master_seed,
        )
    )
    header = "estimator" + "".join(
        f"  level={g:g}: coverage (avg width; max width)" for g in cfg.levels
    )
    text.write(header + "\n")
    if report.cells:
        for estimator in ("HT", "HAJEK"):
            row = [f"{estimator:<9}"]
            for cell in report.cells:
                if cell.estimator != estimator:
                    continue
                row.append(
                    f"  {cell.coverage:.3f} "
                    f"({cell.avg_width:.4f}; {cell.max_width:.4f})"
                )
            text.write("".join(row) + "\n")

    csv = io.StringIO()
    csv.write(
        "population_size,sampling_fraction,sample_size,replications,"
        "quantile_draws,master_seed,design,sampler,estimator,level,"
        "coverage,avg_width,max_width\n"
    )
    for cell in report.cells:
        csv.write(
            f"{cfg.population_size},{cfg.sampling_fraction:g},{cfg.sample_size},"
            f"{cfg.replications},{cfg.quantile_draws},{cfg.master_seed},"
            f"{cfg.design},{cfg.sampler},{cell.estimator},{cell.level:g},"
            f"{cell.coverage:.6f},{cell.avg_width:.6f},{cell.max_width:.6f}\n"
        )
    return text.getvalue(), csv.getvalue()
