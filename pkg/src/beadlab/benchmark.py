"""Paired simulated campaigns over many seeds, with summary statistics."""

from __future__ import annotations

import statistics
from dataclasses import dataclass

from .active_learning import (
    ORACLE_SEED_OFFSET,
    TEST_SEED_OFFSET,
    AlConfig,
    initial_design,
)
from .campaign import (
    CampaignState,
    ComparisonReport,
    compare,
    init_campaign,
    next_suggestion,
)
from .design_space import DesignSpace, select_test_set
from .errors import ValidationError
from .oracle import OracleSpec
from .taguchi import array_design


@dataclass(frozen=True)
class PairedResult:
    """One seed's paired outcome."""

    seed: int
    taguchi: CampaignState
    gpr: CampaignState
    report: ComparisonReport


@dataclass(frozen=True)
class BenchmarkSummary:
    """Aggregates over all seeds of a paired benchmark."""

    seeds: int
    gpr_wins: int
    bias_wins: int
    median_crossover: float | None
    mean_taguchi_rmse: float
    mean_gpr_rmse: float

    @property
    def win_rate(self) -> float:
        return self.gpr_wins / self.seeds


def run_to_completion(state: CampaignState) -> None:
    """Step a synthetic campaign until it reports completion."""
    if state.oracle.kind != "synthetic":
        raise ValidationError("only synthetic campaigns can run unattended")
    while next_suggestion(state) is not None:
        pass


def run_paired_campaign(
    space: DesignSpace,
    seed: int,
    surface_id: str = "waam-like-v1",
    noise_sd: float = 0.1,
    config: AlConfig | None = None,
    test_size: int = 15,
    noisy_test: bool = False,
) -> PairedResult:
    """Run both strategies against one oracle seed and one shared test set.

    The test set excludes the array rows and the surrogate's seeded design,
    so neither strategy ever trains on a held-out point.
    """
    config = config or AlConfig()
    oracle = OracleSpec(
        kind="synthetic",
        surface_id=surface_id,
        noise_sd=noise_sd,
        seed=seed + ORACLE_SEED_OFFSET,
    )
    planned = set(array_design(space)) | set(
        initial_design(space, config.init_samples, seed)
    )
    test_set = select_test_set(
        space, test_size, seed + TEST_SEED_OFFSET, excluded=planned
    )
    tag = init_campaign(
        space,
        "taguchi",
        oracle,
        seed=seed,
        test_set=test_set,
        noisy_test=noisy_test,
        campaign_id=f"taguchi-s{seed}",
    )
    gpr_al = init_campaign(
        space,
        "gpr_al",
        oracle,
        config=config,
        seed=seed,
        test_set=test_set,
        noisy_test=noisy_test,
        campaign_id=f"gpr-al-s{seed}",
    )
    run_to_completion(tag)
    run_to_completion(gpr_al)
    return PairedResult(
        seed=seed, taguchi=tag, gpr=gpr_al, report=compare(tag, gpr_al)
    )


def _mean_abs_signed_error(section) -> float:
    errors = [e for _, e in section.signed_errors]
    return abs(sum(errors) / len(errors))


def summarize(results: list[PairedResult]) -> BenchmarkSummary:
    if not results:
        raise ValidationError("cannot summarize an empty benchmark")
    gpr_wins = 0
    bias_wins = 0
    crossovers = []
    for r in results:
        tag, gpr_sec = r.report.first, r.report.second
        if gpr_sec.metrics.rmse < tag.metrics.rmse:
            gpr_wins += 1
        if _mean_abs_signed_error(tag) >= _mean_abs_signed_error(gpr_sec):
            bias_wins += 1
        crossovers.append(r.report.crossover_size)
    # Seeds whose surrogate never dipped below the array's error count as
    # "beyond every training size" for the median.
    ordered = sorted(
        float("inf") if c is None else float(c) for c in crossovers
    )
    median = statistics.median(ordered)
    return BenchmarkSummary(
        seeds=len(results),
        gpr_wins=gpr_wins,
        bias_wins=bias_wins,
        median_crossover=None if median == float("inf") else median,
        mean_taguchi_rmse=statistics.mean(
            r.report.first.metrics.rmse for r in results
        ),
        mean_gpr_rmse=statistics.mean(
            r.report.second.metrics.rmse for r in results
        ),
    )


def run_benchmark(
    space: DesignSpace,
    seeds: int,
    base_seed: int = 0,
    surface_id: str = "waam-like-v1",
    noise_sd: float = 0.1,
    config: AlConfig | None = None,
    test_size: int = 15,
    noisy_test: bool = False,
) -> tuple[list[PairedResult], BenchmarkSummary]:
    """Paired campaigns for seeds base_seed .. base_seed + seeds - 1."""
    if seeds < 1:
        raise ValidationError(f"need at least one seed, got {seeds}")
    results = [
        run_paired_campaign(
            space,
            base_seed + k,
            surface_id=surface_id,
            noise_sd=noise_sd,
            config=config,
            test_size=test_size,
            noisy_test=noisy_test,
        )
        for k in range(seeds)
    ]
    return results, summarize(results)


def summary_csv(summary: BenchmarkSummary) -> str:
    """One-row CSV for the benchmark aggregate."""
    import csv
    import io

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(
        [
            "seeds",
            "gpr_wins",
            "win_rate",
            "bias_wins",
            "median_crossover",
            "mean_taguchi_rmse",
            "mean_gpr_rmse",
        ]
    )
    writer.writerow(
        [
            summary.seeds,
            summary.gpr_wins,
            str(float(summary.win_rate)),
            summary.bias_wins,
            "" if summary.median_crossover is None else str(float(summary.median_crossover)),
            str(float(summary.mean_taguchi_rmse)),
            str(float(summary.mean_gpr_rmse)),
        ]
    )
    return buf.getvalue()
