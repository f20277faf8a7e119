"""Command-line entry point for campaign lifecycle, benchmarks, and serving.

Exit codes: 0 success, 1 domain error (one-line ``code: message`` on
stderr), 2 usage error. Campaign files are written atomically and guarded
by a sibling lock file against concurrent CLI/service mutation.
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click
from filelock import FileLock

from . import benchmark as bench
from . import campaign as camp
from .active_learning import AlConfig
from .design_space import DesignSpace, Factor, PRESETS, to_real
from .errors import BeadLabError, ValidationError
from .oracle import OracleSpec
from .response import BeadGeometry

DATA_DIR_ENV = "BEADLAB_DATA_DIR"


def _guard(func):
    """Map domain errors to exit code 1 with a machine-parsable reason."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except BeadLabError as err:
            click.echo(f"{err.code}: {err}", err=True)
            sys.exit(1)

    return wrapper


def _parse_point(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError:
        raise ValidationError(f"point must be comma-separated indices, got {text!r}")


def _parse_space(preset: str, space_file: str | None) -> DesignSpace:
    if space_file is not None:
        with open(space_file, "r", encoding="utf-8") as handle:
            doc = json.load(handle)
        return DesignSpace(
            factors=tuple(
                Factor(f["name"], f["unit"], tuple(f["levels"]))
                for f in doc["factors"]
            )
        )
    if preset not in PRESETS:
        raise ValidationError(f"unknown preset {preset!r}; known: {sorted(PRESETS)}")
    return PRESETS[preset]()


def _parse_oracle(text: str, noise_sd: float, oracle_seed: int) -> OracleSpec:
    if text == "manual":
        return OracleSpec(kind="manual", noise_sd=0.0, seed=oracle_seed)
    if text.startswith("synthetic:"):
        surface = text.split(":", 1)[1]
        return OracleSpec(
            kind="synthetic", surface_id=surface, noise_sd=noise_sd, seed=oracle_seed
        )
    if text == "synthetic":
        return OracleSpec(kind="synthetic", noise_sd=noise_sd, seed=oracle_seed)
    raise ValidationError(
        f"oracle must be 'manual' or 'synthetic[:surface]', got {text!r}"
    )


def _lock_for(path: Path) -> FileLock:
    return FileLock(str(path) + ".lock")


def _echo_suggestion(state: camp.CampaignState, suggestion: camp.Suggestion) -> None:
    real = to_real(state.space, suggestion.point)
    labels = ", ".join(
        f"{f.name}={v:g} {f.unit}" for f, v in zip(state.space.factors, real)
    )
    point = ",".join(str(i) for i in suggestion.point)
    if suggestion.executed:
        g = suggestion.geometry
        click.echo(
            f"ran point {point} ({labels}) -> d={g.depth:.4f} w={g.width:.4f} "
            f"h={g.height:.4f} y={suggestion.response:.4f}"
        )
    else:
        click.echo(f"suggested point {point} ({labels}); record the measurement")


@click.group()
def main():
    """Sequential experiment design for weld-bead process mapping."""


@main.command()
@click.option("--strategy", type=click.Choice(["taguchi", "gpr-al"]), required=True)
@click.option("--oracle", "oracle_text", default="synthetic:waam-like-v1",
              show_default=True, help="'manual' or 'synthetic[:surface]'.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--preset", default="default", show_default=True)
@click.option("--space-file", type=click.Path(exists=True), default=None,
              help="JSON file with a factors list, overrides --preset.")
@click.option("--noise-sd", type=float, default=0.1, show_default=True)
@click.option("--noisy-test", is_flag=True,
              help="Measure held-out points with noise instead of the bare surface.")
@click.option("--test-size", type=int, default=15, show_default=True)
@click.option("--init-samples", type=int, default=5, show_default=True)
@click.option("--iterations", type=int, default=15, show_default=True)
@click.option("--reoptimize-every", type=int, default=1, show_default=True)
@click.option("--id", "campaign_id", default=None, help="Campaign identifier.")
@click.option("--out", type=click.Path(), required=True)
@click.option("--force", is_flag=True, help="Overwrite an existing campaign file.")
@_guard
def init(strategy, oracle_text, seed, preset, space_file, noise_sd, noisy_test,
         test_size, init_samples, iterations, reoptimize_every, campaign_id,
         out, force):
    """Create a campaign file and print its plan."""
    out_path = Path(out)
    if out_path.exists() and not force:
        click.echo(f"refusing to overwrite {out} (use --force)", err=True)
        sys.exit(2)
    space = _parse_space(preset, space_file)
    oracle = _parse_oracle(oracle_text, noise_sd, seed)
    config = AlConfig(
        init_samples=init_samples,
        max_iterations=iterations,
        reoptimize_every=reoptimize_every,
    )
    state = camp.init_campaign(
        space,
        strategy.replace("-", "_"),
        oracle,
        config=config if strategy == "gpr-al" else None,
        seed=seed,
        test_size=test_size,
        noisy_test=noisy_test,
        campaign_id=campaign_id,
    )
    out_path.parent.mkdir(parents=True, exist_ok=True)
    camp.save(state, out_path)
    click.echo(f"campaign {state.id}: {len(state.plan)} planned point(s), "
               f"{len(state.test_set)} test point(s)")
    click.echo("test set: " + " ".join(
        ",".join(str(i) for i in t.point) for t in state.test_set
    ))
    head = camp.peek_suggestion(state)
    if head is not None:
        click.echo("first suggestion: " + ",".join(str(i) for i in head))


@main.command()
@click.argument("campaign_file", type=click.Path(exists=True))
@click.option("--steps", type=int, default=1, show_default=True,
              help="How many suggestions to advance (synthetic campaigns).")
@click.option("--all", "run_all", is_flag=True, help="Run to completion.")
@_guard
def suggest(campaign_file, steps, run_all):
    """Advance the campaign: execute (synthetic) or park (manual) the next point."""
    path = Path(campaign_file)
    with _lock_for(path):
        state = camp.load(path)
        if state.pending is not None:
            suggestion = camp.Suggestion(point=state.pending.point, executed=False)
            click.echo("measurement already pending:")
            _echo_suggestion(state, suggestion)
            return
        remaining = None if run_all else steps
        advanced = 0
        while remaining is None or advanced < remaining:
            suggestion = camp.next_suggestion(state)
            if suggestion is None:
                break
            _echo_suggestion(state, suggestion)
            advanced += 1
            if not suggestion.executed:
                break
        camp.save(state, path)
        if state.status == "complete":
            click.echo("campaign complete")
        elif advanced == 0:
            click.echo("nothing left to run (waiting on test measurements?)")


@main.command()
@click.argument("campaign_file", type=click.Path(exists=True))
@click.option("--point", required=True, help="Level indices, e.g. 2,0,4.")
@click.option("--d", "depth", type=float, required=True, help="Depth in mm.")
@click.option("--w", "width", type=float, required=True, help="Width in mm.")
@click.option("--h", "height", type=float, required=True, help="Height in mm.")
@_guard
def record(campaign_file, point, depth, width, height):
    """Record a measured bead geometry for a suggested, planned, or test point."""
    path = Path(campaign_file)
    with _lock_for(path):
        state = camp.load(path)
        geometry = BeadGeometry(depth=depth, width=width, height=height)
        camp.record_result(state, _parse_point(point), geometry)
        camp.save(state, path)
        click.echo(f"recorded point {point}: y={state.runs[-1].response:.4f}"
                   if _parse_point(point) in state.run_points
                   else f"recorded test point {point}")
        if state.status == "complete":
            click.echo("campaign complete")


@main.command()
@click.argument("campaign_file", type=click.Path(exists=True))
@click.option("--holdout", type=click.Choice(["test", "grid"]), default="test",
              show_default=True)
@_guard
def evaluate(campaign_file, holdout):
    """Print held-out RMSE and R^2 for the campaign's current model."""
    state = camp.load(campaign_file)
    metrics = camp.evaluate(state, holdout=holdout)
    click.echo(f"rmse: {metrics.rmse!r}")
    click.echo(f"r2: {metrics.r2!r}")


@main.command()
@click.argument("campaign_file", type=click.Path(exists=True))
@click.option("--kind", type=click.Choice(list(camp.EXPORT_KINDS)), required=True)
@click.option("--versus", type=click.Path(exists=True), default=None,
              help="Second campaign file for a paired report.")
@click.option("--out", type=click.Path(), required=True)
@_guard
def export(campaign_file, kind, versus, out):
    """Write one report section as CSV."""
    state = camp.load(campaign_file)
    other = camp.load(versus) if versus else state
    report = camp.compare(state, other)
    text = camp.export_csv(report, kind)
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="") as handle:
        handle.write(text)
    click.echo(f"wrote {kind} CSV to {out}")


@main.command()
@click.option("--seeds", type=int, default=30, show_default=True)
@click.option("--base-seed", type=int, default=0, show_default=True)
@click.option("--surface", default="waam-like-v1", show_default=True)
@click.option("--noise-sd", type=float, default=0.1, show_default=True)
@click.option("--test-size", type=int, default=15, show_default=True)
@click.option("--init-samples", type=int, default=5, show_default=True)
@click.option("--iterations", type=int, default=15, show_default=True)
@click.option("--reoptimize-every", type=int, default=1, show_default=True)
@click.option("--preset", default="default", show_default=True)
@click.option("--space-file", type=click.Path(exists=True), default=None)
@click.option("--out-dir", type=click.Path(), required=True)
@_guard
def simulate(seeds, base_seed, surface, noise_sd, test_size, init_samples,
             iterations, reoptimize_every, preset, space_file, out_dir):
    """Run paired campaigns over many seeds; write per-seed and summary CSVs."""
    space = _parse_space(preset, space_file)
    config = AlConfig(
        init_samples=init_samples,
        max_iterations=iterations,
        reoptimize_every=reoptimize_every,
    )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    results = []
    for k in range(seeds):
        result = bench.run_paired_campaign(
            space,
            base_seed + k,
            surface_id=surface,
            noise_sd=noise_sd,
            config=config,
            test_size=test_size,
        )
        results.append(result)
        for kind in camp.EXPORT_KINDS:
            text = camp.export_csv(result.report, kind)
            with open(out / f"seed{result.seed}_{kind}.csv", "w",
                      encoding="utf-8", newline="") as handle:
                handle.write(text)
        cross = result.report.crossover_size
        click.echo(
            f"seed {result.seed}: taguchi rmse={result.report.first.metrics.rmse:.4f} "
            f"gpr rmse={result.report.second.metrics.rmse:.4f} "
            f"crossover={'-' if cross is None else cross}"
        )
    summary = bench.summarize(results)
    with open(out / "summary.csv", "w", encoding="utf-8", newline="") as handle:
        handle.write(bench.summary_csv(summary))
    click.echo(
        f"summary: {summary.gpr_wins}/{summary.seeds} surrogate wins "
        f"(win rate {summary.win_rate:.2f}), median crossover "
        f"{summary.median_crossover}, bias wins {summary.bias_wins}/{summary.seeds}"
    )


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8787, show_default=True)
@click.option("--data-dir", type=click.Path(), default=None,
              help=f"Campaign storage directory (default ${DATA_DIR_ENV} or ./campaigns).")
@click.option("--ui-dir", type=click.Path(), default=None,
              help="Directory with the built operator console (served at /ui).")
@_guard
def serve(host, port, data_dir, ui_dir):
    """Run the HTTP service for the operator console."""
    import os

    import uvicorn

    from .service import create_app

    resolved = data_dir or os.environ.get(DATA_DIR_ENV) or "campaigns"
    app = create_app(resolved, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="info")


if __name__ == "__main__":
    main()
