"""Command-line interface for swgossip.

Every subcommand takes a config file plus ``--seed`` and ``--output-dir`` overrides,
prints a short summary on stdout and writes its machine outputs into the output
directory only. Exit status: 0 success, 1 invalid input or failed check, 2 runtime
error.
"""

import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Type

import click
import numpy as np
import typer
from loguru import logger
from pydantic import BaseModel
from rich.console import Console
from rich.table import Table

from ..core.config import (
    ClockSweepConfig,
    ComparisonConfig,
    ExperimentConfig,
    FailureStudyConfig,
    GraphConfig,
    SlopeStudyConfig,
    get_settings,
    load_config,
    parse_config,
)
from ..core.exceptions import ConfigurationError, GossipError, ValidationError
from ..core.logging import log_json_data, setup_logging
from ..experiments import (
    algorithm_comparison,
    build_family,
    build_graph,
    clock_sweep,
    consensus_bias,
    failure_study,
    monte_carlo_mse,
    slope_vs_bound_study,
    write_manifest,
)
from ..families import FamilyKind, check_assumptions, check_b3_numeric
from ..graph import graph_to_dict, is_connected
from ..spectral import kappa
from ..utils.file import ensure_directory, write_csv, write_json

console = Console()
err_console = Console(stderr=True)

app = typer.Typer(
    name="swgossip",
    help="Sum-weight gossip simulator and spectral analyzer.",
    add_completion=False,
    no_args_is_help=True,
)

ConfigArg = typer.Argument(..., help="Config file (JSON, version 1)")
SeedOpt = typer.Option(None, "--seed", help="Override the master seed of the config")
OutputOpt = typer.Option(None, "--output-dir", "-o", help="Override the output directory")


@app.callback()
def _configure(
    log_level: Optional[str] = typer.Option(None, "--log-level", help="DEBUG, INFO, WARNING or ERROR"),
) -> None:
    settings = get_settings()
    setup_logging(level=log_level or settings.log_level, log_file=settings.log_file)


def _load(path: Path, model: Type[BaseModel], seed: Optional[int], output_dir: Optional[Path]) -> Any:
    """Load a config and apply the command-line overrides, re-validating the result."""
    config = load_config(path, model)
    overrides: Dict[str, Any] = {}
    if seed is not None:
        overrides["seed"] = seed
    if output_dir is not None:
        overrides["output_dir"] = str(output_dir)
    if overrides:
        config = parse_config({**config.model_dump(mode="json"), **overrides}, model)
    ensure_directory(config.output_dir)
    return config


def _mark(ok: bool) -> str:
    return "✓" if ok else "✗"


def _fraction(value: float) -> str:
    frac = Fraction(value).limit_denominator(10**6)
    return str(frac) if abs(float(frac) - value) < 1e-12 else f"{value:.6g}"


def _family_for(config: ExperimentConfig, require_connected: bool = True):
    graph = None
    if config.graph is not None:
        graph, _ = build_graph(config.graph, config.seed)
    return build_family(
        config.algorithm,
        graph,
        config.n,
        config.gamma,
        config.p_e,
        config.seed,
        require_connected=require_connected,
    )


def _fmt(value: Any) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def _print_table(title: str, frame) -> None:
    table = Table(title=title)
    for column in frame.columns:
        table.add_column(str(column))
    for row in frame.itertuples(index=False):
        table.add_row(*(_fmt(v) for v in row))
    console.print(table)


@app.command("gen-graph")
def gen_graph(
    config_path: Path = ConfigArg,
    seed: Optional[int] = SeedOpt,
    output_dir: Optional[Path] = OutputOpt,
) -> None:
    """Generate a graph and write graph.json."""
    config = _load(config_path, GraphConfig, seed, output_dir)
    graph, record = build_graph(config.graph, config.seed)
    out = write_json(config.output_dir, "graph.json", graph_to_dict(graph))
    write_manifest(config.output_dir, "gen-graph", config, {"master": config.seed, "graph": record.to_dict()}, [out])
    connected = is_connected(graph)
    console.print(f"n = {graph.n}, edges = {len(graph.edges())}, connected = {_mark(connected)}")


@app.command("check")
def check(
    config_path: Path = ConfigArg,
    seed: Optional[int] = SeedOpt,
    output_dir: Optional[Path] = OutputOpt,
) -> None:
    """Check assumptions A1, A2 and B of the configured family."""
    config = _load(config_path, ExperimentConfig, seed, output_dir)
    family = _family_for(config, require_connected=False)
    report = check_assumptions(family)
    data: Dict[str, Any] = {"family": family.name, "n": family.n, "assumptions": report.to_dict()}
    if family.kind is FamilyKind.EXPLICIT and family.n <= get_settings().b3_max_n:
        data["b3_exponent"] = check_b3_numeric(family)
    out = write_json(config.output_dir, "report.json", data)
    write_manifest(config.output_dir, "check", config, {"master": config.seed}, [out])

    console.print(
        f"A1 {_mark(report.a1_row_stochastic)} A2 {_mark(report.a2_positive_diagonal)} "
        f"B {_mark(report.b_primitive)}"
    )
    console.print(f"m_K = {_fraction(report.m_K)}, p_K = {_fraction(report.p_K)}")
    if report.witness_exponent is not None:
        console.print(f"E[K] primitive with exponent {report.witness_exponent}")
    if report.failing:
        raise typer.Exit(code=1)


@app.command("spectral")
def spectral(
    config_path: Path = ConfigArg,
    seed: Optional[int] = SeedOpt,
    output_dir: Optional[Path] = OutputOpt,
) -> None:
    """Compute rho(R), kappa and the Boyd bound; writes report.json."""
    config = _load(config_path, ExperimentConfig, seed, output_dir)
    family = _family_for(config)
    report = kappa(family, cross_check=True)
    data = {"family": family.name, **report.to_dict()}
    log_json_data("spectral_report", data)
    out = write_json(config.output_dir, "report.json", data)
    write_manifest(config.output_dir, "spectral", config, {"master": config.seed}, [out])

    table = Table(title=f"{family.name}, n = {family.n}")
    table.add_column("quantity")
    table.add_column("value")
    for name in ("rho_R", "kappa", "rho_Sv", "boyd_rho", "boyd_kappa", "kappa_gelfand"):
        table.add_row(name, _fmt(getattr(report, name)))
    console.print(table)
    console.print(f"rho_R = {report.rho_R:.12g}")


@app.command("simulate")
def simulate(
    config_path: Path = ConfigArg,
    seed: Optional[int] = SeedOpt,
    output_dir: Optional[Path] = OutputOpt,
    check_invariants: bool = typer.Option(False, "--check-invariants", help="Fail on the first invariant violation"),
) -> None:
    """Run the Monte Carlo simulation; writes trace.csv (replica 0), mse.csv and report.json."""
    config = _load(config_path, ExperimentConfig, seed, output_dir)
    result = monte_carlo_mse(config, check_invariants=check_invariants)
    batch = result.batch
    trace_path = write_csv(config.output_dir, "trace.csv", batch.replica(0).to_frame())
    mse_path = write_csv(config.output_dir, "mse.csv", result.curve)

    x_ave = float(np.mean(result.x0))
    summary: Dict[str, Any] = {
        "family": result.family.name,
        "n": result.family.n,
        "ticks": config.ticks,
        "replicas": config.replicas,
        "mode": config.mode,
        "target": batch.target,
        "initial_mse": float(batch.mse[0]),
        "final_mse": float(batch.mse[-1]),
        "consensus": consensus_bias(batch.final_estimates, x_ave),
    }
    if batch.windows:
        summary["windows"] = [w.to_dict() for w in batch.windows]
    report_path = write_json(config.output_dir, "report.json", summary)
    write_manifest(
        config.output_dir,
        "simulate",
        config,
        result.seeds(config.seed),
        [trace_path, mse_path, report_path],
    )
    console.print(
        f"{result.family.name}: {config.replicas} replica(s), {config.ticks} ticks, "
        f"mse {summary['initial_mse']:.3e} -> {summary['final_mse']:.3e}"
    )


def _study(command: str, name: str, config, result) -> None:
    """Write the study table, any separate curve table and report.json, then summarize."""
    outputs = [write_csv(config.output_dir, f"{name}.csv", result.table)]
    if result.curves is not None and result.curves is not result.table:
        outputs.append(write_csv(config.output_dir, f"{name}_curves.csv", result.curves))
    outputs.append(write_json(config.output_dir, "report.json", result.records))
    write_manifest(config.output_dir, command, config, {"master": config.seed}, outputs)
    if result.curves is not result.table:
        _print_table(command, result.table)
        return
    last = result.table.iloc[-1]
    for column in result.table.columns[1:]:
        console.print(f"{column}: terminal mse {last[column]:.3e}")


@app.command("slope-study")
def slope_study(
    config_path: Path = ConfigArg,
    seed: Optional[int] = SeedOpt,
    output_dir: Optional[Path] = OutputOpt,
) -> None:
    """Empirical slope of ln(MSE) against kappa over graph sizes."""
    config = _load(config_path, SlopeStudyConfig, seed, output_dir)
    _study("slope-study", "slope_study", config, slope_vs_bound_study(config))


@app.command("failure-study")
def failure_study_command(
    config_path: Path = ConfigArg,
    seed: Optional[int] = SeedOpt,
    output_dir: Optional[Path] = OutputOpt,
) -> None:
    """Slope and kappa of BWGossip under link failures."""
    config = _load(config_path, FailureStudyConfig, seed, output_dir)
    _study("failure-study", "failure_study", config, failure_study(config))


@app.command("clock-sweep")
def clock_sweep_command(
    config_path: Path = ConfigArg,
    seed: Optional[int] = SeedOpt,
    output_dir: Optional[Path] = OutputOpt,
    check_invariants: bool = typer.Option(False, "--check-invariants", help="Fail on the first invariant violation"),
) -> None:
    """BWGossip MSE curves for several clock coefficients."""
    config = _load(config_path, ClockSweepConfig, seed, output_dir)
    _study("clock-sweep", "clock_sweep", config, clock_sweep(config, check_invariants=check_invariants))


@app.command("compare")
def compare_command(
    config_path: Path = ConfigArg,
    seed: Optional[int] = SeedOpt,
    output_dir: Optional[Path] = OutputOpt,
) -> None:
    """MSE curves of several algorithms on one graph, side by side."""
    config = _load(config_path, ComparisonConfig, seed, output_dir)
    result = algorithm_comparison(config)
    _study("compare", "comparison", config, result)
    for algorithm, stats in result.records["consensus"].items():
        console.print(f"{algorithm}: dispersion {stats['dispersion']:.3e}, bias {stats['bias']:.3e}")


def _report_error(e: GossipError) -> None:
    err_console.print(f"error: {e}", markup=False)
    for key, value in e.details.items():
        err_console.print(f"  {key}: {value}", markup=False)


def main(argv: Optional[List[str]] = None) -> int:
    """Dispatch ``argv`` and return the exit status."""
    args = list(sys.argv[1:] if argv is None else argv)
    command = typer.main.get_command(app)
    try:
        rv = command.main(args=args, prog_name="swgossip", standalone_mode=False)
    except click.exceptions.Exit as e:
        return e.exit_code
    except click.ClickException as e:
        e.show(file=sys.stderr)
        return 1
    except (click.exceptions.Abort, KeyboardInterrupt):
        err_console.print("aborted")
        return 2
    except (ConfigurationError, ValidationError) as e:
        logger.debug(f"rejected input: {e}")
        _report_error(e)
        return 1
    except GossipError as e:
        logger.error(f"{type(e).__name__}: {e}")
        _report_error(e)
        return 2
    except Exception as e:
        logger.exception(f"unexpected error: {e}")
        err_console.print(f"unexpected error: {e}", markup=False)
        return 2
    return rv if isinstance(rv, int) else 0


def run() -> None:
    """Console-script entry point."""
    sys.exit(main())
