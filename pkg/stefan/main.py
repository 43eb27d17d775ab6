"""Command-line entry point: `stefan <command> --config <path> --out <dir> [--seed N]`.

Every command writes into <out>/<command>-<config hash> a manifest.json and
CSV tables whose first line records version, config hash, boundary law,
K_tau mode and integral form. Exit codes: 0 success, 1 numerical failure,
2 configuration error.
"""
import logging
from pathlib import Path
from typing import Optional

import pandas as pd
import typer
from pydantic import ValidationError
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from stefan import __version__
from stefan.config import RunConfig, build_problem, config_hash, parse_config
from stefan.exceptions import ConfigurationError, NonConvergenceError, StefanError
from stefan.models.manifest import Command, RunManifest
from stefan.services import certify as certify_service
from stefan.services.front_oracle import (
    consistency_residual,
    front_snapshot,
    front_trajectory,
    make_front,
)
from stefan.services.profiles import read_trajectory_csv, write_table
from stefan.services.reference_fd import compare_trajectories, fd_solve
from stefan.services.stefan_ie import convergence_study, form_comparison, reconstruct_field, solve

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_NUMERICAL = 1
EXIT_CONFIG = 2

app = typer.Typer(
    name="stefan",
    help="Volterra and finite-difference solvers for the transformed one-phase Stefan problem.",
    add_completion=False,
    no_args_is_help=True,
)
console = Console(stderr=True)


def configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=console, show_path=False)],
        force=True,
    )


def _write(manifest: RunManifest, frame: pd.DataFrame, name: str) -> Path:
    return write_table(frame, manifest.run_dir / name, [manifest.header()])


def _snapshot_name(prefix: str, index: int) -> str:
    return f"{prefix}-{index:06d}.csv"


def _run_solve(manifest: RunManifest, run_config: RunConfig) -> None:
    spec = build_problem(run_config)
    cfg = run_config.solver
    try:
        traj = solve(spec, cfg)
    except NonConvergenceError as exc:
        if exc.partial is not None:
            _write(manifest, exc.partial.to_frame(), "trajectory.partial.csv")
        raise
    _write(manifest, traj.to_frame(), "trajectory.csv")
    for index in cfg.snapshot_indices():
        snapshot = reconstruct_field(traj, spec, float(traj.times[index]), cfg=cfg, attach_physical=True)
        _write(manifest, snapshot.to_frame(), _snapshot_name("snapshot", index))


def _run_oracle(manifest: RunManifest, run_config: RunConfig) -> None:
    section = run_config.problem
    if section.b_bar is None:
        raise ConfigurationError("problem.b_bar is required for the oracle")
    cfg = run_config.solver
    front = make_front(section.beta1, section.beta2, section.b_bar)
    traj = front_trajectory(front, section.b, cfg.time_grid())
    _write(manifest, traj.to_frame()[["t", "zbar", "s", "nu"]], "oracle_trajectory.csv")
    for index in cfg.snapshot_indices():
        snapshot = front_snapshot(front, float(index * cfg.dt), depth=cfg.z_tail, points=cfg.snapshot_points)
        _write(manifest, snapshot.to_frame(), _snapshot_name("oracle-snapshot", index))
    params = front.model_dump()
    params["consistency_residual"] = consistency_residual(front)
    _write(manifest, pd.DataFrame({"name": list(params), "value": list(params.values())}), "front.csv")


def _run_certify(manifest: RunManifest, run_config: RunConfig) -> None:
    spec = build_problem(run_config)
    section = run_config.certify
    cert = certify_service.certify(spec.profile, spec.beta2, section.B2)
    rows = cert.rows()
    _write(manifest, pd.DataFrame(rows, columns=["name", "value", "flag"]), "certificate.csv")

    report = [
        f"certificate for beta1={spec.beta1!r} beta2={spec.beta2!r} b_bar={spec.b_bar!r}",
        "",
        *(f"{name:>12} = {value:.17g} {flag}".rstrip() for name, value, flag in rows),
        "",
        f"flags: {'; '.join(cert.flags) or 'none'}",
    ]
    stats = None
    if cert.sigma > 0:
        stats = certify_service.empirical_contraction(
            spec, run_config.solver, cert, section.trials, seed=manifest.seed, steps=section.steps
        )
        report += [
            f"empirical contraction on [0, {stats.horizon:.17g}] with {stats.steps} steps:",
            f"  pairs={stats.trials} max_ratio={stats.max_ratio:.17g} mean_ratio={stats.mean_ratio:.17g} "
            f"{'PASS' if stats.passed else 'FAIL'}",
        ]
    else:
        report.append("empirical contraction skipped: empty window")
    if cert.sigma < run_config.solver.t_end:
        wide = certify_service.empirical_contraction(
            spec, run_config.solver, cert, section.trials, seed=manifest.seed, steps=section.steps,
            horizon=run_config.solver.t_end,
        )
        report += [
            f"uncertified range [0, {wide.horizon:.17g}] with {wide.steps} steps:",
            f"  pairs={wide.trials} max_ratio={wide.max_ratio:.17g} mean_ratio={wide.mean_ratio:.17g}",
        ]
    path = manifest.run_dir / "report.txt"
    path.write_text("\n".join([manifest.header(), *report]) + "\n", encoding="utf-8")

    table = Table(title="certificate")
    for column in ("name", "value", "flag"):
        table.add_column(column)
    for name, value, flag in rows:
        table.add_row(name, f"{value:.6g}", flag)
    console.print(table)
    if stats is not None and not stats.passed:
        logger.warning("empirical contraction failed: max ratio %.6g", stats.max_ratio)


def _run_fd(manifest: RunManifest, run_config: RunConfig) -> None:
    spec = build_problem(run_config)
    cfg = run_config.solver
    try:
        traj, snapshots = fd_solve(spec, run_config.fd, cfg.t_end, cfg.snapshot_times)
    except NonConvergenceError as exc:
        if exc.partial is not None:
            _write(manifest, exc.partial.to_frame(), "fd_trajectory.partial.csv")
        raise
    _write(manifest, traj.to_frame(), "fd_trajectory.csv")
    for snapshot in snapshots:
        index = int(round(snapshot.t / run_config.fd.dt))
        _write(manifest, snapshot.to_frame(), _snapshot_name("fd-snapshot", index))


def _run_compare(manifest: RunManifest, run_config: RunConfig,
                 left: Optional[Path], right: Optional[Path]) -> None:
    if (left is None) != (right is None):
        raise ConfigurationError("--left and --right go together")
    if left is not None:
        a, b = read_trajectory_csv(left), read_trajectory_csv(right)
    else:
        spec = build_problem(run_config)
        a = solve(spec, run_config.solver)
        b, _ = fd_solve(spec, run_config.fd, run_config.solver.t_end)
        _write(manifest, form_comparison(spec, run_config.solver, b), "forms.csv")
    report = compare_trajectories(a, b)
    _write(manifest, report.reset_index(), "compare.csv")
    logger.info("trajectory differences:\n%s", report.to_string())


def _run_convergence(manifest: RunManifest, run_config: RunConfig) -> None:
    spec = build_problem(run_config)
    section = run_config.convergence
    table = convergence_study(spec, run_config.solver, section.dts, reference=section.reference)
    _write(manifest, table, "convergence.csv")


def run(manifest: RunManifest, run_config: RunConfig,
        left: Optional[Path] = None, right: Optional[Path] = None) -> int:
    """Execute one command and map its outcome to an exit code."""
    manifest.run_dir.mkdir(parents=True, exist_ok=True)
    (manifest.run_dir / "manifest.json").write_text(manifest.model_dump_json(indent=2) + "\n", encoding="utf-8")
    logger.info("%s -> %s", manifest.command.value, manifest.run_dir)
    try:
        if manifest.command is Command.SOLVE:
            _run_solve(manifest, run_config)
        elif manifest.command is Command.ORACLE:
            _run_oracle(manifest, run_config)
        elif manifest.command is Command.CERTIFY:
            _run_certify(manifest, run_config)
        elif manifest.command is Command.FD:
            _run_fd(manifest, run_config)
        elif manifest.command is Command.COMPARE:
            _run_compare(manifest, run_config, left, right)
        else:
            _run_convergence(manifest, run_config)
    except NonConvergenceError as exc:
        logger.error("%s", exc)
        return EXIT_NUMERICAL
    except (ConfigurationError, ValidationError) as exc:
        logger.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except StefanError as exc:
        logger.error("%s", exc)
        return EXIT_NUMERICAL
    return EXIT_OK


def _execute(command: Command, config: Path, out: Path, seed: int, verbose: bool,
             left: Optional[Path] = None, right: Optional[Path] = None) -> None:
    configure_logging(verbose)
    try:
        run_config = parse_config(config)
    except ConfigurationError as exc:
        logger.error("%s: %s", config, exc)
        raise typer.Exit(code=EXIT_CONFIG)
    manifest = RunManifest(
        command=command,
        config_path=config,
        output_dir=out,
        seed=seed,
        version=__version__,
        config_hash=config_hash(command.value, seed, run_config.echo),
        parameters=run_config.echo,
    )
    code = run(manifest, run_config, left, right)
    if code != EXIT_OK:
        raise typer.Exit(code=code)


ConfigOption = typer.Option(..., "--config", "-c", help="Configuration file")
OutOption = typer.Option(Path("runs"), "--out", "-o", help="Output directory")
SeedOption = typer.Option(0, "--seed", help="Seed for the empirical contraction trials")
VerboseOption = typer.Option(False, "--verbose", "-v", help="Log every time step")


@app.command("solve")
def solve_command(config: Path = ConfigOption, out: Path = OutOption,
                  seed: int = SeedOption, verbose: bool = VerboseOption):
    """Solve the Volterra system and write trajectory and field snapshots."""
    _execute(Command.SOLVE, config, out, seed, verbose)


@app.command("oracle")
def oracle_command(config: Path = ConfigOption, out: Path = OutOption,
                   seed: int = SeedOption, verbose: bool = VerboseOption):
    """Tabulate the exact traveling front."""
    _execute(Command.ORACLE, config, out, seed, verbose)


@app.command("certify")
def certify_command(config: Path = ConfigOption, out: Path = OutOption,
                    seed: int = SeedOption, verbose: bool = VerboseOption):
    """Compute the contraction constants and test the contraction empirically."""
    _execute(Command.CERTIFY, config, out, seed, verbose)


@app.command("fd")
def fd_command(config: Path = ConfigOption, out: Path = OutOption,
               seed: int = SeedOption, verbose: bool = VerboseOption):
    """Run the front-fixing finite-difference reference solver."""
    _execute(Command.FD, config, out, seed, verbose)


@app.command("compare")
def compare_command(config: Path = ConfigOption, out: Path = OutOption,
                    seed: int = SeedOption, verbose: bool = VerboseOption,
                    left: Optional[Path] = typer.Option(None, "--left", help="Stored trajectory CSV"),
                    right: Optional[Path] = typer.Option(None, "--right", help="Stored trajectory CSV")):
    """Diff two trajectories, or the Volterra and FD solutions of the configured problem."""
    _execute(Command.COMPARE, config, out, seed, verbose, left, right)


@app.command("convergence")
def convergence_command(config: Path = ConfigOption, out: Path = OutOption,
                        seed: int = SeedOption, verbose: bool = VerboseOption):
    """Tabulate errors and observed orders over convergence.dts."""
    _execute(Command.CONVERGENCE, config, out, seed, verbose)


if __name__ == "__main__":
    app()
