import json
import os
import sys
from pathlib import Path
from typing import Optional

import typer
from tabulate import tabulate

# Ensure hdvikit package is importable when run as a script
if __package__ in (None, '') and not hasattr(sys, 'frozen'):
    path = os.path.realpath(os.path.abspath(__file__))
    sys.path.insert(0, os.path.dirname(os.path.dirname(path)))

from hdvikit.errors import HdviError, InternalError
from hdvikit.model import derived_constants
from hdvikit.runner import Runner, write_failure
from hdvikit.scenario import Scenario
from hdvikit.storage import to_jsonable

# --- Typer App Initialization ---
app = typer.Typer(
    name="hdvikit-cli",
    help="Command-Line Interface for history-dependent contact VI scenarios.",
    no_args_is_help=True,
    context_settings={"help_option_names": ["-h", "--help"]},
)


# --- State Management ---
class CLIState:
    log_dir: Optional[Path] = None
    verbose: bool = False


state = CLIState()


# --- Helper Functions ---
def _fail(error: HdviError):
    """Reports an hdvikit error and exits with its code."""
    typer.secho(f"Error ({type(error).__name__}): {error.message}", fg=typer.colors.RED)
    raise typer.Exit(code=error.exit_code)


def _as_error(error: Exception) -> HdviError:
    return error if isinstance(error, HdviError) else InternalError.wrap(error)


def _load(scenario_file: Path) -> Scenario:
    try:
        return Scenario.from_file(scenario_file)
    except Exception as e:
        _fail(_as_error(e))


def _table(rows, headers=("key", "value")):
    typer.echo(tabulate(rows, headers=list(headers), tablefmt="rounded_outline"))


def _display(value) -> str:
    value = to_jsonable(value)
    if isinstance(value, float):
        return format(value, '.6g')
    if isinstance(value, list) and len(value) > 6:
        return f"[{len(value)} values]"
    return json.dumps(value) if isinstance(value, (list, dict)) else str(value)


# --- Typer Callback for Global Options ---
@app.callback()
def main_callback(
    log_dir: Optional[Path] = typer.Option(
        None, "--log-dir",
        help="Directory for solver log files. Uses HDVIKIT_LOG_DIR env var if set.",
        envvar="HDVIKIT_LOG_DIR",
        file_okay=False,
    ),
    verbose: bool = typer.Option(False, "--verbose", "-v", help="Show progress bars."),
):
    """
    hdvikit Command-Line Interface.

    Run a scenario with 'run', check it with 'validate', print its constants with 'constants'.
    """
    state.log_dir = log_dir
    state.verbose = verbose


# --- Commands ---
@app.command()
def run(
    scenario_file: Path = typer.Argument(..., help="Path to the scenario JSON document.", dir_okay=False),
    out: Optional[Path] = typer.Option(
        None, "--out", "-o",
        help="Output directory. Uses HDVIKIT_OUT_DIR env var if set, else runs/<scenario name>.",
        envvar="HDVIKIT_OUT_DIR",
        file_okay=False,
    ),
    tol: Optional[float] = typer.Option(None, "--tol", help="Solver tolerance overriding the scenario value."),
    steps: Optional[int] = typer.Option(None, "--steps", help="Number of time steps overriding the scenario value."),
    threads: Optional[int] = typer.Option(
        None, "--threads",
        help="Worker threads for independent solves (default 1). Uses HDVIKIT_THREADS env var if set.",
        envvar="HDVIKIT_THREADS",
    ),
):
    """Run a scenario and write its CSV outputs and manifest."""
    out_dir = out
    try:
        scenario = Scenario.from_file(scenario_file)
        out_dir = out_dir or Path('runs') / scenario.name
        options = scenario.solver_options(tol=tol, threads=threads, progress=state.verbose or None)
        runner = Runner(scenario, out_dir, options=options, steps=steps, log_dir=state.log_dir)
    except Exception as e:
        error = _as_error(e)
        write_failure(out_dir or Path("runs") / scenario_file.stem, error, name=scenario_file.stem)
        _fail(error)

    typer.echo(f"Running '{scenario.name}' ({scenario.mode}) -> {out_dir}")
    try:
        manifest = runner.run()
    except Exception as e:
        _fail(_as_error(e))

    _table([[key, _display(value)] for key, value in manifest.metrics.items()], headers=("metric", "value"))
    typer.secho(f"Run complete in {manifest.wall_clock_seconds:.2f} s; manifest written to {out_dir / 'manifest.json'}", fg=typer.colors.GREEN)


@app.command()
def validate(
    scenario_file: Path = typer.Argument(..., help="Path to the scenario JSON document.", dir_okay=False),
):
    """Check a scenario against the schema and build its problem without solving."""
    scenario = _load(scenario_file)
    try:
        problem = scenario.build_problem()
    except Exception as e:
        _fail(_as_error(e))
    rows = scenario.summary_rows() + [['n_dof', problem.n_dof], ['bounded_dofs', len(problem.constraints.indices)]]
    _table(rows)
    typer.secho(f"Scenario '{scenario.name}' is valid.", fg=typer.colors.GREEN)


@app.command()
def constants(
    scenario_file: Path = typer.Argument(..., help="Path to the scenario JSON document.", dir_okay=False),
    steps: Optional[int] = typer.Option(None, "--steps", help="Number of time steps overriding the scenario value."),
    as_json: bool = typer.Option(False, "--json", help="Print the constants as JSON."),
):
    """Print the derived constants (m_B, c, K, T*, Picard constants) of a scenario."""
    scenario = _load(scenario_file)
    try:
        problem = scenario.build_problem(scenario.grid(steps))
    except Exception as e:
        _fail(_as_error(e))
    values = derived_constants(problem, scenario.options.quadrature).to_dict()
    if as_json:
        typer.echo(json.dumps(to_jsonable(values), indent=2, sort_keys=True))
        return
    _table([[key, _display(value)] for key, value in values.items()], headers=("constant", "value"))


# --- Main Execution ---
if __name__ == "__main__":
    app()
