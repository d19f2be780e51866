"""Command-line harness.

Exit codes: 0 success, 2 invalid flags or output directory, 3 unknown
problem (or an estimator the problem does not support), 4 runtime failure.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

import click
import numpy as np

from . import __version__
from .core import InvalidArgumentError, ProblemNotFoundError, UnsupportedError
from .estimator import exact_finite, mc_uniform
from .metrics import evaluate_front
from .problems import lookup, names, registry, sample_reference_front
from .sasmo import SCHEMA_VERSION, RunConfig, final_front, run

EXIT_USAGE = 2
EXIT_PROBLEM = 3
EXIT_RUNTIME = 4

OUTPUT_ROOT_ENV = "SASMO_OUTPUT_ROOT"
DEFAULT_OUTPUT_ROOT = "sasmo-runs"

# flag name -> RunConfig field
_RUN_FLAGS = {
    "n0": "n0",
    "rho": "rho",
    "alpha": "alpha",
    "threshold_bound": "threshold_bound",
    "initial_threshold": "initial_threshold",
    "shrink_factor": "shrink_factor",
    "tmax": "t_max",
    "sigma0": "sigma0_scale",
    "mu0": "mu0",
    "growth_exponent": "growth_exponent",
}


class CliError(click.ClickException):
    def __init__(self, message: str, code: int) -> None:
        super().__init__(message)
        self.exit_code = code


def fmt(value: float) -> str:
    """Round-trip-safe text for a float (17 significant digits)."""
    value = float(value)
    if math.isnan(value):
        return "nan"
    return f"{value:.17g}"


def _csv_text(header: list[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    return buf.getvalue()


def front_csv(points: np.ndarray, objectives: np.ndarray) -> str:
    d, n = points.shape[1], objectives.shape[1]
    header = [f"x{i + 1}" for i in range(d)] + [f"f{j + 1}" for j in range(n)]
    return _csv_text(header, np.hstack([points, objectives]).tolist())


def objectives_csv(objectives: np.ndarray) -> str:
    header = [f"f{j + 1}" for j in range(objectives.shape[1])]
    return _csv_text(header, objectives.tolist())


def _resolve_problem(name: str):
    try:
        return lookup(name)
    except ProblemNotFoundError:
        raise CliError(f"unknown problem {name!r}; choose from {', '.join(names())}", EXIT_PROBLEM)


def build_config(problem: str, seed: int, flags: dict[str, Any], config_file: str | None) -> RunConfig:
    """Merge built-in defaults, then the config file, then explicit flags."""
    values: dict[str, Any] = {}
    if config_file is not None:
        try:
            loaded = json.loads(Path(config_file).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"cannot read config file: {exc}", EXIT_USAGE)
        if not isinstance(loaded, dict):
            raise CliError("config file must hold a JSON object", EXIT_USAGE)
        values.update(loaded)
    for flag, key in _RUN_FLAGS.items():
        if flags.get(flag) is not None:
            values[key] = flags[flag]
    values["problem"] = problem
    values["seed"] = seed
    try:
        return RunConfig.from_dict(values)
    except (InvalidArgumentError, TypeError) as exc:
        raise CliError(f"invalid configuration: {exc}", EXIT_USAGE)


def prepare_output(out: str | None, problem: str, seed: int, force: bool) -> Path:
    if out is None:
        root = Path(os.environ.get(OUTPUT_ROOT_ENV, DEFAULT_OUTPUT_ROOT))
        path = root / f"{problem}-seed{seed}"
    else:
        path = Path(out)
    if path.exists() and not path.is_dir():
        raise CliError(f"{path} exists and is not a directory", EXIT_USAGE)
    if path.is_dir() and any(path.iterdir()) and not force:
        raise CliError(f"{path} is not empty; pass --force to reuse it", EXIT_USAGE)
    path.mkdir(parents=True, exist_ok=True)
    return path


def replicate(config: RunConfig, post_filter: bool) -> dict[str, Any]:
    """One replication: run, score, and return everything that gets written."""
    problem = lookup(config.problem)
    history = run(config, problem)
    X, F = final_front(history, post_filter=post_filter)
    reference = sample_reference_front(problem.name)
    report = evaluate_front(reference, F, X, problem.true_set_bounds())
    return {
        "seed": config.seed,
        "history": history.to_json(),
        "front": front_csv(X, F),
        "points": X,
        "objectives": F,
        "lam": report.lam,
        "upsilon": report.upsilon,
        "iterations": len(history.iterations),
        "front_size": int(X.shape[0]),
        "stop_reason": history.stop_reason,
        "runtime_seconds": history.runtime_seconds,
    }


def _replicate_star(args):
    return replicate(*args)


def run_replications(configs: list[RunConfig], post_filter: bool, jobs: int) -> list[dict[str, Any]]:
    tasks = [(c, post_filter) for c in configs]
    if jobs <= 1 or len(tasks) == 1:
        return [replicate(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
        return list(pool.map(_replicate_star, tasks))


SUMMARY_FIELDS = ["replication", "seed", "lambda", "upsilon", "front_size", "iterations",
                  "stop_reason", "runtime_seconds"]


def summary_rows(results: list[dict[str, Any]]) -> list[dict[str, Any]]:
    """Per-replication metrics plus a ``best`` row (per-column minimum)."""
    rows = [
        {"replication": r, "seed": res["seed"], "lambda": res["lam"], "upsilon": res["upsilon"],
         "front_size": res["front_size"], "iterations": res["iterations"],
         "stop_reason": res["stop_reason"], "runtime_seconds": res["runtime_seconds"]}
        for r, res in enumerate(results)
    ]
    ups = np.array([res["upsilon"] for res in results])
    rows.append({
        "replication": "best", "seed": None,
        "lambda": float(np.min([res["lam"] for res in results])),
        "upsilon": float(np.nanmin(ups)) if np.any(~np.isnan(ups)) else float("nan"),
        "front_size": None, "iterations": None, "stop_reason": None, "runtime_seconds": None,
    })
    return rows


def summary_csv(rows: list[dict[str, Any]]) -> str:
    def cell(v):
        if v is None:
            return ""
        return v if isinstance(v, float) else str(v)

    return _csv_text(SUMMARY_FIELDS, ([cell(row[k]) for k in SUMMARY_FIELDS] for row in rows))


def summary_json(rows: list[dict[str, Any]]) -> str:
    clean = [{k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in row.items()}
             for row in rows]
    return json.dumps(clean, indent=1)


def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8")


def _run_options(f):
    options = [
        click.option("--problem", required=True, help="Benchmark name (see `problems list`)."),
        click.option("--seed", type=int, default=0, show_default=True, help="Base seed."),
        click.option("--n0", type=click.IntRange(min=1), default=None, help="Initial sample size."),
        click.option("--rho", type=float, default=None, help="Elite quantile level."),
        click.option("--alpha", type=float, default=None, help="Uniform mixing coefficient."),
        click.option("--threshold-bound", type=float, default=None, help="Stop once the threshold drops below this."),
        click.option("--initial-threshold", type=float, default=None, help="First clustering threshold."),
        click.option("--shrink-factor", type=float, default=None, help="Threshold shrink factor C > 1."),
        click.option("--growth-exponent", type=float, default=None, help="Sample-size growth exponent."),
        click.option("--tmax", type=click.IntRange(min=1), default=None, help="Iteration budget."),
        click.option("--sigma0", type=float, default=None, help="Initial covariance scale."),
        click.option("--mu0", type=click.Choice(["zero", "box-center"]), default=None, help="Initial mean."),
        click.option("--config", "config_file", type=click.Path(dir_okay=False), default=None,
                     help="JSON file of run settings; flags take precedence."),
        click.option("--out", type=click.Path(file_okay=False), default=None,
                     help=f"Output directory (default ${OUTPUT_ROOT_ENV}/<problem>-seed<seed>)."),
        click.option("--force", is_flag=True, help="Reuse a non-empty output directory."),
        click.option("--post-filter", is_flag=True, help="Drop returned points dominated by another."),
    ]
    for option in reversed(options):
        f = option(f)
    return f


@click.group()
@click.version_option(__version__, prog_name="sasmo")
def main() -> None:
    """Domination-measure search for multi-objective problems."""


@main.command("run")
@_run_options
@click.option("--replications", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--jobs", type=click.IntRange(min=1), default=None,
              help="Parallel replications (default: CPU count).")
@click.option("--format", "fmt_", type=click.Choice(["json", "csv"]), default="csv", show_default=True,
              help="Format of the summary echoed to standard output.")
def cmd_run(problem, seed, config_file, out, force, post_filter, replications, jobs, fmt_, **flags):
    """Run replications and write histories, fronts and a metric summary."""
    _resolve_problem(problem)
    base = build_config(problem, seed, flags, config_file)
    path = prepare_output(out, problem, seed, force)
    configs = [RunConfig.from_dict({**base.to_dict(), "seed": seed + r}) for r in range(replications)]
    prob = lookup(problem)
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "tool_version": __version__,
        "created_at": datetime.now(timezone.utc).isoformat(),
        "config": {**base.to_dict(), "initial_threshold": base.resolve_threshold(prob)},
        "replications": replications,
        "base_seed": seed,
        "seeds": [c.seed for c in configs],
        "post_filter": post_filter,
        "output_dir": str(path.resolve()),
    }
    _write(path / "manifest.json", json.dumps(manifest, indent=1))
    try:
        results = run_replications(configs, post_filter, jobs or os.cpu_count() or 1)
    except Exception as exc:  # noqa: BLE001 - reported with a diagnostic and exit code 4
        raise CliError(f"run failed: {type(exc).__name__}: {exc}", EXIT_RUNTIME)
    for r, res in enumerate(results):
        _write(path / f"history_{r}.json", res["history"])
        _write(path / f"front_{r}.csv", res["front"])
    rows = summary_rows(results)
    summary = summary_csv(rows)
    _write(path / "summary.csv", summary)
    if fmt_ == "csv":
        click.echo(summary, nl=False)
    else:
        click.echo(summary_json(rows))


@main.command("front")
@_run_options
def cmd_front(problem, seed, config_file, out, force, post_filter, **flags):
    """Write true_front.csv and approx_front.csv for plotting."""
    prob = _resolve_problem(problem)
    config = build_config(problem, seed, flags, config_file)
    path = prepare_output(out, problem, seed, force)
    try:
        history = run(config, prob)
        _, F = final_front(history, post_filter=post_filter)
        reference = sample_reference_front(problem)
    except Exception as exc:  # noqa: BLE001
        raise CliError(f"run failed: {type(exc).__name__}: {exc}", EXIT_RUNTIME)
    _write(path / "true_front.csv", objectives_csv(reference))
    _write(path / "approx_front.csv", objectives_csv(F))
    click.echo(str(path))


@main.command("dmeasure")
@click.option("--problem", required=True)
@click.option("--samples", type=click.IntRange(min=1), default=1000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--estimator", type=click.Choice(["uniform", "exact"]), default="uniform", show_default=True)
def cmd_dmeasure(problem, samples, seed, estimator):
    """Print the domination measure of sampled (or all) points as CSV."""
    prob = _resolve_problem(problem)
    if estimator == "exact":
        try:
            D = exact_finite(prob)
        except UnsupportedError as exc:
            raise CliError(str(exc), EXIT_PROBLEM)
        X = prob.finite_space
    else:
        rng = np.random.default_rng(seed)
        X = rng.uniform(prob.box.lower, prob.box.upper, size=(samples, prob.d))
        D = None
    F = prob.objective(X)
    if D is None:
        D = mc_uniform(F)
    header = (["index"] + [f"x{i + 1}" for i in range(prob.d)]
              + [f"f{j + 1}" for j in range(prob.n)] + ["dmeasure"])
    rows = ([str(i)] + X[i].tolist() + F[i].tolist() + [D[i]] for i in range(X.shape[0]))
    click.echo(_csv_text(header, rows), nl=False)


@main.group("problems")
def cmd_problems() -> None:
    """Inspect the benchmark registry."""


@cmd_problems.command("list")
def cmd_problems_list() -> None:
    """Print every registered problem as JSON."""
    click.echo(json.dumps([p.describe() for p in registry().values()], indent=1))


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
