"""Writers for the run output bundle.

Column orders are fixed and documented in the README; two runs with the
same config and seed produce byte-identical files.
"""
from __future__ import annotations

import csv
import json
import platform
from pathlib import Path

import numpy as np

from . import __version__
from .accounting import History
from .engine import RunResult, ScenarioConfig, config_hash

METRICS_COLUMNS = (
    "t",
    "agent",
    "currency",
    "balance",
    "income",
    "revenue",
    "expenses",
    "cumulative_cashflow",
)


def metrics_rows(history: History):
    agents = history.agents
    currencies = list(history.currencies)
    cashflow = {(a, i): 0 for a in agents for i in currencies}
    for t, step in enumerate(history.steps):
        if t >= 1:
            for key, amount in step.revenue.items():
                cashflow[key] += amount
            for key, amount in step.expenses.items():
                cashflow[key] -= amount
        for a in agents:
            for i in currencies:
                key = (a, i)
                yield (
                    t,
                    a,
                    i,
                    step.balances.get(key, 0),
                    step.income.get(key, 0) if t >= 1 else 0,
                    step.revenue.get(key, 0) if t >= 1 else 0,
                    step.expenses.get(key, 0) if t >= 1 else 0,
                    cashflow[key],
                )


def write_metrics_csv(history: History, path) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(METRICS_COLUMNS)
        writer.writerows(metrics_rows(history))


def write_metrics_json(history: History, path) -> None:
    records = [dict(zip(METRICS_COLUMNS, row)) for row in metrics_rows(history)]
    with open(path, "w") as handle:
        json.dump(records, handle)
        handle.write("\n")


def write_rates_csv(result: RunResult, path) -> None:
    """Long format: one row per (equilibration step, currency pair)."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(("t", "i", "j", "mrs", "ex"))
        for event in result.rates_log:
            k = len(event.mrs)
            for i in range(k):
                for j in range(k):
                    writer.writerow(
                        (event.t, i + 1, j + 1, repr(event.mrs[i][j]), repr(event.ex[i][j]))
                    )


def write_solver_csv(result: RunResult, path) -> None:
    k = result.config.k
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(("t", "iterations", "residual") + tuple(f"p{i}" for i in range(1, k + 1)))
        for event in result.solver_log:
            writer.writerow(
                (event.t, event.iterations, repr(event.residual))
                + tuple(repr(p) for p in event.prices)
            )


def write_justice_csv(result: RunResult, path) -> None:
    series = result.justice_series()
    counts = [result.history.member_count(t) for t in range(result.history.last_step + 1)]
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(("t", "agent", "value", "target", "deviation"))
        for agent in sorted(series):
            values = series[agent]
            for t, value in enumerate(values):
                target = 1.0 / counts[t] if counts[t] else float("nan")
                writer.writerow((t, agent, repr(value), repr(target), repr(abs(value - target))))


def justice_summary(
    result: RunResult, window_frac: float = 0.1, tolerance: float = 1e-2
) -> dict:
    report = result.justice_report(window_frac)
    summary = {"justice": report.to_summary(tolerance)}
    if result.ex12 is not None:
        from .justice import convergence_report

        ex = convergence_report(result.ex12, window_frac)
        aot = convergence_report(result.a_over_t, window_frac)
        summary["ex12"] = {
            "trailing_mean": ex.trailing_mean,
            "max_deviation": ex.max_deviation,
            "window": ex.window,
        }
        summary["a_over_t"] = {
            "trailing_mean": aot.trailing_mean,
            "max_deviation": aot.max_deviation,
            "window": aot.window,
        }
        mrs = [value for _, value in result.mrs12_series()]
        if len(mrs) >= 2:
            est = convergence_report(mrs, window_frac)
            summary["mrs12"] = {
                "trailing_mean": est.trailing_mean,
                "max_deviation": est.max_deviation,
                "window": est.window,
            }
    return summary


def write_justice_json(result: RunResult, path, window_frac: float = 0.1) -> None:
    with open(path, "w") as handle:
        json.dump(justice_summary(result, window_frac), handle, indent=2, sort_keys=True)
        handle.write("\n")


def write_manifest(config: ScenarioConfig, path, files) -> None:
    manifest = {
        "name": config.name,
        "config": config.to_dict(),
        "config_sha256": config_hash(config),
        "seed": config.seed,
        "steps": config.steps,
        "package": "currencynet",
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "files": sorted(files),
    }
    with open(path, "w") as handle:
        json.dump(manifest, handle, indent=2, sort_keys=True)
        handle.write("\n")


def write_bundle(result: RunResult, outdir, fmt: str = "csv") -> list:
    """Write the full output bundle; returns the file names written."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    files = []
    if fmt == "json":
        write_metrics_json(result.history, outdir / "metrics.json")
        files.append("metrics.json")
    else:
        write_metrics_csv(result.history, outdir / "metrics.csv")
        files.append("metrics.csv")
    if result.rates_log:
        write_rates_csv(result, outdir / "rates.csv")
        files.append("rates.csv")
    if result.solver_log:
        write_solver_csv(result, outdir / "solver.csv")
        files.append("solver.csv")
    write_justice_csv(result, outdir / "justice.csv")
    files.append("justice.csv")
    write_justice_json(result, outdir / "justice.json")
    files.append("justice.json")
    write_manifest(result.config, outdir / "manifest.json", files + ["manifest.json"])
    files.append("manifest.json")
    return files
