"""
rydgate command line.

    python main.py simulate --config configs/cnot4_cs_rb.yaml --out results/
    python main.py sweep --config configs/cnot4_cs_rb.yaml --workers 8
    python main.py truthtable --config configs/c2not2_cs_rb.yaml
    python main.py schedule
    python main.py potential --out results/potential.csv
    python main.py error-curves | blocking-scan | geometry-summary
"""

import functools
import json
import os
import sys

import click
import numpy as np

from rydgate.config import AxisSpec, RunSpec, build_run, load_config
from rydgate.errors import ConfigError, RydgateError
from rydgate.fidelity import gate_fidelity_run, truth_table_check
from rydgate.interactions import builtin_coefficients, potential_curves
from rydgate.json_logger import log_json
from rydgate.logger import log_event
from rydgate.pulses import schedule_table
from rydgate.report_generator import (
    metadata,
    save_csv,
    save_json,
    save_sweep,
    save_trajectory_csv,
    save_txt,
)
from rydgate.sweep import (
    VARIANTS,
    SweepGrid,
    run_blocking_scan,
    run_error_curves,
    run_geometry_summary,
    run_sweep,
)
from rydgate.units import US

DEFAULT_PAIRS = ("Rb87-Rb87", "Cs133-Cs133", "Cs133-Rb87")


def info(message: str) -> None:
    click.echo(f"[INFO] {message}")


def warn(message: str) -> None:
    click.echo(f"[WARN] {message}", err=True)


def fail(message: str) -> None:
    click.echo(f"[ERROR] {message}", err=True)
    log_event(message, level="ERROR")
    sys.exit(1)


def handle_errors(command):
    """Config and physics errors become a one-line message and exit code 1."""
    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except ConfigError as e:
            fail(f"config error: {e}")
        except (RydgateError, ValueError) as e:
            fail(str(e))
    return wrapper


def load_spec(path: str | None) -> RunSpec:
    spec = load_config(path)
    log_event(f"config loaded: {path or '(default preset)'} preset={spec.preset} gate={spec.gate}")
    log_json("config_loaded", path=path, preset=spec.preset, gate=spec.gate)
    return spec


def emit(data, out: str | None) -> None:
    if out:
        save_json(data, out)
        info(f"Saved {out}")
    else:
        click.echo(json.dumps(data, indent=2))


config_option = click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
                             help="YAML run file (default: the cnot preset).")


@click.group()
def cli():
    """Rydberg-EIT multiqubit gate simulator."""


# ---------------------------
# simulate
# ---------------------------
@cli.command()
@config_option
@click.option("--out", "out_dir", default=None, help="Output directory (default: output.dir from the config).")
@click.option("--R", "scale_um", type=float, default=None, help="Override R_CT (R_CC for C2NOT2) in um.")
@click.option("--ratio", type=float, default=None, help="Override Omega_c / Omega_p.")
@click.option("--label", "labels", multiple=True, help="Population pattern, e.g. '1|B*'. Repeatable.")
@handle_errors
def simulate(config_path, out_dir, scale_um, ratio, labels):
    """Run one gate and write the trajectory CSV and a summary."""
    spec = load_spec(config_path)
    run = build_run(spec, scale_um=scale_um, ratio=ratio)
    for w in run.warnings:
        warn(w)
        log_event(w, level="WARN")

    k, N = run.model.k, run.model.N
    labels = list(labels) or [
        f"{'0' * k}|{'A' * N}",
        f"{'0' * k}|{'B' * N}",
        f"{'1' * k}|{'A' * N}",
        f"{'1' * k}|{'B' * N}",
    ]
    controls = tuple(spec.initial_controls) if spec.initial_controls else None
    result = gate_fidelity_run(run.model, run.layout, run.schedule, run.integrator, target=spec.target, controls=controls)

    out_dir = out_dir or spec.output.dir
    csv_path = save_trajectory_csv(result.trajectory, labels, os.path.join(out_dir, "trajectory.csv"))
    summary = {
        "gate": spec.gate,
        "layout": spec.layout.kind,
        "k": k,
        "N": N,
        "fidelity": result.fidelity,
        "leak": result.leak,
        "norm_final": result.norm,
        "duration_us": result.duration / US,
    }
    save_txt(summary, os.path.join(out_dir, "summary.txt"))
    save_json({**metadata(spec), **summary}, os.path.join(out_dir, "summary.json"))

    log_event(f"gate run finished: F={result.fidelity:.6f} leak={result.leak:.3e} norm={result.norm:.6f}")
    log_json("gate_run_finished", **summary)
    info(f"F = {result.fidelity:.6f}, leak = {result.leak:.3e}, duration = {result.duration / US:.4f} us")
    info(f"Saved {csv_path}")


# ---------------------------
# sweep
# ---------------------------
@cli.command()
@config_option
@click.option("--out", "out_dir", default=None)
@click.option("--workers", type=int, default=None, help="Parallel worker processes.")
@click.option("--cache/--no-cache", default=None, help="Reuse finished points from <out>/cache.")
@click.option("--R-min", "r_min", type=float, default=None)
@click.option("--R-max", "r_max", type=float, default=None)
@click.option("--R-count", "r_count", type=int, default=None)
@click.option("--ratio-min", type=float, default=None)
@click.option("--ratio-max", type=float, default=None)
@click.option("--ratio-count", type=int, default=None)
@handle_errors
def sweep(config_path, out_dir, workers, cache, r_min, r_max, r_count, ratio_min, ratio_max, ratio_count):
    """Fidelity over the (R, Omega_c/Omega_p) grid."""
    spec = load_spec(config_path)
    R_axis = _axis(spec.sweep.R_um, r_min, r_max, r_count)
    ratio_axis = _axis(spec.sweep.ratio, ratio_min, ratio_max, ratio_count)
    grid = SweepGrid.from_spec(spec, R_axis, ratio_axis)

    out_dir = out_dir or spec.output.dir
    use_cache = spec.sweep.cache if cache is None else cache
    records = run_sweep(
        grid,
        workers=workers or spec.sweep.workers,
        cache_dir=os.path.join(out_dir, "cache") if use_cache else None,
        progress=True,
    )
    csv_path, json_path = save_sweep(records, spec, out_dir)

    failed = [r for r in records if r.status == "integrator-failure"]
    flagged = [r for r in records if r.status == "validity-warning"]
    skipped = [r for r in flagged if r.fidelity is None]
    if skipped:
        warn(f"{len(skipped)} point(s) below the Le Roy radius, fidelity omitted")
    if len(flagged) > len(skipped):
        warn(f"{len(flagged) - len(skipped)} point(s) use a fixed regime outside its range")
    info(f"Saved {csv_path} and {json_path}")
    if failed:
        fail(f"{len(failed)} point(s) failed to integrate")


def _axis(axis: AxisSpec, lo, hi, count) -> AxisSpec:
    return AxisSpec(
        min=axis.min if lo is None else lo,
        max=axis.max if hi is None else hi,
        count=axis.count if count is None else count,
    )


# ---------------------------
# truthtable
# ---------------------------
@cli.command()
@config_option
@click.option("--out", default=None, help="JSON file (default: stdout).")
@click.option("--blockade-limit", "blockade_factor", type=float, default=None,
              help="Idealize: V_CT = FACTOR * Omega_c, other interactions off.")
@click.option("--no-decay", is_flag=True, default=False)
@handle_errors
def truthtable(config_path, out, blockade_factor, no_decay):
    """Population and phase on the expected output of every input row."""
    spec = load_spec(config_path)
    if blockade_factor is not None:
        spec = spec.model_copy(update={
            "interactions": spec.interactions.model_copy(update={"blockade_limit_factor": blockade_factor}),
        })
    run = build_run(spec, decay=False if no_decay else None)
    rows = truth_table_check(spec.gate, run.model, run.integrator, run.schedule)
    log_json("truth_table", gate=spec.gate, min_population=min(r.population for r in rows))
    emit({**metadata(spec), "rows": [r.as_dict() for r in rows]}, out)


# ---------------------------
# schedule
# ---------------------------
@cli.command()
@config_option
@click.option("--out", default=None, help="JSON file (default: stdout).")
@handle_errors
def schedule(config_path, out):
    """Segment table of the gate schedule (us, 2pi x MHz)."""
    spec = load_spec(config_path)
    run = build_run(spec)
    emit({
        "gate": spec.gate,
        "duration_us": run.schedule.duration / US,
        "segments": schedule_table(run.schedule),
    }, out)


# ---------------------------
# potential
# ---------------------------
@cli.command()
@click.option("--pair", "pairs", multiple=True, default=DEFAULT_PAIRS, show_default=True)
@click.option("--R-min", "r_min", type=float, default=2.0, show_default=True)
@click.option("--R-max", "r_max", type=float, default=15.0, show_default=True)
@click.option("--count", type=int, default=131, show_default=True)
@click.option("--out", default=None, help="CSV file (default: stdout).")
@handle_errors
def potential(pairs, r_min, r_max, count, out):
    """V(R) curves (R_um, V_MHz_over_2pi, regime) for the given pairs."""
    try:
        rows = potential_curves(builtin_coefficients(), list(pairs), np.linspace(r_min, r_max, count))
    except (KeyError, ValueError) as e:
        fail(str(e))
    columns = ["pair", "R_um", "V_MHz_over_2pi", "regime"]
    if out:
        save_csv(rows, out, columns)
        info(f"Saved {out}")
    else:
        click.echo(",".join(columns))
        for row in rows:
            click.echo(",".join(str(row[c]) for c in columns))


# ---------------------------
# error-curves / blocking-scan / geometry-summary
# ---------------------------
@cli.command("error-curves")
@config_option
@click.option("--out", "out_dir", default=None)
@click.option("--ratio", type=float, default=3.0, show_default=True)
@click.option("--variant", "variants", multiple=True, type=click.Choice(list(VARIANTS)),
              default=tuple(VARIANTS), show_default=True)
@click.option("--workers", type=int, default=None)
@handle_errors
def error_curves(config_path, out_dir, ratio, variants, workers):
    """F(R) with and without decay, for both intermediate levels."""
    spec = load_spec(config_path)
    out_dir = out_dir or spec.output.dir
    curves = run_error_curves(spec, tuple(variants), ratio=ratio, workers=workers or spec.sweep.workers, progress=True)
    for variant, records in curves.items():
        csv_path, _ = save_sweep(records, spec, out_dir, name=f"error_curve_{variant}")
        best = max((r for r in records if r.fidelity is not None), key=lambda r: r.fidelity, default=None)
        if best is not None:
            info(f"{variant}: peak F = {best.fidelity:.5f} at R = {best.R_um:g} um")
        info(f"Saved {csv_path}")


@cli.command("blocking-scan")
@config_option
@click.option("--ratios", default="0.15,0.5,1,1.5,2,2.5,3,4,6,8,12", show_default=True,
              help="Comma-separated Omega_c / Omega_p values.")
@click.option("--decay/--no-decay", default=False, show_default=True)
@click.option("--out", default=None, help="CSV file (default: stdout).")
@handle_errors
def blocking_scan(config_path, ratios, decay, out):
    """Final P(|0A>) and P(|0B>) versus Omega_c / Omega_p, no interactions."""
    spec = load_spec(config_path)
    try:
        values = [float(v) for v in ratios.split(",") if v.strip()]
    except ValueError:
        fail(f"--ratios must be comma-separated numbers, got '{ratios}'")
    rows = run_blocking_scan(spec, values, decay=decay)
    if out:
        save_csv(rows, out)
        info(f"Saved {out}")
    else:
        for row in rows:
            click.echo(f"ratio={row['ratio']:g} P_0A={row['P_0A']:.6f} P_0B={row['P_0B']:.6f}")


@cli.command("geometry-summary")
@config_option
@click.option("--ratio", type=float, default=3.1, show_default=True)
@click.option("--R", "R_ct", type=float, default=6.0, show_default=True, help="R_CT in um.")
@click.option("--out", default=None, help="JSON file (default: stdout).")
@handle_errors
def geometry_summary(config_path, ratio, R_ct, out):
    """Fidelity for 1..4 targets and the C2NOT2 rhombus."""
    spec = load_spec(config_path)
    rows = run_geometry_summary(spec, ratio=ratio, R_ct=R_ct)
    emit({**metadata(spec), "rows": rows}, out)


if __name__ == "__main__":
    cli()
