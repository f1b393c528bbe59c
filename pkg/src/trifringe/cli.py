"""Command line entry points.

Subcommands mirror the measurement workflow: ``gen`` fabricates
synthetic raw data, ``calibrate`` turns fringe counts into a device
model, ``scan-fit`` reduces delay scans to visibilities, ``predict``
and ``fisher`` evaluate a model forward, ``report`` compares measured
against predicted visibilities.  Every delimited output gets a
rendered figure next to it with the same stem.

Exit codes: 0 on success, 2 on validation problems (bad files, ranges,
degenerate inputs), 3 on fit failures.
"""

from __future__ import annotations

import dataclasses
import functools
import math
import os
import sys

import click
import numpy as np

from . import io, plots
from .calibration import calibrate_device, predict_coincidences
from .device import IdealDevice, phase_from_power
from .errors import DecompositionError, FitError, ValidationError
from .fisher import fisher_with_bands
from .homscan import fit_scan
from .interference import PAIR_OUTCOMES, FockState
from .synth import generate_fringes, generate_hom_scans

EXIT_VALIDATION = 2
EXIT_FIT = 3


def _guarded(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ValidationError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_VALIDATION)
        except (FitError, DecompositionError) as exc:
            click.echo(f"fit error: {exc}", err=True)
            sys.exit(EXIT_FIT)
    return wrapper


def _load_device(model_path: str | None, ideal: bool):
    if ideal == (model_path is not None):
        raise ValidationError("pass exactly one of --model or --ideal")
    if ideal:
        return IdealDevice()
    return io.read_model(model_path)


def _theta_grid(device, theta_min, theta_max, grid: int) -> np.ndarray:
    if grid < 2:
        raise ValidationError("--grid must be at least 2")
    if theta_min is None:
        theta_min = 0.0 if math.isinf(device.theta_min) else device.theta_min
    if theta_max is None:
        theta_max = 2.0 * math.pi if math.isinf(device.theta_max) else device.theta_max
    if not (theta_max > theta_min):
        raise ValidationError("--theta-max must exceed --theta-min")
    return np.linspace(theta_min, theta_max, grid)


@click.group()
def main():
    """Characterize and simulate a phase-tunable three-arm interferometer."""


@main.command()
@click.option("--spec", "spec_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Synthetic device spec (JSON).")
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Run config with grids and scan jobs (JSON).")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False),
              help="Output directory for fringes.csv and scan_*.csv.")
@click.option("--noise-free", is_flag=True,
              help="Write expectation values instead of Poisson samples.")
@click.option("--seed", type=int, default=None,
              help="Override the spec's rng_seed.")
@_guarded
def gen(spec_path, config_path, out_dir, noise_free, seed):
    """Generate a synthetic measurement campaign."""
    spec = io.read_device_spec(spec_path)
    if seed is not None:
        spec = dataclasses.replace(spec, rng_seed=seed)
    cfg = io.read_run_config(config_path)
    os.makedirs(out_dir, exist_ok=True)
    fringes = generate_fringes(spec, cfg, noise_free=noise_free)
    io.write_fringes(fringes, os.path.join(out_dir, "fringes.csv"))
    scans = generate_hom_scans(spec, cfg, noise_free=noise_free)
    for i, scan in enumerate(scans):
        io.write_hom_scan(scan, os.path.join(out_dir, f"scan_{i:03d}.csv"))
    click.echo(f"wrote fringes.csv ({len(fringes.records)} records) "
               f"and {len(scans)} delay scans to {out_dir}")


@main.command()
@click.option("--fringes", "fringes_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Fringe counts CSV.")
@click.option("--out", "model_path", required=True, help="Model JSON to write.")
@click.option("--report", "report_path", required=True,
              help="Per-setpoint fit report CSV to write.")
@click.option("--pair-rate", type=float, default=1.0, show_default=True,
              help="Photon-pair rate at the chip input (pairs/s); fringes "
                   "alone cannot determine it.")
@click.option("--seed", type=int, default=0, show_default=True,
              help="Seed for fit restart draws.")
@_guarded
def calibrate(fringes_path, model_path, report_path, pair_rate, seed):
    """Extract couplings, phase constant and losses from fringes."""
    dataset = io.read_fringes(fringes_path)
    model, phase_fit, fits = calibrate_device(dataset, input_pair_rate=pair_rate,
                                              rng_seed=seed)
    io.write_model(model, model_path)
    thetas = [phase_from_power(model.calibration, f.current, f.voltage) for f in fits]
    io.write_fit_report(fits, thetas, report_path)
    plots.plot_fit_report(fits, thetas, plots.figure_path(report_path))
    cal = model.calibration
    click.echo(f"k = {cal.k:.6g} +- {cal.k_uncertainty:.2g} 1/W, "
               f"{len(fits)} setpoints, {len(model.loss_products)} loss products "
               f"-> {model_path}")


@main.command("scan-fit")
@click.option("--scans", "scan_dir", required=True,
              type=click.Path(exists=True, file_okay=False),
              help="Directory of scan_*.csv files.")
@click.option("--out", "out_path", required=True, help="Visibility CSV to write.")
@click.option("--model", "model_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="Model JSON; when given, thetas are filled in from its "
                   "phase calibration.")
@_guarded
def scan_fit(scan_dir, out_path, model_path):
    """Fit delay scans and tabulate measured visibilities."""
    model = io.read_model(model_path) if model_path else None
    records = []
    for path in io.scan_paths(scan_dir):
        scan = io.read_hom_scan(path)
        theta = math.nan
        if model is not None:
            theta = phase_from_power(model.calibration, scan.current, scan.voltage)
        records.append(fit_scan(scan, theta))
    io.write_visibilities(records, out_path)
    plots.plot_visibilities(records, plots.figure_path(out_path))
    click.echo(f"fitted {len(records)} scans -> {out_path}")
    for r in records:
        kind = "dip" if r.visibility >= 0 else "peak"
        click.echo(f"  in {io.pair_to_text(r.input_pair)} out {io.pair_to_text(r.output_pair)}: "
                   f"V = {r.visibility:+.4f} +- {r.visibility_sigma:.4f} ({kind})")


def _fringe_contrast(values: np.ndarray) -> float:
    top, bottom = float(np.max(values)), float(np.min(values))
    if top + bottom <= 0:
        return 0.0
    return (top - bottom) / (top + bottom)


@main.command()
@click.option("--model", "model_path", default=None,
              type=click.Path(exists=True, dir_okay=False), help="Model JSON.")
@click.option("--ideal", is_flag=True, help="Use the lossless ideal device.")
@click.option("--input", "input_text", default="110", show_default=True,
              help="Two-photon input occupation, e.g. 110.")
@click.option("--grid", type=int, default=200, show_default=True,
              help="Number of theta grid points.")
@click.option("--theta-min", type=float, default=None)
@click.option("--theta-max", type=float, default=None)
@click.option("--out", "out_path", required=True, help="Prediction CSV to write.")
@_guarded
def predict(model_path, ideal, input_text, grid, theta_min, theta_max, out_path):
    """Predict pair rates for every outcome over a theta sweep."""
    device = _load_device(model_path, ideal)
    state = FockState.parse(input_text)
    if state.total != 2:
        raise ValidationError(f"predict needs a two-photon input, got {state}")
    modes = state.modes()
    thetas = _theta_grid(device, theta_min, theta_max, grid)
    rows = []
    for theta in thetas:
        for pair in PAIR_OUTCOMES:
            rows.append({
                "theta": float(theta),
                "output_pair": pair,
                "indistinguishable": predict_coincidences(device, modes, pair,
                                                          theta, True),
                "distinguishable": predict_coincidences(device, modes, pair,
                                                        theta, False),
            })
    io.write_predictions(rows, state, out_path)
    plots.plot_predictions(rows, plots.figure_path(out_path))
    click.echo(f"input {state}: fringe contrast over theta in "
               f"[{thetas[0]:.4g}, {thetas[-1]:.4g}]")
    for pair in PAIR_OUTCOMES:
        q = np.array([r["indistinguishable"].value for r in rows
                      if r["output_pair"] == pair])
        c = np.array([r["distinguishable"].value for r in rows
                      if r["output_pair"] == pair])
        cq, cc = _fringe_contrast(q), _fringe_contrast(c)
        note = "  (quantum exceeds classical)" if cq > cc else ""
        click.echo(f"  out {io.pair_to_text(pair)}: quantum {cq:.6f}, "
                   f"classical {cc:.6f}{note}")


@main.command()
@click.option("--model", "model_path", default=None,
              type=click.Path(exists=True, dir_okay=False), help="Model JSON.")
@click.option("--ideal", is_flag=True, help="Use the lossless ideal device.")
@click.option("--input", "input_text", default="011", show_default=True,
              help="Input occupation with 1 or 2 photons.")
@click.option("--grid", type=int, default=2000, show_default=True)
@click.option("--theta-min", type=float, default=None)
@click.option("--theta-max", type=float, default=None)
@click.option("--out", "out_path", required=True, help="Fisher CSV to write.")
@_guarded
def fisher(model_path, ideal, input_text, grid, theta_min, theta_max, out_path):
    """Fisher information of the phase over a theta sweep."""
    device = _load_device(model_path, ideal)
    state = FockState.parse(input_text)
    thetas = _theta_grid(device, theta_min, theta_max, grid)
    curve = fisher_with_bands(device, state, thetas)
    io.write_fisher_curve(curve, out_path)
    summary_path = (out_path[:-4] if out_path.endswith(".csv") else out_path) + "_summary.json"
    io.write_fisher_summary(curve, summary_path)
    plots.plot_fisher(curve, plots.figure_path(out_path))
    argmax, peak = curve.max_point()
    click.echo(f"input {state}: max F = {peak:.6f} at theta = {argmax:.6f}")
    interval = curve.interval_above(2.0)
    if interval:
        click.echo(f"F > 2 on theta in [{interval[0]:.6f}, {interval[1]:.6f}]")
    else:
        click.echo("F never exceeds 2 on this grid")


@main.command()
@click.option("--model", "model_path", required=True,
              type=click.Path(exists=True, dir_okay=False), help="Model JSON.")
@click.option("--vis", "vis_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Measured visibilities CSV from scan-fit.")
@click.option("--out", "out_path", required=True, help="Comparison CSV to write.")
@_guarded
def report(model_path, vis_path, out_path):
    """Compare measured visibilities with the model's predictions."""
    from .interference import predicted_visibility

    model = io.read_model(model_path)
    records = io.read_visibilities(vis_path)
    rows = []
    for rec in records:
        if not math.isfinite(rec.theta):
            raise ValidationError(
                "visibility rows lack theta; rerun scan-fit with --model"
            )
        values = [predicted_visibility(dev.unitary(rec.theta), rec.input_pair,
                                       rec.output_pair)
                  for dev in [model, *model.corner_models()]]
        predicted = values[0]
        deviation = ((rec.visibility - predicted) / rec.visibility_sigma
                     if rec.visibility_sigma > 0 else math.inf)
        rows.append({
            "input_pair": rec.input_pair,
            "output_pair": rec.output_pair,
            "theta": rec.theta,
            "measured": rec.visibility,
            "measured_sigma": rec.visibility_sigma,
            "predicted": predicted,
            "predicted_lo": min(values),
            "predicted_hi": max(values),
            "deviation_sigma": deviation,
        })
    io.write_comparison(rows, out_path)
    plots.plot_comparison(rows, plots.figure_path(out_path))
    within = sum(1 for row in rows if abs(row["deviation_sigma"]) <= 3.0)
    click.echo(f"{within}/{len(rows)} measured visibilities within 3 sigma "
               f"of prediction -> {out_path}")


if __name__ == "__main__":
    main()
