"""Command-line interface.

Five subcommands: simulate-rabi, simulate-fringe, fit, sensitivity and
sequence.  All frequencies are kHz and all times microseconds.  Every
command accepts --config (JSON file of flag values, unknown keys
rejected), --seed and --out; with identical config and seed, reruns
produce byte-identical output files.

Exit codes: 0 success, 1 input or usage error, 2 fit did not converge
(the result file is still written).
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .fitting import FitConfig, fit_fringe, neighbor_average, sensitivity
from .model import FringeScan, PHASE_CONVENTIONS, fringe_closed_form, rabi_populations, with_population_noise
from .rotation import LEVELS, SpinState
from .scanio import (
    fit_result_dict,
    read_scan,
    read_sequence_file,
    sensitivity_report_dict,
    write_json,
    write_scan,
    write_table,
)
from .sequence import (
    DetuningModel,
    SequenceSpec,
    ensemble_average,
    fringe_scan,
    populations_vs_phase,
    sequence_evolve,
)
from .rotation import populations as state_populations

RABI_HEADER = "t_us,p_p2,p_p1,p_0,p_m1,p_m2"
PHASE_HEADER = "phi_rad,p_p2,p_p1,p_0,p_m1,p_m2"


class _ExitCodeGroup(click.Group):
    """Group that maps usage errors to exit 1 and passes ctx.exit codes through."""

    def main(self, *args, **kwargs):
        kwargs["standalone_mode"] = False
        try:
            # with standalone mode off, click returns ctx.exit codes
            rv = super().main(*args, **kwargs)
        except click.exceptions.Exit as exc:
            sys.exit(exc.exit_code)
        except click.UsageError as exc:
            click.echo(f"error: {exc.format_message()}", err=True)
            sys.exit(1)
        except click.ClickException as exc:
            click.echo(f"error: {exc.format_message()}", err=True)
            sys.exit(exc.exit_code)
        except click.exceptions.Abort:
            click.echo("error: aborted", err=True)
            sys.exit(1)
        sys.exit(rv if isinstance(rv, int) else 0)


def _load_config(ctx, param, value):
    if not value:
        return None
    try:
        payload = json.loads(Path(value).read_text(encoding="utf-8"))
    except OSError as exc:
        raise click.UsageError(f"cannot read config file: {exc}")
    except json.JSONDecodeError as exc:
        raise click.UsageError(f"config file is not valid JSON: {exc}")
    if not isinstance(payload, dict):
        raise click.UsageError("config file must contain a JSON object")
    allowed = {p.name for p in ctx.command.params} - {"config", "help"}
    unknown = sorted(set(payload) - allowed)
    if unknown:
        raise click.UsageError(f"unknown config keys: {', '.join(unknown)}")
    ctx.default_map = {**(ctx.default_map or {}), **payload}
    return value


def _common_options(fn):
    fn = click.option("--config", callback=_load_config, is_eager=True, expose_value=False,
                      type=click.Path(), help="JSON file supplying defaults for these flags.")(fn)
    fn = click.option("--seed", type=click.IntRange(min=0), default=0, show_default=True,
                      help="Random seed, used by commands that draw noise or samples.")(fn)
    fn = click.option("--out", required=True, type=click.Path(),
                      help="Output file path.")(fn)
    return fn


def _wrap_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ValueError, OSError) as exc:
            raise click.ClickException(str(exc)) from exc

    return wrapper


def _frequency_grid(f_min, f_max, f_step):
    if f_step <= 0.0:
        raise click.UsageError("--f-step must be positive")
    n = int(np.floor((f_max - f_min) / f_step + 1e-9)) + 1
    if f_max < f_min or n < 1:
        raise click.UsageError("empty frequency grid (check --f-min/--f-max/--f-step)")
    return f_min + f_step * np.arange(n)


def _parse_free(value) -> tuple[str, ...]:
    names = tuple(part.strip() for part in value.split(",") if part.strip())
    if not names:
        raise click.UsageError("--free must name at least one parameter")
    return names


@click.group(cls=_ExitCodeGroup)
@click.version_option(__version__, prog_name="spinramsey")
def cli():
    """Five-level Ramsey interferometer: simulate, fit, analyze."""


@cli.command("simulate-rabi")
@click.option("--omega-khz", type=float, required=True,
              help="Spin rotation rate of the pulse, in kHz (angle = 2*pi*omega*t).")
@click.option("--t-max-us", type=float, default=230.0, show_default=True,
              help="Last pulse width of the grid, microseconds.")
@click.option("--t-step-us", type=float, default=0.5, show_default=True,
              help="Pulse-width grid step, microseconds.")
@_common_options
@_wrap_errors
def simulate_rabi(omega_khz, t_max_us, t_step_us, seed, out):
    """Populations of all five sublevels versus resonant pulse width."""
    if t_step_us <= 0.0:
        raise click.UsageError("--t-step-us must be positive")
    if t_max_us < 0.0:
        raise click.UsageError("--t-max-us must be non-negative")
    n = int(np.floor(t_max_us / t_step_us + 1e-9)) + 1
    t_us = t_step_us * np.arange(n)
    omega = 2.0 * np.pi * omega_khz * 1e3
    pops = rabi_populations(omega, t_us * 1e-6)
    write_table(out, RABI_HEADER, [t_us] + [pops[:, i] for i in range(5)])
    click.echo(f"wrote {n} rows to {out}")


@cli.command("simulate-fringe")
@click.option("--f0", type=float, required=True, help="Resonant frequency, kHz.")
@click.option("--t-us", type=float, required=True, help="Interrogation time, microseconds.")
@click.option("--delta", type=float, default=25.0, show_default=True,
              help="Detuning envelope width, kHz.")
@click.option("--phi", type=float, default=0.0, show_default=True,
              help="Free phase offset, radians.")
@click.option("--f-min", type=float, default=175.0, show_default=True)
@click.option("--f-max", type=float, default=210.0, show_default=True)
@click.option("--f-step", type=float, default=0.25, show_default=True)
@click.option("--initial", type=click.Choice(LEVELS), default="+2", show_default=True,
              help="Initially populated sublevel.")
@click.option("--convention", type=click.Choice(PHASE_CONVENTIONS), default="sum",
              show_default=True, help="Accumulated-phase convention.")
@click.option("--vs-phase", is_flag=True,
              help="Emit populations on a uniform phase grid over one period instead "
                   "of a frequency scan (resonant pulses).")
@click.option("--phase-samples", type=click.IntRange(min=16), default=256, show_default=True,
              help="Number of phase samples for --vs-phase.")
@click.option("--noise-sigma", type=float, default=0.0, show_default=True,
              help="Gaussian population noise added to the scan (rows renormalized).")
@_common_options
@_wrap_errors
def simulate_fringe(f0, t_us, delta, phi, f_min, f_max, f_step, initial, convention,
                    vs_phase, phase_samples, noise_sigma, seed, out):
    """Simulate the two-pulse fringe for any initial sublevel."""
    state = SpinState.from_level(initial)
    if vs_phase:
        phases = 2.0 * np.pi * np.arange(phase_samples) / phase_samples
        pops = populations_vs_phase(phases, initial=state)
        write_table(out, PHASE_HEADER, [phases] + [pops[:, i] for i in range(5)])
        click.echo(f"wrote {phase_samples} rows to {out}")
        return
    grid = _frequency_grid(f_min, f_max, f_step)
    scan = fringe_scan(grid, f0, t_us, delta, phi, initial=state, convention=convention)
    if noise_sigma > 0.0:
        scan = with_population_noise(scan, noise_sigma, seed)
    write_scan(out, scan)
    click.echo(f"wrote {len(scan)} rows to {out}")


def _fit_config_from_flags(target, free, f0, t_us, phi, delta, scale, weighted,
                           max_iter, tol, multistart, convention):
    return FitConfig(
        guesses={"f0": f0, "t": t_us, "phi": phi, "delta": delta, "scale": scale},
        free=_parse_free(free),
        target=target,
        weighted=weighted,
        max_iterations=max_iter,
        tolerance=tol,
        multistart=multistart,
        convention=convention,
    )


def _fit_flags(fn):
    fn = click.option("--target", type=click.Choice(LEVELS), default="+2", show_default=True,
                      help="Component the fit minimizes over.")(fn)
    fn = click.option("--free", default="f0,t,phi", show_default=True,
                      help="Comma-separated free parameters (from f0,t,phi,delta,scale).")(fn)
    fn = click.option("--f0", type=float, required=True, help="Initial guess for f0, kHz.")(fn)
    fn = click.option("--t-us", type=float, required=True, help="Initial guess for T, us.")(fn)
    fn = click.option("--phi", type=float, default=0.0, show_default=True)(fn)
    fn = click.option("--delta", type=float, default=25.0, show_default=True)(fn)
    fn = click.option("--scale", type=float, default=1.0, show_default=True)(fn)
    fn = click.option("--weighted", is_flag=True, help="Weight residuals by 1/stddev.")(fn)
    fn = click.option("--max-iter", type=click.IntRange(min=1), default=200, show_default=True)(fn)
    fn = click.option("--tol", type=float, default=1e-10, show_default=True,
                      help="Relative residual-change convergence tolerance.")(fn)
    fn = click.option("--multistart/--no-multistart", default=True, show_default=True)(fn)
    fn = click.option("--convention", type=click.Choice(PHASE_CONVENTIONS), default="sum",
                      show_default=True)(fn)
    return fn


@cli.command("fit")
@click.argument("scan_path", type=click.Path(exists=True, dir_okay=False))
@_fit_flags
@click.option("--overlay", type=click.Path(),
              help="Path for the fitted-model overlay CSV (default: <out>.overlay.csv).")
@_common_options
@click.pass_context
@_wrap_errors
def fit_command(ctx, scan_path, target, free, f0, t_us, phi, delta, scale, weighted,
                max_iter, tol, multistart, convention, overlay, seed, out):
    """Fit the closed-form fringe to a measured scan and write JSON + overlay."""
    scan = read_scan(scan_path)
    config = _fit_config_from_flags(target, free, f0, t_us, phi, delta, scale, weighted,
                                    max_iter, tol, multistart, convention)
    result = fit_fringe(scan, config)
    metadata = {"scan_path": str(scan_path), "convention": convention}
    write_json(out, fit_result_dict(result, metadata))
    overlay_path = overlay if overlay else str(out) + ".overlay.csv"
    p = result.parameters
    model = fringe_closed_form(scan.f_khz, p["f0"], p["t"], p["delta"], p["phi"], convention)
    write_table(overlay_path, "f_khz,p_p2,p_p1,p_0,p_m1,p_m2",
                [scan.f_khz] + [p["scale"] * model[:, i] for i in range(5)])
    if not result.converged:
        click.echo("fit did not converge; results written with converged=false", err=True)
        ctx.exit(2)
    click.echo(f"fit converged in {result.iterations} iterations; wrote {out}")


@cli.command("sensitivity")
@click.argument("scan_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--window", type=click.IntRange(min=1),
              help="Odd window of neighboring frequencies used to build the spread.")
@_fit_flags
@_common_options
@click.pass_context
@_wrap_errors
def sensitivity_command(ctx, scan_path, window, target, free, f0, t_us, phi, delta, scale,
                        weighted, max_iter, tol, multistart, convention, seed, out):
    """Average smallest distinguishable phase over the fitted fringe peaks."""
    scan = read_scan(scan_path)
    if window is not None:
        scan = neighbor_average(scan, window)
    elif scan.stddev is None:
        raise click.UsageError("scan has no stddev columns; pass --window to compute a spread")
    config = _fit_config_from_flags(target, free, f0, t_us, phi, delta, scale, weighted,
                                    max_iter, tol, multistart, convention)
    result = fit_fringe(scan, config)
    report = sensitivity(scan, result, convention=convention)
    metadata = {"scan_path": str(scan_path), "window": window,
                "convention": convention, "fit": fit_result_dict(result)}
    write_json(out, sensitivity_report_dict(report, metadata))
    if not result.converged:
        click.echo("underlying fit did not converge", err=True)
        ctx.exit(2)
    click.echo(f"average sensitivity {report.average_rad:.4f} rad over "
               f"{len(report.per_peak_rad)} peaks; wrote {out}")


@cli.command("sequence")
@click.argument("sequence_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--initial", type=click.Choice(LEVELS), default="+2", show_default=True)
@click.option("--f", "f_khz", type=float, help="Drive frequency entering delay phases, kHz.")
@click.option("--f0", "f0_khz", type=float, help="Resonant frequency, kHz.")
@click.option("--delta", type=float, help="Envelope width for detuned pulses, kHz.")
@click.option("--convention", type=click.Choice(PHASE_CONVENTIONS), default="sum",
              show_default=True)
@click.option("--gradient-khz", type=float, default=0.0, show_default=True,
              help="Stddev of the static per-shot resonance offset.")
@click.option("--fluctuation-khz", type=float, default=0.0, show_default=True,
              help="Stddev of the per-delay resonance fluctuation.")
@click.option("--samples", type=click.IntRange(min=1), default=1, show_default=True,
              help="Monte-Carlo samples for the ensemble average.")
@_common_options
@_wrap_errors
def sequence_command(sequence_path, initial, f_khz, f0_khz, delta, convention,
                     gradient_khz, fluctuation_khz, samples, seed, out):
    """Evolve a pulse/delay sequence file, optionally ensemble-averaged."""
    detuning = None
    if delta is not None:
        if f0_khz is None:
            raise click.UsageError("--delta requires --f0")
        detuning = DetuningModel(f0_khz, delta)
    steps = read_sequence_file(sequence_path, detuning)
    seq = SequenceSpec(steps=steps, initial_state=SpinState.from_level(initial),
                       f_khz=f_khz, f0_khz=f0_khz, convention=convention)
    ensemble = gradient_khz > 0.0 or fluctuation_khz > 0.0
    if ensemble:
        pops = ensemble_average(seq, gradient_khz, fluctuation_khz, samples, seed)
    else:
        pops = state_populations(sequence_evolve(seq))
    payload = {
        "labels": list(LEVELS),
        "populations": [float(p) for p in pops],
        "ensemble": ensemble,
        "samples": samples if ensemble else 1,
        "seed": seed,
        "gradient_khz": gradient_khz,
        "fluctuation_khz": fluctuation_khz,
    }
    write_json(out, payload)
    click.echo(f"wrote populations to {out}")


def main():
    cli.main(args=sys.argv[1:], prog_name="spinramsey")


if __name__ == "__main__":
    main()
