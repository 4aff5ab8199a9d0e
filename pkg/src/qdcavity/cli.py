"""Command-line entry points: run, preset, validate, convergence.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 I/O error. Failures print a single machine-parsable line
``<CLASS>: <diagnostic>`` to stderr.
"""

from __future__ import annotations

import os
import sys
import time
from dataclasses import replace

import click

from . import __version__
from .config import ScenarioConfig, parse_config, preset, serialize_config
from .correlations import two_time_with_normalization
from .dynamics import check_cutoff_convergence, propagate
from .errors import ConfigError, NumericalError, QdCavityError
from .output import emit_plotdata
from .steadystate import spectrum_sweep


def _apply_overrides(cfg, fock_cutoff=None, tolerance=None, no_dephasing=False,
                     threads=None, fmt=None):
    if fock_cutoff is not None:
        try:
            cfg = replace(cfg, params=replace(cfg.params, fock_cutoff=fock_cutoff))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    if tolerance is not None:
        if tolerance <= 0.0:
            raise ConfigError("tolerance must be > 0")
        cfg = replace(cfg, tolerance=tolerance)
    if no_dephasing:
        cfg = replace(cfg, dephasing_enabled=False)
    if threads is not None:
        if threads < 1:
            raise ConfigError("threads must be >= 1")
        cfg = replace(cfg, workers=threads)
    if fmt is not None:
        cfg = replace(cfg, output_format=fmt)
    return cfg


def _write_sidecar(cfg, directory, wall_time_s, extras=()):
    """Resolved parameters plus the approximations in force, config grammar."""
    lines = [serialize_config(cfg)]
    lines.append("[run]\n")
    lines.append(f"package_version = {__version__}\n")
    lines.append(f"wall_time_s = {wall_time_s:.3f}\n")
    for key, value in extras:
        lines.append(f"{key} = {value}\n")
    lines.append("\n[approximations]\n")
    if cfg.mode == "spectrum":
        lines.append("frame = two_tone_corotating\n")
        lines.append("secular_drop_of_detuned_terms = on\n")
    else:
        lines.append("frame = pulsed_rotating\n")
        detuned = "on" if cfg.include_detuned_terms else "off"
        lines.append(f"detuned_couplings_included = {detuned}\n")
    lines.append(f"fock_cutoff = {cfg.params.fock_cutoff}\n")
    lines.append(f"dephasing_enabled = {'on' if cfg.dephasing_enabled else 'off'}\n")
    path = os.path.join(directory, "run_metadata.cfg")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.writelines(lines)
    return path


def run_config(cfg):
    """Execute the scenario a config describes; returns the written paths."""
    params = cfg.effective_params()
    drives = cfg.drive_envelopes()
    started = time.perf_counter()
    extras = []
    if cfg.mode == "pulsed":
        result = propagate(params, drives, cfg.grid.times(), tol=cfg.tolerance,
                           include_detuned_terms=cfg.include_detuned_terms)
        results = [result]
        diag = result.diagnostics
        extras = [("max_trace_drift", f"{diag['max_trace_drift']:.3e}"),
                  ("min_eigenvalue", f"{diag['min_eigenvalue']:.3e}")]
    elif cfg.mode == "two_time":
        grid, trajectory = two_time_with_normalization(
            params, drives, cfg.grid.t1_axis(), cfg.grid.t2_axis(),
            tol=cfg.tolerance, include_detuned_terms=cfg.include_detuned_terms,
            workers=cfg.workers)
        results = [grid, trajectory]
    elif cfg.mode == "spectrum":
        e_in = next(env.amplitude for env in drives if env.target == "cavity")
        e_c = next((env.amplitude for env in drives if env.target == "qd"), 0.0)
        results = [spectrum_sweep(params, e_in, e_c, cfg.grid.detunings(),
                                  workers=cfg.workers)]
    else:
        raise ConfigError(f"unknown mode {cfg.mode!r}")
    paths = []
    for result in results:
        paths.extend(emit_plotdata(result, cfg.output_path, cfg.output_format))
    paths.append(_write_sidecar(cfg, cfg.output_path,
                                time.perf_counter() - started, extras))
    return paths


def _fail(code, label, exc):
    click.echo(f"{label}: {exc}", err=True)
    sys.exit(code)


def _guarded(fn):
    try:
        fn()
    except ConfigError as exc:
        _fail(2, "CONFIG_ERROR", exc)
    except NumericalError as exc:
        _fail(3, "NUMERICAL_ERROR", exc)
    except QdCavityError as exc:
        _fail(3, "NUMERICAL_ERROR", exc)
    except OSError as exc:
        _fail(4, "IO_ERROR", exc)


def _read_config(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        _fail(4, "IO_ERROR", exc)
    return parse_config(text)


_common_options = [
    click.option("--fock-cutoff", type=int, default=None,
                 help="Override the photon-number cutoff."),
    click.option("--tolerance", type=float, default=None,
                 help="Override the integrator tolerance."),
    click.option("--no-dephasing", is_flag=True, default=False,
                 help="Disable pure dephasing regardless of the config."),
    click.option("--threads", type=int, default=None,
                 help="Worker processes for sweeps and grids."),
    click.option("--format", "fmt", type=click.Choice(["csv", "csv+svg"]),
                 default=None, help="Output format."),
]


def _with_common_options(fn):
    for opt in reversed(_common_options):
        fn = opt(fn)
    return fn


@click.group()
@click.version_option(version=__version__, prog_name="qdcavity")
def main():
    """Dissipative quantum-dot / microcavity simulator."""


@main.command()
@click.argument("config_path", type=click.Path())
@_with_common_options
def run(config_path, fock_cutoff, tolerance, no_dephasing, threads, fmt):
    """Execute the scenario described by a config file."""

    def body():
        cfg = _read_config(config_path)
        cfg = _apply_overrides(cfg, fock_cutoff, tolerance, no_dephasing, threads, fmt)
        for path in run_config(cfg):
            click.echo(f"wrote {path}")

    _guarded(body)


@main.command(name="preset")
@click.argument("name")
@click.option("--out", type=click.Path(), default=None,
              help="Output directory (defaults to the preset's own).")
@_with_common_options
def preset_cmd(name, out, fock_cutoff, tolerance, no_dephasing, threads, fmt):
    """Run a bundled scenario: fig2, fig2_dephasing, fig3a or fig3c."""

    def body():
        cfg = preset(name)
        cfg = _apply_overrides(cfg, fock_cutoff, tolerance, no_dephasing, threads, fmt)
        if out is not None:
            cfg = replace(cfg, output_path=out)
        for path in run_config(cfg):
            click.echo(f"wrote {path}")

    _guarded(body)


@main.command()
@click.argument("config_path", type=click.Path())
def validate(config_path):
    """Parse and validate a config file without running it."""

    def body():
        cfg = _read_config(config_path)
        click.echo(f"OK: {cfg.mode} scenario, {len(cfg.drives)} drive(s), "
                   f"cutoff {cfg.params.fock_cutoff}, output {cfg.output_path}")

    _guarded(body)


@main.command()
@click.argument("config_path", type=click.Path())
@click.option("--cutoffs", required=True,
              help="Pair n1,n2 of photon cutoffs to compare.")
def convergence(config_path, cutoffs):
    """Compare all observables of a time-domain scenario at two cutoffs."""

    def body():
        cfg = _read_config(config_path)
        try:
            n1, n2 = (int(v) for v in cutoffs.split(","))
        except ValueError:
            raise ConfigError(f"--cutoffs expects n1,n2 integers, got {cutoffs!r}") from None
        if cfg.mode == "spectrum":
            raise ConfigError("convergence needs a time-domain scenario (pulsed or two_time)")
        times = cfg.grid.times() if cfg.mode == "pulsed" else cfg.grid.t1_axis()
        try:
            worst = check_cutoff_convergence(cfg.effective_params(),
                                             cfg.drive_envelopes(), times, n1, n2,
                                             tol=cfg.tolerance,
                                             include_detuned_terms=cfg.include_detuned_terms)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        click.echo(f"max deviation over all observables, cutoff {n1} vs {n2}: {worst:.6e}")

    _guarded(body)


if __name__ == "__main__":
    main()
