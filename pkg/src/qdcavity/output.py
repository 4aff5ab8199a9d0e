"""CSV and SVG serialization of computed results.

Numeric fields are written with 17 significant digits so that parsing the
text recovers the exact float64, which makes byte-level determinism a
meaningful contract. Undefined grid entries are the literal token NA with
a defined flag of 0.
"""

from __future__ import annotations

import os

import numpy as np

from .correlations import TwoTimeGrid
from .dynamics import SERIES_NAMES, Trajectory
from .steadystate import Spectrum

TRAJECTORY_COLUMNS = ("t",) + SERIES_NAMES


def _fmt(x):
    return f"{x:.17g}"


def write_trajectory(trajectory, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(TRAJECTORY_COLUMNS) + "\n")
        for k, t in enumerate(trajectory.times):
            row = [_fmt(t)] + [_fmt(trajectory.series[name][k]) for name in SERIES_NAMES]
            fh.write(",".join(row) + "\n")


def _write_long_grid(path, t1_axis, t2_axis, values, defined=None):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t1,t2,value,defined\n")
        for i, t1 in enumerate(t1_axis):
            for j, t2 in enumerate(t2_axis):
                if defined is not None and not defined[i, j]:
                    fh.write(f"{_fmt(t1)},{_fmt(t2)},NA,0\n")
                else:
                    fh.write(f"{_fmt(t1)},{_fmt(t2)},{_fmt(values[i, j])},1\n")


def write_grid(grid, directory):
    paths = []
    raw = os.path.join(directory, "two_time_Icx.csv")
    _write_long_grid(raw, grid.t1_axis, grid.t2_axis, grid.values)
    paths.append(raw)
    if grid.normalized_values is not None:
        norm = os.path.join(directory, "normalized_joint.csv")
        _write_long_grid(norm, grid.t1_axis, grid.t2_axis,
                         grid.normalized_values, grid.normalized_defined)
        paths.append(norm)
    return paths


def write_spectrum(spectrum, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("detuning_ueV,cavity_photon_number,joint_intensity_Ixc\n")
        for k, d in enumerate(spectrum.detuning_axis):
            fh.write(f"{_fmt(d)},{_fmt(spectrum.cavity_photon_number[k])},"
                     f"{_fmt(spectrum.joint_intensity_Ixc[k])}\n")


def _pyplot():
    import matplotlib
    matplotlib.use("Agg", force=False)
    # fixed hash salt: svg element ids become run-independent
    matplotlib.rcParams["svg.hashsalt"] = "qdcavity"
    import matplotlib.pyplot as plt
    return plt


def _save(fig, path):
    # strip the creation date so repeated runs emit identical bytes
    fig.savefig(path, metadata={"Date": None})


def plot_trajectory(trajectory, path):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for name in ("cavity_photon_number", "exciton_population", "joint_intensity_Ixc"):
        ax.plot(trajectory.times, trajectory.series[name], label=name)
    ax.set_xlabel("t (ps)")
    ax.set_yscale("log")
    ax.set_ylim(bottom=1e-14)
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    _save(fig, path)
    plt.close(fig)


def plot_grid(grid, path, normalized=False):
    plt = _pyplot()
    values = grid.normalized_values if normalized else grid.values
    fig, ax = plt.subplots(figsize=(5.5, 4.5))
    floor = 1e-16
    shown = np.log10(np.clip(np.nan_to_num(values, nan=0.0), floor, None))
    mesh = ax.pcolormesh(grid.t2_axis, grid.t1_axis, shown, shading="nearest")
    fig.colorbar(mesh, ax=ax, label="log10 value")
    ax.set_xlabel("t2 (ps)")
    ax.set_ylabel("t1 (ps)")
    fig.tight_layout()
    _save(fig, path)
    plt.close(fig)


def plot_spectrum(spectrum, path):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    nbar = spectrum.cavity_photon_number
    joint = spectrum.joint_intensity_Ixc
    ax.plot(spectrum.detuning_axis, nbar / max(nbar.max(), 1e-300),
            label="cavity_photon_number (scaled)")
    ax.plot(spectrum.detuning_axis, joint / max(joint.max(), 1e-300),
            label="joint_intensity_Ixc (scaled)")
    ax.set_xlabel("cavity drive detuning (ueV)")
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, path)
    plt.close(fig)


def emit_plotdata(result, directory, fmt="csv"):
    """Write the CSV (and optional SVG) files for a computed result.

    Returns the list of written paths. result may be a Trajectory,
    TwoTimeGrid or Spectrum.
    """
    os.makedirs(directory, exist_ok=True)
    svg = fmt == "csv+svg"
    paths = []
    if isinstance(result, Trajectory):
        path = os.path.join(directory, "trajectory.csv")
        write_trajectory(result, path)
        paths.append(path)
        if svg:
            p = os.path.join(directory, "trajectory.svg")
            plot_trajectory(result, p)
            paths.append(p)
    elif isinstance(result, TwoTimeGrid):
        paths.extend(write_grid(result, directory))
        if svg:
            p = os.path.join(directory, "two_time_Icx.svg")
            plot_grid(result, p)
            paths.append(p)
            if result.normalized_values is not None:
                p = os.path.join(directory, "normalized_joint.svg")
                plot_grid(result, p, normalized=True)
                paths.append(p)
    elif isinstance(result, Spectrum):
        path = os.path.join(directory, "spectrum.csv")
        write_spectrum(result, path)
        paths.append(path)
        if svg:
            p = os.path.join(directory, "spectrum.svg")
            plot_spectrum(result, p)
            paths.append(p)
    else:
        raise TypeError(f"cannot serialize result of type {type(result).__name__}")
    return paths
