"""The six figure kinds and the batch renderer that writes them.

All renderers are read-only over the run directory and deterministic: a
fixed SVG hash salt and stripped date metadata make rerenders byte-identical
for fixed inputs and library versions.
"""

from __future__ import annotations

import enum
import os
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "consdyn-plots"

import matplotlib.pyplot as plt
import numpy as np

from .reader import PlotsError, RunDirectory, require_columns

__all__ = ["FigureKind", "FigureSpec", "render_figures"]


class FigureKind(enum.Enum):
    LOADING = "loading"
    KINETIC_ACROSS_MESHES = "kinetic_across_meshes"
    TRACE = "trace"
    HYSTERESIS = "hysteresis"
    ENERGY_PARTITION = "energy_partition"
    DAMAGE_DETAIL = "damage_detail"


#: The artifact each kind draws from; a run lacking the file skips the kind.
_SOURCES = {
    FigureKind.LOADING: "energies.csv",
    FigureKind.KINETIC_ACROSS_MESHES: "energies.csv",
    FigureKind.TRACE: "trace.csv",
    FigureKind.HYSTERESIS: "hysteresis.csv",
    FigureKind.ENERGY_PARTITION: "energies.csv",
    FigureKind.DAMAGE_DETAIL: "damage.csv",
}

ENERGY_COLUMNS = ["t", "kinetic", "elastic_bulk", "adhesive", "hardening",
                  "dissip_viscous_cum", "dissip_rate_indep_cum",
                  "work_ext_cum", "residual"]


@dataclass(frozen=True)
class FigureSpec:
    """One requested figure: its kind and where the image goes."""

    run: RunDirectory
    kind: FigureKind
    out_path: str


def _applied_load(run: RunDirectory, t: np.ndarray) -> np.ndarray:
    """Reconstruct the applied edge traction from the config echo."""
    cfg = run.config
    amplitude = float(cfg["amplitude"])
    if cfg.get("experiment") == "friction":
        period = float(cfg["period"])
        x = (t / period) % 1.0
        shape = np.where(x < 0.25, 4.0 * x,
                         np.where(x < 0.75, 2.0 - 4.0 * x, 4.0 * x - 4.0))
        return amplitude * shape
    if "ramp_end" not in cfg:
        raise PlotsError(f"{run.file('config.txt')}: no 'ramp_end' entry; "
                         "cannot reconstruct a ramp load")
    ramp_end = float(cfg["ramp_end"])
    return np.where(t < ramp_end, amplitude * t / ramp_end, 0.0)


def _render_loading(run: RunDirectory, ax) -> None:
    table = run.table("energies.csv")
    require_columns(table, ["t"], run.file("energies.csv"))
    t = np.concatenate([[0.0], table["t"]])
    ax.plot(t, _applied_load(run, t) / 1e6, color="tab:red")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("applied traction [MPa]")


def _member_runs(run: RunDirectory) -> list[RunDirectory]:
    """Sub-runs for overlay figures: child run directories, else the run."""
    members = []
    for name in sorted(os.listdir(run.path)):
        child = os.path.join(run.path, name)
        if os.path.isdir(child) and \
                os.path.exists(os.path.join(child, "energies.csv")):
            members.append(RunDirectory(child))
    if not members:
        members = [run]
    members.sort(key=lambda r: (r.config.get("mesh_level", 0),
                                r.config.get("dt", 0.0)))
    return members


def _render_kinetic_across_meshes(run: RunDirectory, ax) -> None:
    for member in _member_runs(run):
        table = member.table("energies.csv")
        require_columns(table, ["t", "kinetic"], member.file("energies.csv"))
        cfg = member.config
        ax.plot(table["t"], table["kinetic"],
                label=f"level {cfg.get('mesh_level', '?')}, "
                      f"dt={cfg.get('dt', float('nan')):g}")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("kinetic energy [J]")
    ax.legend(fontsize="small")


def _render_trace(run: RunDirectory, fig) -> None:
    table = run.table("trace.csv")
    path = run.file("trace.csv")
    require_columns(table, ["t", "ux_tip", "uy_tip", "vx_tip", "vy_tip"],
                    path)
    ax_u, ax_v = fig.subplots(2, 1, sharex=True)
    t = table["t"]
    for col in table:
        if col.startswith("u"):
            ax_u.plot(t, table[col] * 1e3, label=col)
        elif col.startswith("v"):
            ax_v.plot(t, table[col], label=col)
    ax_u.set_ylabel("displacement [mm]")
    ax_v.set_ylabel("velocity [m/s]")
    ax_v.set_xlabel("t [s]")
    for ax in (ax_u, ax_v):
        ax.legend(fontsize="small")


def _render_hysteresis(run: RunDirectory, ax) -> None:
    table = run.table("hysteresis.csv")
    require_columns(table, ["t", "u_t_point", "traction_t_point"],
                    run.file("hysteresis.csv"))
    ax.plot(table["u_t_point"] * 1e3, table["traction_t_point"] / 1e6,
            color="tab:blue", linewidth=0.9)
    ax.set_xlabel("tangential gap [mm]")
    ax.set_ylabel("adhesive traction [MPa]")


def _render_energy_partition(run: RunDirectory, ax) -> None:
    table = run.table("energies.csv")
    require_columns(table, ENERGY_COLUMNS, run.file("energies.csv"))
    t = table["t"]
    for col in ("kinetic", "elastic_bulk", "adhesive", "hardening",
                "dissip_viscous_cum", "dissip_rate_indep_cum"):
        ax.plot(t, table[col], label=col)
    ax.plot(t, table["work_ext_cum"], "k--", label="work_ext_cum")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("energy [J]")
    ax.legend(fontsize="small", ncols=2)


def _render_damage_detail(run: RunDirectory, ax) -> None:
    table = run.table("damage.csv")
    path = run.file("damage.csv")
    require_columns(table, ["t"], path)
    zeta_cols = [c for c in table if c.startswith("zeta_")]
    if not zeta_cols:
        raise PlotsError(f"{path}: no zeta_* columns")
    show_legend = len(zeta_cols) <= 12
    for col in zeta_cols:
        ax.plot(table["t"], table[col], label=col if show_legend else None)
    ax.set_xlabel("t [s]")
    ax.set_ylabel("degradation state")
    ax.set_ylim(-0.05, 1.05)
    if show_legend:
        ax.legend(fontsize="small")


def _render(spec: FigureSpec) -> None:
    fig = plt.figure(figsize=(6.4, 4.2))
    try:
        if spec.kind is FigureKind.TRACE:
            _render_trace(spec.run, fig)
        else:
            ax = fig.subplots()
            {FigureKind.LOADING: _render_loading,
             FigureKind.KINETIC_ACROSS_MESHES: _render_kinetic_across_meshes,
             FigureKind.HYSTERESIS: _render_hysteresis,
             FigureKind.ENERGY_PARTITION: _render_energy_partition,
             FigureKind.DAMAGE_DETAIL: _render_damage_detail}[spec.kind](
                spec.run, ax)
        title = spec.run.label() if spec.run.has("config.txt") \
            else os.path.basename(os.path.abspath(spec.run.path))
        fig.suptitle(title, fontsize="medium")
        fig.tight_layout()
        fig.savefig(spec.out_path, metadata={"Date": None}
                    if spec.out_path.endswith(".svg") else None)
    finally:
        plt.close(fig)


def render_figures(run_dir: str, kinds: list[FigureKind],
                   fmt: str = "png", out_dir: str | None = None,
                   notify=None) -> list[str]:
    """Render the requested kinds for one run directory.

    Kinds whose source artifact the run did not produce (e.g. damage curves
    for a friction run) are skipped with a notice through ``notify``;
    malformed artifacts raise. Returns the paths written.
    """
    if fmt not in ("png", "svg"):
        raise PlotsError(f"unsupported format {fmt!r}; use png or svg")
    if not os.path.isdir(run_dir):
        raise PlotsError(f"run directory {run_dir!r} does not exist")
    run = RunDirectory(run_dir)
    out_dir = run_dir if out_dir is None else out_dir
    written = []
    for kind in kinds:
        source = _SOURCES[kind]
        if kind is not FigureKind.KINETIC_ACROSS_MESHES and not run.has(source):
            if notify is not None:
                notify(f"skipped {kind.value}: this run has no {source}")
            continue
        os.makedirs(out_dir, exist_ok=True)
        out_path = os.path.join(out_dir, f"{kind.value}.{fmt}")
        _render(FigureSpec(run=run, kind=kind, out_path=out_path))
        written.append(out_path)
    return written
