"""Figure builders over the CSV contract.

Everything here is read-only: tables come in through
:mod:`snplot.reader`, images go out through ``Figure.savefig``. The
object-oriented matplotlib API is used directly (no pyplot), so
building figures never touches global state or needs a display.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from matplotlib.figure import Figure

from .reader import ContractError, Table, read_table

__all__ = ["PlotSpec", "plot_correlations", "plot_screen_densities",
           "render_correlations", "render_screens"]

_FORMATS = (".png", ".svg")


@dataclass(frozen=True)
class PlotSpec:
    """Input files, panel layout, axis labels, output image.

    The output format is taken from the suffix of ``out`` (png or svg).
    """

    inputs: tuple[Path, ...]
    out: Path
    max_columns: int = 4
    time_label: str = "t [s]"
    correlation_label: str = "correlations [bits]"
    position_label: str = "z [m]"
    density_label: str = "probability density [1/m]"

    def __post_init__(self):
        object.__setattr__(self, "inputs",
                           tuple(Path(p) for p in self.inputs))
        object.__setattr__(self, "out", Path(self.out))
        if not self.inputs:
            raise ContractError("no input files given")
        if self.out.suffix.lower() not in _FORMATS:
            raise ContractError(
                f"output {self.out}: suffix must be one of"
                f" {', '.join(_FORMATS)}")
        if self.max_columns < 1:
            raise ContractError(
                f"max_columns must be >= 1, got {self.max_columns}")


# ---------------------------------------------------------------------------
# Correlation panels (one temperature per input file).
# ---------------------------------------------------------------------------

_CORRELATION_COLUMNS = ("t_s", "log_negativity_bits",
                        "mutual_information_bits", "temperature_K")


def _temperature_title(kelvin: float) -> str:
    if kelvin == 0.0:
        return "T = 0"
    if kelvin < 1.0e-3:
        return rf"T = {kelvin * 1e6:g} $\mu$K"
    return f"T = {kelvin:g} K"


def render_correlations(tables: list[Table], *, max_columns: int = 4,
                        time_label: str = "t [s]",
                        value_label: str = "correlations [bits]") -> Figure:
    """One panel per table: negativity and information against time.

    Extra columns in the input are ignored; the required four must be
    present and the temperature column must be constant per file.
    """
    if not tables:
        raise ContractError("no correlation tables to draw")
    panels = []
    for t in tables:
        cols = {name: t.column(name) for name in _CORRELATION_COLUMNS}
        if t.n_rows == 0:
            raise ContractError(f"{t.path}: no data rows to draw")
        temps = np.unique(cols["temperature_K"])
        if temps.size != 1:
            raise ContractError(
                f"{t.path}: column 'temperature_K' is not constant")
        panels.append((float(temps[0]), cols))
    n = len(panels)
    ncols = min(n, max_columns)
    nrows = -(-n // ncols)
    fig = Figure(figsize=(3.6 * ncols, 3.0 * nrows), constrained_layout=True)
    axes = fig.subplots(nrows, ncols, sharex=True, sharey=True,
                        squeeze=False)
    for ax in axes.flat[n:]:
        ax.set_visible(False)
    for ax, (temp, cols) in zip(axes.flat, panels):
        ax.plot(cols["t_s"], cols["log_negativity_bits"],
                color="tab:blue", lw=1.6, label="log-negativity")
        ax.plot(cols["t_s"], cols["mutual_information_bits"],
                color="tab:orange", lw=1.6, label="mutual information")
        ax.set_title(_temperature_title(temp))
        ax.set_xlabel(time_label)
        ax.grid(True, alpha=0.3)
    for row in axes:
        row[0].set_ylabel(value_label)
    axes.flat[0].legend(loc="upper left", frameon=False, fontsize="small")
    return fig


def plot_correlations(spec: PlotSpec) -> Path:
    """Write the multi-panel correlation figure named by ``spec``."""
    tables = [read_table(p) for p in spec.inputs]
    fig = render_correlations(tables, max_columns=spec.max_columns,
                              time_label=spec.time_label,
                              value_label=spec.correlation_label)
    spec.out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(spec.out)
    return spec.out


# ---------------------------------------------------------------------------
# Screen densities (final |psi|^2 curves from a signaling run).
# ---------------------------------------------------------------------------

_SCREEN_STYLES = {
    "pure_position": dict(
        color="tab:blue", ls="-",
        label="per-member potential, position mix"),
    "pure_superposition": dict(
        color="tab:red", ls="-",
        label="per-member potential, superposition mix"),
    "mixed_position": dict(
        color="tab:green", ls="-",
        label="shared potential, position mix"),
    "mixed_superposition": dict(
        color="black", ls="--",
        label="shared potential, superposition mix"),
    "free_reference": dict(
        color="0.55", ls=":",
        label="free packet (G = 0)"),
}


def render_screens(tables: list[Table], *,
                   position_label: str = "z [m]",
                   density_label: str = "probability density [1/m]",
                   ) -> Figure:
    """Overlay every density column of every table in one axes.

    Each table needs ``z_m`` plus density columns drawn from the known
    curve names; an unknown column is a contract mismatch and is named
    in the error rather than styled by guesswork. With several tables
    the file stem is appended to the legend labels.
    """
    if not tables:
        raise ContractError("no screen tables to draw")
    fig = Figure(figsize=(7.0, 4.4), constrained_layout=True)
    ax = fig.subplots()
    several = len(tables) > 1
    for t in tables:
        z = t.column("z_m")
        if t.n_rows == 0:
            raise ContractError(f"{t.path}: no data rows to draw")
        curves = [name for name in t.names if name != "z_m"]
        if not curves:
            raise ContractError(
                f"{t.path}: no density columns besides 'z_m'")
        for name in curves:
            if name not in _SCREEN_STYLES:
                raise ContractError(
                    f"{t.path}: unknown screen column {name!r} "
                    f"(knows: {', '.join(_SCREEN_STYLES)})")
            style = dict(_SCREEN_STYLES[name])
            if several:
                style["label"] = f"{style['label']} [{t.path.stem}]"
            ax.plot(z, t.column(name), lw=1.6, **style)
    ax.set_xlabel(position_label)
    ax.set_ylabel(density_label)
    ax.grid(True, alpha=0.3)
    ax.legend(frameon=False, fontsize="small")
    return fig


def plot_screen_densities(spec: PlotSpec) -> Path:
    """Write the overlaid screen-density figure named by ``spec``."""
    tables = [read_table(p) for p in spec.inputs]
    fig = render_screens(tables, position_label=spec.position_label,
                         density_label=spec.density_label)
    spec.out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(spec.out)
    return spec.out
