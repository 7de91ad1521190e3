"""Figure builders: panel layout, curve content, contract errors.

The classes at the bottom consume real snlab output (skipped when the
simulator is absent); the rest run from synthetic tables.
"""

import hashlib

import numpy as np
import pytest

from snplot.figures import (PlotSpec, _SCREEN_STYLES, plot_correlations,
                            plot_screen_densities, render_correlations,
                            render_screens)
from snplot.reader import ContractError, read_table


def correlation_columns(temp, rows=50):
    t = np.linspace(0.0, 2.0, rows)
    return {
        "t_s": t,
        "log_negativity_bits": np.maximum(0.0, t - 0.5) * 0.01,
        "mutual_information_bits": 0.02 * t,
        # extra column, present in real files, must be tolerated
        "nu_tilde_minus": np.full(rows, 0.5),
        "temperature_K": np.full(rows, temp),
    }


def visible_axes(fig):
    return [ax for ax in fig.axes if ax.get_visible()]


def curve_map(ax):
    return {line.get_label(): np.asarray(line.get_ydata())
            for line in ax.lines}


class TestPlotSpec:

    def test_needs_at_least_one_input(self, tmp_path):
        with pytest.raises(ContractError, match="no input files"):
            PlotSpec(inputs=(), out=tmp_path / "fig.png")

    def test_rejects_unknown_image_suffix(self, tmp_path):
        with pytest.raises(ContractError, match="suffix must be one of"):
            PlotSpec(inputs=(tmp_path / "a.csv",), out=tmp_path / "fig.pdf")

    def test_rejects_nonpositive_layout(self, tmp_path):
        with pytest.raises(ContractError, match="max_columns"):
            PlotSpec(inputs=(tmp_path / "a.csv",), out=tmp_path / "f.png",
                     max_columns=0)


class TestCorrelationPanels:

    def test_single_temperature_gives_single_panel(self, write_table):
        path = write_table("one.csv", correlation_columns(1.2e-5))
        fig = render_correlations([read_table(path)])
        axes = visible_axes(fig)
        assert len(axes) == 1
        assert len(axes[0].lines) == 2

    def test_three_temperatures_give_three_panels(self, write_table):
        tables = [read_table(write_table(f"c{i}.csv",
                                         correlation_columns(temp)))
                  for i, temp in enumerate((3.0e-4, 5.0e-5, 1.2e-5))]
        fig = render_correlations(tables)
        assert len(visible_axes(fig)) == 3

    def test_panels_wrap_at_max_columns(self, write_table):
        tables = [read_table(write_table(f"w{i}.csv",
                                         correlation_columns(1e-5 * (i + 1))))
                  for i in range(5)]
        fig = render_correlations(tables, max_columns=4)
        assert len(fig.axes) == 8
        assert len(visible_axes(fig)) == 5

    def test_empty_time_series_errors_instead_of_empty_figure(
            self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("# schema: snlab-csv-1\n"
                        "t_s,log_negativity_bits,mutual_information_bits,"
                        "temperature_K\n")
        with pytest.raises(ContractError, match="no data rows"):
            render_correlations([read_table(path)])

    def test_missing_column_is_named(self, write_table):
        cols = correlation_columns(1.2e-5)
        del cols["log_negativity_bits"]
        path = write_table("short.csv", cols)
        with pytest.raises(ContractError,
                           match="'log_negativity_bits'"):
            render_correlations([read_table(path)])

    def test_drifting_temperature_column_is_rejected(self, write_table):
        cols = correlation_columns(1.2e-5)
        cols["temperature_K"] = np.linspace(1e-5, 2e-5, 50)
        path = write_table("drift.csv", cols)
        with pytest.raises(ContractError, match="not constant"):
            render_correlations([read_table(path)])

    def test_writes_png_and_svg(self, write_table, tmp_path):
        path = write_table("img.csv", correlation_columns(0.0))
        png = plot_correlations(PlotSpec(inputs=(path,),
                                         out=tmp_path / "fig.png"))
        svg = plot_correlations(PlotSpec(inputs=(path,),
                                         out=tmp_path / "fig.svg"))
        assert png.read_bytes()[:4] == b"\x89PNG"
        assert b"<svg" in svg.read_bytes()


class TestScreenCurves:

    def screen_path(self, write_table, name="screens.csv", gap=0.0):
        z = np.linspace(-1.0, 1.0, 41)
        base = np.exp(-z**2 / 0.08)
        return write_table(name, {
            "z_m": z,
            "mixed_position": base,
            "mixed_superposition": base + gap * z,
        })

    def test_overlays_one_axes_with_styled_curves(self, write_table):
        table = read_table(self.screen_path(write_table))
        fig = render_screens([table])
        assert len(visible_axes(fig)) == 1
        labels = set(curve_map(fig.axes[0]))
        assert labels == {_SCREEN_STYLES["mixed_position"]["label"],
                          _SCREEN_STYLES["mixed_superposition"]["label"]}

    def test_unknown_curve_column_is_named(self, write_table):
        path = write_table("odd.csv", {"z_m": [0.0, 1.0],
                                       "mystery_curve": [1.0, 2.0]})
        with pytest.raises(ContractError, match="'mystery_curve'"):
            render_screens([read_table(path)])

    def test_axis_column_alone_is_not_plottable(self, write_table):
        path = write_table("axis_only.csv", {"z_m": [0.0, 1.0]})
        with pytest.raises(ContractError, match="no density columns"):
            render_screens([read_table(path)])

    def test_several_files_suffix_labels_with_stems(self, write_table):
        a = read_table(self.screen_path(write_table, name="run_a.csv"))
        b = read_table(self.screen_path(write_table, name="run_b.csv"))
        fig = render_screens([a, b])
        labels = set(curve_map(fig.axes[0]))
        assert any(label.endswith("[run_a]") for label in labels)
        assert any(label.endswith("[run_b]") for label in labels)
        assert len(labels) == 4

    def test_writes_image_file(self, write_table, tmp_path):
        path = self.screen_path(write_table)
        out = plot_screen_densities(PlotSpec(inputs=(path,),
                                             out=tmp_path / "screen.svg"))
        assert out.is_file() and out.stat().st_size > 0


# ---------------------------------------------------------------------------
# Real simulator output.
# ---------------------------------------------------------------------------

def checksums(paths):
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest()
            for p in paths}


class TestRealCorrelationRuns:

    def test_three_temperature_run_renders_three_panels(
            self, gaussian_dir, tmp_path):
        inputs = sorted(gaussian_dir.glob("correlations_*.csv"))
        assert len(inputs) == 3
        out = plot_correlations(PlotSpec(inputs=tuple(inputs),
                                         out=tmp_path / "fig.png"))
        assert out.is_file() and out.stat().st_size > 0
        fig = render_correlations([read_table(p) for p in inputs])
        axes = visible_axes(fig)
        assert len(axes) == 3
        for ax in axes:
            assert len(ax.lines) == 2
            for line in ax.lines:
                assert np.all(np.isfinite(line.get_ydata()))

    def test_rendering_never_modifies_inputs(self, gaussian_dir, tmp_path):
        inputs = sorted(gaussian_dir.glob("correlations_*.csv"))
        before = checksums(inputs)
        plot_correlations(PlotSpec(inputs=tuple(inputs),
                                   out=tmp_path / "fig.svg"))
        assert checksums(inputs) == before


class TestRealScreenRuns:

    def test_shared_potential_pair_draws_coincident_curves(
            self, signaling_dir, tmp_path):
        csv = signaling_dir / "screens.csv"
        out = plot_screen_densities(PlotSpec(inputs=(csv,),
                                             out=tmp_path / "fig.png"))
        assert out.is_file() and out.stat().st_size > 0
        curves = curve_map(render_screens([read_table(csv)]).axes[0])
        a = curves[_SCREEN_STYLES["mixed_position"]["label"]]
        b = curves[_SCREEN_STYLES["mixed_superposition"]["label"]]
        peak = a.max()
        assert np.max(np.abs(a - b)) < 1e-8 * peak

    def test_per_member_pair_draws_visibly_distinct_curves(
            self, signaling_dir):
        curves = curve_map(
            render_screens([read_table(signaling_dir / "screens.csv")])
            .axes[0])
        a = curves[_SCREEN_STYLES["pure_position"]["label"]]
        b = curves[_SCREEN_STYLES["pure_superposition"]["label"]]
        peak = max(a.max(), b.max())
        assert np.max(np.abs(a - b)) > 0.05 * peak

    def test_gravity_off_curves_all_match_free_reference(
            self, gravity_off_dir):
        table = read_table(gravity_off_dir / "screens.csv")
        curves = curve_map(render_screens([table]).axes[0])
        free = curves[_SCREEN_STYLES["free_reference"]["label"]]
        peak = free.max()
        for label, values in curves.items():
            assert np.max(np.abs(values - free)) < 1e-10 * peak, label

    def test_rendering_never_modifies_inputs(self, signaling_dir, tmp_path):
        csv = signaling_dir / "screens.csv"
        before = checksums([csv])
        plot_screen_densities(PlotSpec(inputs=(csv,),
                                       out=tmp_path / "fig.svg"))
        assert checksums([csv]) == before
