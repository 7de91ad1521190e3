"""Shared fixtures: real snlab runs and hand-written contract files.

The figure package touches the simulator only through files, so the
fixtures shell out to the snlab CLI. When that CLI is not installed
the tests needing real output are skipped; everything else runs from
synthetic tables.
"""

from __future__ import annotations

import importlib.util
import subprocess
import sys

import numpy as np
import pytest

_HAVE_SNLAB = importlib.util.find_spec("snlab") is not None

# three temperatures -> three panels; closed forms, so this is quick
GAUSSIAN_CFG = """\
kind: gaussian_correlations
physical:
  mass_kg: 1.11e-17
  separation_m: 5.0e-7
  frequency_hz: 5.0e+5
  temperatures_K: [3.0e-4, 5.0e-5, 1.2e-5]
time:
  t_max_s: 12.0
  samples: 1201
"""

# inflated coupling separates the per-member pair by ~14% of the peak
# within 0.2 s while the shared-potential pair stays equal to round-off
SIGNALING_CFG = """\
kind: signaling
physical:
  mass_kg: 1.11e-17
coupling_inflation: 1.83e+2
scenario:
  offset_m: 4.0e-9
  width_m: 1.0e-9
grid:
  points: 512
  spacing_m: 1.25e-10
solver:
  dt_s: 1.0e-4
time:
  t_max_s: 0.2
  snapshots: 4
modes: [mixed_state_sn, pure_state_sn]
free_reference: true
"""

# same scenario with gravity off: every curve is the free packet
GRAVITY_OFF_CFG = """\
kind: signaling
physical:
  mass_kg: 1.11e-17
  gravity_constant_si: 0.0
coupling_inflation: 1.0
scenario:
  offset_m: 2.0e-9
  width_m: 6.0e-10
grid:
  points: 96
  spacing_m: 1.25e-10
solver:
  dt_s: 1.0e-4
time:
  t_max_s: 1.0e-3
  snapshots: 2
modes: [mixed_state_sn, pure_state_sn]
free_reference: true
"""


def _run_snlab(command, cfg_text, work):
    if not _HAVE_SNLAB:
        pytest.skip("snlab is not installed; cannot produce real input")
    cfg = work / "config.yaml"
    cfg.write_text(cfg_text)
    out = work / "out"
    proc = subprocess.run(
        [sys.executable, "-m", "snlab.cli", command,
         "--config", str(cfg), "--out", str(out)],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return out


@pytest.fixture(scope="session")
def gaussian_dir(tmp_path_factory):
    return _run_snlab("gaussian", GAUSSIAN_CFG,
                      tmp_path_factory.mktemp("gaussian"))


@pytest.fixture(scope="session")
def signaling_dir(tmp_path_factory):
    return _run_snlab("signaling", SIGNALING_CFG,
                      tmp_path_factory.mktemp("signaling"))


@pytest.fixture(scope="session")
def gravity_off_dir(tmp_path_factory):
    return _run_snlab("signaling", GRAVITY_OFF_CFG,
                      tmp_path_factory.mktemp("gravity_off"))


@pytest.fixture
def write_table(tmp_path):
    """Write a contract-shaped CSV from named columns, return its path."""

    def _write(name, columns, schema="snlab-csv-1"):
        names = list(columns)
        arrays = [np.asarray(columns[n], dtype=float) for n in names]
        lines = [f"# schema: {schema}", ",".join(names)]
        for i in range(arrays[0].shape[0]):
            lines.append(",".join(f"{a[i]:.17g}" for a in arrays))
        path = tmp_path / name
        path.write_text("\n".join(lines) + "\n")
        return path

    return _write
