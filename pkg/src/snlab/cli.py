"""Experiment runner behind the ``snlab`` console script.

Configs are YAML with explicit SI unit suffixes on every physical
quantity (``mass_kg``, ``spacing_m``, ``dt_s``, ...); unknown keys are
rejected with their dotted path. Every run writes comma-separated
tables at 17 significant digits behind a ``# schema: snlab-csv-1``
line, a JSON summary, and a manifest echoing the full config so the
output directory can be reproduced from it alone. Reruns of the same
config produce byte-identical CSVs (the manifest's wall-time field is
the one intentional exception).

Exit codes: 0 success, 2 bad config, 3 runtime instability or
numerical failure, 4 capacity ceiling.
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import numpy as np
import yaml

from . import __version__
from .correlations import (first_crossing, log_negativity_from_excess,
                           mutual_information_from_excess,
                           pt_minus_from_excess)
from .ensemble import (evolve_ensemble, signaling_gap,
                       two_peak_position_ensemble,
                       two_peak_superposition_ensemble)
from .errors import (CapacityError, ConfigError, DomainError,
                     MalformedCovarianceError, StabilityError)
from .fields import GridSpec, gaussian_packet
from .gaussian import coupling_frequency, determinant_excess, phonon_number
from .params import GRAVITATIONAL_CONSTANT_SI, HBAR_SI, PhysicalParams
from .solver import (SolverConfig, evolve_bipartite, evolve_effective,
                     max_kinetic_scale)

__all__ = ["main", "run_experiment"]

CSV_SCHEMA = "snlab-csv-1"
MANIFEST_SCHEMA = "snlab-manifest-1"
SUMMARY_SCHEMA = "snlab-summary-1"

_COMMAND_KINDS = {
    "gaussian": "gaussian_correlations",
    "sn-effective": "sn_effective",
    "bipartite": "bipartite_oracle",
    "signaling": "signaling",
    "sweep": "sweep",
}


# ---------------------------------------------------------------------------
# Strict config parsing.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _Key:
    parse: Callable[[Any], Any]
    required: bool = True
    default: Any = None


def _number(v):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValueError(f"expected a number, got {v!r}")
    f = float(v)
    if not math.isfinite(f):
        raise ValueError(f"must be finite, got {v!r}")
    return f


def _positive(v):
    f = _number(v)
    if f <= 0.0:
        raise ValueError(f"must be > 0, got {v!r}")
    return f


def _non_negative(v):
    f = _number(v)
    if f < 0.0:
        raise ValueError(f"must be >= 0, got {v!r}")
    return f


def _at_least_one(v):
    f = _number(v)
    if f < 1.0:
        raise ValueError(f"inflation factor must be >= 1, got {v!r}")
    return f


def _count(minimum):
    def parse(v):
        if isinstance(v, bool) or not isinstance(v, int):
            raise ValueError(f"expected an integer, got {v!r}")
        if v < minimum:
            raise ValueError(f"must be >= {minimum}, got {v!r}")
        return v
    return parse


def _flag(v):
    if not isinstance(v, bool):
        raise ValueError(f"expected true/false, got {v!r}")
    return v


def _text(v):
    if not isinstance(v, str) or not v:
        raise ValueError(f"expected a non-empty string, got {v!r}")
    return v


def _choice(*options):
    def parse(v):
        if v not in options:
            raise ValueError(f"{v!r} is not one of {options}")
        return v
    return parse


def _number_list(element=_number, min_len=1):
    def parse(v):
        if not isinstance(v, list) or len(v) < min_len:
            raise ValueError(f"expected a list of at least {min_len} numbers")
        return [element(x) for x in v]
    return parse


def _name_list(options):
    def parse(v):
        if not isinstance(v, list) or not v:
            raise ValueError("expected a non-empty list")
        out = []
        for x in v:
            if x not in options:
                raise ValueError(f"{x!r} is not one of {options}")
            if x in out:
                raise ValueError(f"duplicate entry {x!r}")
            out.append(x)
        return out
    return parse


def _section_required(schema) -> bool:
    for rule in schema.values():
        if isinstance(rule, dict):
            if _section_required(rule):
                return True
        elif rule.required:
            return True
    return False


def _parse_section(data, schema, path=""):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("expected a mapping", field=path or "config")
    for key in data:
        if key not in schema:
            raise ConfigError("unknown key",
                              field=f"{path}.{key}" if path else str(key))
    out = {}
    for key, rule in schema.items():
        spath = f"{path}.{key}" if path else key
        if isinstance(rule, dict):
            if key not in data and _section_required(rule):
                raise ConfigError("missing required section", field=spath)
            out[key] = _parse_section(data.get(key), rule, spath)
        elif key in data:
            try:
                out[key] = rule.parse(data[key])
            except ValueError as exc:
                raise ConfigError(str(exc), field=spath) from None
        elif rule.required:
            raise ConfigError("missing required key", field=spath)
        else:
            out[key] = copy.copy(rule.default)
    return out


def _pair_physical(many_temperatures: bool) -> dict:
    phys = {
        "mass_kg": _Key(_positive),
        "separation_m": _Key(_positive),
        "frequency_hz": _Key(_positive),
        "gravity_constant_si": _Key(_non_negative, required=False,
                                    default=GRAVITATIONAL_CONSTANT_SI),
    }
    if many_temperatures:
        phys["temperatures_K"] = _Key(_number_list(_non_negative))
    else:
        phys["temperature_K"] = _Key(_non_negative, required=False,
                                     default=0.0)
    return phys


_CONVENTION = _Key(_choice("cyclic", "angular"), required=False,
                   default="cyclic")
_INFLATION = _Key(_at_least_one, required=False, default=1.0)

_SOLVER_SCHEMA = {
    "dt_s": _Key(_positive),
    "scheme": _Key(_choice("split_operator", "crank_nicolson"),
                   required=False, default="split_operator"),
    "nonlinearity_update": _Key(_choice("per_step", "predictor_corrector"),
                                required=False, default="per_step"),
    "softening_m": _Key(_positive, required=False),
    "boundary_warn_fraction": _Key(_positive, required=False, default=1e-6),
    "boundary_abort_fraction": _Key(_positive, required=False, default=1e-3),
}

_SCHEMAS = {
    "gaussian_correlations": {
        "physical": _pair_physical(True),
        "frequency_convention": _CONVENTION,
        "coupling_inflation": _INFLATION,
        "time": {
            "t_max_s": _Key(_positive),
            "samples": _Key(_count(2), required=False, default=400),
        },
        "thresholds": {
            "information_bits": _Key(_positive, required=False,
                                     default=0.01),
            "negativity_bits": _Key(_positive, required=False,
                                    default=0.001),
        },
    },
    "sn_effective": {
        "physical": _pair_physical(False),
        "frequency_convention": _CONVENTION,
        "coupling_inflation": _INFLATION,
        "grid": {
            "geometry": _Key(_choice("line", "cylinder")),
            "points_z": _Key(_count(8)),
            "spacing_z_m": _Key(_positive),
            "points_s": _Key(_count(8), required=False),
            "spacing_s_m": _Key(_positive, required=False),
            "z_center_m": _Key(_number, required=False, default=0.0),
        },
        "initial": {
            "center_m": _Key(_number, required=False, default=0.0),
            "width_m": _Key(_positive, required=False),
            "wavenumber_per_m": _Key(_number, required=False, default=0.0),
        },
        "solver": _SOLVER_SCHEMA,
        "time": {
            "t_max_s": _Key(_positive),
            "snapshots": _Key(_count(1), required=False, default=20),
        },
        "partner_image": _Key(_flag, required=False, default=False),
    },
    "bipartite_oracle": {
        "physical": _pair_physical(False),
        "frequency_convention": _CONVENTION,
        "coupling_inflation": _INFLATION,
        "grid": {
            "points": _Key(_count(8)),
            "spacing_m": _Key(_positive),
            "center_m": _Key(_number, required=False, default=0.0),
        },
        "initial": {
            "width_m": _Key(_positive, required=False),
        },
        "solver": _SOLVER_SCHEMA,
        "time": {
            "t_max_s": _Key(_positive),
            "snapshots": _Key(_count(1), required=False, default=20),
        },
        "modes": _Key(_name_list(("none", "newton_quadratic", "newton_full",
                                  "sn_factored")),
                      required=False,
                      default=["sn_factored", "newton_quadratic"]),
    },
    "signaling": {
        "physical": {
            "mass_kg": _Key(_positive),
            "gravity_constant_si": _Key(_non_negative, required=False,
                                        default=GRAVITATIONAL_CONSTANT_SI),
        },
        "coupling_inflation": _Key(_at_least_one),
        "scenario": {
            "offset_m": _Key(_positive),
            "width_m": _Key(_positive),
        },
        "grid": {
            "points": _Key(_count(8)),
            "spacing_m": _Key(_positive),
        },
        "solver": {
            "dt_s": _Key(_positive),
            "nonlinearity_update": _Key(
                _choice("per_step", "predictor_corrector"),
                required=False, default="per_step"),
            "softening_m": _Key(_positive, required=False),
            "boundary_warn_fraction": _Key(_positive, required=False,
                                           default=1e-6),
            "boundary_abort_fraction": _Key(_positive, required=False,
                                            default=1e-3),
        },
        "time": {
            "t_max_s": _Key(_positive),
            "snapshots": _Key(_count(1), required=False, default=8),
        },
        "modes": _Key(_name_list(("mixed_state_sn", "pure_state_sn")),
                      required=False,
                      default=["mixed_state_sn", "pure_state_sn"]),
        "free_reference": _Key(_flag, required=False, default=True),
    },
}

_SWEEP_HEAD = {
    "workers": _Key(_count(1), required=False, default=1),
    "parameter": _Key(_text),
    "values": _Key(_number_list(_number)),
}


# ---------------------------------------------------------------------------
# Output writers.
# ---------------------------------------------------------------------------

def _write_csv(path: Path, columns: list[tuple[str, np.ndarray]]) -> None:
    arrays = [(name, np.asarray(col, dtype=float)) for name, col in columns]
    n = arrays[0][1].shape[0]
    lines = [f"# schema: {CSV_SCHEMA}", ",".join(name for name, _ in arrays)]
    for i in range(n):
        lines.append(",".join(f"{arr[i]:.17g}" for _, arr in arrays))
    path.write_text("\n".join(lines) + "\n")


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# Experiment runners. Each takes (parsed config, out dir) and returns
# (derived-constants dict, list of output names).
# ---------------------------------------------------------------------------

def _angular_frequency(freq_hz: float, convention: str) -> float:
    return 2.0 * math.pi * freq_hz if convention == "cyclic" else freq_hz


def _build_params(phys, convention, inflation, temperature):
    return PhysicalParams(
        mass=phys["mass_kg"],
        separation=phys["separation_m"],
        omega0=_angular_frequency(phys["frequency_hz"], convention),
        temperature=temperature,
        G=phys["gravity_constant_si"] * inflation,
    )


def _build_solver(sc) -> SolverConfig:
    return SolverConfig(
        dt=sc["dt_s"],
        scheme=sc["scheme"],
        nonlinearity_update=sc["nonlinearity_update"],
        softening=sc["softening_m"],
        boundary_warn=sc["boundary_warn_fraction"],
        boundary_abort=sc["boundary_abort_fraction"],
    )


def _store_times(time_cfg) -> np.ndarray:
    return np.linspace(0.0, time_cfg["t_max_s"], time_cfg["snapshots"] + 1)


def _run_gaussian(cfg, out_dir: Path):
    phys = cfg["physical"]
    conv = cfg["frequency_convention"]
    tc = cfg["time"]
    times = np.linspace(0.0, tc["t_max_s"], tc["samples"])
    eps_info = cfg["thresholds"]["information_bits"]
    eps_neg = cfg["thresholds"]["negativity_bits"]
    outputs, crossings = [], []
    derived = {}
    for i, temp in enumerate(phys["temperatures_K"]):
        params = _build_params(phys, conv, cfg["coupling_inflation"], temp)
        delta = determinant_excess(times, params)
        nbar = phonon_number(params)
        logneg = log_negativity_from_excess(delta, nbar)
        info = mutual_information_from_excess(delta, nbar)
        nu = pt_minus_from_excess(delta, nbar)
        name = f"correlations_{i:02d}.csv"
        _write_csv(out_dir / name, [
            ("t_s", times),
            ("log_negativity_bits", logneg),
            ("mutual_information_bits", info),
            ("nu_tilde_minus", nu),
            ("temperature_K", np.full(times.shape, temp)),
        ])
        outputs.append(name)
        crossings.append({
            "file": name,
            "temperature_K": temp,
            "mean_occupation": nbar,
            "information_crossing_s": first_crossing(times, info, eps_info),
            "negativity_crossing_s": first_crossing(times, logneg, eps_neg),
        })
        if not derived:
            derived = {
                "omega0_rad_s": params.omega0,
                "sigma_m": params.sigma,
                "coupling_rate_rad_s": coupling_frequency(params),
                "gravity_effective_si": params.G,
            }
    _write_json(out_dir / "summary.json", {
        "schema": SUMMARY_SCHEMA,
        "kind": "gaussian_correlations",
        "frequency_convention": conv,
        "thresholds": cfg["thresholds"],
        "crossings": crossings,
    })
    outputs.append("summary.json")
    return derived, outputs


_EFFECTIVE_COLUMNS = [
    ("norm", "norm"),
    ("kinetic", "kinetic_J"),
    ("potential_grav", "potential_grav_J"),
    ("potential_ext", "potential_ext_J"),
    ("energy", "energy_J"),
    ("mean_z", "mean_z_m"),
    ("var_z", "var_z_m2"),
    ("dTdt_current", "dTdt_direct_W"),
    ("dTdt_continuity", "dTdt_continuity_W"),
    ("boundary_fraction", "boundary_fraction"),
    ("mean_s2", "mean_s2_m2"),
]


def _run_sn_effective(cfg, out_dir: Path):
    phys = cfg["physical"]
    params = _build_params(phys, cfg["frequency_convention"],
                           cfg["coupling_inflation"], phys["temperature_K"])
    gc = cfg["grid"]
    if gc["geometry"] == "line":
        grid = GridSpec.line(gc["points_z"], gc["spacing_z_m"],
                             gc["z_center_m"])
    else:
        if gc["points_s"] is None or gc["spacing_s_m"] is None:
            raise ConfigError("cylinder grids need points_s and spacing_s_m",
                              field="grid.points_s")
        grid = GridSpec.cylinder(gc["points_s"], gc["spacing_s_m"],
                                 gc["points_z"], gc["spacing_z_m"],
                                 gc["z_center_m"])
    width = cfg["initial"]["width_m"] or params.sigma
    initial = gaussian_packet(grid, center=cfg["initial"]["center_m"],
                              width=width,
                              wavenumber=cfg["initial"]["wavenumber_per_m"])
    solver = _build_solver(cfg["solver"])
    result = evolve_effective(initial, params, solver, cfg["time"]["t_max_s"],
                              mirror=cfg["partner_image"],
                              store_times=_store_times(cfg["time"]))
    columns = [("t_s", result.times)]
    for key, header in _EFFECTIVE_COLUMNS:
        if key in result.metrics:
            columns.append((header, result.metrics[key]))
    _write_csv(out_dir / "effective.csv", columns)
    _write_json(out_dir / "summary.json", {
        "schema": SUMMARY_SCHEMA,
        "kind": "sn_effective",
        "energy_first_J": float(result.metrics["energy"][0]),
        "energy_last_J": float(result.metrics["energy"][-1]),
        "max_boundary_fraction":
            float(result.metrics["boundary_fraction"].max()),
        "final_var_z_m2": float(result.metrics["var_z"][-1]),
    })
    derived = {
        "omega0_rad_s": params.omega0,
        "sigma_m": params.sigma,
        "gravity_effective_si": params.G,
        "packet_width_m": width,
        "kinetic_scale_J": max_kinetic_scale(grid, params),
    }
    return derived, ["effective.csv", "summary.json"]


def _run_bipartite(cfg, out_dir: Path):
    phys = cfg["physical"]
    params = _build_params(phys, cfg["frequency_convention"],
                           cfg["coupling_inflation"], phys["temperature_K"])
    gc = cfg["grid"]
    grid = GridSpec.plane(gc["points"], gc["spacing_m"], gc["center_m"])
    width = cfg["initial"]["width_m"] or params.sigma
    initial = gaussian_packet(grid, center=0.0, width=width)
    solver = _build_solver(cfg["solver"])
    outputs, reports = [], []
    for mode in cfg["modes"]:
        res = evolve_bipartite(initial, params, solver,
                               cfg["time"]["t_max_s"], mode=mode,
                               store_times=_store_times(cfg["time"]))
        name = f"bipartite_{mode}.csv"
        means = res.metrics["mean"]
        _write_csv(out_dir / name, [
            ("t_s", res.times),
            ("purity", res.metrics["purity"]),
            ("mutual_information_bits", res.metrics["mutual_information"]),
            ("mean_z1_m", means[:, 0]),
            ("mean_z2_m", means[:, 2]),
            ("norm", res.metrics["norm"]),
            ("energy_J", res.metrics["energy"]),
            ("boundary_fraction", res.metrics["boundary_fraction"]),
        ])
        outputs.append(name)
        reports.append({
            "mode": mode,
            "file": name,
            "min_purity": float(res.metrics["purity"].min()),
            "final_mutual_information_bits":
                float(res.metrics["mutual_information"][-1]),
            "final_covariance": res.metrics["covariance"][-1].tolist(),
        })
    _write_json(out_dir / "summary.json", {
        "schema": SUMMARY_SCHEMA,
        "kind": "bipartite_oracle",
        "runs": reports,
    })
    outputs.append("summary.json")
    derived = {
        "omega0_rad_s": params.omega0,
        "sigma_m": params.sigma,
        "coupling_rate_rad_s": coupling_frequency(params),
        "gravity_effective_si": params.G,
        "packet_width_m": width,
    }
    return derived, outputs


def _run_signaling(cfg, out_dir: Path):
    mass = cfg["physical"]["mass_kg"]
    width = cfg["scenario"]["width_m"]
    offset = cfg["scenario"]["offset_m"]
    g_eff = cfg["physical"]["gravity_constant_si"] * cfg["coupling_inflation"]
    # trap frequency chosen so the ground-state width equals the packet
    # width; the separation slot is a placeholder (no partner image in
    # ensemble runs)
    params = PhysicalParams(mass=mass, separation=20.0 * width,
                            omega0=HBAR_SI / (2.0 * mass * width**2),
                            G=g_eff)
    grid = GridSpec.line(cfg["grid"]["points"], cfg["grid"]["spacing_m"])
    pos = two_peak_position_ensemble(grid, offset=offset, width=width)
    sup = two_peak_superposition_ensemble(grid, offset=offset, width=width)
    sc = cfg["solver"]
    solver = SolverConfig(dt=sc["dt_s"],
                          nonlinearity_update=sc["nonlinearity_update"],
                          softening=sc["softening_m"],
                          boundary_warn=sc["boundary_warn_fraction"],
                          boundary_abort=sc["boundary_abort_fraction"])
    t_max = cfg["time"]["t_max_s"]
    stores = _store_times(cfg["time"])

    gap_columns, max_gaps, times = [], {}, None
    for mode in cfg["modes"]:
        rec = signaling_gap(pos, sup, params, solver, t_max, mode=mode,
                            store_times=stores)
        gap_columns.append((f"gap_{mode}", rec.gap))
        max_gaps[mode] = rec.max_gap
        times = rec.times
    _write_csv(out_dir / "signaling_gaps.csv",
               [("t_s", times)] + gap_columns)

    screen_runs = []
    if "pure_state_sn" in cfg["modes"]:
        screen_runs.append(("pure_position", pos, "pure_state_sn", params))
        screen_runs.append(("pure_superposition", sup, "pure_state_sn",
                            params))
    if "mixed_state_sn" in cfg["modes"]:
        # both preparations: their coincidence on the screen is the point
        screen_runs.append(("mixed_position", pos, "mixed_state_sn", params))
        screen_runs.append(("mixed_superposition", sup, "mixed_state_sn",
                            params))
    if cfg["free_reference"]:
        free = PhysicalParams(mass=mass, separation=20.0 * width,
                              omega0=params.omega0, G=0.0)
        screen_runs.append(("free_reference", pos, "mixed_state_sn", free))
    screens = [("z_m", grid.axes[0])]
    for label, ensemble, mode, pars in screen_runs:
        run = evolve_ensemble(ensemble, pars, solver, t_max, mode=mode)
        screens.append((label, run.final.density()))
    _write_csv(out_dir / "screens.csv", screens)

    _write_json(out_dir / "summary.json", {
        "schema": SUMMARY_SCHEMA,
        "kind": "signaling",
        "max_gaps": max_gaps,
        "screen_time_s": t_max,
        "screen_curves": [label for label, *_ in screen_runs],
    })
    derived = {
        "sigma_m": params.sigma,
        "omega0_rad_s": params.omega0,
        "gravity_effective_si": g_eff,
    }
    return derived, ["signaling_gaps.csv", "screens.csv", "summary.json"]


_RUNNERS = {
    "gaussian_correlations": _run_gaussian,
    "sn_effective": _run_sn_effective,
    "bipartite_oracle": _run_bipartite,
    "signaling": _run_signaling,
}


def _run_sweep(raw: dict, out_dir: Path):
    head = {k: v for k, v in raw.items() if k not in ("kind", "base")}
    meta = _parse_section(head, _SWEEP_HEAD, "")
    base = raw.get("base")
    if base is None:
        raise ConfigError("missing required section", field="base")
    if not isinstance(base, dict):
        raise ConfigError("expected a mapping", field="base")
    if base.get("kind") not in _RUNNERS:
        raise ConfigError(
            f"base kind {base.get('kind')!r} is not a sweepable experiment",
            field="base.kind")
    parts = meta["parameter"].split(".")

    def run_one(i: int, value: float):
        sub = copy.deepcopy(base)
        node = sub
        for part in parts[:-1]:
            nxt = node.setdefault(part, {})
            if not isinstance(nxt, dict):
                raise ConfigError(
                    f"{meta['parameter']!r} does not lead into a section",
                    field="parameter")
            node = nxt
        node[parts[-1]] = value
        _execute(sub, out_dir / f"run_{i:02d}")

    # each run owns its subdirectory; the pool size only bounds overlap
    with ThreadPoolExecutor(max_workers=meta["workers"]) as pool:
        futures = [pool.submit(run_one, i, v)
                   for i, v in enumerate(meta["values"])]
        for fut in futures:
            fut.result()
    runs = [f"run_{i:02d}" for i in range(len(meta["values"]))]
    derived = {
        "parameter": meta["parameter"],
        "values": meta["values"],
        "workers": meta["workers"],
    }
    return derived, runs


# ---------------------------------------------------------------------------
# Dispatch, manifest, exit codes.
# ---------------------------------------------------------------------------

def _execute(raw: dict, out_dir: Path):
    if not isinstance(raw, dict):
        raise ConfigError("expected a mapping at the top level",
                          field="config")
    kind = raw.get("kind")
    if kind is None:
        raise ConfigError("missing required key", field="kind")
    if kind != "sweep" and kind not in _RUNNERS:
        raise ConfigError(f"unknown kind {kind!r}", field="kind")
    out_dir.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    if kind == "sweep":
        derived, outputs = _run_sweep(raw, out_dir)
    else:
        body = {k: v for k, v in raw.items() if k != "kind"}
        cfg = _parse_section(body, _SCHEMAS[kind], "")
        derived, outputs = _RUNNERS[kind](cfg, out_dir)
    _write_json(out_dir / "manifest.json", {
        "schema": MANIFEST_SCHEMA,
        "kind": kind,
        "package_version": __version__,
        "config": raw,
        "derived": derived,
        "outputs": outputs,
        "wall_time_s": time.perf_counter() - started,
    })
    return derived, outputs


def _load_config(path) -> dict:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}",
                          field=str(path)) from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"not valid YAML: {exc}",
                          field=str(path)) from None
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping", field=str(path))
    return data


def run_experiment(command: str, config_path, out_dir) -> dict:
    """Load a config, check it matches the subcommand, run it."""
    raw = _load_config(config_path)
    expected = _COMMAND_KINDS[command]
    kind = raw.get("kind")
    if kind != expected:
        raise ConfigError(
            f"config kind {kind!r} does not match the {command!r} "
            f"subcommand (expects {expected!r})", field="kind")
    derived, _ = _execute(raw, Path(out_dir))
    return derived


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="snlab",
        description="Run gravitationally coupled quantum-packet experiments "
                    "from YAML configs into CSV/JSON output directories.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "gaussian": "closed-form correlation scan over temperatures",
        "sn-effective": "one-packet PDE run with optional partner image",
        "bipartite": "two-particle product-form oracle runs",
        "signaling": "decomposition-distinguishability demo",
        "sweep": "fan a base experiment over one parameter",
    }
    for name in _COMMAND_KINDS:
        sp = sub.add_parser(name, help=helps[name])
        sp.add_argument("--config", required=True,
                        help="YAML experiment config")
        sp.add_argument("--out", required=True,
                        help="output directory (created if missing)")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        run_experiment(args.command, args.config, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except MalformedCovarianceError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except DomainError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except StabilityError as exc:
        print(f"instability: {exc}", file=sys.stderr)
        return 3
    except CapacityError as exc:
        print(f"capacity exceeded: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
