"""Command-line entry point: presets, config files, sweeps, CSV, validation.

The CLI is a thin shell over the library: everything it does is reachable
through :func:`hybridom.sweep.run_sweep` and friends with identical results.

Config files are YAML with two blocks (grammar documented in the README)::

    params:
      omega_a: 15000.0      # qubit frequency [omega_m]
      omega_L: 10000.0      # drive frequency [omega_m]
      g_ac: 500.0           # qubit-cavity coupling [omega_m]
      g_am: 50.0            # qubit-mechanics coupling [omega_m]
      g_cm: 0.001           # direct optomechanical coupling [omega_m]
      F_L: 0.00707          # drive rate [omega_m]
      kappa: 0.5            # cavity decay [omega_m]
      gamma_a: 0.05         # qubit decay [omega_m]
      gamma_m: 0.05         # mechanical damping [omega_m]
      n_th: 0.0             # thermal phonon number
    sweep:
      delta_min: -57.0
      delta_max: -45.0
      n_points: 201
      dims: [4, 14]         # [n_cavity, n_mech]
      models: [full, effective, uncoupled]
      axis: delta           # or delta_prime
      normalize: true

Unknown keys anywhere are rejected with the offending path.  The presets
``set1``, ``set2`` and ``uncoupled`` expand to the reference parameter sets;
a config file and command-line flags override preset values field by field.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import asdict
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np
import yaml

from . import __version__
from .hilbert import SubsystemDims
from .model import (
    SystemParams,
    dispersive_report,
    displacement_shift,
    effective_coupling,
    qubit_sqrt_exact,
    qubit_sqrt_expansion,
    stark_shift,
)
from .sweep import (
    MODELS,
    SweepConfig,
    SweepRow,
    convergence_check,
    run_sweep,
)

__all__ = [
    "ConfigError",
    "preset_config",
    "parse_config",
    "resolve_config",
    "emit_csv",
    "sw_relative_error",
    "validate_preset",
    "main",
]

PRESETS = ("set1", "set2", "uncoupled")

CSV_COLUMNS = (
    "delta",
    "delta_prime",
    "model",
    "n_cav",
    "n_cav_normalized",
    "n_mech",
    "residual",
    "status",
    "solve_time_s",
)

# Relative spectral-norm error of the third-order expansion against the exact
# square-root operator, preset set1 at dims (4, 10).  Calibrated by the first
# validated oracle run and frozen; the dominant dropped term grows like
# (n_cav + 1/2)^2 so the bound is set by the top retained cavity level.
SW_SET1_ERROR_BOUND = 2.5e-3


class ConfigError(ValueError):
    """A config file is malformed; the message carries the field path."""


def _preset_params(name: str) -> dict[str, float]:
    if name == "set1":
        kappa = 0.5
        return {
            "omega_a": 1.5e4,
            "omega_L": 1.0e4,
            "g_ac": 500.0,
            "g_am": 50.0,
            "g_cm": 1e-3,
            "F_L": 1e-2 * math.sqrt(kappa),
            "kappa": kappa,
            "gamma_a": 0.05,
            "gamma_m": 0.05,
            "n_th": 0.0,
        }
    if name == "set2":
        params = _preset_params("set1")
        params.update({"omega_a": 1.5e3, "omega_L": 1.0e3, "g_ac": 50.0})
        return params
    if name == "uncoupled":
        params = _preset_params("set1")
        params.update({"g_ac": 0.0, "g_am": 0.0, "g_cm": 0.0})
        return params
    raise ConfigError(f"unknown preset {name!r}; choose from {PRESETS}")


def preset_config(name: str) -> dict[str, Any]:
    """Full config dict for a named preset.

    The sweep window is centered on the dressed cavity resonance: the
    qubit's dispersive pull plus the displacement shift move the whole
    resonance structure to delta = -(g_ac^2/delta_aL + g_eff(g_eff-g_cm)),
    about -51 omega_m for set1, so a window around zero would miss it.
    """
    params = _preset_params(name)
    p = _build_params(params, "preset")
    if p.g_ac == 0.0 and p.g_am == 0.0:
        center = 0.0
    else:
        center = -(stark_shift(p) + displacement_shift(p))
    return {
        "params": params,
        "sweep": {
            "delta_min": center - 6.0,
            "delta_max": center + 6.0,
            "n_points": 201,
            "dims": [4, 14],
            "models": ["full", "effective", "uncoupled"],
            "axis": "delta",
            "normalize": True,
        },
    }


_PARAM_KEYS = (
    "omega_a",
    "omega_L",
    "delta",
    "g_ac",
    "g_am",
    "g_cm",
    "F_L",
    "kappa",
    "gamma_a",
    "gamma_m",
    "n_th",
)
_SWEEP_KEYS = ("delta_min", "delta_max", "n_points", "dims", "models", "axis", "normalize")


def _require_number(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    return float(value)


def _build_params(block: dict[str, Any], path: str) -> SystemParams:
    if not isinstance(block, dict):
        raise ConfigError(f"{path}: expected a mapping")
    unknown = sorted(set(block) - set(_PARAM_KEYS))
    if unknown:
        raise ConfigError(f"{path}.{unknown[0]}: unknown key")
    missing = [k for k in _PARAM_KEYS if k not in block and k != "delta"]
    if missing:
        raise ConfigError(f"{path}.{missing[0]}: required key missing")
    values = {k: _require_number(v, f"{path}.{k}") for k, v in block.items()}
    values.setdefault("delta", 0.0)
    try:
        return SystemParams(**values)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _build_sweep(block: dict[str, Any], params: SystemParams, path: str) -> SweepConfig:
    if not isinstance(block, dict):
        raise ConfigError(f"{path}: expected a mapping")
    unknown = sorted(set(block) - set(_SWEEP_KEYS))
    if unknown:
        raise ConfigError(f"{path}.{unknown[0]}: unknown key")
    missing = [k for k in _SWEEP_KEYS if k not in block]
    if missing:
        raise ConfigError(f"{path}.{missing[0]}: required key missing")

    dims = block["dims"]
    if (
        not isinstance(dims, (list, tuple))
        or len(dims) != 2
        or not all(isinstance(d, int) and not isinstance(d, bool) for d in dims)
    ):
        raise ConfigError(f"{path}.dims: expected [n_cavity, n_mech] integers, got {dims!r}")
    models = block["models"]
    if not isinstance(models, (list, tuple)) or not models:
        raise ConfigError(f"{path}.models: expected a nonempty list of model names")
    for m in models:
        if m not in MODELS:
            raise ConfigError(f"{path}.models: unknown model {m!r}; choose from {MODELS}")
    n_points = block["n_points"]
    if isinstance(n_points, bool) or not isinstance(n_points, int):
        raise ConfigError(f"{path}.n_points: expected an integer, got {n_points!r}")
    if not isinstance(block["normalize"], bool):
        raise ConfigError(f"{path}.normalize: expected true or false")
    try:
        return SweepConfig(
            params=params,
            delta_min=_require_number(block["delta_min"], f"{path}.delta_min"),
            delta_max=_require_number(block["delta_max"], f"{path}.delta_max"),
            n_points=n_points,
            dims=SubsystemDims(n_cavity=dims[0], n_mech=dims[1]),
            models=tuple(models),
            axis=str(block["axis"]),
            normalize=block["normalize"],
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def resolve_config(raw: dict[str, Any]) -> SweepConfig:
    """Validate a raw config dict and build the sweep configuration."""
    if not isinstance(raw, dict):
        raise ConfigError("config root: expected a mapping")
    unknown = sorted(set(raw) - {"params", "sweep"})
    if unknown:
        raise ConfigError(f"{unknown[0]}: unknown key")
    for key in ("params", "sweep"):
        if key not in raw:
            raise ConfigError(f"{key}: required block missing")
    params = _build_params(raw["params"], "params")
    return _build_sweep(raw["sweep"], params, "sweep")


def parse_config(path: str | Path, preset: Optional[str] = None) -> SweepConfig:
    """Load a config file (optionally layered over a preset) and validate it."""
    raw: dict[str, Any] = preset_config(preset) if preset else {}
    text = Path(path).read_text(encoding="utf-8")
    try:
        loaded = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML ({exc})") from exc
    if loaded is None:
        loaded = {}
    if not isinstance(loaded, dict):
        raise ConfigError(f"{path}: config root must be a mapping")
    return resolve_config(_merge(raw, loaded))


def config_echo(cfg: SweepConfig) -> dict[str, Any]:
    """Fully resolved config as a dict that reproduces the run when fed back."""
    params = asdict(cfg.params)
    return {
        "params": params,
        "sweep": {
            "delta_min": cfg.delta_min,
            "delta_max": cfg.delta_max,
            "n_points": cfg.n_points,
            "dims": [cfg.dims.n_cavity, cfg.dims.n_mech],
            "models": list(cfg.models),
            "axis": cfg.axis,
            "normalize": cfg.normalize,
        },
    }


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_csv(rows: Sequence[SweepRow], path: str | Path) -> None:
    """Write sweep rows as CSV: fixed column order, shortest round-trip floats.

    Failed rows keep their coordinates and status but leave the observable
    cells empty.
    """
    if not rows:
        raise ValueError("no rows to write")
    lines = [",".join(CSV_COLUMNS)]
    for row in rows:
        lines.append(
            ",".join(
                _format_cell(cell)
                for cell in (
                    row.delta,
                    row.delta_prime,
                    row.model,
                    row.n_cav,
                    row.n_cav_normalized,
                    row.n_mech,
                    row.residual,
                    row.status,
                    row.solve_time_s,
                )
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def sw_relative_error(params: SystemParams, dims: SubsystemDims) -> float:
    """Spectral-norm error of the expansion relative to the exact square root."""
    exact = qubit_sqrt_exact(params, dims).dense()
    series = qubit_sqrt_expansion(params, dims).dense()
    return float(np.linalg.norm(exact - series, 2) / np.linalg.norm(exact, 2))


def _check(name: str, measured, passed: bool, detail: str = "") -> dict[str, Any]:
    return {"name": name, "measured": measured, "pass": bool(passed), "detail": detail}


def validate_preset(preset: str) -> dict[str, Any]:
    """Run the quick validation checks for a preset; report measured values."""
    cfg = resolve_config(preset_config(preset))
    p = cfg.params
    checks: list[dict[str, Any]] = []

    if preset in ("set1", "set2"):
        g_eff = effective_coupling(p)
        checks.append(
            _check(
                "effective_coupling",
                g_eff,
                abs(g_eff - 1.001) <= 1e-12,
                "expected exactly 1.001 omega_m",
            )
        )
        checks.append(
            _check(
                "strong_coupling_within_0.1pct",
                abs(g_eff - 1.0),
                abs(g_eff - 1.0) <= 1.001e-3,
                "g_eff consistent with omega_m within 0.1%",
            )
        )
        report = dispersive_report(p)
        expected = "valid" if preset == "set1" else "invalid"
        checks.append(
            _check(
                "dispersive_verdict",
                report.verdict,
                report.verdict == expected,
                f"expected {expected!r} (ratios {report.ratio_ac:g}, {report.ratio_am:g})",
            )
        )
        sw_dims = SubsystemDims(4, 10)
        err = sw_relative_error(p, sw_dims)
        if preset == "set1":
            checks.append(
                _check(
                    "sw_expansion_error",
                    err,
                    err <= SW_SET1_ERROR_BOUND,
                    f"relative spectral-norm error at dims (4, 10), bound {SW_SET1_ERROR_BOUND:g}",
                )
            )
        else:
            set1 = resolve_config(preset_config("set1")).params
            err1 = sw_relative_error(set1, sw_dims)
            checks.append(
                _check(
                    "sw_breakdown_ratio",
                    err / err1,
                    err >= 10.0 * err1,
                    "set2 expansion error at least 10x the set1 error",
                )
            )

    if preset == "uncoupled":
        sweep_cfg = SweepConfig(
            params=p,
            delta_min=-6.0,
            delta_max=6.0,
            n_points=201,
            dims=SubsystemDims(4, 2),
            models=("uncoupled",),
            axis="delta",
            normalize=True,
        )
        rows = run_sweep(sweep_cfg)
        worst = 0.0
        for row in rows:
            exact = p.F_L**2 / (p.kappa**2 / 4 + row.delta**2)
            worst = max(worst, abs(row.n_cav - exact) / exact)
        checks.append(
            _check(
                "lorentzian_max_rel_error",
                worst,
                worst <= 1e-6,
                "uncoupled cavity against the analytic Lorentzian",
            )
        )
        peak = max(rows, key=lambda r: r.n_cav_normalized)
        checks.append(
            _check(
                "normalized_peak",
                peak.n_cav_normalized,
                abs(peak.n_cav_normalized - 1.0) <= 1e-6 and abs(peak.delta) <= 0.06,
                "normalized peak 1.0 at delta = 0",
            )
        )

    return {
        "preset": preset,
        "artifact_version": __version__,
        "checks": checks,
        "pass": all(c["pass"] for c in checks),
    }


def _parse_dims_flag(text: str) -> list[int]:
    try:
        nc, nm = (int(part) for part in text.split(","))
    except ValueError:
        raise ConfigError(f"--dims: expected NC,NM integers, got {text!r}") from None
    return [nc, nm]


def _parse_range_flag(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(part) for part in text.split(","))
    except ValueError:
        raise ConfigError(f"--range: expected MIN,MAX numbers, got {text!r}") from None
    return lo, hi


def _parse_ladder_flag(text: str) -> list[SubsystemDims]:
    rungs = []
    for part in text.split(","):
        try:
            nc, nm = (int(x) for x in part.strip().split("x"))
        except ValueError:
            raise ConfigError(
                f"--ladder: expected NCxNM[,NCxNM...] like 4x10,5x12, got {text!r}"
            ) from None
        rungs.append(SubsystemDims(n_cavity=nc, n_mech=nm))
    return rungs


def _cmd_run(args: argparse.Namespace) -> int:
    if not args.config and not args.preset:
        print("run: provide --config and/or --preset", file=sys.stderr)
        return 2
    if args.config:
        cfg = parse_config(args.config, preset=args.preset)
    else:
        cfg = resolve_config(preset_config(args.preset))

    overrides: dict[str, Any] = {}
    if args.dims:
        overrides["dims"] = _parse_dims_flag(args.dims)
    if args.points is not None:
        overrides["n_points"] = args.points
    if args.range:
        overrides["delta_min"], overrides["delta_max"] = _parse_range_flag(args.range)
    if args.models:
        overrides["models"] = args.models.split(",")
    if args.axis:
        overrides["axis"] = args.axis
    if args.normalize is not None:
        overrides["normalize"] = args.normalize
    if overrides:
        raw = config_echo(cfg)
        raw["sweep"].update(overrides)
        cfg = resolve_config(raw)

    started = time.perf_counter()
    rows = run_sweep(cfg, workers=args.workers)
    wall = time.perf_counter() - started

    output = Path(args.output)
    emit_csv(rows, output)
    failures = sum(1 for r in rows if r.status != "ok")
    manifest = {
        "artifact_version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "config": config_echo(cfg),
        "sweeps": [
            {
                "output": str(output),
                "rows": len(rows),
                "failures": failures,
                "wall_time_s": wall,
            }
        ],
    }
    manifest_path = output.with_suffix(output.suffix + ".manifest.json")
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {len(rows)} rows to {output} ({failures} failed) in {wall:.1f}s")
    return 0 if failures == 0 else 1


def _cmd_validate(args: argparse.Namespace) -> int:
    report = validate_preset(args.preset)
    print(json.dumps(report, indent=2))
    return 0 if report["pass"] else 1


def _cmd_converge(args: argparse.Namespace) -> int:
    cfg = resolve_config(preset_config(args.preset))
    ladder = _parse_ladder_flag(args.ladder)
    if args.probes:
        probes = [float(x) for x in args.probes.split(",")]
    else:
        center = 0.5 * (cfg.delta_min + cfg.delta_max)
        probes = [center - 1.0, center, center + 1.0]
    dims = convergence_check(cfg.params, ladder, probes, model=args.model)
    print(
        json.dumps(
            {
                "preset": args.preset,
                "model": args.model,
                "probes": probes,
                "converged_dims": [dims.n_cavity, dims.n_mech],
            },
            indent=2,
        )
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hybridom",
        description="Steady-state detuning sweeps of the hybrid tripartite "
        "system and its effective optomechanical model.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a detuning sweep and write CSV")
    run_p.add_argument("--config", help="YAML config file")
    run_p.add_argument("--preset", choices=PRESETS, help="named parameter set to start from")
    run_p.add_argument("--output", default="sweep.csv", help="CSV output path")
    run_p.add_argument("--dims", help="Fock truncations NC,NM")
    run_p.add_argument("--points", type=int, help="number of grid points")
    run_p.add_argument("--range", help="sweep range MIN,MAX in the chosen axis")
    run_p.add_argument("--models", help="comma-separated subset of full,effective,uncoupled")
    run_p.add_argument("--axis", choices=("delta", "delta_prime"), help="grid coordinate")
    run_p.add_argument(
        "--normalize",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="emit n_cav normalized by 4 F_L^2/kappa^2",
    )
    run_p.add_argument("--workers", type=int, default=None, help="parallel grid workers")
    run_p.set_defaults(func=_cmd_run)

    val_p = sub.add_parser("validate", help="run the quick validation checks for a preset")
    val_p.add_argument("--preset", choices=PRESETS, required=True)
    val_p.set_defaults(func=_cmd_validate)

    con_p = sub.add_parser("converge", help="find converged Fock truncations")
    con_p.add_argument("--preset", choices=PRESETS, required=True)
    con_p.add_argument("--ladder", required=True, help="truncation ladder NCxNM,NCxNM,...")
    con_p.add_argument("--probes", help="comma-separated probe detunings")
    con_p.add_argument("--model", choices=MODELS, default="full")
    con_p.set_defaults(func=_cmd_converge)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
