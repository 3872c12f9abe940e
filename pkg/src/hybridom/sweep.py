"""Detuning sweeps, model comparison metrics, and truncation control.

A sweep solves the steady state of up to three models on a common detuning
grid: the full tripartite system, its effective optomechanical reduction, and
the uncoupled reference cavity (all couplings zero).  Comparison between the
full and effective models accounts for the one quirk of the reduction: the
effective Hamiltonian carries a static mechanical displacement absent from
the full model, which offsets its cavity resonance by
``g_eff (g_eff - g_cm) / omega_m``.  The effective curve is therefore plotted
(and compared) against the shifted coordinate ``delta_prime``, exactly as the
reference figures do.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from functools import partial
from typing import Optional, Sequence

import numpy as np
from scipy.signal import find_peaks

from .hilbert import SubsystemDims, annihilation, embed, embed_reduced, expectation
from .liouville import build_liouvillian, optomech_channels, tripartite_channels
from .model import DispersiveError, SystemParams, build_h_eff, build_h_hyb, displacement_shift
from .solver import residual, steady_state

__all__ = [
    "MODELS",
    "WORKERS_ENV_VAR",
    "NoConvergenceError",
    "SweepConfig",
    "SweepRow",
    "PeakSet",
    "ModelComparison",
    "run_sweep",
    "solve_observables",
    "detect_peaks",
    "model_peaks",
    "compare_models",
    "convergence_check",
    "reference_peak_number",
]

MODELS = ("full", "effective", "uncoupled")

# Worker-pool size for parallel grid points; unset or "1" runs serially.
WORKERS_ENV_VAR = "HYBRIDOM_WORKERS"

# A local maximum counts as a peak if its prominence is at least this
# fraction of the global curve maximum.
PEAK_PROMINENCE_FRACTION = 0.05


class NoConvergenceError(RuntimeError):
    """The truncation ladder was exhausted before observables converged."""

    def __init__(self, message: str, trend):
        super().__init__(message)
        self.trend = trend


@dataclass(frozen=True)
class SweepConfig:
    """One detuning sweep: parameters, grid, models, and truncation.

    ``delta_min``/``delta_max`` are interpreted in the coordinate named by
    ``axis``: for ``axis="delta_prime"`` the grid is laid out in the shifted
    coordinate and the solver detunings are offset accordingly.  All models
    at a grid point are solved at the same physical detuning.
    """

    params: SystemParams
    delta_min: float
    delta_max: float
    n_points: int
    dims: SubsystemDims
    models: tuple[str, ...] = ("full", "effective", "uncoupled")
    axis: str = "delta"
    normalize: bool = True

    def __post_init__(self) -> None:
        if not self.delta_min < self.delta_max:
            raise ValueError(f"delta_min {self.delta_min} must be < delta_max {self.delta_max}")
        if self.n_points < 2:
            raise ValueError(f"n_points must be >= 2, got {self.n_points}")
        if not self.models:
            raise ValueError("at least one model must be requested")
        unknown = [m for m in self.models if m not in MODELS]
        if unknown:
            raise ValueError(f"unknown models {unknown}; choose from {MODELS}")
        if self.axis not in ("delta", "delta_prime"):
            raise ValueError(f"axis must be 'delta' or 'delta_prime', got {self.axis!r}")

    def grid(self) -> np.ndarray:
        """Grid values in the configured axis coordinate."""
        return np.linspace(self.delta_min, self.delta_max, self.n_points)

    def solver_deltas(self) -> np.ndarray:
        """Physical cavity detunings the models are solved at."""
        grid = self.grid()
        if self.axis == "delta_prime":
            return grid - axis_shift(self.params)
        return grid


@dataclass(frozen=True)
class SweepRow:
    """Steady-state observables of one model at one grid point.

    ``delta_prime = delta + g_eff (g_eff - g_cm) / omega_m`` is recorded for
    every row with the shift computed from the sweep parameters, so either
    coordinate can be used as the plot axis afterwards.
    """

    delta: float
    delta_prime: float
    model: str
    n_cav: Optional[float]
    n_cav_normalized: Optional[float]
    n_mech: Optional[float]
    residual: Optional[float]
    solve_time_s: float
    status: str  # "ok" | "failed"
    error: Optional[str] = None


def axis_shift(params: SystemParams) -> float:
    """Offset between the delta and delta_prime coordinates.

    Zero when the qubit is decoupled (the effective model then has no
    displacement and both coordinates coincide).
    """
    try:
        return displacement_shift(params)
    except DispersiveError:
        if params.g_ac == 0.0 and params.g_am == 0.0:
            return 0.0
        raise


def reference_peak_number(params: SystemParams) -> float:
    """Peak photon number 4 F_L^2 / kappa^2 of the uncoupled driven cavity."""
    if params.kappa <= 0.0:
        return float("nan")
    return 4.0 * params.F_L**2 / params.kappa**2


def solve_observables(
    params: SystemParams, model: str, dims: SubsystemDims
) -> tuple[float, float, float]:
    """Steady-state (n_cav, n_mech, residual) for one model at params.delta."""
    if model == "full":
        h = build_h_hyb(params, dims)
        channels = tripartite_channels(params, dims)
        a = embed(annihilation(dims.n_cavity), "cavity", dims)
        b = embed(annihilation(dims.n_mech), "mech", dims)
    elif model in ("effective", "uncoupled"):
        if model == "uncoupled":
            params = replace(params, g_ac=0.0, g_am=0.0, g_cm=0.0)
        h = build_h_eff(params, dims)
        channels = optomech_channels(params, dims)
        a = embed_reduced(annihilation(dims.n_cavity), "cavity", dims)
        b = embed_reduced(annihilation(dims.n_mech), "mech", dims)
    else:
        raise ValueError(f"unknown model {model!r}")
    lindblad = build_liouvillian(h, channels)
    rho = steady_state(lindblad)
    n_cav = expectation(a.dag() @ a, rho).real
    n_mech = expectation(b.dag() @ b, rho).real
    return n_cav, n_mech, residual(lindblad, rho)


def _solve_row(cfg: SweepConfig, shift: float, n0: float, task: tuple[float, str]) -> SweepRow:
    delta, model = task
    start = time.perf_counter()
    try:
        n_cav, n_mech, res = solve_observables(cfg.params.at_delta(delta), model, cfg.dims)
    except Exception as exc:  # failed rows are recorded, not fatal
        return SweepRow(
            delta=delta,
            delta_prime=delta + shift,
            model=model,
            n_cav=None,
            n_cav_normalized=None,
            n_mech=None,
            residual=None,
            solve_time_s=time.perf_counter() - start,
            status="failed",
            error=f"{type(exc).__name__}: {exc}",
        )
    normalized = n_cav / n0 if (cfg.normalize and n0 > 0.0) else None
    return SweepRow(
        delta=delta,
        delta_prime=delta + shift,
        model=model,
        n_cav=n_cav,
        n_cav_normalized=normalized,
        n_mech=n_mech,
        residual=res,
        solve_time_s=time.perf_counter() - start,
        status="ok",
    )


def _worker_count(workers: Optional[int]) -> int:
    if workers is not None:
        return max(1, workers)
    env = os.environ.get(WORKERS_ENV_VAR, "").strip()
    if env:
        return max(1, int(env))
    return 1


def run_sweep(cfg: SweepConfig, workers: Optional[int] = None) -> list[SweepRow]:
    """Solve every requested model at every grid point.

    Rows come back ordered by detuning (models in configured order within a
    point).  Grid points are independent, so they may be farmed out to a
    process pool; the result is identical for any worker count.  Solver
    failures are recorded as failed rows and do not abort the sweep.
    """
    shift = axis_shift(cfg.params)
    n0 = reference_peak_number(cfg.params)
    tasks = [(float(delta), model) for delta in cfg.solver_deltas() for model in cfg.models]
    n_workers = _worker_count(workers)
    solve = partial(_solve_row, cfg, shift, n0)
    if n_workers == 1 or len(tasks) <= 1:
        return [solve(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=n_workers) as pool:
        return list(pool.map(solve, tasks, chunksize=1))


@dataclass(frozen=True)
class PeakSet:
    """Detected resonance peaks of one model's photon curve."""

    count: int
    positions: tuple[float, ...]  # in the model's plot coordinate
    spacings: tuple[float, ...]


@dataclass(frozen=True)
class ModelComparison:
    """Quantified agreement between two models' sweep curves.

    Photon curves are normalized by the uncoupled reference peak n0 and
    compared pointwise after mapping each model onto its plot coordinate
    (delta for the full and uncoupled models, delta_prime for the effective
    model).  Phonon curves are compared after removing each curve's own
    baseline (minimum over the common window) and scaling by the larger
    structure amplitude, since the effective model's static displacement
    offsets its phonon number by a constant.
    """

    model_a: str
    model_b: str
    n_common: int
    max_abs_diff_ncav: float
    mean_abs_diff_ncav: float
    max_abs_diff_nmech: float
    mean_abs_diff_nmech: float
    peaks: dict[str, PeakSet]


def _plot_coordinate(model: str) -> str:
    return "delta_prime" if model == "effective" else "delta"


def _model_curves(rows: Sequence[SweepRow], model: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(plot coordinate, n_cav, n_mech) arrays of the ok rows of one model."""
    coord = _plot_coordinate(model)
    picked = [r for r in rows if r.model == model and r.status == "ok"]
    if not picked:
        raise ValueError(f"no successful rows for model {model!r}")
    picked.sort(key=lambda r: getattr(r, coord))
    x = np.array([getattr(r, coord) for r in picked])
    n_cav = np.array([r.n_cav for r in picked])
    n_mech = np.array([r.n_mech for r in picked])
    return x, n_cav, n_mech


def detect_peaks(
    x: np.ndarray, y: np.ndarray, prominence_fraction: float = PEAK_PROMINENCE_FRACTION
) -> PeakSet:
    """Local maxima with prominence at least a fraction of the global maximum.

    Positions are refined below the grid spacing by fitting a parabola
    through the peak sample and its two neighbors, so spacings reflect the
    physical resonances rather than grid quantization.
    """
    y = np.asarray(y, dtype=float)
    top = float(np.max(y)) if y.size else 0.0
    if top <= 0.0:
        return PeakSet(count=0, positions=(), spacings=())
    idx, _ = find_peaks(y, prominence=prominence_fraction * top)
    positions = []
    for i in idx:
        pos = float(x[i])
        if 0 < i < y.size - 1:
            denom = y[i - 1] - 2.0 * y[i] + y[i + 1]
            if denom < 0.0:
                offset = 0.5 * (y[i - 1] - y[i + 1]) / denom
                pos += offset * float(x[i + 1] - x[i])
        positions.append(pos)
    positions = tuple(positions)
    spacings = tuple(float(b - a) for a, b in zip(positions, positions[1:]))
    return PeakSet(count=len(positions), positions=positions, spacings=spacings)


def model_peaks(
    rows: Sequence[SweepRow],
    model: str,
    n0: float,
    prominence_fraction: float = PEAK_PROMINENCE_FRACTION,
) -> PeakSet:
    """Peaks of one model's normalized photon curve, in its plot coordinate."""
    x, n_cav, _ = _model_curves(rows, model)
    return detect_peaks(x, n_cav / n0, prominence_fraction)


def compare_models(
    rows: Sequence[SweepRow],
    model_a: str = "full",
    model_b: str = "effective",
    n0: Optional[float] = None,
    prominence_fraction: float = PEAK_PROMINENCE_FRACTION,
) -> ModelComparison:
    """Pointwise and peak-structure comparison of two models from sweep rows.

    ``n0`` defaults to the largest photon number across both curves, which
    only matters when the rows were produced without normalization; pass the
    uncoupled reference value for figure-style normalization.
    """
    xa, na, ma = _model_curves(rows, model_a)
    xb, nb, mb = _model_curves(rows, model_b)

    lo = max(xa.min(), xb.min())
    hi = min(xa.max(), xb.max())
    if hi <= lo:
        raise ValueError("models have no overlapping plot-coordinate window")
    mask = (xa >= lo - 1e-12) & (xa <= hi + 1e-12)
    x = xa[mask]
    ya = na[mask]
    yb = np.interp(x, xb, nb)
    za = ma[mask]
    zb = np.interp(x, xb, mb)

    if n0 is None:
        n0 = float(max(na.max(), nb.max(), 1e-300))
    diff_n = np.abs(ya - yb) / n0

    # Phonon curves: remove per-model baselines, scale by the shared
    # structure amplitude.
    za0 = za - za.min()
    zb0 = zb - zb.min()
    amp = max(float(za0.max()), float(zb0.max()), 1e-12)
    diff_m = np.abs(za0 - zb0) / amp

    peaks = {
        model_a: detect_peaks(xa, na / n0, prominence_fraction),
        model_b: detect_peaks(xb, nb / n0, prominence_fraction),
    }
    return ModelComparison(
        model_a=model_a,
        model_b=model_b,
        n_common=int(x.size),
        max_abs_diff_ncav=float(diff_n.max()),
        mean_abs_diff_ncav=float(diff_n.mean()),
        max_abs_diff_nmech=float(diff_m.max()),
        mean_abs_diff_nmech=float(diff_m.mean()),
        peaks=peaks,
    )


def convergence_check(
    params: SystemParams,
    dims_ladder: Sequence[SubsystemDims],
    probe_deltas: Sequence[float],
    model: str = "full",
    rel_tol: float = 1e-3,
) -> SubsystemDims:
    """Smallest truncation whose observables are stable against the next rung.

    Solves the steady state at every probe detuning for consecutive ladder
    rungs and accepts a rung once both observables change by less than
    ``rel_tol`` relative at every probe when moving to the next rung.
    """
    if len(dims_ladder) < 2:
        raise ValueError("dims ladder needs at least two rungs")
    for lower, upper in zip(dims_ladder, dims_ladder[1:]):
        if not (upper.n_cavity > lower.n_cavity and upper.n_mech > lower.n_mech):
            raise ValueError(
                "dims ladder must increase strictly in both Fock truncations: "
                f"{lower.full} -> {upper.full}"
            )

    def observe(dims: SubsystemDims) -> list[tuple[float, float]]:
        out = []
        for delta in probe_deltas:
            n_cav, n_mech, _ = solve_observables(params.at_delta(delta), model, dims)
            out.append((n_cav, n_mech))
        return out

    trend = [(dims_ladder[0], observe(dims_ladder[0]))]
    for nxt in dims_ladder[1:]:
        trend.append((nxt, observe(nxt)))
        prev_obs, next_obs = trend[-2][1], trend[-1][1]
        converged = True
        for (c1, m1), (c2, m2) in zip(prev_obs, next_obs):
            for v1, v2 in ((c1, c2), (m1, m2)):
                if abs(v2 - v1) > rel_tol * max(abs(v2), 1e-12):
                    converged = False
        if converged:
            return trend[-2][0]
    lines = [
        f"  {dims.full}: " + "  ".join(f"({c:.6e}, {m:.6e})" for c, m in obs)
        for dims, obs in trend
    ]
    raise NoConvergenceError(
        "observables did not converge on the given truncation ladder "
        f"(model={model}, rel_tol={rel_tol:g}); trend per probe delta:\n"
        + "\n".join(lines),
        trend=trend,
    )
