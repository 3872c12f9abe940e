"""Hamiltonians of the hybrid tripartite system and its optomechanical reduction.

Builds the driven qubit-cavity-mechanics Hamiltonian in the frame rotating at
the drive, the exact square-root qubit operator obtained by projecting onto
the qubit ground branch, its third-order expansion in the coupling-to-detuning
ratios, and the resulting effective optomechanical Hamiltonian with the
qubit-mediated coupling rate.

All frequencies and rates are dimensionless, in units of the mechanical
frequency (``OMEGA_M == 1`` internally).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp

from .hilbert import (
    Operator,
    SubsystemDims,
    annihilation,
    embed,
    embed_reduced,
    identity,
    pauli,
)

__all__ = [
    "OMEGA_M",
    "DispersiveError",
    "PositivityError",
    "SystemParams",
    "DispersiveReport",
    "effective_coupling",
    "stark_shift",
    "displacement_shift",
    "build_h_hyb",
    "build_h_eff",
    "qubit_field_operators",
    "qubit_sqrt_exact",
    "qubit_sqrt_expansion",
    "dispersive_report",
]

OMEGA_M = 1.0

# Qubit detunings smaller than this are rejected outright: every effective
# quantity divides by delta_aL and the whole reduction presumes the qubit is
# far off resonance.
_DELTA_AL_MIN = 1e-6


class DispersiveError(ZeroDivisionError):
    """The qubit detuning from the drive is (numerically) zero."""


class PositivityError(ValueError):
    """The operator under the square root lost positivity to truncation."""


@dataclass(frozen=True)
class SystemParams:
    """Physical rates of the tripartite system, in units of omega_m.

    ``delta`` is the cavity detuning (drive minus cavity frequency) and is
    the quantity swept in the figures.  The qubit detuning from the drive,
    ``delta_aL``, is always derived from ``omega_a - omega_L`` so there is a
    single source of truth.
    """

    omega_a: float
    omega_L: float
    delta: float
    g_ac: float
    g_am: float
    g_cm: float
    F_L: float
    kappa: float
    gamma_a: float
    gamma_m: float
    n_th: float = 0.0

    def __post_init__(self) -> None:
        for name in ("kappa", "gamma_a", "gamma_m", "n_th"):
            value = getattr(self, name)
            if value < 0:
                raise ValueError(f"{name} must be nonnegative, got {value}")

    @property
    def delta_aL(self) -> float:
        """Qubit detuning from the drive, omega_a - omega_L."""
        return self.omega_a - self.omega_L

    def at_delta(self, delta: float) -> "SystemParams":
        """Copy of these parameters with the cavity detuning replaced."""
        return replace(self, delta=delta)


def _require_dispersive(p: SystemParams) -> float:
    d = p.delta_aL
    if abs(d) < _DELTA_AL_MIN:
        raise DispersiveError(
            "delta_aL = omega_a - omega_L is zero: the effective model divides "
            "by the qubit detuning and assumes the dispersive regime "
            "delta_aL >> g_ac, g_am"
        )
    return d


def effective_coupling(p: SystemParams) -> float:
    """Effective radiation-pressure coupling g_cm + 2 g_ac^2 g_am / delta_aL^2.

    The second term is the qubit-mediated interaction: the mechanical motion
    modulates the dispersive shift the qubit imprints on the cavity.
    """
    d = _require_dispersive(p)
    return p.g_cm + 2.0 * p.g_ac**2 * p.g_am / d**2


def stark_shift(p: SystemParams) -> float:
    """Dispersive cavity frequency pull g_ac^2 / delta_aL from the ground-state qubit."""
    return p.g_ac**2 / _require_dispersive(p)


def displacement_shift(p: SystemParams) -> float:
    """Cavity shift g_eff (g_eff - g_cm) / omega_m from the static mechanical displacement.

    This is the offset between the bare detuning axis and the effective
    detuning axis used for plotting the effective model.
    """
    g_eff = effective_coupling(p)
    return g_eff * (g_eff - p.g_cm) / OMEGA_M


def build_h_hyb(p: SystemParams, dims: SubsystemDims) -> Operator:
    """Full tripartite Hamiltonian in the frame rotating at the drive.

    -delta a+a + (delta_aL/2) sz + i g_ac (s+ a - s- a+)
    - g_am (sz + 1)(b + b+) - g_cm a+a (b + b+) + omega_m b+b
    + i F_L (a+ - a)
    """
    a = embed(annihilation(dims.n_cavity), "cavity", dims)
    b = embed(annihilation(dims.n_mech), "mech", dims)
    sz = embed(pauli("z"), "qubit", dims)
    s_plus = embed(pauli("plus"), "qubit", dims)
    s_minus = embed(pauli("minus"), "qubit", dims)
    one = Operator(identity(dims.dim), dims.full)

    adag = a.dag()
    x_m = b + b.dag()
    h = (
        -p.delta * (adag @ a)
        + 0.5 * p.delta_aL * sz
        + 1j * p.g_ac * (s_plus @ a - s_minus @ adag)
        - p.g_am * ((sz + one) @ x_m)
        - p.g_cm * ((adag @ a) @ x_m)
        + OMEGA_M * (b.dag() @ b)
        + 1j * p.F_L * (adag - a)
    )
    return h


def _reduced_mode_ops(dims: SubsystemDims) -> tuple[Operator, Operator]:
    a = embed_reduced(annihilation(dims.n_cavity), "cavity", dims)
    b = embed_reduced(annihilation(dims.n_mech), "mech", dims)
    return a, b


def build_h_eff(p: SystemParams, dims: SubsystemDims) -> Operator:
    """Effective optomechanical Hamiltonian on the cavity (x) mechanics space.

    -(delta + g_ac^2/delta_aL) a+a - ((g_eff - g_cm)/2)(b + b+)
    - g_eff a+a (b + b+) + omega_m b+b + i F_L (a+ - a)

    Constant energy terms from the qubit branch are dropped here (they shift
    nothing observable); they are kept in :func:`qubit_sqrt_expansion` so that
    the expansion stays directly comparable to the exact square root.
    """
    g_eff = effective_coupling(p)
    a, b = _reduced_mode_ops(dims)
    adag = a.dag()
    x_m = b + b.dag()
    h = (
        -(p.delta + stark_shift(p)) * (adag @ a)
        - 0.5 * (g_eff - p.g_cm) * x_m
        - g_eff * ((adag @ a) @ x_m)
        + OMEGA_M * (b.dag() @ b)
        + 1j * p.F_L * (adag - a)
    )
    return h


def qubit_field_operators(
    p: SystemParams, dims: SubsystemDims
) -> tuple[Operator, Operator, Operator]:
    """Effective magnetic-field operators (B_x, B_y, B_z) seen by the qubit.

    B_x = -g_ac p_c, B_y = -g_ac x_c, B_z = delta_aL - 2 g_am x_m, acting on
    the cavity (x) mechanics space, with x_c = a + a+, p_c = -i(a - a+) and
    x_m = b + b+.
    """
    a, b = _reduced_mode_ops(dims)
    one = Operator(identity(dims.reduced_dim), dims.reduced)
    x_c = a + a.dag()
    p_c = -1j * (a - a.dag())
    x_m = b + b.dag()
    b_x = -p.g_ac * p_c
    b_y = -p.g_ac * x_c
    b_z = p.delta_aL * one - 2.0 * p.g_am * x_m
    return b_x, b_y, b_z


def qubit_sqrt_exact(p: SystemParams, dims: SubsystemDims) -> Operator:
    """Ground-branch qubit energy -1/2 sqrt(B_x^2 + B_y^2 + B_z^2), exactly.

    The operator under the root, 4 g_ac^2 (a+a + 1/2) + (delta_aL - 2 g_am x_m)^2,
    is diagonalized densely on the reduced space and the square root is taken
    on the spectrum.  This is the numerical oracle against which the series
    expansion is checked.
    """
    a, b = _reduced_mode_ops(dims)
    one = Operator(identity(dims.reduced_dim), dims.reduced)
    x_m = b + b.dag()
    bz = p.delta_aL * one - 2.0 * p.g_am * x_m
    under_root = 4.0 * p.g_ac**2 * (a.dag() @ a + 0.5 * one) + bz @ bz

    evals, evecs = np.linalg.eigh(under_root.dense())
    if evals.min() < -1e-9:
        raise PositivityError(
            f"operator under the square root has eigenvalue {evals.min():.3e}; "
            "the Fock truncation is too small for these parameters"
        )
    root = (evecs * np.sqrt(np.clip(evals, 0.0, None))) @ evecs.conj().T
    return Operator(sp.csr_matrix(-0.5 * root), dims.reduced)


def qubit_sqrt_expansion(p: SystemParams, dims: SubsystemDims) -> Operator:
    """Third-order expansion of the ground-branch qubit energy.

    -delta_aL/2 + g_am (b + b+) - (g_ac^2/delta_aL)(a+a + 1/2)
    - (2 g_ac^2 g_am / delta_aL^2)(a+a + 1/2)(b + b+)

    Constant terms are kept so the result is directly comparable to
    :func:`qubit_sqrt_exact`.
    """
    d = _require_dispersive(p)
    a, b = _reduced_mode_ops(dims)
    one = Operator(identity(dims.reduced_dim), dims.reduced)
    x_m = b + b.dag()
    n_half = a.dag() @ a + 0.5 * one
    return (
        -0.5 * d * one
        + p.g_am * x_m
        - (p.g_ac**2 / d) * n_half
        - (2.0 * p.g_ac**2 * p.g_am / d**2) * (n_half @ x_m)
    )


@dataclass(frozen=True)
class DispersiveReport:
    """Expansion-parameter ratios and the resulting validity verdict."""

    ratio_ac: float
    ratio_am: float
    strong_coupling_ratio: float
    verdict: str  # "valid" | "marginal" | "invalid"


def dispersive_report(
    p: SystemParams,
    ratio_ac_max: float = 0.1,
    ratio_am_max: float = 0.01,
) -> DispersiveReport:
    """Judge whether the effective reduction is trustworthy for these parameters.

    The reduction is accurate to second order in g_ac/delta_aL but only first
    order in g_am/delta_aL, so the mechanics coupling gets the tighter default
    threshold.  ``valid`` requires both ratios within threshold; ``marginal``
    allows up to twice either threshold; anything beyond is ``invalid``.
    """
    d = _require_dispersive(p)
    ratio_ac = abs(p.g_ac / d)
    ratio_am = abs(p.g_am / d)
    if ratio_ac <= ratio_ac_max and ratio_am <= ratio_am_max:
        verdict = "valid"
    elif ratio_ac <= 2 * ratio_ac_max and ratio_am <= 2 * ratio_am_max:
        verdict = "marginal"
    else:
        verdict = "invalid"
    return DispersiveReport(
        ratio_ac=ratio_ac,
        ratio_am=ratio_am,
        strong_coupling_ratio=effective_coupling(p) / OMEGA_M,
        verdict=verdict,
    )
