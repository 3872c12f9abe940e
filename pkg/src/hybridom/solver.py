"""Steady states of Lindblad generators, plus a time-domain oracle.

The steady state is the unit-trace null vector of the Liouvillian.  It is
computed by replacing one redundant row of the sparse superoperator with the
trace functional and solving the resulting nonsingular system by direct LU
factorization.  Only rows belonging to diagonal (population) entries of the
density matrix are redundant: the trace-preservation identity
``vec(I)^T L = 0`` is a linear dependence among exactly those rows, so the
replacement row is chosen among them (the one with the largest diagonal
magnitude, first such on a tie).

A fixed-step RK4 integrator doubles as an independent oracle: on small
systems the long-time limit must land on the algebraic steady state.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import reverse_cuthill_mckee

from .hilbert import DimensionError, Operator
from .liouville import Liouvillian, unvec, vec, vec_identity

__all__ = [
    "SteadyStateError",
    "ConvergenceError",
    "StepSizeError",
    "steady_state",
    "residual",
    "evolve",
    "trace_distance",
]

# Number of iterative-refinement sweeps after the direct solve.  Two passes
# recover machine-level residuals even for badly scaled generators.
_REFINE_STEPS = 2


class SteadyStateError(RuntimeError):
    """The steady state is not unique (singular system after trace replacement)."""


class ConvergenceError(RuntimeError):
    """The solve finished but the residual stayed above tolerance."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class StepSizeError(RuntimeError):
    """RK4 step too large: trace drift exceeded its bound."""


def _linf_norm(matrix: sp.csr_matrix) -> float:
    if matrix.nnz == 0:
        return 0.0
    return float(abs(matrix).sum(axis=1).max())


def _replacement_row(L: sp.csr_matrix, d: int, population_index) -> int:
    """Row to overwrite with the trace functional, as a flat index into L."""
    pop_rows = np.arange(d) * (d + 1)
    if population_index is not None:
        if not 0 <= population_index < d:
            raise ValueError(f"population_index must be in [0, {d}), got {population_index}")
        return int(pop_rows[population_index])
    diag = np.abs(L.diagonal()[pop_rows])
    return int(pop_rows[int(np.argmax(diag))])


def steady_state(
    L: Liouvillian,
    population_index: int | None = None,
    residual_tol: float = 1e-9,
) -> Operator:
    """Unique steady state of a trace-preserving Lindblad generator.

    Parameters
    ----------
    L : Liouvillian
        The generator.  Must be trace preserving within tolerance.
    population_index : int, optional
        Force the balance equation of this diagonal element to be the one
        replaced by the trace constraint (used to test solution uniqueness);
        by default the population row with the largest diagonal magnitude of
        L is replaced.
    residual_tol : float
        The repaired state must satisfy
        ``max |L vec(rho)| <= residual_tol * max(1, |L|_inf)``.

    Returns
    -------
    Operator
        Density matrix, symmetrized and renormalized to unit trace.
    """
    d = L.dim
    scale = max(1.0, _linf_norm(L.matrix))
    if L.trace_defect() > 1e-10 * scale:
        raise ValueError(
            f"generator is not trace preserving (defect {L.trace_defect():.3e})"
        )

    row = _replacement_row(L.matrix, d, population_index)

    # Zero the chosen row, then add the trace functional there.
    keep = np.ones(d * d)
    keep[row] = 0.0
    A = (sp.diags(keep) @ L.matrix).tolil()
    A[row, :] = vec_identity(d)
    A = A.tocsr()
    b = np.zeros(d * d, dtype=np.complex128)
    b[row] = 1.0

    # Diagonal equilibration: detuning-scale entries (up to ~1e4) sit next to
    # rates of ~1e-2, which ruins the factorization without scaling.
    r = np.asarray(abs(A).max(axis=1).todense()).ravel()
    r[r == 0.0] = 1.0
    A = sp.diags(1.0 / r) @ A
    b = b / r
    c = np.asarray(abs(A).max(axis=0).todense()).ravel()
    c[c == 0.0] = 1.0
    A = (A @ sp.diags(1.0 / c)).tocsr()

    # Bandwidth reduction pays for itself above a few thousand unknowns.
    perm = reverse_cuthill_mckee(A, symmetric_mode=False)
    A = A[perm][:, perm].tocsc()
    b = b[perm]

    try:
        lu = spla.splu(A, permc_spec="NATURAL")
        y = lu.solve(b)
        for _ in range(_REFINE_STEPS):
            y = y + lu.solve(b - A @ y)
    except RuntimeError as exc:
        raise SteadyStateError(
            "steady state is not unique: the trace-replaced system is singular "
            f"({exc})"
        ) from exc
    if not np.all(np.isfinite(y)):
        raise SteadyStateError("steady state is not unique: solution is not finite")

    x = np.empty_like(y)
    x[perm] = y
    x = x / c

    rho = x.reshape((d, d), order="F")
    rho = 0.5 * (rho + rho.conj().T)
    trace = np.real(np.trace(rho))
    if abs(trace) < 1e-300:
        raise SteadyStateError("steady state is not unique: solution has zero trace")
    rho = rho / trace

    result = unvec(rho.reshape(-1, order="F"), L.dims)
    res = residual(L, result)
    if res > residual_tol * scale:
        raise ConvergenceError(
            f"steady-state residual {res:.3e} exceeds tolerance "
            f"{residual_tol * scale:.3e}",
            residual=res,
        )
    return result


def residual(L: Liouvillian, rho: Operator) -> float:
    """Max-norm of L applied to rho; zero exactly at the steady state."""
    if tuple(rho.dims) != L.dims:
        raise DimensionError(f"dims mismatch: {rho.dims} vs {L.dims}")
    return float(np.max(np.abs(L.matrix @ vec(rho))))


def evolve(
    rho0: Operator,
    L: Liouvillian,
    t_final: float,
    dt: float,
    trace_drift_tol: float = 1e-8,
) -> Operator:
    """Integrate d(rho)/dt = L[rho] with fixed-step classical RK4.

    This is deliberately the dumbest reliable integrator: it shares no code
    with the algebraic steady-state path, which is what makes it useful as an
    oracle.  The initial state must be a density matrix (unit trace,
    Hermitian, positive semidefinite).
    """
    if tuple(rho0.dims) != L.dims:
        raise DimensionError(f"dims mismatch: {rho0.dims} vs {L.dims}")
    if abs(rho0.trace() - 1.0) > 1e-8:
        raise ValueError(f"initial state trace {rho0.trace()} is not 1")
    if not rho0.is_hermitian(1e-9):
        raise ValueError("initial state is not Hermitian")
    if float(np.linalg.eigvalsh(rho0.dense()).min()) < -1e-8:
        raise ValueError("initial state is not positive semidefinite")
    if t_final < 0 or dt <= 0:
        raise ValueError("t_final must be >= 0 and dt > 0")
    if t_final == 0:
        return rho0

    n_steps = max(1, int(round(t_final / dt)))
    h = t_final / n_steps
    m = L.matrix
    v = vec(rho0)
    trace_idx = np.arange(L.dim) * (L.dim + 1)
    for step in range(n_steps):
        k1 = m @ v
        k2 = m @ (v + 0.5 * h * k1)
        k3 = m @ (v + 0.5 * h * k2)
        k4 = m @ (v + h * k3)
        v = v + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        drift = abs(np.sum(v[trace_idx]) - 1.0)
        if not np.isfinite(drift) or drift > trace_drift_tol:
            raise StepSizeError(
                f"trace drift {drift:.3e} after step {step + 1} exceeds "
                f"{trace_drift_tol:.1e}; reduce dt"
            )
    return unvec(v, L.dims)


def trace_distance(rho: Operator, sigma: Operator) -> float:
    """Half the nuclear norm of rho - sigma."""
    if rho.dims != sigma.dims:
        raise DimensionError(f"dims mismatch: {rho.dims} vs {sigma.dims}")
    diff = (rho - sigma).dense()
    diff = 0.5 * (diff + diff.conj().T)
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(diff))))
