"""Lindblad superoperator assembly.

Vectorization convention, fixed once for the whole package: density matrices
are column-stacked, ``vec(X)[i + D*j] = X[i, j]``, so that
``vec(A X B) = (B^T kron A) vec(X)``.  Getting this wrong is the classic
superoperator bug, so the identity is exercised directly in the tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
import scipy.sparse as sp

from .hilbert import (
    DimensionError,
    Operator,
    SubsystemDims,
    annihilation,
    embed,
    embed_reduced,
    pauli,
)

__all__ = [
    "CollapseChannel",
    "Liouvillian",
    "vec",
    "unvec",
    "vec_identity",
    "hamiltonian_superop",
    "dissipator_superop",
    "build_liouvillian",
    "tripartite_channels",
    "optomech_channels",
]


def vec(rho: Union[Operator, np.ndarray]) -> np.ndarray:
    """Column-stack a matrix into a length-D^2 vector."""
    mat = rho.dense() if isinstance(rho, Operator) else np.asarray(rho)
    return mat.reshape(-1, order="F")


def unvec(v: np.ndarray, dims: Sequence[int]) -> Operator:
    """Inverse of :func:`vec`, tagging the result with subsystem dims."""
    d = int(np.prod(tuple(dims)))
    if v.shape != (d * d,):
        raise DimensionError(f"vector length {v.shape} does not match dims {tuple(dims)}")
    return Operator(sp.csr_matrix(v.reshape((d, d), order="F")), dims)


def vec_identity(d: int) -> np.ndarray:
    """vec(I): the trace functional as a row vector under column stacking."""
    v = np.zeros(d * d, dtype=np.complex128)
    v[np.arange(d) * (d + 1)] = 1.0
    return v


@dataclass(frozen=True)
class CollapseChannel:
    """A Lindblad jump operator together with its nonnegative rate."""

    rate: float
    operator: Operator

    def __post_init__(self) -> None:
        if self.rate < 0:
            raise ValueError(f"collapse rate must be nonnegative, got {self.rate}")


@dataclass(frozen=True)
class Liouvillian:
    """Sparse superoperator acting on column-stacked density matrices."""

    dims: tuple[int, ...]
    matrix: sp.csr_matrix

    @property
    def dim(self) -> int:
        """Hilbert-space dimension D (matrix is D^2 x D^2)."""
        return int(np.prod(self.dims))

    def trace_defect(self) -> float:
        """Max-norm of vec(I)^T L; zero for a trace-preserving generator."""
        row = vec_identity(self.dim) @ self.matrix
        return float(np.max(np.abs(row))) if row.size else 0.0

    def apply(self, rho: Operator) -> Operator:
        """L[rho] as an Operator (mostly for tests and the RK4 oracle)."""
        if tuple(rho.dims) != self.dims:
            raise DimensionError(f"dims mismatch: {rho.dims} vs {self.dims}")
        return unvec(self.matrix @ vec(rho), self.dims)


def hamiltonian_superop(h: Operator, herm_tol: float = 1e-10) -> sp.csr_matrix:
    """Coherent part -i (I kron H - H^T kron I) of the generator."""
    if not h.is_hermitian(herm_tol):
        raise ValueError("Hamiltonian is not Hermitian within tolerance")
    d = h.dim
    eye = sp.identity(d, format="csr", dtype=np.complex128)
    m = h.matrix
    return (-1j * (sp.kron(eye, m) - sp.kron(m.T, eye))).tocsr()


def dissipator_superop(channel: CollapseChannel) -> sp.csr_matrix:
    """Lindblad dissipator rate * [conj(c) kron c - (I kron c+c + (c+c)^T kron I)/2]."""
    c = channel.operator.matrix
    d = channel.operator.dim
    if channel.rate == 0.0:
        return sp.csr_matrix((d * d, d * d), dtype=np.complex128)
    eye = sp.identity(d, format="csr", dtype=np.complex128)
    cdc = (c.conj().T @ c).tocsr()
    sandwich = sp.kron(c.conj(), c)
    anticomm = 0.5 * (sp.kron(eye, cdc) + sp.kron(cdc.T, eye))
    return (channel.rate * (sandwich - anticomm)).tocsr()


def build_liouvillian(h: Operator, channels: Sequence[CollapseChannel]) -> Liouvillian:
    """Assemble -i[H, .] plus all dissipators into one sparse superoperator.

    Zero-rate channels are skipped entirely, so they leave the result
    bit-identical to their omission.
    """
    for ch in channels:
        if ch.operator.dims != h.dims:
            raise DimensionError(
                f"channel dims {ch.operator.dims} do not match Hamiltonian dims {h.dims}"
            )
    total = hamiltonian_superop(h)
    for ch in channels:
        if ch.rate == 0.0:
            continue
        total = total + dissipator_superop(ch)
    return Liouvillian(dims=tuple(h.dims), matrix=total.tocsr())


def tripartite_channels(p, dims: SubsystemDims) -> list[CollapseChannel]:
    """The four decay channels of the full model.

    Cavity decay, qubit relaxation, and thermal mechanical damping (down and
    up).  Thermal excitation of the qubit and cavity is omitted: at the
    frequencies of interest their thermal occupations are negligible.
    """
    a = embed(annihilation(dims.n_cavity), "cavity", dims)
    b = embed(annihilation(dims.n_mech), "mech", dims)
    s_minus = embed(pauli("minus"), "qubit", dims)
    return [
        CollapseChannel(p.kappa, a),
        CollapseChannel(p.gamma_a, s_minus),
        CollapseChannel(p.gamma_m * (p.n_th + 1.0), b),
        CollapseChannel(p.gamma_m * p.n_th, b.dag()),
    ]


def optomech_channels(p, dims: SubsystemDims) -> list[CollapseChannel]:
    """The three decay channels of the effective model (no qubit channel)."""
    a = embed_reduced(annihilation(dims.n_cavity), "cavity", dims)
    b = embed_reduced(annihilation(dims.n_mech), "mech", dims)
    return [
        CollapseChannel(p.kappa, a),
        CollapseChannel(p.gamma_m * (p.n_th + 1.0), b),
        CollapseChannel(p.gamma_m * p.n_th, b.dag()),
    ]
