"""Truncated Fock-space and qubit operator algebra.

Everything downstream builds on two conventions fixed here once:

* subsystem ordering is cavity (x) qubit (x) mechanics, in that order, for
  every Kronecker embedding;
* the qubit basis has the excited state first, so ``sigma_z = diag(+1, -1)``
  and ``sigma_z + 1`` projects (twice) onto the excited state.

Operators are sparse, immutable after construction, and tagged with the
tuple of subsystem dimensions they act on, so mismatched arithmetic fails
loudly instead of broadcasting.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np
import scipy.sparse as sp

__all__ = [
    "DimensionError",
    "SubsystemDims",
    "Operator",
    "annihilation",
    "pauli",
    "identity",
    "embed",
    "embed_reduced",
    "commutator",
    "expectation",
    "partial_trace",
]

# Entries below this magnitude are structural zeros left over from Kronecker
# assembly and are dropped so superoperator construction stays sparse.
PRUNE_TOL = 1e-14

CAVITY = "cavity"
QUBIT = "qubit"
MECH = "mech"


class DimensionError(ValueError):
    """Operator shapes or subsystem dimensions are inconsistent."""


@dataclass(frozen=True)
class SubsystemDims:
    """Fock truncations of the two bosonic modes plus the two-level qubit.

    Parameters
    ----------
    n_cavity : int
        Fock truncation of the cavity mode (at least 2).
    n_mech : int
        Fock truncation of the mechanical mode (at least 2).
    n_qubit : int
        Qubit dimension, always 2.
    """

    n_cavity: int
    n_mech: int
    n_qubit: int = 2

    def __post_init__(self) -> None:
        if self.n_cavity < 2:
            raise DimensionError(f"n_cavity must be >= 2, got {self.n_cavity}")
        if self.n_mech < 2:
            raise DimensionError(f"n_mech must be >= 2, got {self.n_mech}")
        if self.n_qubit != 2:
            raise DimensionError(f"n_qubit must be 2, got {self.n_qubit}")

    @property
    def full(self) -> tuple[int, int, int]:
        """Dimension tuple of the tripartite space, (cavity, qubit, mech)."""
        return (self.n_cavity, self.n_qubit, self.n_mech)

    @property
    def reduced(self) -> tuple[int, int]:
        """Dimension tuple of the cavity (x) mechanics space."""
        return (self.n_cavity, self.n_mech)

    @property
    def dim(self) -> int:
        """Total tripartite Hilbert-space dimension D."""
        return self.n_cavity * self.n_qubit * self.n_mech

    @property
    def reduced_dim(self) -> int:
        """Dimension of the cavity (x) mechanics space."""
        return self.n_cavity * self.n_mech


def _prune(matrix: sp.csr_matrix) -> sp.csr_matrix:
    matrix.data[np.abs(matrix.data) < PRUNE_TOL] = 0.0
    matrix.eliminate_zeros()
    matrix.sort_indices()
    return matrix


class Operator:
    """A sparse complex matrix tagged with the subsystem dimensions it acts on.

    Arithmetic (``+``, ``-``, scalar ``*``, operator ``@``) requires identical
    ``dims`` on both operands; ``dag()`` is the conjugate transpose.  Instances
    are immutable after construction and safe to share across threads.
    """

    __slots__ = ("dims", "matrix")

    def __init__(self, matrix, dims: Sequence[int]):
        dims = tuple(int(d) for d in dims)
        full_dim = int(np.prod(dims))
        mat = sp.csr_matrix(matrix, dtype=np.complex128)
        if mat.shape != (full_dim, full_dim):
            raise DimensionError(
                f"matrix shape {mat.shape} does not match dims {dims} "
                f"(expected {full_dim}x{full_dim})"
            )
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "matrix", _prune(mat))

    def __setattr__(self, name, value):
        raise AttributeError("Operator is immutable")

    # -- arithmetic ---------------------------------------------------------

    def _check_dims(self, other: "Operator") -> None:
        if self.dims != other.dims:
            raise DimensionError(f"dims mismatch: {self.dims} vs {other.dims}")

    def __add__(self, other: "Operator") -> "Operator":
        if not isinstance(other, Operator):
            return NotImplemented
        self._check_dims(other)
        return Operator(self.matrix + other.matrix, self.dims)

    def __sub__(self, other: "Operator") -> "Operator":
        if not isinstance(other, Operator):
            return NotImplemented
        self._check_dims(other)
        return Operator(self.matrix - other.matrix, self.dims)

    def __neg__(self) -> "Operator":
        return Operator(-self.matrix, self.dims)

    def __mul__(self, scalar) -> "Operator":
        if isinstance(scalar, Operator):
            raise TypeError("use @ for operator products, * is scalar-only")
        return Operator(self.matrix * complex(scalar), self.dims)

    __rmul__ = __mul__

    def __truediv__(self, scalar) -> "Operator":
        return self * (1.0 / complex(scalar))

    def __matmul__(self, other: "Operator") -> "Operator":
        if not isinstance(other, Operator):
            return NotImplemented
        self._check_dims(other)
        return Operator(self.matrix @ other.matrix, self.dims)

    # -- structure ----------------------------------------------------------

    def dag(self) -> "Operator":
        """Conjugate transpose."""
        return Operator(self.matrix.conj().T, self.dims)

    def trace(self) -> complex:
        return complex(self.matrix.diagonal().sum())

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def is_hermitian(self, tol: float = 1e-10) -> bool:
        delta = (self.matrix - self.matrix.conj().T).tocsr()
        return delta.nnz == 0 or float(np.max(np.abs(delta.data))) <= tol

    def __repr__(self) -> str:
        return (
            f"Operator(dims={self.dims}, shape={self.matrix.shape}, "
            f"nnz={self.matrix.nnz})"
        )


def annihilation(n: int) -> sp.csr_matrix:
    """Bosonic annihilation operator on an n-level Fock truncation.

    Entries are ``M[k-1, k] = sqrt(k)`` for ``k = 1 .. n-1``.
    """
    if n < 2:
        raise DimensionError(f"Fock truncation must be >= 2, got {n}")
    return sp.diags(np.sqrt(np.arange(1, n)), 1, format="csr", dtype=np.complex128)


_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
    "plus": np.array([[0, 1], [0, 0]], dtype=np.complex128),
    "minus": np.array([[0, 0], [1, 0]], dtype=np.complex128),
}


def pauli(which: str) -> sp.csr_matrix:
    """Pauli matrix in the basis with the excited state first.

    ``which`` is one of ``x``, ``y``, ``z``, ``plus``, ``minus``, with
    ``sigma_plus = (sigma_x + i sigma_y)/2 = |e><g|``.
    """
    try:
        return sp.csr_matrix(_PAULI[which])
    except KeyError:
        raise ValueError(f"unknown Pauli label {which!r}") from None


def identity(n: int) -> sp.csr_matrix:
    return sp.identity(n, format="csr", dtype=np.complex128)


_SLOT_INDEX = {CAVITY: 0, QUBIT: 1, MECH: 2}
_REDUCED_SLOT_INDEX = {CAVITY: 0, MECH: 1}


def _embed_at(local, index: int, dims: tuple[int, ...]) -> Operator:
    local = sp.csr_matrix(local, dtype=np.complex128)
    if local.shape != (dims[index], dims[index]):
        raise DimensionError(
            f"local operator shape {local.shape} does not fit slot of "
            f"dimension {dims[index]}"
        )
    result = local if index == 0 else identity(int(np.prod(dims[:index])))
    if index != 0:
        result = sp.kron(result, local, format="csr")
    if index < len(dims) - 1:
        result = sp.kron(result, identity(int(np.prod(dims[index + 1:]))), format="csr")
    return Operator(result, dims)


def embed(local, slot: str, dims: SubsystemDims) -> Operator:
    """Embed a single-subsystem matrix into the full tripartite space.

    The result is ``I (x) ... (x) local (x) ... (x) I`` with the fixed
    ordering cavity (x) qubit (x) mechanics.
    """
    if slot not in _SLOT_INDEX:
        raise ValueError(f"slot must be one of {sorted(_SLOT_INDEX)}, got {slot!r}")
    return _embed_at(local, _SLOT_INDEX[slot], dims.full)


def embed_reduced(local, slot: str, dims: SubsystemDims) -> Operator:
    """Embed into the cavity (x) mechanics space (no qubit slot)."""
    if slot not in _REDUCED_SLOT_INDEX:
        raise ValueError(f"slot must be 'cavity' or 'mech', got {slot!r}")
    return _embed_at(local, _REDUCED_SLOT_INDEX[slot], dims.reduced)


def commutator(a: Operator, b: Operator) -> Operator:
    """AB - BA."""
    return a @ b - b @ a


def expectation(op: Operator, rho: Operator) -> complex:
    """Tr(op . rho) for a unit-trace density matrix rho."""
    if op.dims != rho.dims:
        raise DimensionError(f"dims mismatch: {op.dims} vs {rho.dims}")
    tr = rho.trace()
    if abs(tr - 1.0) > 1e-6:
        raise ValueError(f"rho trace {tr} is not 1 within tolerance")
    # Tr(A B) = sum_ij A_ij B_ji without forming the product matrix.
    return complex((op.matrix.multiply(rho.matrix.T)).sum())


def partial_trace(rho: Operator, keep: Iterable[Union[int, str]]) -> Operator:
    """Trace out all subsystems not listed in ``keep``.

    ``keep`` holds slot indices into ``rho.dims`` (or the names 'cavity',
    'qubit', 'mech' for tripartite operators).  The kept slots retain their
    original relative order and the total trace is preserved.
    """
    names = {CAVITY: 0, QUBIT: 1, MECH: 2}
    keep_idx = sorted(
        {names[k] if isinstance(k, str) else int(k) for k in keep}
    )
    n = len(rho.dims)
    if not keep_idx:
        raise ValueError("keep must name at least one subsystem")
    if any(k < 0 or k >= n for k in keep_idx):
        raise DimensionError(f"keep indices {keep_idx} out of range for dims {rho.dims}")

    dense = rho.dense().reshape(rho.dims + rho.dims)
    # Trace out the dropped slots from the outside in; axis indices shift as
    # axes disappear, so re-derive them each round.
    dropped = [i for i in range(n) if i not in keep_idx]
    remaining = list(range(n))
    for slot in dropped:
        pos = remaining.index(slot)
        dense = np.trace(dense, axis1=pos, axis2=pos + len(remaining))
        remaining.remove(slot)
    kept_dims = tuple(rho.dims[i] for i in keep_idx)
    d = int(np.prod(kept_dims))
    return Operator(dense.reshape(d, d), kept_dims)
