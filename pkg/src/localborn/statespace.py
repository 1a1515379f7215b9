"""Finite-dimensional state vectors, non-negative operators and their
dominant-eigensubspace reduction.

A state of the universe is modelled either as an amplitude vector or as a
Hermitian positive-semidefinite operator.  Strictly increasing maps
``g(Phi)`` (e.g. ``Phi**k``) leave the ordered list of eigensubspaces
unchanged, so that list is the equivalence-class representative
(:class:`EigenSignature`).  The ``k -> inf`` limit of ``Phi**k / tr(Phi**k)``
is the projector onto the top eigensubspace; it is computed here by a
Hermitian eigendecomposition rather than literal powers, which under/overflow.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from localborn.errors import DegenerateDominant, ZeroOperator

NORMALIZED_ATOL = 1e-12
HERMITIAN_ATOL = 1e-12
PSD_ATOL = 1e-10
ZERO_TRACE = 1e-12
ZERO_EIGENVALUE = 1e-12
DEFAULT_TIE_TOLERANCE = 1e-10
DEFAULT_CLUSTER_TOLERANCE = 1e-9


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=complex)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class StateVector:
    """Complex amplitude vector; normalization is checked, never assumed."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.ndim != 1 or amps.size < 1:
            raise ValueError("StateVector needs a non-empty 1-D amplitude list")
        object.__setattr__(self, "amplitudes", _frozen(amps))

    @classmethod
    def of(cls, *amplitudes: complex) -> "StateVector":
        return cls(np.array(amplitudes, dtype=complex))

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @property
    def norm_sq(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    @property
    def is_normalized(self) -> bool:
        return abs(self.norm_sq - 1.0) <= NORMALIZED_ATOL

    def normalized(self) -> "StateVector":
        n = self.norm_sq
        if n <= ZERO_TRACE:
            raise ZeroOperator("cannot normalize a zero vector")
        return StateVector(self.amplitudes / np.sqrt(n))

    def __getitem__(self, i):
        return self.amplitudes[i]

    def __len__(self):
        return self.dim

    def allclose(self, other: "StateVector", atol: float = 1e-12) -> bool:
        return self.dim == other.dim and np.allclose(
            self.amplitudes, other.amplitudes, rtol=0.0, atol=atol
        )

    def __repr__(self):
        return f"StateVector({np.array2string(self.amplitudes, precision=6)})"


@dataclass(frozen=True, eq=False)
class NonNegativeOperator:
    """Hermitian positive-semidefinite operator on a finite space.

    Construction validates both properties. Eigenvalues that are negative
    within ``PSD_ATOL`` are treated as numerical noise and clamped to zero.
    """

    entries: np.ndarray
    _eig: tuple = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise ValueError(f"operator must be square and non-empty, got {m.shape}")
        scale = max(1.0, float(np.max(np.abs(m))))
        if not np.allclose(m, m.conj().T, rtol=0.0, atol=HERMITIAN_ATOL * scale):
            raise ValueError("operator is not Hermitian")
        # symmetrize away rounding so eigh sees an exactly Hermitian matrix
        m = 0.5 * (m + m.conj().T)
        vals, vecs = np.linalg.eigh(m)
        if vals[0] < -PSD_ATOL * scale:
            raise ValueError(f"operator is not positive semidefinite (min eigenvalue {vals[0]:.3e})")
        vals = np.clip(vals, 0.0, None)
        if not np.isfinite(np.trace(m).real):
            raise ValueError("operator trace is not finite")
        object.__setattr__(self, "entries", _frozen(m))
        object.__setattr__(self, "_eig", (vals[::-1].copy(), vecs[:, ::-1].copy()))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.entries).real)

    def eigh(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigenvalues in decreasing order (clamped >= 0) and column eigenvectors."""
        vals, vecs = self._eig
        return vals.copy(), vecs.copy()

    @property
    def eigenvalues(self) -> np.ndarray:
        return self._eig[0].copy()

    def conjugate_by(self, unitary: np.ndarray) -> "NonNegativeOperator":
        u = np.asarray(unitary, dtype=complex)
        return NonNegativeOperator(u @ self.entries @ u.conj().T)

    def power(self, k: int) -> "NonNegativeOperator":
        return NonNegativeOperator(np.linalg.matrix_power(self.entries, k))

    def __add__(self, other: "NonNegativeOperator") -> "NonNegativeOperator":
        return NonNegativeOperator(self.entries + other.entries)

    def allclose(self, other, atol: float = 1e-10) -> bool:
        other = other.entries if isinstance(other, NonNegativeOperator) else np.asarray(other)
        return self.entries.shape == other.shape and np.allclose(
            self.entries, other, rtol=0.0, atol=atol
        )

    def __repr__(self):
        return f"NonNegativeOperator(dim={self.dim}, trace={self.trace:.6g})"


@dataclass(frozen=True, eq=False)
class EigenSignature:
    """Ordered eigensubspaces of a non-negative operator, nullspace omitted.

    Equality compares subspace dimensions and projectors; the eigenvalues
    are kept for diagnostics only since they change under ``g``.
    """

    subspaces: tuple[int, ...]
    eigenvalues: tuple[float, ...]
    projectors: tuple[np.ndarray, ...] = field(repr=False)

    def __eq__(self, other):
        if not isinstance(other, EigenSignature):
            return NotImplemented
        return self.equals(other)

    def equals(self, other: "EigenSignature", atol: float = 1e-8) -> bool:
        if self.subspaces != other.subspaces:
            return False
        return all(
            np.linalg.norm(p - q) <= atol for p, q in zip(self.projectors, other.projectors)
        )

    __hash__ = None


def embed_pure(v: StateVector) -> NonNegativeOperator:
    """Rank-one embedding ``|v><v|``; the trace equals the squared norm of ``v``."""
    a = v.amplitudes
    return NonNegativeOperator(np.outer(a, a.conj()))


def tensor(v1: StateVector, v2: StateVector) -> StateVector:
    """Kronecker product; the amplitude at ``i*dim2 + j`` is ``v1[i]*v2[j]``."""
    return StateVector(np.kron(v1.amplitudes, v2.amplitudes))


def dominant_eigenprojection(
    op: NonNegativeOperator, tie_tolerance: float = DEFAULT_TIE_TOLERANCE
) -> tuple[float, NonNegativeOperator]:
    """Largest eigenvalue and the projector onto its eigenvector.

    Raises :class:`ZeroOperator` for a (numerically) zero operator and
    :class:`DegenerateDominant` when the top two eigenvalues differ by no
    more than ``tie_tolerance`` times the largest.
    """
    if op.trace <= ZERO_TRACE:
        raise ZeroOperator(f"operator trace {op.trace:.3e} is zero")
    vals, vecs = op.eigh()
    top = vals[0]
    if op.dim > 1 and top - vals[1] <= tie_tolerance * top:
        raise DegenerateDominant(
            f"dominant eigenvalue {top:.15g} is tied with {vals[1]:.15g}"
        )
    v = vecs[:, 0]
    return float(top), NonNegativeOperator(np.outer(v, v.conj()))


def dominant_vector(
    op: NonNegativeOperator, tie_tolerance: float = DEFAULT_TIE_TOLERANCE
) -> tuple[float, StateVector]:
    """Like :func:`dominant_eigenprojection` but returns the unit eigenvector.

    The global phase is fixed so the first non-negligible amplitude is real
    and positive.
    """
    weight, _ = dominant_eigenprojection(op, tie_tolerance)
    _, vecs = op.eigh()
    return weight, fix_phase(StateVector(vecs[:, 0]))


def fix_phase(v: StateVector, atol: float = 1e-12) -> StateVector:
    amps = v.amplitudes
    nz = np.flatnonzero(np.abs(amps) > atol)
    if nz.size == 0:
        return v
    first = amps[nz[0]]
    return StateVector(amps * (abs(first) / first))


def eigen_signature(
    op: NonNegativeOperator, cluster_tolerance: float = DEFAULT_CLUSTER_TOLERANCE
) -> EigenSignature:
    vals, vecs = op.eigh()
    clusters: list[list[int]] = []
    for i, lam in enumerate(vals):
        if lam <= ZERO_EIGENVALUE:
            break
        if clusters and vals[clusters[-1][-1]] - lam <= cluster_tolerance * vals[clusters[-1][-1]]:
            clusters[-1].append(i)
        else:
            clusters.append([i])
    projectors = []
    for idx in clusters:
        block = vecs[:, idx]
        p = block @ block.conj().T
        p.setflags(write=False)
        projectors.append(p)
    return EigenSignature(
        subspaces=tuple(len(c) for c in clusters),
        eigenvalues=tuple(float(np.mean(vals[c])) for c in clusters),
        projectors=tuple(projectors),
    )


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a complex Ginibre matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def operator_from_spectrum(
    eigenvalues: Sequence[float], unitary: np.ndarray | None = None
) -> NonNegativeOperator:
    d = np.diag(np.asarray(eigenvalues, dtype=float)).astype(complex)
    if unitary is None:
        return NonNegativeOperator(d)
    return NonNegativeOperator(unitary @ d @ unitary.conj().T)


def as_state(amplitudes: Iterable[complex] | StateVector) -> StateVector:
    if isinstance(amplitudes, StateVector):
        return amplitudes
    return StateVector(np.asarray(list(amplitudes), dtype=complex))
