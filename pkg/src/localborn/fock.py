"""Truncated occupation-number Fock space and the stripping map.

Single-particle modes are split into accessible and inaccessible sets.  A
basis state is an occupation tuple ``occ`` with one count per mode (in mode
index order); it splits into the accessible list ``n_a`` and inaccessible
list ``n_i``, each ordered by ascending mode index.

Stripping groups the amplitudes of a state by ``n_i``, keeps the accessible
part of each group as a vector ``sum_{n_a} |n_a; 0> <n_a; n_i | Psi>`` and
adds the groups incoherently as rank-one operators.  Groups with different
``n_i`` never interfere.  Modes are treated as distinguishable slots with
bosonic counts; there is no fermionic sign bookkeeping.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

import numpy as np

from localborn.errors import ZeroOperator
from localborn.statespace import (
    DEFAULT_TIE_TOLERANCE,
    NonNegativeOperator,
    StateVector,
    dominant_vector,
)

PRUNE_ATOL = 1e-15
DEFAULT_MAX_TOTAL = 3

Occupation = tuple[int, ...]


@dataclass(frozen=True)
class AccessibilityPartition:
    single_particle_dim: int
    accessible: frozenset[int]
    inaccessible: frozenset[int]

    def __post_init__(self):
        if self.single_particle_dim < 1:
            raise ValueError("single_particle_dim must be positive")
        acc, inacc = frozenset(self.accessible), frozenset(self.inaccessible)
        object.__setattr__(self, "accessible", acc)
        object.__setattr__(self, "inaccessible", inacc)
        if acc & inacc:
            raise ValueError(f"modes {sorted(acc & inacc)} are both accessible and inaccessible")
        if acc | inacc != set(range(self.single_particle_dim)):
            raise ValueError("accessible and inaccessible modes must cover every mode exactly once")

    @classmethod
    def from_accessible(cls, single_particle_dim: int, accessible) -> "AccessibilityPartition":
        acc = frozenset(accessible)
        return cls(single_particle_dim, acc, frozenset(range(single_particle_dim)) - acc)

    @property
    def accessible_modes(self) -> tuple[int, ...]:
        return tuple(sorted(self.accessible))

    @property
    def inaccessible_modes(self) -> tuple[int, ...]:
        return tuple(sorted(self.inaccessible))

    @property
    def mode_order(self) -> tuple[int, ...]:
        """Accessible modes ascending, then inaccessible ascending."""
        return self.accessible_modes + self.inaccessible_modes


def horizon_radius(r_l: float, c: float, T: float) -> float:
    return r_l + c * T


def partition_from_radius(
    grid_radii: Sequence[float], r_l: float, c: float, T: float
) -> AccessibilityPartition:
    """Mode ``i`` is accessible iff ``grid_radii[i] <= r_l + c*T``."""
    if min(r_l, c, T) < 0:
        raise ValueError("r_l, c and T must be non-negative")
    r_h = horizon_radius(r_l, c, T)
    acc = {i for i, r in enumerate(grid_radii) if r <= r_h}
    return AccessibilityPartition.from_accessible(len(grid_radii), acc)


def occupations(n_modes: int, max_total: int) -> Iterator[Occupation]:
    """All occupation tuples over ``n_modes`` with total <= ``max_total``.

    Ordered by total particle number, then reverse-lexicographically, so the
    vacuum comes first and ``(1, 0, ...)`` precedes ``(0, 1, ...)``.
    """

    def compositions(total, modes):
        if modes == 0:
            if total == 0:
                yield ()
            return
        for first in range(total, -1, -1):
            for rest in compositions(total - first, modes - 1):
                yield (first,) + rest

    for total in range(max_total + 1):
        yield from compositions(total, n_modes)


@dataclass(frozen=True)
class FockSpace:
    partition: AccessibilityPartition
    max_total: int = DEFAULT_MAX_TOTAL

    def __post_init__(self):
        if self.max_total < 0:
            raise ValueError("max_total must be non-negative")

    @classmethod
    def build(cls, single_particle_dim: int, accessible, max_total: int = DEFAULT_MAX_TOTAL):
        return cls(AccessibilityPartition.from_accessible(single_particle_dim, accessible), max_total)

    @property
    def single_particle_dim(self) -> int:
        return self.partition.single_particle_dim

    def validate(self, occ: Occupation) -> Occupation:
        occ = tuple(int(n) for n in occ)
        if len(occ) != self.single_particle_dim:
            raise ValueError(f"occupation {occ} has {len(occ)} entries, expected {self.single_particle_dim}")
        if any(n < 0 for n in occ):
            raise ValueError(f"negative occupation in {occ}")
        if sum(occ) > self.max_total:
            raise ValueError(f"occupation {occ} exceeds max_total={self.max_total}")
        return occ

    def split(self, occ: Occupation) -> tuple[Occupation, Occupation]:
        """Return ``(n_a, n_i)`` for a full occupation tuple."""
        return (
            tuple(occ[m] for m in self.partition.accessible_modes),
            tuple(occ[m] for m in self.partition.inaccessible_modes),
        )

    def join(self, n_a: Occupation, n_i: Occupation) -> Occupation:
        occ = [0] * self.single_particle_dim
        for m, n in zip(self.partition.accessible_modes, n_a):
            occ[m] = n
        for m, n in zip(self.partition.inaccessible_modes, n_i):
            occ[m] = n
        return tuple(occ)

    def accessible_basis(self) -> tuple[Occupation, ...]:
        return tuple(occupations(len(self.partition.accessible), self.max_total))

    def inaccessible_basis(self) -> tuple[Occupation, ...]:
        return tuple(occupations(len(self.partition.inaccessible), self.max_total))

    def basis(self) -> tuple[Occupation, ...]:
        return tuple(occupations(self.single_particle_dim, self.max_total))

    def vacuum(self) -> Occupation:
        return (0,) * self.single_particle_dim


@dataclass(frozen=True, eq=False)
class FockStateVector:
    """Sparse amplitudes over occupation-number basis states."""

    space: FockSpace
    terms: Mapping[Occupation, complex] = field(default_factory=dict)

    def __post_init__(self):
        clean: dict[Occupation, complex] = {}
        for occ, amp in self.terms.items():
            occ = self.space.validate(occ)
            clean[occ] = clean.get(occ, 0j) + complex(amp)
        clean = {k: v for k, v in clean.items() if abs(v) > PRUNE_ATOL}
        object.__setattr__(self, "terms", clean)

    @property
    def norm_sq(self) -> float:
        return float(sum(abs(a) ** 2 for a in self.terms.values()))

    def __add__(self, other: "FockStateVector") -> "FockStateVector":
        if other.space != self.space:
            raise ValueError("cannot add states from different Fock spaces")
        merged = dict(self.terms)
        for occ, amp in other.terms.items():
            merged[occ] = merged.get(occ, 0j) + amp
        return FockStateVector(self.space, merged)

    def scaled(self, factor: complex) -> "FockStateVector":
        return FockStateVector(self.space, {k: factor * v for k, v in self.terms.items()})

    def to_dense(self, basis: Sequence[Occupation] | None = None) -> np.ndarray:
        basis = self.space.basis() if basis is None else basis
        index = {occ: i for i, occ in enumerate(basis)}
        out = np.zeros(len(basis), dtype=complex)
        for occ, amp in self.terms.items():
            out[index[occ]] = amp
        return out

    def __repr__(self):
        return f"FockStateVector({len(self.terms)} terms, norm_sq={self.norm_sq:.6g})"


@dataclass(frozen=True, eq=False)
class StrippedState:
    """Result of stripping: a non-negative operator on accessible occupations.

    ``basis[i]`` is the accessible occupation list labelling row/column ``i``.
    """

    operator: NonNegativeOperator
    basis: tuple[Occupation, ...]

    @property
    def trace(self) -> float:
        return self.operator.trace

    def weight(self, n_a: Occupation) -> float:
        """Diagonal entry for accessible occupation ``n_a``."""
        i = self.basis.index(tuple(n_a))
        return float(self.operator.entries[i, i].real)

    def embed(self, basis: Sequence[Occupation]) -> np.ndarray:
        """Dense matrix of this operator expressed in a larger ``basis``."""
        index = {occ: i for i, occ in enumerate(basis)}
        pos = [index[occ] for occ in self.basis]
        out = np.zeros((len(basis), len(basis)), dtype=complex)
        out[np.ix_(pos, pos)] = self.operator.entries
        return out


def inaccessible_groups(psi: FockStateVector) -> dict[Occupation, dict[Occupation, complex]]:
    """Map each inaccessible occupation list ``n_i`` to its ``{n_a: amplitude}``."""
    groups: dict[Occupation, dict[Occupation, complex]] = {}
    for occ, amp in psi.terms.items():
        n_a, n_i = psi.space.split(occ)
        groups.setdefault(n_i, {})[n_a] = amp
    return groups


def strip(psi: FockStateVector, basis: Sequence[Occupation] | None = None) -> StrippedState:
    """Strip the inaccessible sector from ``psi``.

    ``basis`` defaults to every accessible occupation list allowed by
    ``max_total``; passing a smaller basis (which must contain the accessible
    support of ``psi``) keeps large spaces cheap.
    """
    basis = tuple(psi.space.accessible_basis() if basis is None else (tuple(b) for b in basis))
    index = {occ: i for i, occ in enumerate(basis)}
    rho = np.zeros((len(basis), len(basis)), dtype=complex)
    for group in inaccessible_groups(psi).values():
        v = np.zeros(len(basis), dtype=complex)
        for n_a, amp in group.items():
            v[index[n_a]] = amp
        rho += np.outer(v, v.conj())
    return StrippedState(NonNegativeOperator(rho), basis)


def strip_normalized(
    psi: FockStateVector,
    tie_tolerance: float = DEFAULT_TIE_TOLERANCE,
    basis: Sequence[Occupation] | None = None,
) -> StateVector:
    """Unit vector spanning the dominant eigensubspace of ``strip(psi)``.

    Amplitudes refer to ``psi.space.accessible_basis()`` (or ``basis``).
    Raises :class:`DegenerateDominant` if that subspace is not 1-dimensional.
    """
    if psi.norm_sq <= 1e-24:
        raise ZeroOperator("cannot reduce a zero Fock state")
    _, vec = dominant_vector(strip(psi, basis).operator, tie_tolerance)
    return vec


def accessible_unitary_action(
    psi: FockStateVector, unitary: np.ndarray, basis: Sequence[Occupation] | None = None
) -> FockStateVector:
    """Apply ``unitary`` (given in ``basis`` of accessible occupations) to the
    accessible factor of every term, leaving ``n_i`` untouched."""
    space = psi.space
    basis = tuple(space.accessible_basis() if basis is None else basis)
    index = {occ: i for i, occ in enumerate(basis)}
    out: dict[Occupation, complex] = {}
    for n_i, group in inaccessible_groups(psi).items():
        v = np.zeros(len(basis), dtype=complex)
        for n_a, amp in group.items():
            v[index[n_a]] = amp
        w = unitary @ v
        for j in np.flatnonzero(np.abs(w) > PRUNE_ATOL):
            n_a = basis[j]
            if sum(n_a) + sum(n_i) > space.max_total:
                raise ValueError("unitary moves amplitude outside the truncated space")
            out[space.join(n_a, n_i)] = w[j]
    return FockStateVector(space, out)
