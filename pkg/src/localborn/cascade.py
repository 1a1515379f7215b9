"""Projective measurement on arbitrary finite spaces via Born-scattering cascades.

A stage ``n`` splits ``psi`` into ``P_n psi (x) |0>`` and ``(1 - P_n) psi (x) |1>``
on a fresh qubit and then Born-scatters that qubit, so the branch norms play
the roles of ``|a|^2`` and ``|b|^2``.  For a complete commuting set, one pass
over the projectors in index order resolves every joint eigenspace to rank
one; further passes only multiply by idempotent factors, so the single pass
stands in for the large-``N`` limit.

Records list one bit per stage in application order (most recent last);
bit 0 selects ``P_n``, bit 1 its complement.  The special basis is indexed
by the integer whose binary digits are that record in canonical order.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from localborn.errors import IncompleteSet, NotCommuting, NotIdempotent, TieOutcome, ZeroOperator
from localborn.scattering import DEFAULT_OUTCOME_TIE, PhotonState, make_rng, sample_photons
from localborn.statistics import chi_square_gof
from localborn.statespace import StateVector, as_state, fix_phase

IDEMPOTENT_ATOL = 1e-10
COMMUTATOR_ATOL = 1e-10
WITNESS_ATOL = 1e-9
_PROJ_CLUSTER = 1e-6
# Generic coefficients for the joint diagonalization; irrational ratios keep
# distinct 0/1 patterns from colliding.
_MIX = np.sqrt(np.array([2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53], dtype=float))


def _as_matrix(p) -> np.ndarray:
    m = np.asarray(getattr(p, "entries", p), dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"projector must be a square matrix, got shape {m.shape}")
    m = m.copy()
    m.setflags(write=False)
    return m


@dataclass(frozen=True, eq=False)
class ProjectorSet:
    """Commuting orthogonal projectors on a ``dim``-dimensional space."""

    projectors: tuple[np.ndarray, ...]
    special_basis: tuple[StateVector, ...] | None = None

    def __post_init__(self):
        ps = tuple(_as_matrix(p) for p in self.projectors)
        if not ps:
            raise ValueError("a projector set needs at least one projector")
        dim = ps[0].shape[0]
        for n, p in enumerate(ps):
            if p.shape != (dim, dim):
                raise ValueError(f"projector {n} has shape {p.shape}, expected {(dim, dim)}")
            if np.linalg.norm(p - p.conj().T) > IDEMPOTENT_ATOL:
                raise NotIdempotent(f"projector {n} is not Hermitian")
            if np.linalg.norm(p @ p - p) > IDEMPOTENT_ATOL:
                raise NotIdempotent(f"projector {n} is not idempotent: |P^2 - P| = {np.linalg.norm(p @ p - p):.3e}")
        for m, n in itertools.combinations(range(len(ps)), 2):
            c = np.linalg.norm(ps[m] @ ps[n] - ps[n] @ ps[m])
            if c > COMMUTATOR_ATOL:
                raise NotCommuting(f"projectors {m} and {n} do not commute: |[P_m, P_n]| = {c:.3e}")
        object.__setattr__(self, "projectors", ps)
        if self.special_basis is not None:
            object.__setattr__(self, "special_basis", tuple(as_state(v) for v in self.special_basis))

    @property
    def dim(self) -> int:
        return self.projectors[0].shape[0]

    def __len__(self):
        return len(self.projectors)

    def complement(self, n: int) -> np.ndarray:
        return np.eye(self.dim) - self.projectors[n]

    def factor(self, n: int, bit: int) -> np.ndarray:
        return self.projectors[n] if bit == 0 else self.complement(n)

    def product(self, record: Sequence[int], order: Sequence[int] | None = None) -> np.ndarray:
        """``P_[j]``: product of ``P_n`` / ``1 - P_n`` picked by ``record``."""
        order = range(len(self)) if order is None else order
        out = np.eye(self.dim, dtype=complex)
        for n, bit in zip(order, record):
            out = self.factor(n, bit) @ out
        return out

    def subset(self, keep: Sequence[int]) -> "ProjectorSet":
        return ProjectorSet(tuple(self.projectors[i] for i in keep))

    def reordered(self, order: Sequence[int]) -> "ProjectorSet":
        return ProjectorSet(tuple(self.projectors[i] for i in order))

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "projectors": [{"re": p.real.tolist(), "im": p.imag.tolist()} for p in self.projectors],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ProjectorSet":
        dim = int(data["dim"])
        mats = []
        for entry in data["projectors"]:
            re = np.asarray(entry["re"], dtype=float)
            im = np.asarray(entry.get("im", np.zeros_like(re)), dtype=float)
            if re.shape != (dim, dim) or im.shape != (dim, dim):
                raise ValueError(f"projector matrices must be {dim}x{dim}")
            mats.append(re + 1j * im)
        return cls(tuple(mats))


@dataclass(frozen=True)
class CompletenessReport:
    complete: bool
    independent: bool
    special_basis: tuple[StateVector, ...] | None
    witness: tuple[tuple[frozenset[int], frozenset[int]], ...]
    eigenspace_ranks: tuple[int, ...] = field(default=())

    def pattern(self, k: int) -> tuple[int, ...]:
        """Record (bits per projector, index order) that selects basis vector ``k``."""
        i1, _ = self.witness[k]
        n = len(self.witness[k][0]) + len(self.witness[k][1])
        return tuple(0 if m in i1 else 1 for m in range(n))


def _joint_eigenspaces(pset: ProjectorSet) -> list[tuple[tuple[int, ...], np.ndarray]]:
    """Joint eigenspaces as ``(pattern, orthonormal columns)``, pattern sorted.

    Diagonalizes a generic real combination of the projectors, clusters its
    eigenvalues and reads each cluster's 0/1 pattern off the projectors.
    """
    coeffs = _MIX[: len(pset)] if len(pset) <= len(_MIX) else np.sqrt(np.arange(2, len(pset) + 2) * np.pi)
    mix = sum(c * p for c, p in zip(coeffs, pset.projectors))
    vals, vecs = np.linalg.eigh(0.5 * (mix + mix.conj().T))
    groups: list[list[int]] = []
    for i in range(len(vals)):
        if groups and abs(vals[i] - vals[groups[-1][-1]]) <= _PROJ_CLUSTER:
            groups[-1].append(i)
        else:
            groups.append([i])
    spaces: dict[tuple[int, ...], list[np.ndarray]] = {}
    for g in groups:
        block = vecs[:, g]
        v = block[:, 0]
        pattern = tuple(0 if np.vdot(v, p @ v).real > 0.5 else 1 for p in pset.projectors)
        spaces.setdefault(pattern, []).append(block)
    return sorted((pat, np.hstack(blocks)) for pat, blocks in spaces.items())


def validate(pset: ProjectorSet) -> CompletenessReport:
    """Completeness/independence certificate with the special basis.

    Complete iff every joint eigenspace is one-dimensional.  Independent iff
    dropping any single projector merges joint eigenspaces.
    """
    spaces = _joint_eigenspaces(pset)
    ranks = tuple(b.shape[1] for _, b in spaces)
    complete = all(r == 1 for r in ranks)
    n_spaces = len(spaces)
    if len(pset) == 1:
        # without the projector only the whole space remains
        independent = n_spaces > 1
    else:
        independent = all(
            len(_joint_eigenspaces(pset.subset([m for m in range(len(pset)) if m != n]))) < n_spaces
            for n in range(len(pset))
        )
    witness = tuple(
        (
            frozenset(n for n, b in enumerate(pat) if b == 0),
            frozenset(n for n, b in enumerate(pat) if b == 1),
        )
        for pat, _ in spaces
    )
    basis = None
    if complete:
        basis = tuple(fix_phase(StateVector(b[:, 0])) for _, b in spaces)
        if pset.special_basis is not None:
            given = pset.special_basis
            if len(given) != len(basis) or not all(
                abs(abs(np.vdot(g.normalized().amplitudes, b.amplitudes)) - 1) < WITNESS_ATOL
                for g, b in zip(given, basis)
            ):
                raise ValueError("supplied special_basis does not match the joint eigenbasis")
    return CompletenessReport(complete, independent, basis, witness, ranks)


# -- splitting and cascades ------------------------------------------------------


def split(pset: ProjectorSet, n: int, psi) -> tuple[tuple[StateVector, int], tuple[StateVector, int]]:
    """The two branches ``(P_n psi, 0)`` and ``((1 - P_n) psi, 1)``."""
    psi = as_state(psi)
    if psi.norm_sq <= 0:
        raise ZeroOperator("cannot split a zero vector")
    p = pset.projectors[n]
    kept = p @ psi.amplitudes
    return (StateVector(kept), 0), (StateVector(psi.amplitudes - kept), 1)


@dataclass(frozen=True)
class CascadeStep:
    branch_state: StateVector
    bit: int
    stage_probability: float


def cascade_step(
    pset: ProjectorSet,
    n: int,
    psi,
    photon: PhotonState,
    tie_tolerance: float = DEFAULT_OUTCOME_TIE,
) -> CascadeStep:
    """Split on ``P_n`` and Born-scatter the fresh qubit.

    Bit 0 iff ``|alpha|^2 |P_n psi|^2 > |beta|^2 |(1-P_n) psi|^2``.
    """
    psi = as_state(psi)
    (s0, _), (s1, _) = split(pset, n, psi)
    n0, n1 = s0.norm_sq, s1.norm_sq
    w0, w1 = abs(photon.alpha) ** 2 * n0, abs(photon.beta) ** 2 * n1
    if abs(w0 - w1) <= tie_tolerance * max(w0, w1):
        raise TieOutcome(f"cascade stage {n} tied: {w0!r} vs {w1!r}")
    if w0 > w1:
        return CascadeStep(s0, 0, n0 / psi.norm_sq)
    return CascadeStep(s1, 1, n1 / psi.norm_sq)


@dataclass(frozen=True)
class CascadeOutcome:
    basis_index: int
    qubit_record: tuple[int, ...]
    probability_weight: float
    realized_probability: float
    final_state: StateVector

    @property
    def record_string(self) -> str:
        return "".join(map(str, self.qubit_record))


def _require_complete(pset: ProjectorSet, report: CompletenessReport | None) -> CompletenessReport:
    report = validate(pset) if report is None else report
    if not report.complete:
        raise IncompleteSet(
            f"projector set is not complete (joint eigenspace ranks {report.eigenspace_ranks})", report
        )
    return report


def stage_sequence(n_projectors: int, passes: int = 1, shuffle: bool = False, rng=None) -> list[int]:
    """Projector indices in application order.

    The default is one pass in index order.  ``passes > 1`` repeats the set;
    ``shuffle`` permutes each pass independently with ``rng``.
    """
    seq = []
    for _ in range(passes):
        block = list(range(n_projectors))
        if shuffle:
            block = list(rng.permutation(block))
        seq.extend(int(i) for i in block)
    return seq


def _basis_index(report: CompletenessReport, final: np.ndarray) -> int:
    overlaps = [abs(np.vdot(b.amplitudes, final)) for b in report.special_basis]
    return int(np.argmax(overlaps))


def cascade_with_photons(
    pset: ProjectorSet,
    psi,
    photons: Sequence[PhotonState],
    order: Sequence[int] | None = None,
    report: CompletenessReport | None = None,
) -> CascadeOutcome:
    """Deterministic cascade for a given photon per stage."""
    report = _require_complete(pset, report)
    psi = as_state(psi)
    if psi.norm_sq <= 0:
        raise ZeroOperator("cannot measure a zero vector")
    order = list(range(len(pset))) if order is None else list(order)
    if len(photons) < len(order):
        raise ValueError("need one photon per stage")
    state, realized, bits = psi, 1.0, []
    for n, photon in zip(order, photons):
        step = cascade_step(pset, n, state, photon)
        state, bits = step.branch_state, bits + [step.bit]
        realized *= step.stage_probability
    k = _basis_index(report, state.amplitudes)
    weight = abs(np.vdot(report.special_basis[k].amplitudes, psi.amplitudes)) ** 2 / psi.norm_sq
    return CascadeOutcome(k, tuple(bits), float(weight), float(realized), state)


def run_cascade(
    pset: ProjectorSet,
    psi,
    seed: int,
    order: Sequence[int] | None = None,
    passes: int = 1,
    shuffle: bool = False,
) -> CascadeOutcome:
    """One measurement: a fresh photon per stage drawn from ``seed``."""
    report = _require_complete(pset, None)
    rng = make_rng(seed)
    if order is None:
        order = stage_sequence(len(pset), passes, shuffle, rng)
    photons = [PhotonState(*p) for p in sample_photons(rng, len(order))]
    return cascade_with_photons(pset, psi, photons, order, report)


def born_weights(pset: ProjectorSet, psi, report: CompletenessReport | None = None) -> np.ndarray:
    """Analytic ``|<k|psi>|^2 / <psi|psi>`` over the special basis."""
    report = _require_complete(pset, report)
    psi = as_state(psi)
    return np.array([abs(np.vdot(b.amplitudes, psi.amplitudes)) ** 2 for b in report.special_basis]) / psi.norm_sq


@dataclass
class CascadeDistribution:
    counts: np.ndarray
    expected: np.ndarray
    chi_square: float
    p_value: float
    ties: int
    n_runs: int
    report: CompletenessReport
    records: np.ndarray = field(repr=False, default=None)  # (n_runs, n_stages); -1 rows are ties
    outcomes: np.ndarray = field(repr=False, default=None)  # basis index per run, -1 for ties
    realized: np.ndarray = field(repr=False, default=None)  # product of stage probabilities
    order: tuple[int, ...] = ()

    @property
    def frequencies(self) -> np.ndarray:
        n = self.counts.sum()
        return self.counts / n if n else self.counts.astype(float)


def cascade_outcomes(
    pset: ProjectorSet,
    psi,
    photons: np.ndarray,
    order: Sequence[int],
    report: CompletenessReport,
    tie_tolerance: float = DEFAULT_OUTCOME_TIE,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized cascades; ``photons`` has shape ``(n_runs, n_stages, 2)``.

    Returns basis indices (-1 on a tie), bit records and realized
    probability products.
    """
    psi = as_state(psi).amplitudes
    runs = photons.shape[0]
    state = np.broadcast_to(psi, (runs, psi.size)).copy()
    realized = np.ones(runs)
    tied = np.zeros(runs, dtype=bool)
    bits = np.zeros((runs, len(order)), dtype=np.int8)
    for s, n in enumerate(order):
        kept = state @ pset.projectors[n].T
        rest = state - kept
        n_all = np.sum(np.abs(state) ** 2, axis=1)
        n0 = np.sum(np.abs(kept) ** 2, axis=1)
        n1 = np.sum(np.abs(rest) ** 2, axis=1)
        w0 = np.abs(photons[:, s, 0]) ** 2 * n0
        w1 = np.abs(photons[:, s, 1]) ** 2 * n1
        tied |= np.abs(w0 - w1) <= tie_tolerance * np.maximum(w0, w1)
        pick0 = w0 > w1
        bits[:, s] = np.where(pick0, 0, 1)
        state = np.where(pick0[:, None], kept, rest)
        with np.errstate(invalid="ignore", divide="ignore"):
            realized *= np.where(pick0, n0, n1) / n_all
    basis = np.array([b.amplitudes for b in report.special_basis])
    outcome = np.argmax(np.abs(state @ basis.conj().T), axis=1)
    outcome[tied] = -1
    bits[tied] = -1
    return outcome, bits, realized


def cascade_distribution(
    pset: ProjectorSet,
    psi,
    n_runs: int,
    seed: int,
    order: Sequence[int] | None = None,
    passes: int = 1,
    shuffle: bool = False,
) -> CascadeDistribution:
    """``n_runs`` independent cascades against the analytic Born weights.

    Photons are drawn as one ``(n_runs, n_stages)`` block from ``seed``, so
    run ``r`` consumes photons ``r*n_stages ... (r+1)*n_stages - 1``.  With
    ``shuffle`` the stage order is drawn once per call, before the photons.
    """
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    report = _require_complete(pset, None)
    psi = as_state(psi)
    if psi.norm_sq <= 0:
        raise ZeroOperator("cannot measure a zero vector")
    rng = make_rng(seed)
    if order is None:
        order = stage_sequence(len(pset), passes, shuffle, rng)
    order = tuple(order)
    photons = sample_photons(rng, n_runs * len(order)).reshape(n_runs, len(order), 2)
    outcome, bits, realized = cascade_outcomes(pset, psi, photons, order, report)
    valid = outcome >= 0
    counts = np.bincount(outcome[valid], minlength=len(report.special_basis))
    expected = born_weights(pset, psi, report)
    chi2, p = chi_square_gof(counts, expected)
    return CascadeDistribution(
        counts, expected, chi2, p, int((~valid).sum()), n_runs, report, bits, outcome, realized, order
    )
