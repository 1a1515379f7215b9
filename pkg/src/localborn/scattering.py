"""Elementary photon-qubit scattering processes.

A process is a unitary on (photon polarization) x (local qubit).  It is
given as a four-row table, one row per input basis label in the order
``(p0,q0), (p0,q1), (p1,q0), (p1,q1)`` where ``p0``/``p1`` are the photon
basis states carrying amplitudes ``alpha``/``beta``.  Each row lists the
output terms ``(qubit_out, radiation_label, amplitude)``.  Radiation labels
are abstract orthonormal outgoing-field modes; they are always inaccessible,
so only their orthogonality matters after stripping.

The photon is drawn as ``alpha = G1 + i G2``, ``beta = G3 + i G4`` from four
iid standard normals.  That distribution is SU(2) invariant, and the local
outcome is invariant under a global rescaling of the photon, so the radial
law plays no role.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import integrate

from localborn.errors import QuadratureFailure, TieOutcome
from localborn.fock import FockSpace, FockStateVector, strip

UNITARITY_ATOL = 1e-12
DEFAULT_OUTCOME_TIE = 1e-12
VANISHING = 1e-12
QUADRATURE_ATOL = 1e-8

INPUT_LABELS = ("↕0", "↕1", "↔0", "↔1")
_INPUTS = ((0, 0), (0, 1), (1, 0), (1, 1))  # (photon index, qubit index)


@dataclass(frozen=True)
class PhotonState:
    """Unnormalized photon polarization ``alpha|↕> + beta|↔>``."""

    alpha: complex
    beta: complex

    def __post_init__(self):
        object.__setattr__(self, "alpha", complex(self.alpha))
        object.__setattr__(self, "beta", complex(self.beta))
        if abs(self.alpha) ** 2 + abs(self.beta) ** 2 <= 0:
            raise ValueError("photon state must not vanish")

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha, self.beta], dtype=complex)

    def scaled(self, factor: complex) -> "PhotonState":
        return PhotonState(factor * self.alpha, factor * self.beta)

    @property
    def norm_sq(self) -> float:
        return abs(self.alpha) ** 2 + abs(self.beta) ** 2


@dataclass(frozen=True)
class QubitState:
    """Unnormalized local qubit ``a|0> + b|1>``."""

    a: complex
    b: complex

    def __post_init__(self):
        object.__setattr__(self, "a", complex(self.a))
        object.__setattr__(self, "b", complex(self.b))
        if abs(self.a) ** 2 + abs(self.b) ** 2 <= 0:
            raise ValueError("qubit state must not vanish")

    @classmethod
    def from_probability(cls, p0: float) -> "QubitState":
        """Real qubit with ``|a|^2 = p0``."""
        if not 0.0 <= p0 <= 1.0:
            raise ValueError(f"p0={p0} outside [0, 1]")
        return cls(math.sqrt(p0), math.sqrt(1.0 - p0))

    def as_array(self) -> np.ndarray:
        return np.array([self.a, self.b], dtype=complex)

    def scaled(self, factor: complex) -> "QubitState":
        return QubitState(factor * self.a, factor * self.b)

    @property
    def norm_sq(self) -> float:
        return abs(self.a) ** 2 + abs(self.b) ** 2


class Outcome(enum.IntEnum):
    ZERO = 0
    ONE = 1


class ProcessKind(str, enum.Enum):
    UNIFORM = "uniform"
    MAXIMUM = "maximum"
    BORN = "born"


@dataclass(frozen=True)
class Entry:
    qubit_out: int
    label: int
    amplitude: complex


@dataclass(frozen=True, eq=False)
class ScatteringProcess:
    """Four-row basis-map table; unitarity is certified on construction."""

    name: str
    rows: tuple[tuple[Entry, ...], ...]

    def __post_init__(self):
        rows = tuple(
            tuple(e if isinstance(e, Entry) else Entry(int(e[0]), int(e[1]), complex(e[2])) for e in row)
            for row in self.rows
        )
        object.__setattr__(self, "rows", rows)
        if len(rows) != 4:
            raise ValueError(f"process {self.name!r} needs 4 rows, got {len(rows)}")
        for row in rows:
            for e in row:
                if e.qubit_out not in (0, 1):
                    raise ValueError(f"qubit_out must be 0 or 1, got {e.qubit_out}")
        gram = self.transfer.reshape(4, -1)
        gram = gram.conj() @ gram.T
        if not np.allclose(gram, np.eye(4), rtol=0.0, atol=UNITARITY_ATOL):
            raise ValueError(f"process {self.name!r} is not unitary: row Gram matrix\n{gram}")

    @property
    def labels(self) -> tuple[int, ...]:
        return tuple(sorted({e.label for row in self.rows for e in row}))

    @property
    def transfer(self) -> np.ndarray:
        """Array ``T[row, qubit_out, label_index]`` of output amplitudes."""
        labels = {lab: i for i, lab in enumerate(self.labels)}
        t = np.zeros((4, 2, len(labels)), dtype=complex)
        for r, row in enumerate(self.rows):
            for e in row:
                t[r, e.qubit_out, labels[e.label]] += e.amplitude
        return t

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "rows": [
                [[e.qubit_out, e.label, e.amplitude.real, e.amplitude.imag] for e in row]
                for row in self.rows
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ScatteringProcess":
        rows = tuple(
            tuple(Entry(int(q), int(lab), complex(re, im)) for q, lab, re, im in row)
            for row in data["rows"]
        )
        return cls(str(data.get("name", "custom")), rows)


def born_process(branch_amplitude: float = 1 / math.sqrt(2)) -> ScatteringProcess:
    """Born scattering with an adjustable magnitude for the split rows.

    The builtin uses equal magnitudes ``1/sqrt(2)``; other values let one
    explore how sensitive the statistics are to that assumption.
    """
    if not 0.0 < branch_amplitude < 1.0:
        raise ValueError("branch_amplitude must lie in (0, 1)")
    amp, rest = branch_amplitude, math.sqrt(1.0 - branch_amplitude**2)
    name = f"born(amp={amp:g})"
    if math.isclose(amp, 1 / math.sqrt(2), abs_tol=1e-15):
        name, amp = "born", 1 / math.sqrt(2)
        rest = amp  # keep the two split entries bit-identical
    return ScatteringProcess(
        name,
        (
            (Entry(0, 1, 1.0),),
            (Entry(1, 2, amp), Entry(0, 3, rest)),
            (Entry(0, 4, amp), Entry(1, 5, rest)),
            (Entry(1, 6, 1.0),),
        ),
    )


def builtin_process(which: ProcessKind | str) -> ScatteringProcess:
    kind = ProcessKind(which)
    if kind is ProcessKind.UNIFORM:
        pattern = (0, 0, 1, 1)
    elif kind is ProcessKind.MAXIMUM:
        pattern = (0, 1, 0, 1)
    else:
        return born_process()
    return ScatteringProcess(
        kind.value, tuple((Entry(q, n + 1, 1.0),) for n, q in enumerate(pattern))
    )


# -- photons ---------------------------------------------------------------


def sample_photons(rng: np.random.Generator, n: int) -> np.ndarray:
    """``n`` photons as an ``(n, 2)`` complex array ``[alpha, beta]``.

    Consumes ``4*n`` standard normals from ``rng`` laid out row-major as
    ``(G1, G2, G3, G4)`` per photon; rows with both magnitudes below 1e-12 are
    re-drawn in place.
    """
    g = rng.standard_normal((n, 4))
    photons = np.empty((n, 2), dtype=complex)
    photons[:, 0] = g[:, 0] + 1j * g[:, 1]
    photons[:, 1] = g[:, 2] + 1j * g[:, 3]
    bad = (np.abs(photons[:, 0]) < VANISHING) & (np.abs(photons[:, 1]) < VANISHING)
    while bad.any():
        photons[bad] = sample_photons(rng, int(bad.sum()))
        bad = (np.abs(photons[:, 0]) < VANISHING) & (np.abs(photons[:, 1]) < VANISHING)
    return photons


def sample_photon(rng: np.random.Generator) -> PhotonState:
    alpha, beta = sample_photons(rng, 1)[0]
    return PhotonState(alpha, beta)


# -- global and local pictures ---------------------------------------------


def output_space(proc: ScatteringProcess) -> FockSpace:
    """Modes 0/1 hold the qubit (accessible); one inaccessible mode per label."""
    return FockSpace.build(2 + len(proc.labels), accessible=(0, 1), max_total=2)


def scatter_global(proc: ScatteringProcess, photon: PhotonState, qubit: QubitState) -> FockStateVector:
    """Expand ``U (photon x qubit)`` into a Fock state of qubit and radiation."""
    space = output_space(proc)
    label_mode = {lab: 2 + i for i, lab in enumerate(proc.labels)}
    coef = np.outer(photon.as_array(), qubit.as_array()).reshape(-1)
    terms: dict = {}
    for c, row in zip(coef, proc.rows):
        for e in row:
            occ = [0] * space.single_particle_dim
            occ[e.qubit_out] = 1
            occ[label_mode[e.label]] = 1
            occ = tuple(occ)
            terms[occ] = terms.get(occ, 0j) + c * e.amplitude
    return FockStateVector(space, terms)


QUBIT_ZERO = (1, 0)
QUBIT_ONE = (0, 1)


@dataclass(frozen=True)
class LocalOutcome:
    outcome: Outcome
    weight_zero: float
    weight_one: float


def _decide(w0: float, w1: float, tie_tolerance: float) -> Outcome:
    if abs(w0 - w1) <= tie_tolerance * max(w0, w1):
        raise TieOutcome(f"outcome weights tie: {w0!r} vs {w1!r}")
    return Outcome.ZERO if w0 > w1 else Outcome.ONE


def local_outcome(
    proc: ScatteringProcess,
    photon: PhotonState,
    qubit: QubitState,
    tie_tolerance: float = DEFAULT_OUTCOME_TIE,
) -> LocalOutcome:
    """Outcome perceived locally: strip the global output and pick the larger
    of the ``|0>`` and ``|1>`` weights."""
    stripped = strip(scatter_global(proc, photon, qubit))
    w0, w1 = stripped.weight(QUBIT_ZERO), stripped.weight(QUBIT_ONE)
    return LocalOutcome(_decide(w0, w1, tie_tolerance), w0, w1)


def stripped_weights(proc: ScatteringProcess, photons: np.ndarray, qubit: QubitState) -> np.ndarray:
    """Vectorized ``(weight_zero, weight_one)`` for a batch of photons.

    Same quantity :func:`local_outcome` reads from the stripped operator:
    per qubit value, the sum over radiation labels of the squared coherent
    amplitude.
    """
    photons = np.atleast_2d(np.asarray(photons, dtype=complex))
    coef = (photons[:, :, None] * qubit.as_array()[None, None, :]).reshape(len(photons), 4)
    amps = np.einsum("nr,rql->nql", coef, proc.transfer)
    return np.sum(np.abs(amps) ** 2, axis=2)


def born_probabilities(qubit: QubitState) -> tuple[float, float]:
    a2, b2 = abs(qubit.a) ** 2, abs(qubit.b) ** 2
    p0 = a2 / (a2 + b2)
    return p0, 1.0 - p0


def rayleigh_density(x: float) -> float:
    return x * math.exp(-0.5 * x * x)


def rayleigh_oracle(ratio_a_over_b: float) -> float:
    """``P(R1 * ratio > R2)`` for iid Rayleigh ``R1, R2``, by 2-D quadrature.

    Independent numerical check of the closed form ``r^2 / (1 + r^2)``.
    """
    r = float(ratio_a_over_b)
    if not (math.isfinite(r) and r > 0):
        raise ValueError("ratio must be finite and positive")
    value, err = integrate.dblquad(
        lambda x2, x1: rayleigh_density(x1) * rayleigh_density(x2),
        0.0,
        np.inf,
        0.0,
        lambda x1: r * x1,
        epsabs=1e-11,
        epsrel=1e-11,
    )
    if not err <= QUADRATURE_ATOL:
        raise QuadratureFailure(f"quadrature error estimate {err:.3e} exceeds {QUADRATURE_ATOL:g}")
    return value


# -- Monte Carlo harness ---------------------------------------------------


@dataclass(frozen=True)
class OutcomeStatistics:
    counts: tuple[int, int]
    ties: int
    n_trials: int

    @property
    def n_valid(self) -> int:
        return self.counts[0] + self.counts[1]

    @property
    def frequencies(self) -> tuple[float, float]:
        n = self.n_valid
        if n == 0:
            return (math.nan, math.nan)
        return (self.counts[0] / n, self.counts[1] / n)

    @property
    def standard_error(self) -> float:
        """Binomial standard error of the empirical frequency of outcome 0."""
        f = self.frequencies[0]
        return math.sqrt(f * (1.0 - f) / self.n_valid) if self.n_valid else math.nan

    def __add__(self, other: "OutcomeStatistics") -> "OutcomeStatistics":
        return OutcomeStatistics(
            (self.counts[0] + other.counts[0], self.counts[1] + other.counts[1]),
            self.ties + other.ties,
            self.n_trials + other.n_trials,
        )


def classify(weights: np.ndarray, tie_tolerance: float = DEFAULT_OUTCOME_TIE) -> np.ndarray:
    """Per-row outcome: 0, 1, or -1 for a tie."""
    w0, w1 = weights[:, 0], weights[:, 1]
    out = np.where(w0 > w1, 0, 1)
    out[np.abs(w0 - w1) <= tie_tolerance * np.maximum(w0, w1)] = -1
    return out


def tally(outcomes: np.ndarray) -> OutcomeStatistics:
    return OutcomeStatistics(
        (int(np.sum(outcomes == 0)), int(np.sum(outcomes == 1))),
        int(np.sum(outcomes < 0)),
        int(outcomes.size),
    )


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """PCG64 generator for ``seed`` and an optional substream path."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *stream]) if stream else int(seed))


def run_trials(
    proc: ScatteringProcess,
    qubit: QubitState,
    n_trials: int,
    seed: int,
    photon_transform: np.ndarray | None = None,
) -> OutcomeStatistics:
    """One random photon per trial; ties are counted and excluded.

    ``photon_transform`` optionally applies a fixed 2x2 matrix to every
    sampled photon (used to probe SU(2) invariance of the sampler).
    """
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    photons = sample_photons(make_rng(seed), n_trials)
    if photon_transform is not None:
        photons = photons @ np.asarray(photon_transform, dtype=complex).T
    return tally(classify(stripped_weights(proc, photons, qubit)))


def outcome_sequence(
    proc: ScatteringProcess, qubit: QubitState, photons: Sequence[PhotonState]
) -> list[Outcome]:
    """Per-photon outcomes through the full stripping pipeline (slow path)."""
    return [local_outcome(proc, p, qubit).outcome for p in photons]
