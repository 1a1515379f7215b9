"""Born scattering realized by a two-level atom and circularly polarized photons.

Qubit ``|0>`` is the ground level and ``|1>`` the excited level one unit of
angular momentum higher.  The photon basis is ``(↺, ↻)``, carried by
``PhotonState.alpha`` and ``PhotonState.beta`` respectively:

* ``↺`` on ``|0>`` and ``↻`` on ``|1>`` carry the wrong angular momentum
  and pass through unchanged;
* ``↻`` on ``|0>`` is either absorbed (atom excited, no outgoing photon) or
  scattered away;
* ``↺`` on ``|1>`` either stimulates emission of a second ``↺`` photon
  (atom relaxes) or is scattered away.

The two options of each interacting row share ``branch_amplitude`` and its
complement.  Every outgoing radiation configuration, including the absorbed
vacuum and the two-photon state, is one orthogonal radiation label.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from localborn.scattering import (
    Entry,
    QubitState,
    ScatteringProcess,
    born_probabilities,
    run_trials,
)
from localborn.statistics import binomial_sigma

PHOTON_BASIS = ("↺", "↻")
LABEL_NAMES = {
    1: "↺ out",
    2: "↺↺ two-photon",
    3: "⇜↺ scattered",
    4: "∘ absorbed",
    5: "⇜↻ scattered",
    6: "↻ out",
}
DEFAULT_GRID = tuple(round(0.1 * k, 1) for k in range(1, 10))


@dataclass(frozen=True)
class AtomPhotonProcess:
    process: ScatteringProcess
    branch_amplitude: float
    relative_phase: float = 0.0


def build_atom_photon(branch_amplitude: float = 1 / math.sqrt(2), relative_phase: float = 0.0) -> AtomPhotonProcess:
    """Four-row table for the atom-photon interaction.

    ``relative_phase`` multiplies the second entry of each interacting row;
    it drops out after stripping.
    """
    if not 0.0 < branch_amplitude < 1.0:
        raise ValueError("branch_amplitude must lie in (0, 1)")
    amp = branch_amplitude
    rest = math.sqrt(1.0 - amp * amp) * cmath.exp(1j * relative_phase)
    rows = (
        (Entry(0, 1, 1.0),),                      # (↺, 0): pass-through
        (Entry(0, 2, amp), Entry(1, 3, rest)),    # (↺, 1): stimulated emission | scatter
        (Entry(1, 4, amp), Entry(0, 5, rest)),    # (↻, 0): absorption | scatter
        (Entry(1, 6, 1.0),),                      # (↻, 1): pass-through
    )
    return AtomPhotonProcess(ScatteringProcess(f"atom-photon(amp={amp:g})", rows), amp, relative_phase)


@dataclass(frozen=True)
class GridPoint:
    p0: float
    frequency: float
    sigma: float
    ties: int

    @property
    def deviation(self) -> float:
        """Signed deviation in units of the binomial sigma (0 when sigma is 0)."""
        diff = self.frequency - self.p0
        if self.sigma == 0:
            return 0.0 if diff == 0 else math.copysign(math.inf, diff)
        return diff / self.sigma

    def passed(self, k: float = 4.0) -> bool:
        return abs(self.frequency - self.p0) <= k * self.sigma


@dataclass(frozen=True)
class BornCertificate:
    points: tuple[GridPoint, ...]
    n_trials: int
    sigmas: float = 4.0

    @property
    def passed(self) -> bool:
        return all(p.passed(self.sigmas) for p in self.points)

    @property
    def failures(self) -> tuple[GridPoint, ...]:
        return tuple(p for p in self.points if not p.passed(self.sigmas))


def certify_born_equivalence(
    proc: AtomPhotonProcess | ScatteringProcess,
    qubit_grid: Sequence[QubitState | float] | None = None,
    n_trials: int = 100_000,
    seed: int = 0,
    sigmas: float = 4.0,
) -> BornCertificate:
    """Compare Monte Carlo outcome frequencies with ``|a|^2/(|a|^2+|b|^2)``.

    Grid entries may be qubits or ``|a|^2`` values; grid point ``i`` uses RNG
    substream ``(seed, i)``.
    """
    process = proc.process if isinstance(proc, AtomPhotonProcess) else proc
    grid = DEFAULT_GRID if qubit_grid is None else qubit_grid
    points = []
    for i, q in enumerate(grid):
        qubit = q if isinstance(q, QubitState) else QubitState.from_probability(float(q))
        stats = run_trials(process, qubit, n_trials, seed=_substream_seed(seed, i))
        p0, _ = born_probabilities(qubit)
        points.append(GridPoint(p0, stats.frequencies[0], binomial_sigma(p0, stats.n_valid), stats.ties))
    return BornCertificate(tuple(points), n_trials, sigmas)


def _substream_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([int(seed), index]).generate_state(2, dtype=np.uint64)[0])
