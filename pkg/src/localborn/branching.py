"""Repeated Born scattering with memory: branch trees and remembered histories.

Each recorded scattering event doubles the number of branches.  A branch is
stored flat as ``(weight, record)``; memory qubits make branches mutually
orthogonal, so stripping acts on each branch separately and the flat form
carries all the locally available information.  :func:`global_history_state`
rebuilds the explicit Fock-space state for small trees so the flat form can be
checked against the full stripping pipeline.

Two qubit-handling modes are supported:

``fresh`` (default)
    A new qubit in ``preparation`` is scattered at every event.  Every
    branch then gains the same pair of factors, so the dominant record
    is the per-event argmax and never switches.
``persist``
    The same qubit is scattered again.  At the first event it is in
    ``preparation``; afterwards each branch's qubit sits in the basis state
    of its last recorded outcome.  Factors differ between branches and the
    dominant branch can jump to a descendant of a formerly suppressed one.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np
from localborn.errors import DegenerateDominant
from localborn.fock import FockSpace, FockStateVector
from localborn.scattering import (
    PhotonState,
    QubitState,
    ScatteringProcess,
    born_probabilities,
    builtin_process,
    make_rng,
    sample_photons,
    stripped_weights,
)
from localborn.statistics import chi_square_gof

MAX_EVENTS = 20
DEFAULT_BRANCH_TIE = 1e-12
MODES = ("fresh", "persist")

_BORN = builtin_process("born")
_BASIS_QUBITS = (QubitState(1, 0), QubitState(0, 1))


@dataclass(frozen=True)
class Branch:
    weight: float
    record: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class BranchTree:
    """All branches after ``event_count`` recorded events.

    ``records[i]`` is the outcome list (oldest first) of branch ``i``; the two
    children of branch ``i`` are stored at ``2i`` (outcome 0) and ``2i+1``.
    """

    weights: np.ndarray
    records: np.ndarray

    @classmethod
    def initial(cls) -> "BranchTree":
        return cls(np.ones(1), np.zeros((1, 0), dtype=np.int8))

    @property
    def event_count(self) -> int:
        return self.records.shape[1]

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    @property
    def branches(self) -> list[Branch]:
        return [Branch(float(w), tuple(int(x) for x in r)) for w, r in zip(self.weights, self.records)]

    def __len__(self):
        return len(self.weights)


@dataclass(frozen=True)
class SwitchReport:
    switched: bool
    divergence_depth: int | None = None


def event_weights(photon: PhotonState, qubit: QubitState, process: ScatteringProcess = _BORN) -> tuple[float, float]:
    """Stripped weights ``(lambda0, lambda1)`` of one scattering event."""
    w = stripped_weights(process, photon.as_array()[None, :], qubit)[0]
    return float(w[0]), float(w[1])


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


def born_event(
    tree: BranchTree,
    preparation: QubitState,
    photon: PhotonState,
    mode: str = "fresh",
    process: ScatteringProcess = _BORN,
) -> BranchTree:
    """Scatter one shared photon and record the outcome in every branch."""
    _check_mode(mode)
    if tree.event_count >= MAX_EVENTS:
        raise ValueError(f"branch trees are capped at {MAX_EVENTS} events")
    if mode == "fresh" or tree.event_count == 0:
        lam = np.broadcast_to(np.array(event_weights(photon, preparation, process)), (len(tree), 2))
    else:
        per_state = np.array([event_weights(photon, q, process) for q in _BASIS_QUBITS])
        lam = per_state[tree.records[:, -1]]
    weights = (tree.weights[:, None] * lam).reshape(-1)
    records = np.repeat(tree.records, 2, axis=0)
    bits = np.tile(np.array([0, 1], dtype=np.int8), len(tree))[:, None]
    return BranchTree(weights, np.hstack([records, bits]))


def dominant_history(tree: BranchTree, tie_tolerance: float = DEFAULT_BRANCH_TIE) -> Branch:
    order = np.argsort(tree.weights)[::-1]
    top = tree.weights[order[0]]
    if len(tree) > 1 and top - tree.weights[order[1]] <= tie_tolerance * top:
        raise DegenerateDominant(f"dominant branch weight {top!r} is tied")
    i = int(order[0])
    return Branch(float(top), tuple(int(x) for x in tree.records[i]))


def detect_switch(old: Branch, new: Branch) -> SwitchReport:
    """Whether the remembered history was rewritten between two dominants."""
    old_rec, new_rec = old.record, new.record
    if len(new_rec) < len(old_rec):
        raise ValueError("new record must be at least as long as the old one")
    for depth, (x, y) in enumerate(zip(old_rec, new_rec)):
        if x != y:
            return SwitchReport(True, depth)
    return SwitchReport(False, None)


def evolve(
    preparation: QubitState, photons, mode: str = "fresh"
) -> list[BranchTree]:
    """Trees after each event (index 0 is the initial single branch)."""
    trees = [BranchTree.initial()]
    for p in photons:
        if not isinstance(p, PhotonState):
            p = PhotonState(p[0], p[1])
        trees.append(born_event(trees[-1], preparation, p, mode))
    return trees


# -- explicit global-state oracle -------------------------------------------


def global_history_state(
    preparation: QubitState,
    photons,
    mode: str = "fresh",
    process: ScatteringProcess = _BORN,
) -> tuple[FockStateVector, dict[tuple[int, ...], tuple[int, ...]]]:
    """Full Fock state of memory qubits and radiation after the events.

    Event ``t`` records into accessible modes ``2t`` (outcome 0) and ``2t+1``
    (outcome 1); its radiation labels occupy inaccessible modes after all
    memory modes.  Returns the state and a map from record to accessible
    occupation list.
    """
    _check_mode(mode)
    photons = [p if isinstance(p, PhotonState) else PhotonState(p[0], p[1]) for p in photons]
    n = len(photons)
    labels = process.labels
    n_lab = len(labels)
    lab_index = {lab: i for i, lab in enumerate(labels)}
    dim = 2 * n + n * n_lab
    space = FockSpace.build(dim, accessible=range(2 * n), max_total=2 * n)
    paths: dict[tuple[tuple[int, ...], tuple[int, ...]], complex] = {((), ()): 1.0 + 0j}
    for t, photon in enumerate(photons):
        nxt: dict = {}
        for (rec, labs), amp in paths.items():
            qubit = preparation if (mode == "fresh" or t == 0) else _BASIS_QUBITS[rec[-1]]
            coef = np.outer(photon.as_array(), qubit.as_array()).reshape(-1)
            for c, row in zip(coef, process.rows):
                for e in row:
                    key = (rec + (e.qubit_out,), labs + (lab_index[e.label],))
                    nxt[key] = nxt.get(key, 0j) + amp * c * e.amplitude
        paths = nxt
    terms: dict = {}
    record_occ: dict = {}
    for (rec, labs), amp in paths.items():
        occ = [0] * dim
        for t, (q, li) in enumerate(zip(rec, labs)):
            occ[2 * t + q] = 1
            occ[2 * n + t * n_lab + li] = 1
        occ = tuple(occ)
        terms[occ] = terms.get(occ, 0j) + amp
        record_occ[rec] = space.split(occ)[0]
    return FockStateVector(space, terms), record_occ


# -- statistics --------------------------------------------------------------


def all_records(n_events: int) -> list[tuple[int, ...]]:
    return list(itertools.product((0, 1), repeat=n_events))


def expected_record_distribution(preparation: QubitState, n_events: int, mode: str = "fresh") -> np.ndarray:
    """Born-rule prediction for the remembered record, indexed like
    :func:`all_records`.

    Fresh qubits give the product ``prod_t p_{rec[t]}``.  A persisting qubit
    is left in the basis state of its first outcome, so Born predicts a
    constant record: all zeros with ``p0``, all ones with ``p1``.
    """
    p = born_probabilities(preparation)
    out = []
    for rec in all_records(n_events):
        if mode == "fresh":
            out.append(math.prod(p[x] for x in rec))
        else:
            out.append(p[rec[0]] if len(set(rec)) == 1 else 0.0)
    return np.array(out)


@dataclass
class HistoryStatistics:
    preparation: QubitState
    n_events: int
    n_runs: int
    seed: int
    mode: str
    records: list[tuple[int, ...]]
    counts: np.ndarray
    expected: np.ndarray
    chi_square: float
    p_value: float
    switch_counts: np.ndarray  # index t: switches observed at event t+1
    switch_depths: list[tuple[int, int, int]] = field(default_factory=list)  # (run, event, depth)
    ties: int = 0

    @property
    def frequencies(self) -> np.ndarray:
        n = self.counts.sum()
        return self.counts / n if n else self.counts.astype(float)

    @property
    def switch_rate(self) -> np.ndarray:
        return self.switch_counts / self.n_runs

    def to_dict(self) -> dict:
        return {
            "preparation": [[self.preparation.a.real, self.preparation.a.imag],
                            [self.preparation.b.real, self.preparation.b.imag]],
            "n_events": self.n_events,
            "n_runs": self.n_runs,
            "seed": self.seed,
            "mode": self.mode,
            "records": ["".join(map(str, r)) for r in self.records],
            "counts": [int(c) for c in self.counts],
            "expected": [float(x) for x in self.expected],
            "chi_square": self.chi_square,
            "p_value": self.p_value,
            "switch_counts": [int(c) for c in self.switch_counts],
            "switch_events": [list(x) for x in self.switch_depths],
            "ties": self.ties,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def run_history_experiment(
    preparation: QubitState,
    n_events: int,
    n_runs: int,
    seed: int,
    mode: str = "fresh",
) -> HistoryStatistics:
    """Monte Carlo over photon sequences of the final remembered record.

    Run ``r`` draws its ``n_events`` photons from substream ``(seed, r)``.
    Switches are checked after every event against the previous dominant.
    """
    _check_mode(mode)
    if not 1 <= n_events <= MAX_EVENTS:
        raise ValueError(f"n_events must lie in [1, {MAX_EVENTS}]")
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    records = all_records(n_events)
    index = {r: i for i, r in enumerate(records)}
    counts = np.zeros(len(records), dtype=np.int64)
    switches = np.zeros(n_events, dtype=np.int64)
    depths: list[tuple[int, int, int]] = []
    ties = 0
    for run in range(n_runs):
        photons = sample_photons(make_rng(seed, run), n_events)
        tree = BranchTree.initial()
        previous = dominant_history(tree)
        try:
            for t in range(n_events):
                tree = born_event(tree, preparation, PhotonState(*photons[t]), mode)
                current = dominant_history(tree)
                rep = detect_switch(previous, current)
                if rep.switched:
                    switches[t] += 1
                    depths.append((run, t + 1, rep.divergence_depth))
                previous = current
        except DegenerateDominant:
            ties += 1
            continue
        counts[index[previous.record]] += 1
    expected = expected_record_distribution(preparation, n_events, mode)
    chi2, p = chi_square_gof(counts, expected)
    return HistoryStatistics(
        preparation, n_events, n_runs, seed, mode, records, counts, expected, chi2, p, switches, depths, ties
    )


def find_switch_sequence(
    preparation: QubitState,
    n_events: int = 3,
    switch_event: int = 3,
    depth: int | None = None,
    seed: int = 0,
    max_tries: int = 100_000,
) -> tuple[list[PhotonState], list[BranchTree]]:
    """Search photon sequences (persisting qubit) for a branch switch.

    Returns the first sequence whose dominant branch after ``switch_event``
    does not descend from the dominant branch one event earlier, diverging at
    ``depth`` (any depth if ``None``), with no switch before that.
    """
    rng = make_rng(seed)
    for _ in range(max_tries):
        photons = [PhotonState(*p) for p in sample_photons(rng, n_events)]
        trees = evolve(preparation, photons, mode="persist")
        try:
            doms = [dominant_history(t) for t in trees]
        except DegenerateDominant:
            continue
        reps = [detect_switch(a, b) for a, b in zip(doms, doms[1:])]
        if any(r.switched for r in reps[: switch_event - 1]):
            continue
        rep = reps[switch_event - 1]
        if rep.switched and (depth is None or rep.divergence_depth == depth):
            return photons, trees
    raise RuntimeError(f"no switch found in {max_tries} tries")
