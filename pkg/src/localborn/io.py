"""JSON file formats for Fock fixtures, process tables and projector sets.

Fock fixture::

    {"single_particle_dim": 3, "max_total": 2, "accessible": [0],
     "terms": [{"occupations": [1, 1, 0], "re": 0.8, "im": 0.0}, ...]}

Process table (one list per input row ``↕0, ↕1, ↔0, ↔1``, each entry
``[qubit_out, label, re, im]``)::

    {"name": "born", "rows": [[[0, 1, 1.0, 0.0]], ...]}

Projector set (dense matrices, ``im`` optional)::

    {"dim": 2, "projectors": [{"re": [[1, 0], [0, 0]], "im": [[0, 0], [0, 0]]}]}
"""

from __future__ import annotations

import json
from pathlib import Path

from localborn.cascade import ProjectorSet
from localborn.fock import FockSpace, FockStateVector
from localborn.scattering import ScatteringProcess


class FormatError(ValueError):
    """A file does not follow the expected structure."""


def read_json(path) -> dict:
    path = Path(path)
    try:
        with path.open() as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    except OSError as exc:
        raise FormatError(f"{path}: {exc.strerror}") from exc


def _field(data: dict, key: str, path):
    try:
        return data[key]
    except (KeyError, TypeError):
        raise FormatError(f"{path}: missing field {key!r}") from None


def fock_from_dict(data: dict, path="<fixture>") -> FockStateVector:
    dim = int(_field(data, "single_particle_dim", path))
    max_total = int(data.get("max_total", 3))
    accessible = [int(i) for i in _field(data, "accessible", path)]
    try:
        space = FockSpace.build(dim, accessible, max_total)
        terms = {}
        for n, term in enumerate(_field(data, "terms", path)):
            occ = tuple(int(x) for x in _field(term, "occupations", f"{path}: terms[{n}]"))
            terms[occ] = terms.get(occ, 0j) + complex(float(term.get("re", 0.0)), float(term.get("im", 0.0)))
        return FockStateVector(space, terms)
    except FormatError:
        raise
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def fock_to_dict(psi: FockStateVector) -> dict:
    return {
        "single_particle_dim": psi.space.single_particle_dim,
        "max_total": psi.space.max_total,
        "accessible": list(psi.space.partition.accessible_modes),
        "terms": [
            {"occupations": list(occ), "re": amp.real, "im": amp.imag}
            for occ, amp in sorted(psi.terms.items())
        ],
    }


def load_fock_fixture(path) -> FockStateVector:
    return fock_from_dict(read_json(path), path)


def save_fock_fixture(psi: FockStateVector, path) -> None:
    Path(path).write_text(json.dumps(fock_to_dict(psi), indent=2) + "\n")


def load_process(path) -> ScatteringProcess:
    data = read_json(path)
    try:
        return ScatteringProcess.from_dict(data)
    except (KeyError, TypeError) as exc:
        raise FormatError(f"{path}: malformed process table ({exc})") from exc
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def save_process(proc: ScatteringProcess, path) -> None:
    Path(path).write_text(json.dumps(proc.to_dict(), indent=2) + "\n")


def load_projector_set(path) -> ProjectorSet:
    """Load and validate a projector set.

    ``NotIdempotent`` and ``NotCommuting`` propagate unchanged so callers see
    the same taxonomy as for in-memory sets.
    """
    data = read_json(path)
    try:
        return ProjectorSet.from_dict(data)
    except (KeyError, TypeError) as exc:
        raise FormatError(f"{path}: malformed projector set ({exc})") from exc
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def save_projector_set(pset: ProjectorSet, path) -> None:
    Path(path).write_text(json.dumps(pset.to_dict(), indent=2) + "\n")
