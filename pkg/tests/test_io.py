import json

import numpy as np
import pytest

from localborn.atomphoton import build_atom_photon
from localborn.cascade import ProjectorSet
from localborn.errors import NotCommuting, NotIdempotent
from localborn.fock import FockSpace, FockStateVector
from localborn.io import (
    FormatError,
    load_fock_fixture,
    load_process,
    load_projector_set,
    read_json,
    save_fock_fixture,
    save_process,
    save_projector_set,
)
from localborn.scattering import builtin_process


def test_fock_round_trip(tmp_path):
    space = FockSpace.build(3, [0, 2], max_total=2)
    psi = FockStateVector(space, {(1, 0, 1): 0.3 - 0.2j, (0, 1, 0): 0.5})
    save_fock_fixture(psi, tmp_path / "f.json")
    again = load_fock_fixture(tmp_path / "f.json")
    assert again.terms == psi.terms
    assert again.space.partition.accessible_modes == (0, 2)


@pytest.mark.parametrize("proc", [builtin_process("born"), build_atom_photon(0.6).process])
def test_process_round_trip(tmp_path, proc):
    save_process(proc, tmp_path / "p.json")
    assert load_process(tmp_path / "p.json").rows == proc.rows


def test_shipped_process_tables(fixtures_dir):
    assert load_process(fixtures_dir / "process_born.json").rows == builtin_process("born").rows
    assert load_process(fixtures_dir / "process_atom_photon.json").labels == (1, 2, 3, 4, 5, 6)


def test_projector_round_trip(tmp_path):
    pset = ProjectorSet((np.diag([1.0, 1, 0, 0]), np.diag([1.0, 0, 1, 0])))
    save_projector_set(pset, tmp_path / "s.json")
    again = load_projector_set(tmp_path / "s.json")
    assert all(np.array_equal(a, b) for a, b in zip(again.projectors, pset.projectors))


def test_syntax_error_has_location(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"dim": 2,\n "projectors": [}\n')
    with pytest.raises(FormatError, match="line 2"):
        read_json(path)


def test_missing_file(tmp_path):
    with pytest.raises(FormatError):
        read_json(tmp_path / "nope.json")


def test_missing_field(tmp_path):
    path = tmp_path / "f.json"
    path.write_text(json.dumps({"single_particle_dim": 2, "terms": []}))
    with pytest.raises(FormatError, match="accessible"):
        load_fock_fixture(path)


def test_fock_truncation_violation(tmp_path):
    path = tmp_path / "f.json"
    path.write_text(json.dumps({"single_particle_dim": 2, "max_total": 1, "accessible": [0],
                                "terms": [{"occupations": [1, 1], "re": 1}]}))
    with pytest.raises(FormatError):
        load_fock_fixture(path)


def test_non_unitary_process(tmp_path):
    path = tmp_path / "p.json"
    path.write_text(json.dumps({"name": "x", "rows": [[[0, 1, 1, 0]]] * 4}))
    with pytest.raises(FormatError, match="unitary"):
        load_process(path)


def test_malformed_process(tmp_path):
    path = tmp_path / "p.json"
    path.write_text(json.dumps({"name": "x"}))
    with pytest.raises(FormatError):
        load_process(path)


def test_projector_errors_keep_their_type(tmp_path, fixtures_dir):
    with pytest.raises(NotCommuting):
        load_projector_set(fixtures_dir / "projectors_noncommuting.json")
    path = tmp_path / "s.json"
    path.write_text(json.dumps({"dim": 2, "projectors": [{"re": [[1, 0], [0, 0.5]]}]}))
    with pytest.raises(NotIdempotent):
        load_projector_set(path)


def test_projector_shape_mismatch(tmp_path):
    path = tmp_path / "s.json"
    path.write_text(json.dumps({"dim": 3, "projectors": [{"re": [[1, 0], [0, 0]]}]}))
    with pytest.raises(FormatError):
        load_projector_set(path)
