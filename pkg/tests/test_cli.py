import json
import subprocess
import sys

import pytest

from conftest import FIXTURES as FIX
from localborn.cli import main


def run(capsys, *argv):
    status = main(list(argv))
    captured = capsys.readouterr()
    return status, captured.out, captured.err


def parse_rows(text):
    lines = text.strip().splitlines()
    header = lines[0].split(",")
    return header, [[float(x) for x in line.split(",")] for line in lines[1:]]


class TestScatter:
    def test_born_report(self, capsys):
        status, out, _ = run(capsys, "scatter", "born", "--a2", "0.7", "--trials", "100000", "--seed", "42", "--assert")
        assert status == 0
        assert "expected(0)        0.700000" in out
        assert "[claim:" in out and "PASS" in out

    def test_maximum_rows(self, capsys):
        status, out, _ = run(capsys, "scatter", "maximum", "--a2", "0.64", "--trials", "1000", "--seed", "1",
                             "--format", "rows")
        assert status == 0
        header, rows = parse_rows(out)
        assert header[:3] == ["outcome", "count", "frequency"]
        assert rows[0][:3] == [0, 1000, 1.0]

    def test_uniform(self, capsys):
        status, out, _ = run(capsys, "scatter", "uniform", "--a2", "0.9", "--seed", "3", "--format", "rows", "--assert")
        assert status == 0
        _, rows = parse_rows(out)
        assert abs(rows[0][2] - 0.5) <= 4 * (0.25 / 100_000) ** 0.5

    def test_custom_table(self, capsys):
        status, out, _ = run(capsys, "scatter", "--table", str(FIX / "process_atom_photon.json"), "--qubit", "0.6,0.8j",
                             "--trials", "2000", "--seed", "4")
        assert status == 0 and "custom process table" in out

    def test_assert_violation(self, capsys):
        # unequal branch amplitudes break the Born statistics
        status, _, err = run(capsys, "atom", "--amp", "0.95", "--seed", "7", "--trials", "100000", "--assert")
        assert status == 2 and "bound violation" in err

    def test_config_file(self, capsys):
        status, out, _ = run(capsys, "scatter", "--config", str(FIX / "config_scatter_born.json"))
        assert status == 0 and "seed 42" in out and "born" in out

    def test_flags_override_config(self, capsys):
        status, out, _ = run(capsys, "scatter", "--config", str(FIX / "config_scatter_born.json"), "--seed", "5",
                             "--trials", "1000")
        assert status == 0 and "seed 5" in out and "trials             1000" in out

    def test_config_unknown_field(self, capsys, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"seed": 1, "bogus": 2}))
        status, _, err = run(capsys, "scatter", "born", "--a2", "0.5", "--config", str(cfg))
        assert status == 1 and "bogus" in err

    def test_config_syntax_error(self, capsys, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text('{"seed": 1,\n  "a2": }')
        status, _, err = run(capsys, "scatter", "born", "--config", str(cfg))
        assert status == 1 and "line 2" in err

    def test_config_wrong_experiment(self, capsys):
        status, _, err = run(capsys, "cascade", "--config", str(FIX / "config_scatter_born.json"))
        assert status == 1


class TestErrors:
    def test_missing_seed(self, capsys):
        status, _, err = run(capsys, "scatter", "born", "--a2", "0.5")
        assert status == 1 and "seed" in err

    @pytest.mark.parametrize("seed", ["-1", str(2**64)])
    def test_seed_range(self, capsys, seed):
        assert run(capsys, "scatter", "born", "--a2", "0.5", "--seed", seed)[0] == 1

    def test_bad_counts(self, capsys):
        assert run(capsys, "scatter", "born", "--a2", "0.5", "--seed", "1", "--trials", "0")[0] == 1

    def test_bad_qubit(self, capsys):
        assert run(capsys, "scatter", "born", "--qubit", "0,0", "--seed", "1")[0] == 1
        assert run(capsys, "scatter", "born", "--a2", "1.5", "--seed", "1")[0] == 1

    def test_unknown_subcommand(self, capsys):
        assert run(capsys, "bogus", "--seed", "1")[0] == 1

    def test_json_format_only_for_branches(self, capsys):
        assert run(capsys, "oracle", "--seed", "1", "--format", "json")[0] == 1


class TestCascade:
    def test_dim2(self, capsys):
        status, out, _ = run(capsys, "cascade", "--projectors", str(FIX / "projectors_dim2.json"),
                             "--psi", "0.8366600265340756,0.5477225575051661", "--seed", "1", "--format", "rows")
        assert status == 0
        _, rows = parse_rows(out)
        assert abs(rows[0][3] - 0.7) <= 0.006 and rows[0][4] == pytest.approx(0.7)

    def test_dim4_uniform(self, capsys):
        status, out, _ = run(capsys, "cascade", "--projectors", str(FIX / "projectors_dim4.json"),
                             "--psi", "0.5,0.5,0.5,0.5", "--seed", "2", "--assert", "--format", "rows")
        assert status == 0
        _, rows = parse_rows(out)
        assert all(abs(r[3] - 0.25) < 0.006 for r in rows)

    def test_order(self, capsys):
        status, out, _ = run(capsys, "cascade", "--projectors", str(FIX / "projectors_dim4.json"),
                             "--psi", "0.5,0.5,0.5,0.5", "--seed", "2", "--runs", "1000", "--order", "1,0")
        assert status == 0 and "stage order        [1, 0]" in out
        assert run(capsys, "cascade", "--projectors", str(FIX / "projectors_dim4.json"),
                   "--psi", "0.5,0.5,0.5,0.5", "--seed", "2", "--order", "0,0")[0] == 1

    def test_noncommuting(self, capsys):
        status, _, err = run(capsys, "cascade", "--projectors", str(FIX / "projectors_noncommuting.json"),
                             "--psi", "1,0", "--seed", "1")
        assert status == 2 and "NotCommuting" in err

    def test_incomplete_reports_witness(self, capsys):
        status, _, err = run(capsys, "cascade", "--projectors", str(FIX / "projectors_incomplete.json"),
                             "--psi", "0.5,0.5,0.5,0.5", "--seed", "1")
        assert status == 2 and "IncompleteSet" in err and "witness" in err

    def test_psi_dimension(self, capsys):
        assert run(capsys, "cascade", "--projectors", str(FIX / "projectors_dim2.json"), "--psi", "1,0,0",
                   "--seed", "1")[0] == 1

    def test_missing_file(self, capsys, tmp_path):
        assert run(capsys, "cascade", "--projectors", str(tmp_path / "none.json"), "--psi", "1,0", "--seed", "1")[0] == 1


class TestBranches:
    def test_uniform_records(self, capsys):
        status, out, _ = run(capsys, "branches", "--a2", "0.5", "--events", "3", "--runs", "10000", "--seed", "9",
                             "--format", "rows", "--assert")
        assert status == 0
        _, rows = parse_rows(out)
        assert len(rows) == 8
        assert all(abs(r[3] - 0.125) < 0.015 for r in rows)

    def test_json(self, capsys):
        status, out, _ = run(capsys, "branches", "--a2", "0.5", "--runs", "500", "--seed", "9", "--mode", "persist",
                             "--format", "json")
        assert status == 0
        data = json.loads(out)
        assert data["mode"] == "persist" and len(data["records"]) == 8
        assert sum(data["switch_counts"]) == len(data["switch_events"])

    def test_event_cap(self, capsys):
        assert run(capsys, "branches", "--a2", "0.5", "--events", "21", "--seed", "1")[0] == 1


class TestOracleAtomStrip:
    def test_oracle_ratio_two(self, capsys):
        status, out, _ = run(capsys, "oracle", "--ratio", "2", "--seed", "0", "--format", "rows", "--assert")
        assert status == 0
        _, rows = parse_rows(out)
        assert rows[0][1] == pytest.approx(0.8, abs=1e-8)

    def test_oracle_default_grid(self, capsys):
        status, out, _ = run(capsys, "oracle", "--seed", "0", "--format", "rows")
        assert status == 0 and len(parse_rows(out)[1]) == 5

    def test_oracle_bad_ratio(self, capsys):
        assert run(capsys, "oracle", "--ratio", "-1", "--seed", "0")[0] == 1

    def test_atom_default_passes(self, capsys):
        status, out, _ = run(capsys, "atom", "--seed", "7", "--trials", "20000", "--assert")
        assert status == 0 and "PASS" in out

    def test_strip_inaccessible(self, capsys):
        status, out, _ = run(capsys, "strip", "--fixture", str(FIX / "fock_inaccessible.json"), "--seed", "0")
        assert status == 0 and "vacuum projector" in out

    def test_strip_rows_and_normalized(self, capsys):
        status, out, _ = run(capsys, "strip", "--fixture", str(FIX / "fock_mixed.json"), "--seed", "0",
                             "--format", "rows")
        assert status == 0
        header, rows = parse_rows(out)
        assert header == ["row", "col", "re", "im"]
        assert sum(r[2] for r in rows if r[0] == r[1]) == pytest.approx(1.0)
        status, out, _ = run(capsys, "strip", "--fixture", str(FIX / "fock_mixed.json"), "--seed", "0", "--normalized")
        assert status == 0 and "dominant pure state" in out


class TestDeterminism:
    @pytest.mark.parametrize(
        "argv",
        [
            ["scatter", "born", "--a2", "0.3", "--trials", "5000"],
            ["cascade", "--projectors", "{FIX}/projectors_dim4.json", "--psi", "0.6,0.5,0.4,0.48", "--runs", "3000"],
            ["branches", "--a2", "0.7", "--runs", "300", "--mode", "persist"],
            ["atom", "--trials", "2000", "--grid", "0.2,0.6"],
        ],
    )
    def test_byte_identical_rows(self, tmp_path, argv):
        argv = [a.replace("{FIX}", str(FIX)) for a in argv]
        outs = []
        for i in range(2):
            path = tmp_path / f"out{i}.csv"
            assert main(argv + ["--seed", "123", "--format", "rows", "--out", str(path)]) == 0
            outs.append(path.read_bytes())
        assert outs[0] == outs[1] and outs[0]

    def test_console_script_module(self):
        res = subprocess.run([sys.executable, "-m", "localborn.cli", "oracle", "--ratio", "1", "--seed", "0",
                              "--format", "rows"], capture_output=True, text=True)
        assert res.returncode == 0
        assert res.stdout.startswith("ratio,quadrature")
