import json
from fractions import Fraction

from adapters.serialization import atom_list_to_dict, dumps
from atoms import AtomList
from cli import EXIT_OK, EXIT_USAGE, main
from tests.conftest import atom_on
from validator import AtomKind

HALF = Fraction(1, 2)
QUIET = ["--log-level", "WARNING", "--log-file", ""]


def halves(kind=AtomKind.CLASSICAL, scale=1):
    return atom_on([((0, HALF), scale), ((HALF, 1), -scale)], 0, 1, kind)


def write_atoms(path, atom_list):
    path.write_text(dumps(atom_list_to_dict(atom_list)))
    return str(path)


def test_group(capsys):
    assert main(["group", "--dimension", "3", "--eta", "1,0,1", *QUIET]) == EXIT_OK
    captured = capsys.readouterr()
    data = json.loads(captured.out)
    assert data["success"]
    assert data["order"] == 8
    assert data["eta_bits"] == [1, 0, 1]
    assert data["fingerprint"]
    assert "Group order: 8" in captured.err


def test_group_from_descriptor_with_eta_override(tmp_path, capsys):
    roots = [[1, 0], [-1, 0], [0, 1], [0, -1], [1, 1], [-1, -1], [1, -1], [-1, 1]]
    system = tmp_path / "b2.json"
    system.write_text(json.dumps({"dimension": 2, "roots": roots, "basepoint": [2, 1]}))
    assert main(["group", "--system", str(system), "--eta", "1,1", *QUIET]) == EXIT_OK
    data = json.loads(capsys.readouterr().out)
    assert data["order"] == 8
    assert data["wall_signs"] == [-1, -1]


def test_help_and_usage(capsys):
    assert main(["--help"]) == EXIT_OK
    assert main(["no-such-command"]) == EXIT_USAGE
    assert main(["group", "--dimension", "2", *QUIET]) == EXIT_USAGE
    assert "Give --system FILE or --eta bits" in capsys.readouterr().err


def test_malformed_json_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert main(["decompose", "--atoms", str(bad), "--eta", "1", *QUIET]) == EXIT_USAGE
    assert "invalid-argument" in capsys.readouterr().err


def test_decompose_writes_a_valid_list(tmp_path):
    source = write_atoms(tmp_path / "in.json", AtomList([(Fraction(3, 2), halves())], 1))
    out = tmp_path / "out.json"
    assert main(["decompose", "--atoms", source, "--eta", "0", "--out", str(out), *QUIET]) == EXIT_OK
    data = json.loads(out.read_text())
    assert data["validation"]["valid"]
    assert data["eta"] == [0]
    assert [t["kind"] for t in data["terms"]] == ["A"]
    assert data["terms"][0]["coeff"] == "3/2"
    assert data["fingerprint"]


def test_decompose_rejects_non_classical_atoms(tmp_path, capsys):
    source = write_atoms(tmp_path / "in.json", AtomList([(1, halves(kind=AtomKind.A))], 1))
    assert main(["decompose", "--atoms", source, "--eta", "0", *QUIET]) == EXIT_USAGE
    assert "invalid-input" in capsys.readouterr().err


def test_extend_function(tmp_path):
    source = tmp_path / "f.json"
    source.write_text(json.dumps({"cells": [{"corner": ["0"], "level": 1, "side_num": 1, "value": "2"}]}))
    out = tmp_path / "ext.json"
    assert main(["extend", "--input", str(source), "--eta", "1", "--dimension", "1",
                 "--out", str(out), *QUIET]) == EXIT_OK
    data = json.loads(out.read_text())
    values = sorted(c["value"] for c in data["cells"])
    assert values == ["-2", "2"]


def test_kernel_needs_input_or_point(capsys):
    assert main(["kernel", "--eta", "0", "--dimension", "1", *QUIET]) == EXIT_USAGE
    assert "kernel needs" in capsys.readouterr().err


def test_verify_geometry(tmp_path):
    out = tmp_path / "report.json"
    code = main(["verify", "--only", "geometry", "--window", "4", "--format", "json", "--out", str(out), *QUIET])
    assert code == EXIT_OK
    report = json.loads(out.read_text())
    assert report["passed"]
    assert {e["module"] for e in report["entries"]} == {"geometry"}
