import json
from fractions import Fraction

from adapters.serialization import atom_list_to_dict
from atoms import AtomList
from tests.conftest import atom_on
from validator import AtomKind, AtomValidator, ValidationMode, main, validate_atom

Q = Fraction(1, 4)


def halves(scale=1, kind=AtomKind.A, I0=(), I1=()):
    return atom_on([((0, Fraction(1, 2)), scale), ((Fraction(1, 2), 1), -scale)], 0, 1, kind, I0, I1)


def test_valid_a_atom():
    report = validate_atom(halves(I0=(0,)))
    assert report["valid"]
    assert report["clause"] is None
    assert report["errors"] == []


def test_size_is_the_first_failure():
    report = validate_atom(halves(scale=2))
    assert not report["valid"]
    assert report["clause"] == "size"
    assert report["quantity"] == "4"


def test_cancellation():
    atom = atom_on([((0, 1), 1)], 0, 1, AtomKind.A)
    report = validate_atom(atom)
    assert report["clause"] == "cancellation"


def test_b_atom():
    atom = atom_on([((Fraction(1, 2), 1), 2)], Fraction(1, 2), 1, AtomKind.B, I1=(0,))
    assert validate_atom(atom)["valid"]


def test_b_atom_far_from_wall_is_not_a_b_atom():
    atom = atom_on([((2, Fraction(5, 2)), 2)], 2, Fraction(5, 2), AtomKind.B, I1=(0,))
    report = validate_atom(atom)
    assert report["clause"] == "quadruple-cube"


def test_a_atom_near_minus_wall():
    report = validate_atom(halves(I1=(0,)))
    assert report["clause"] == "quadruple-cube"


def test_support_and_cone():
    outside = atom_on([((0, 1), 1), ((1, 2), -1)], 0, 1, AtomKind.CLASSICAL)
    assert validate_atom(outside)["clause"] == "support"
    left = atom_on([((-1, Fraction(-1, 2)), 1), ((Fraction(-1, 2), 0), -1)], -1, 0, AtomKind.A, I0=(0,))
    assert validate_atom(left)["clause"] == "cone"


def test_walls():
    assert validate_atom(halves(I0=(0,), I1=(0,)))["clause"] == "walls"
    assert validate_atom(halves(I0=(3,)))["clause"] == "walls"


def test_local_side():
    atom = atom_on([((0, 1), Fraction(1, 2)), ((1, 2), Fraction(-1, 2))], 0, 2, AtomKind.LOCAL_A)
    report = validate_atom(atom, "local")
    assert report["clause"] == "local-side"


def test_local_kind_in_global_mode():
    atom = atom_on([((0, 2), Fraction(1, 2))], 0, 2, AtomKind.LOCAL_B)
    assert validate_atom(atom, "local")["valid"]
    report = validate_atom(atom, "global")
    assert report["clause"] == "walls"


def test_large_local_classical_needs_no_cancellation():
    atom = atom_on([((0, 2), Fraction(1, 2))], 0, 2, AtomKind.LOCAL_CLASSICAL)
    assert validate_atom(atom, "local")["valid"]


def test_float_payload_warns():
    atom = atom_on([((0, Fraction(1, 2)), 0.5), ((Fraction(1, 2), 1), -0.5)], 0, 1, AtomKind.CLASSICAL)
    report = validate_atom(atom)
    assert report["valid"]
    assert report["warnings"]


def test_validate_list():
    good, bad = halves(), halves(scale=2)
    report = AtomValidator(ValidationMode.GLOBAL).validate_list([good, bad, bad], [1, Fraction(-1, 2), 2])
    assert not report["valid"]
    assert report["first_invalid"] == 1
    assert report["counts"] == {"A": 3}
    assert len(report["errors"]) == 2
    assert report["l1"] == "7/2"


def test_main(tmp_path, capsys):
    path = tmp_path / "atoms.json"
    path.write_text(json.dumps(atom_list_to_dict(AtomList([(1, halves(kind=AtomKind.CLASSICAL))], 1))))
    assert main([str(path)]) == 0
    assert json.loads(capsys.readouterr().out)["valid"]

    path.write_text(json.dumps(atom_list_to_dict(AtomList([(1, halves(scale=2, kind=AtomKind.CLASSICAL))], 1))))
    assert main([str(path)]) == 1
