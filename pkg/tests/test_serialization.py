import io
import json
from fractions import Fraction

import pandas as pd
import pytest

from adapters.serialization import (
    atom_list_from_dict,
    atom_list_to_dict,
    chamber_from_dict,
    chamber_to_dict,
    dumps,
    frame_to_csv,
    function_from_dict,
    function_to_dict,
    function_to_frame,
    parse_json,
    read_json,
)
from atoms import AtomList
from errors import InvalidArgument
from geometry import EtaVector, orthogonal_chamber
from gridfn import DyadicCube, PCFunction
from tests.conftest import atom_on, interval
from validator import AtomKind

HALF = Fraction(1, 2)


@pytest.fixture
def f(window1):
    return PCFunction.from_cells([(interval(0, HALF), Fraction(1, 3)), (interval(HALF, 1), -2)], window=window1)


def test_function_survives_json(f):
    data = function_to_dict(f)
    assert data["window"] == {"lo": ["-4"], "hi": ["4"]}
    assert [c["value"] for c in data["cells"]] == ["1/3", "-2"]

    back = function_from_dict(json.loads(dumps(data)))
    assert back.equals(f)
    assert back.window == f.window


def test_function_from_corner_cells():
    g = function_from_dict({"cells": [{"corner": ["0"], "level": 1, "side_num": 1, "value": "1/2"}]})
    assert g.dimension == 1
    assert g.integral() == Fraction(1, 4)


def test_function_rejects_bad_cells():
    with pytest.raises(InvalidArgument):
        function_from_dict({"cells": [{"corner": ["0"], "level": 1, "side_num": 0, "value": 1}]})
    with pytest.raises(InvalidArgument):
        function_from_dict({"cells": [{"corner": ["0"], "level": 1, "side_num": 1, "value": "1/0"}]})
    with pytest.raises(InvalidArgument, match="Invalid PCFunction"):
        function_from_dict({"cells": [], "colour": "red"})


def test_chamber_from_b2_descriptor():
    roots = [[1, 0], [-1, 0], [0, 1], [0, -1], [1, 1], [-1, -1], [1, -1], [-1, 1]]
    chamber = chamber_from_dict({"dimension": 2, "roots": roots, "basepoint": [2, 1], "eta": [-1, -1]})
    assert chamber.order == 8
    assert chamber.eta_on_generators == (-1, -1)


def test_chamber_from_orthogonal_descriptor():
    chamber = chamber_from_dict({"dimension": 2, "roots": [[0, 1], [0, -1]], "basepoint": [0, 1], "eta": [-1]})
    assert chamber.order == 2
    assert chamber.axes == (1,)
    assert chamber.eta_bits == (1,)


def test_malformed_descriptor():
    with pytest.raises(InvalidArgument, match="roots"):
        chamber_from_dict({"dimension": 2, "basepoint": [1, 1]})
    with pytest.raises(InvalidArgument):
        chamber_from_dict([1, 2, 3])


def test_chamber_to_dict():
    data = chamber_to_dict(orthogonal_chamber(3, 2, (1, 0)), elements=True)
    assert data["order"] == 4
    assert data["axes"] == [1, 2]
    assert data["eta_bits"] == [1, 0]
    assert len(data["elements"]) == 4
    assert sorted(e["sign"] for e in data["elements"]) == [-1, -1, 1, 1]


def test_atom_list_survives_json():
    atom = atom_on([((0, HALF), 1), ((HALF, 1), -1)], 0, 1, AtomKind.A, I0=(0,))
    atom_list = AtomList([(HALF, atom)], 1, EtaVector((0,)))
    data = json.loads(dumps(atom_list_to_dict(atom_list)))
    assert data["l1"] == "1/2"
    assert data["terms"][0]["kind"] == "A"

    back = atom_list_from_dict(data)
    assert len(back) == 1
    coeff, restored = back.terms[0]
    assert coeff == HALF
    assert restored.cube == DyadicCube((Fraction(0),), (Fraction(1),))
    assert restored.kind is AtomKind.A
    assert restored.I0 == (0,)
    assert restored.payload.equals(atom.payload)
    assert back.eta == EtaVector((0,))


def test_atom_list_errors():
    payload = {"cells": []}
    with pytest.raises(InvalidArgument, match="not a cube"):
        atom_list_from_dict({"terms": [{"coeff": 1, "kind": "A", "cube": {"lo": [0, 0], "hi": [1, 2]},
                                        "payload": payload}]})
    with pytest.raises(InvalidArgument):
        atom_list_from_dict({"terms": [{"coeff": 1, "kind": "A",
                                        "cube": {"lo": [0], "hi": [1], "corner": [0], "side": 1},
                                        "payload": payload}]})
    with pytest.raises(InvalidArgument, match="empty atom list"):
        atom_list_from_dict({"terms": []})


def test_frame_to_csv(f):
    text = frame_to_csv(function_to_frame(f), "fingerprint abc")
    assert text.startswith("# fingerprint abc\n")
    frame = pd.read_csv(io.StringIO(text), comment="#")
    assert list(frame.columns) == ["lo_0", "hi_0", "value"]
    assert frame["value"].tolist() == [1 / 3, -2.0]


def test_dumps_is_canonical():
    assert dumps({"b": HALF, "a": 1}) == '{\n  "a": 1,\n  "b": "1/2"\n}'


def test_json_errors(tmp_path):
    with pytest.raises(InvalidArgument, match="x.json:1:2"):
        parse_json("{", "x.json")
    with pytest.raises(InvalidArgument, match="Cannot read"):
        read_json(tmp_path / "missing.json")
