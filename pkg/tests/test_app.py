import json
from fractions import Fraction

import pytest
from fastapi.testclient import TestClient

from adapters.serialization import atom_list_to_dict, dumps
from app import app
from atoms import AtomList
from tests.conftest import atom_on
from validator import AtomKind

HALF = Fraction(1, 2)
UNIT = {"cells": [{"corner": ["0"], "level": 0, "side_num": 1, "value": "1"}]}


@pytest.fixture
def client():
    with TestClient(app) as c:
        yield c


def test_root(client):
    response = client.get("/")
    assert response.status_code == 200
    assert response.json()["health"] == "/health"


def test_health(client):
    data = client.get("/health").json()
    assert data["status"] == "healthy"
    assert data["components"]["geometry"] == "healthy"
    assert data["issues"] == []


def test_group(client):
    response = client.post("/group", json={"dimension": 3, "eta": [1, 0, 1]})
    assert response.status_code == 200
    data = response.json()
    assert data["success"]
    assert data["chamber"]["order"] == 8
    assert data["metadata"]["fingerprint"]


def test_group_errors_map_to_status_codes(client):
    response = client.post("/group", json={"dimension": 2})
    assert response.status_code == 400
    body = response.json()
    assert not body["success"]
    assert body["error"]["kind"] == "invalid-argument"

    assert client.post("/group", json={"dimension": 0, "eta": [1]}).status_code == 422


def test_extend_function(client):
    data = client.post("/extend", json={"function": UNIT, "eta": [1], "dimension": 1}).json()
    assert data["success"]
    assert sorted(c["value"] for c in data["function"]["cells"]) == ["-1", "1"]
    assert data["metadata"]["order"] == 2


def test_decompose(client):
    atom = atom_on([((0, HALF), 1), ((HALF, 1), -1)], 0, 1, AtomKind.CLASSICAL)
    atoms = json.loads(dumps(atom_list_to_dict(AtomList([(Fraction(3, 2), atom)], 1))))
    data = client.post("/decompose", json={"atoms": atoms, "eta": [0]}).json()
    assert data["success"]
    assert data["validation"]["valid"]
    assert [t["kind"] for t in data["atoms"]["terms"]] == ["A"]
    assert data["metadata"]["ratio"] == pytest.approx(1.0)


def test_decompose_rejects_non_classical_atoms(client):
    atom = atom_on([((0, HALF), 1), ((HALF, 1), -1)], 0, 1, AtomKind.A)
    atoms = json.loads(dumps(atom_list_to_dict(AtomList([(1, atom)], 1))))
    response = client.post("/decompose", json={"atoms": atoms, "eta": [0]})
    assert response.status_code == 400
    assert response.json()["error"]["kind"] == "invalid-input"


def test_bmo_norm(client):
    plain = client.post("/bmo-norm", json={"function": UNIT, "flavor": "BMO", "levels": 3}).json()
    assert plain["success"]
    assert plain["report"]["value"] == pytest.approx(0.5)

    odd = client.post("/bmo-norm", json={"function": UNIT, "flavor": "BMO", "levels": 3, "eta": [1]}).json()
    assert odd["report"]["value"] == pytest.approx(1.0)
    assert odd["report"]["eta"] == [1]
