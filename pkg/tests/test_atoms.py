import math
from fractions import Fraction

import pytest

from atoms import (AtomList, decompose_eta, decomposition_bound, dyadic_sqrt_ceil, even_restrict, extend_atoms,
                   fit_atom, halfspace_split, odd_extend, reconstruct, recube_local, split_bound, whitney_cells,
                   whitney_counts, whitney_covering_defect)
from errors import InvalidArgument, InvalidGeometry, InvalidInput
from geometry import orthogonal_chamber
from gridfn import Box, DyadicCube, PCFunction, eta_extend
from tests.conftest import atom_on, interval
from validator import AtomKind, AtomValidator, ValidationMode

HALF = Fraction(1, 2)
QUARTER = Fraction(1, 4)


def valid(atom_list, mode=ValidationMode.GLOBAL):
    return AtomValidator(mode).validate_list(atom_list.atoms)["valid"]


def straddling_indicator():
    """1 on (-1/4, 3/4): an atom with no cancellation that crosses x = 0."""
    return atom_on([((-QUARTER, Fraction(3, 4)), 1)], -QUARTER, Fraction(3, 4), AtomKind.A)


def straddling_halves(kind=AtomKind.CLASSICAL):
    return atom_on([((-HALF, 0), 1), ((0, HALF), -1)], -HALF, HALF, kind)


def test_dyadic_sqrt_ceil():
    assert dyadic_sqrt_ceil(2, 4) == Fraction(23, 16)
    assert dyadic_sqrt_ceil(Fraction(9, 4)) == Fraction(3, 2)
    assert dyadic_sqrt_ceil(0) == 0
    with pytest.raises(InvalidArgument):
        dyadic_sqrt_ceil(-1)


def test_fit_atom_normalises():
    G = PCFunction.indicator(interval(0, 1), 3)
    c, atom = fit_atom(G, DyadicCube.from_corner([0], 1), (), (), AtomKind.CLASSICAL)
    assert c == 3
    assert atom.payload.l2_squared() == 1
    assert fit_atom(PCFunction.zero(1), DyadicCube.from_corner([0], 1), (), (), AtomKind.A) is None


def test_bounds():
    assert split_bound(1) == 2
    assert split_bound(2) == 12
    assert decomposition_bound(1, 1) == pytest.approx(1 + math.sqrt(2))
    assert decomposition_bound(2, 2) == pytest.approx((1 + math.sqrt(12)) ** 2)


def test_whitney_cells_one_dimension():
    Q = interval(-QUARTER, Fraction(3, 4))
    cells = whitney_cells(Q, 0, max_level=4)
    assert [D.lo[0] for D in cells] == [HALF, QUARTER, Fraction(1, 8), Fraction(1, 16)]
    assert whitney_counts(cells) == {1: 1, 2: 1, 3: 1, 4: 1}
    assert whitney_covering_defect(Q, 0, cells, 4) == 0


def test_whitney_cells_two_dimensions():
    Q = Box((0, -QUARTER), (1, Fraction(3, 4)))
    cells = whitney_cells(Q, 1, max_level=3)
    assert whitney_counts(cells) == {1: 2, 2: 4, 3: 8}
    assert whitney_covering_defect(Q, 1, cells, 3) == 0
    for D in cells:
        assert D.side == D.lo[1]


def test_whitney_cells_refined_off_a_second_wall():
    Q = DyadicCube.from_corner((Fraction(3, 4), QUARTER), 1)
    plain = whitney_cells(Q, 1, walls=(0,), max_level=3)
    assert any(D.double().lo[0] < 0 for D in plain)

    refined = whitney_cells(Q, 1, walls=(0,), max_level=3, refine_walls=(0,))
    assert DyadicCube.from_corner((HALF, 1), HALF) in refined
    assert DyadicCube.from_corner((0, 1), 1) not in refined
    assert all(D.double().lo[0] >= 0 for D in refined)
    assert whitney_covering_defect(Q, 1, refined, 3) == 0


def test_whitney_refinement_needs_room_from_the_wall():
    Q = DyadicCube.from_corner((0, QUARTER), 1)
    with pytest.raises(InvalidGeometry):
        whitney_cells(Q, 1, walls=(0,), max_level=3, refine_walls=(0,))


@pytest.mark.parametrize("lo,hi", [(1, 2), (-2, -1)])
def test_whitney_cells_rejects_cubes_away_from_the_wall(lo, hi):
    with pytest.raises(InvalidGeometry):
        whitney_cells(interval(lo, hi), 0)


def test_whitney_cells_rejects_wall_axis():
    with pytest.raises(InvalidGeometry):
        whitney_cells(interval(-QUARTER, Fraction(3, 4)), 0, walls=[0])


def test_halfspace_split_global():
    atom_list = AtomList([(1, straddling_indicator())], 1)
    out = halfspace_split(atom_list, 0)

    coefficients = [c for c, _ in out.terms]
    assert [float(c) for c in coefficients] == pytest.approx([math.sqrt(2) / 4, 0.25, 0.125, 0.0625], abs=1e-9)
    assert coefficients[1:] == [QUARTER, Fraction(1, 8), Fraction(1, 16)]
    assert all(a.kind == AtomKind.B and a.I1 == (0,) for a in out.atoms)
    assert valid(out)

    assert out.residual.equals(PCFunction.indicator(interval(0, Fraction(1, 16))))
    assert reconstruct(out).equals(PCFunction.indicator(interval(0, Fraction(3, 4))))

    entry = out.ledger[-1]
    assert entry["cases"]["whitney"] == 1
    assert entry["max_whitney_sum"] ** 2 <= split_bound(1)


def test_halfspace_split_keeps_far_atoms():
    inside = atom_on([((2, Fraction(5, 2)), 1), ((Fraction(5, 2), 3), -1)], 2, 3, AtomKind.A)
    near = atom_on([((HALF, 1), 2), ((1, Fraction(3, 2)), -2)], HALF, Fraction(3, 2), AtomKind.A)
    out = halfspace_split(AtomList([(1, inside), (3, near)], 1), 0)
    assert [a.kind for a in out.atoms] == [AtomKind.A, AtomKind.B]
    assert out.ledger[-1]["cases"] == {"inside": 1, "near": 1, "whitney": 0, "dropped": 0}
    assert out.l1 == 4


def test_halfspace_split_rejects_used_axis():
    atom = atom_on([((0, HALF), 1), ((HALF, 1), -1)], 0, 1, AtomKind.A, I0=(0,))
    with pytest.raises(InvalidArgument):
        halfspace_split(AtomList([(1, atom)], 1), 0)


def test_decompose_plus_wall_is_identity():
    atom = atom_on([((0, HALF), 1), ((HALF, 1), -1)], 0, 1, AtomKind.CLASSICAL)
    out = decompose_eta(AtomList([(Fraction(3, 2), atom)], 1), "0")
    assert len(out) == 1
    c, a = out.terms[0]
    assert c == Fraction(3, 2)
    assert a.kind == AtomKind.A
    assert (a.I0, a.I1) == ((0,), ())
    assert out.ledger[-1]["ratio"] == 1.0
    assert valid(out)


def test_decompose_minus_wall_global():
    out = decompose_eta(AtomList([(1, straddling_halves())], 1), "1")
    assert valid(out)
    assert [c for c, _ in out.terms] == [QUARTER, Fraction(1, 8)]
    entry = out.ledger[-1]
    assert entry["ratio"] == pytest.approx(0.375)
    assert entry["ratio"] <= entry["bound"]
    expected = PCFunction.indicator(interval(0, HALF), -1)
    assert reconstruct(out).equals(expected)


def test_decompose_minus_wall_local_has_no_tail():
    out = decompose_eta(AtomList([(1, straddling_halves(AtomKind.LOCAL_CLASSICAL))], 1, mode="local"), "1", "local")
    assert out.residual is None
    assert out.tail_l1 == 0
    assert valid(out, ValidationMode.LOCAL)
    assert out.atoms[-1].cube == DyadicCube.from_corner([0], 2)
    assert out.l1 == Fraction(7, 8)
    assert reconstruct(out).equals(PCFunction.indicator(interval(0, HALF), -1))


def test_decompose_two_dimensions():
    atom = atom_on([(Box((0, -HALF), (HALF, 0)), 1), (Box((HALF, -HALF), (1, 0)), -1),
                    (Box((0, 0), (HALF, HALF)), -1), (Box((HALF, 0), (1, HALF)), 1)],
                   (0, -HALF), (1, HALF), AtomKind.CLASSICAL)
    out = decompose_eta(AtomList([(1, atom)], 2), "01")
    assert valid(out)
    assert out.ledger[-1]["ratio"] <= decomposition_bound(2, 2)
    target = atom.payload.restrict_halfspace(1, True)
    assert reconstruct(out).equals(target)


def test_decompose_rejects_bad_input():
    a_atom = atom_on([((0, HALF), 1), ((HALF, 1), -1)], 0, 1, AtomKind.A)
    with pytest.raises(InvalidInput) as info:
        decompose_eta(AtomList([(1, a_atom)], 1), "0")
    assert info.value.index == 0
    with pytest.raises(InvalidInput):
        decompose_eta(AtomList([(1, straddling_halves())], 1), "0")
    with pytest.raises(InvalidArgument):
        decompose_eta(AtomList([(1, straddling_halves())], 1), "11")


def test_extend_a_atom():
    atom = atom_on([((2, Fraction(5, 2)), 1), ((Fraction(5, 2), 3), -1)], 2, 3, AtomKind.A, I1=(0,))
    atom_list = AtomList([(2, atom)], 1, None)
    out = extend_atoms(atom_list, "1")
    assert len(out) == 2
    assert all(a.kind == AtomKind.CLASSICAL for a in out.atoms)
    assert valid(out)
    assert reconstruct(out).equals(eta_extend(atom.payload.scale(2), orthogonal_chamber(1, 1, (1,))))


def test_extend_b_atom_merges_with_its_reflection():
    atom = atom_on([((HALF, 1), 2)], HALF, 1, AtomKind.B, I1=(0,))
    out = extend_atoms(AtomList([(1, atom)], 1), "1")
    assert len(out) == 1
    assert out.atoms[0].cube == DyadicCube.from_corner([-1], 2)
    scales = out.ledger[-1]["b_scales"]
    assert scales[0]["J"] == [0]
    assert scales[0]["ratio"] == 4
    assert scales[0]["mean"] == 0
    assert valid(out)
    assert reconstruct(out).equals(eta_extend(atom.payload, orthogonal_chamber(1, 1, (1,))))


def test_extend_across_minus_keeps_plus_walls():
    atom = atom_on([(Box((HALF, 0), (1, HALF)), 2)], (HALF, 0), (1, HALF), AtomKind.B, I0=(1,), I1=(0,))
    out = extend_atoms(AtomList([(1, atom)], 2), "10", across="minus")
    assert all(a.I0 == (1,) for a in out.atoms)
    assert valid(out)


def test_extend_rejects_invalid_atoms():
    bad = atom_on([((2, 3), 1)], 2, 3, AtomKind.A, I1=(0,))
    with pytest.raises(InvalidInput):
        extend_atoms(AtomList([(1, bad)], 1), "1")
    good = atom_on([((2, Fraction(5, 2)), 1), ((Fraction(5, 2), 3), -1)], 2, 3, AtomKind.A, I1=(0,))
    with pytest.raises(InvalidInput):
        extend_atoms(AtomList([(1, good)], 1), "0")
    with pytest.raises(InvalidArgument):
        extend_atoms(AtomList([(1, good)], 1), "1", across="plus")


def test_even_restrict_pair():
    atom = atom_on([((1, Fraction(3, 2)), 1), ((Fraction(3, 2), 2), -1)], 1, 2, AtomKind.CLASSICAL)
    out = even_restrict(AtomList([(1, atom), (1, atom.reflect([0]))], 1), 0)
    assert len(out) == 2
    for a in out.atoms:
        assert a.cube == DyadicCube.from_corner([1], 1)
        assert a.I0 == (0,)
        assert a.payload.equals(atom.payload.scale(HALF))


def test_even_restrict_straddling_atom():
    atom = atom_on([((-HALF, -QUARTER), 1), ((-QUARTER, QUARTER), -1), ((QUARTER, HALF), 1)],
                   -HALF, HALF, AtomKind.CLASSICAL)
    out = even_restrict(AtomList([(1, atom)], 1), 0)
    assert out.atoms[0].cube == DyadicCube.from_corner([0], 1)
    assert out.atoms[0].payload.equals(atom.payload.restrict_halfspace(0, True))


def test_even_restrict_needs_even_input():
    atom = atom_on([((1, Fraction(3, 2)), 1), ((Fraction(3, 2), 2), -1)], 1, 2, AtomKind.CLASSICAL)
    with pytest.raises(InvalidInput):
        even_restrict(AtomList([(1, atom)], 1), 0)


def test_odd_extend():
    right = atom_on([((1, Fraction(3, 2)), 1), ((Fraction(3, 2), 2), -1)], 1, 2, AtomKind.CLASSICAL, I0=(0,))
    left = right.reflect([0])
    out = odd_extend(AtomList([(2, right), (5, left)], 1), 0)
    assert [c for c, _ in out.terms] == [2, -2]
    assert all(a.I0 == () for a in out.atoms)
    assert out.atoms[1].cube == DyadicCube.from_corner([-2], 1)


def test_odd_extend_straddling_cube():
    atom = atom_on([((-QUARTER, Fraction(3, 4)), 1)], -QUARTER, Fraction(3, 4), AtomKind.CLASSICAL)
    out = odd_extend(AtomList([(1, atom)], 1), 0)
    c, extended = out.terms[0]
    assert extended.cube == DyadicCube.from_corner([Fraction(-3, 4)], Fraction(3, 2))
    assert c == Fraction(3, 2)
    assert (extended.payload.scale(c)).integral() == 0


def test_recube_local():
    atom = atom_on([((0, HALF), 1)], 0, HALF, AtomKind.LOCAL_CLASSICAL)
    c, big = recube_local(atom)
    assert c == 1
    assert big.cube == DyadicCube.from_corner([0], 2)
    assert big.kind == AtomKind.LOCAL_B
    assert AtomValidator(ValidationMode.LOCAL).validate_atom(big)["valid"]
    with pytest.raises(InvalidArgument):
        recube_local(atom_on([((0, 1), 1)], 0, 1, AtomKind.LOCAL_CLASSICAL))
