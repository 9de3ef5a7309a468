import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from config import GeometryConfig
from errors import DegenerateBasepoint, InvalidArgument, NotAHomomorphism, NotFiniteOrTooLarge
from geometry import (EtaVector, RootSystem, build_chamber, check_hyperplane_permutation,
                      check_multiplicative, check_sign_is_determinant, generate_group,
                      orbit_patterns, orthogonal_chamber, reflect)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_orthogonal_group_order(k):
    chamber = orthogonal_chamber(3, k)
    assert chamber.order == 2 ** k
    assert check_multiplicative(chamber)


def test_a2_group_and_chamber():
    system = RootSystem.a2()
    group = generate_group(system)
    assert len(group) == 6
    assert check_hyperplane_permutation(group)
    chamber = build_chamber(system, [0.3, 1.0], [-1, -1])
    assert chamber.order == 6
    assert len(chamber.simple_roots) == 2
    assert check_sign_is_determinant(chamber)
    assert not chamber.is_orthogonal


def test_a2_mixed_signs_is_not_a_homomorphism():
    with pytest.raises(NotAHomomorphism) as info:
        build_chamber(RootSystem.a2(), [0.3, 1.0], [1, -1])
    assert info.value.words
    assert info.value.exit_code == 2


def test_b2_exact():
    roots = [[1, 0], [-1, 0], [0, 1], [0, -1], [1, 1], [-1, -1], [1, -1], [-1, 1]]
    chamber = build_chamber(RootSystem(roots), [2, 1])
    assert chamber.order == 8
    assert check_multiplicative(chamber)


@pytest.mark.parametrize("roots", [
    [[1, 0], [2, 0], [-1, 0], [-2, 0]],
    [[1, 0], [-1, 0], [1, 1], [-1, -1]],
    [[1, 0], [1, 0], [-1, 0]],
    [[0, 0], [1, 0], [-1, 0]],
])
def test_invalid_root_systems(roots):
    with pytest.raises(InvalidArgument):
        RootSystem(roots)


def test_degenerate_basepoint():
    with pytest.raises(DegenerateBasepoint):
        build_chamber(RootSystem.orthogonal(2, 2), [0, 1])


def test_closure_cap():
    with pytest.raises(NotFiniteOrTooLarge):
        generate_group(RootSystem.orthogonal(2, 2), GeometryConfig(closure_cap=3))


def test_orthogonal_chamber_axes_and_signs():
    chamber = orthogonal_chamber(3, 2, (1, 0))
    assert chamber.axes == (1, 2)
    assert chamber.eta_bits == (1, 0)
    assert chamber.plus_axes == (2,)
    assert chamber.minus_axes == (1,)
    assert chamber.contains([-5, 1, 1])
    assert not chamber.contains([0, -1, 1])


def test_sign_is_determinant_only_for_all_minus():
    assert check_sign_is_determinant(orthogonal_chamber(2, 2, (1, 1)))
    assert not check_sign_is_determinant(orthogonal_chamber(2, 2, (0, 0)))


def test_walls_containing():
    chamber = orthogonal_chamber(2, 2)
    assert chamber.walls_containing([0, 1]) == [0]
    assert chamber.walls_containing([0, 0]) == [0, 1]
    assert chamber.walls_containing([1, 1]) == []
    assert chamber.walls_containing([-1, 1]) == []


def test_orbit_patterns_cover_every_quadrant():
    patterns = orbit_patterns(orthogonal_chamber(2, 2), [1, 2])
    assert sorted(patterns) == [(-1, -1), (-1, 1), (1, -1), (1, 1)]


def test_wrong_number_of_bits():
    with pytest.raises(InvalidArgument):
        orthogonal_chamber(2, 2, (1,))


def test_eta_vector_parse():
    assert EtaVector.parse("1,0").bits == (1, 0)
    assert EtaVector.parse("10").bits == (1, 0)
    assert EtaVector.parse([0, 1]).signs == (1, -1)
    assert str(EtaVector.parse("011")) == "0,1,1"
    assert EtaVector.parse("011").k == 3


def test_eta_vector_errors():
    with pytest.raises(InvalidArgument):
        EtaVector.parse("1,2")
    with pytest.raises(InvalidArgument):
        EtaVector.parse("a,b")
    with pytest.raises(InvalidArgument):
        EtaVector.parse("10").precedes(EtaVector.parse("1"))


def test_eta_vector_order():
    assert EtaVector.parse("00").precedes(EtaVector.parse("10"))
    assert EtaVector.parse("10").precedes(EtaVector.parse("11"))
    assert not EtaVector.parse("10").precedes(EtaVector.parse("01"))


@given(
    st.lists(st.integers(-5, 5), min_size=2, max_size=2).filter(any),
    st.lists(st.integers(-9, 9), min_size=2, max_size=2),
)
def test_reflection_is_an_involution(alpha, x):
    twice = reflect(alpha, reflect(alpha, x))
    assert list(twice) == list(x)
    assert np.all(reflect(alpha, alpha) == [-a for a in alpha])


@pytest.mark.parametrize("k", [1, 2, 3])
def test_orbit_of_random_chamber_points_is_simply_transitive(k):
    chamber = orthogonal_chamber(3, k)
    every = set(itertools.product((-1, 1), repeat=k))
    rng = np.random.default_rng(k)
    for _ in range(100):
        x = rng.uniform(-2.0, 2.0, size=3)
        x[list(chamber.axes)] = rng.uniform(0.25, 2.0, size=k)
        patterns = orbit_patterns(chamber, x)
        assert len(patterns) == 2 ** k
        assert set(patterns) == every
