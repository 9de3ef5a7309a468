from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings as hsettings, strategies as st

from bmo import (BEST, MEAN, CubeFamily, bmo_norm, broken_log_sample, even_extend_bmo, eta_bmo_norm,
                 intrinsic_M1_M2, odd_restrict_bmo, odd_truncation, oscillation, phi_sample, psi_sample,
                 sample_functions, weighted_median)
from errors import EmptyCube, InvalidArgument, InvalidInput, NotFiniteOrTooLarge
from geometry import orthogonal_chamber
from gridfn import Box, DyadicCube, PCFunction
from tests.conftest import interval

WINDOW = Box.window(4, 1)


@pytest.fixture
def family():
    return CubeFamily(window=WINDOW, max_level=3)


@pytest.fixture
def unit():
    return PCFunction.indicator(interval(0, 1), 1, window=WINDOW)


def step_function():
    return PCFunction.from_cells([(interval(0, 1), 1), (interval(1, 2), 2), (interval(2, 3), 10)], window=WINDOW)


def test_oscillation_mean_and_best():
    F = step_function()
    Q = interval(0, 3)
    assert oscillation(F, Q, MEAN) == Fraction(34, 9)
    assert oscillation(F, Q, BEST) == 3


def test_oscillation_counts_empty_part_as_zero(unit):
    assert oscillation(unit, interval(0, 2), MEAN) == Fraction(1, 2)
    assert oscillation(unit, interval(0, 2), BEST) == Fraction(1, 2)


def test_oscillation_errors(unit):
    with pytest.raises(EmptyCube):
        oscillation(unit, interval(5, 6))
    with pytest.raises(InvalidArgument):
        oscillation(unit, interval(0, 1), "mode")


def test_weighted_median():
    assert weighted_median(np.array([3.0, 1.0, 2.0]), np.array([1.0, 1.0, 5.0])) == 2.0
    assert weighted_median(np.array([0.0, 1.0]), np.array([1.0, 1.0])) == 0.0


def test_family_grid(family):
    assert family.min_level == -2
    assert family.shift(1) == Fraction(1, 8)
    assert family.shift(-1) == Fraction(5, 8)
    assert family.offsets(3) == (0,)
    assert family.contains(DyadicCube.from_corner([0], 1))
    assert family.contains(DyadicCube.from_corner([Fraction(-1, 8)], Fraction(1, 4)))
    assert not family.contains(DyadicCube.from_corner([Fraction(1, 3)], 1))
    assert not family.contains(DyadicCube.from_corner([0], Fraction(1, 16)))
    assert all(family.contains(Q) for Q in family.cubes())


def test_family_filters(family):
    inside = family.with_(inside=(0,))
    assert all(Q.lo[0] >= 0 for Q in inside.cubes())
    small = family.with_(length="small", break_point=Fraction(1, 2))
    assert all(Q.side < Fraction(1, 2) for Q in small.cubes())
    adjacent = family.with_(inside=(0,), adjacent=(0,))
    assert all(Q.lo[0] == 0 for Q in adjacent.cubes())
    assert family.first_cube() is not None


def test_family_validation():
    with pytest.raises(InvalidArgument):
        CubeFamily(window=WINDOW, max_level=-1)
    with pytest.raises(NotFiniteOrTooLarge):
        CubeFamily(window=WINDOW, max_level=31)
    with pytest.raises(InvalidArgument):
        CubeFamily(window=WINDOW, kappa=Fraction(-1))
    with pytest.raises(InvalidArgument):
        CubeFamily(window=WINDOW, break_point=0)


def test_bmo_of_indicator(unit, family):
    report = bmo_norm(unit, family, "BMO")
    assert report.value == pytest.approx(0.5)
    assert report.modulo_constants
    assert report.argmax is not None
    assert bmo_norm(unit, family, "BMO*").value == pytest.approx(0.5)


def test_local_flavors(unit, family):
    report = bmo_norm(unit, family, "bmo")
    assert report.oscillation_part == pytest.approx(0.5)
    assert report.mean_part == pytest.approx(1.0)
    assert report.value == pytest.approx(1.5)
    assert not report.modulo_constants

    one = bmo_norm(unit, family, "bmo*", break_point=1).value
    two = bmo_norm(unit, family, "bmo*", break_point=2).value
    assert (one, two) == pytest.approx((1.5, 1.0))
    assert two <= 2 * one
    assert one <= 3 * two


def test_unknown_flavor(unit, family):
    with pytest.raises(InvalidArgument):
        bmo_norm(unit, family, "VMO")


def test_constants_have_zero_bmo(family):
    constant = PCFunction.indicator(Box.window(4, 1), 3, window=WINDOW)
    assert bmo_norm(constant, family.with_(window=Box.window(2, 1)), "BMO").value == 0.0


def test_eta_bmo_norm(unit, family):
    odd = eta_bmo_norm(unit, orthogonal_chamber(1, 1, (1,)), family, "BMO")
    even = eta_bmo_norm(unit, orthogonal_chamber(1, 1, (0,)), family, "BMO")
    assert odd.value == pytest.approx(1.0)
    assert not odd.modulo_constants
    assert odd.eta == [1]
    assert even.value == pytest.approx(0.5)
    assert even.modulo_constants


def test_intrinsic_characterization(unit, family):
    odd = intrinsic_M1_M2(unit, orthogonal_chamber(1, 1, (1,)), family)
    assert odd.m1 == pytest.approx(0.5)
    assert odd.m2 == pytest.approx(1.0)
    assert odd.total == pytest.approx(1.5)
    even = intrinsic_M1_M2(unit, orthogonal_chamber(1, 1, (0,)), family)
    assert even.m2 == 0.0
    assert even.argmax_m2 is None
    local = intrinsic_M1_M2(unit, orthogonal_chamber(1, 1, (0,)), family, mode="local")
    assert local.m2 == pytest.approx(1.0)
    assert local.break_point == "1"


def test_even_extension():
    F = PCFunction.from_cells([(interval(-1, 0), 5), (interval(0, 1), 2)], window=WINDOW)
    expected = PCFunction.indicator(interval(-1, 1), 2, window=WINDOW)
    assert even_extend_bmo(F, 0).equals(expected)


def test_odd_restriction(unit):
    odd = PCFunction.from_cells([(interval(-1, 0), -1), (interval(0, 1), 1)], window=WINDOW)
    assert odd_restrict_bmo(odd, 0).equals(unit)
    with pytest.raises(InvalidInput):
        odd_restrict_bmo(unit, 0)
    with pytest.raises(InvalidArgument):
        odd_restrict_bmo(odd, 1)


def test_odd_truncation(unit, family):
    F, ratio = odd_truncation(unit, orthogonal_chamber(1, 1, (1,)), family)
    assert F.equals(unit)
    assert ratio == pytest.approx(0.5)


def test_psi_sample():
    f = psi_sample(4, 1, window=WINDOW)
    assert f.value_mode == "float"
    assert np.all(f.values > 0)
    assert float(np.max(f.values)) == pytest.approx(5 * np.log(2))
    assert f.reflect([0]).equals(f, tol=1e-12)


def test_odd_samples():
    broken = broken_log_sample(4, 1, window=WINDOW)
    assert broken.reflect([0]).equals(-broken, tol=1e-12)
    phi = phi_sample(3, 1, window=WINDOW)
    assert phi.reflect([0]).equals(-phi, tol=1e-12)
    with pytest.raises(InvalidArgument):
        phi_sample(3, 1, window=Box.window(2, 1))


def test_sample_functions():
    assert len(sample_functions("psi", 2, 1, window=WINDOW)) > 0
    with pytest.raises(InvalidArgument):
        sample_functions("gaussian", 2)
    with pytest.raises(InvalidArgument):
        sample_functions("psi", -1)
    with pytest.raises(InvalidArgument):
        psi_sample(2, 1, center=[Fraction(1, 3)], window=WINDOW)


@hsettings(max_examples=25, deadline=None)
@given(st.lists(st.integers(-6, 6), min_size=4, max_size=4))
def test_best_constant_is_within_factor_two_of_mean(values):
    F = PCFunction.from_cells([(interval(Fraction(i, 2), Fraction(i + 1, 2)), v)
                               for i, v in enumerate(values) if v], window=WINDOW)
    Q = interval(0, 2)
    best, mean = oscillation(F, Q, BEST), oscillation(F, Q, MEAN)
    assert best <= mean <= 2 * best


@pytest.mark.parametrize("flavor", ["BMO", "BMO*", "bmo", "bmo*"])
def test_norm_grows_with_the_family(flavor):
    F = step_function()
    narrow = CubeFamily(window=Box.window(2, 1), max_level=3)
    wide = CubeFamily(window=WINDOW, max_level=3)
    coarse_cut = CubeFamily(window=WINDOW, max_level=3, min_level=0)
    assert set(narrow.cubes()) <= set(wide.cubes())
    assert bmo_norm(F, wide, flavor).value >= bmo_norm(F, narrow, flavor).value - 1e-12
    assert bmo_norm(F, wide, flavor).value >= bmo_norm(F, coarse_cut, flavor).value - 1e-12


def test_wall_term_grows_with_kappa(family):
    chamber = orthogonal_chamber(1, 1, (1,))
    f = PCFunction.from_cells([(interval(0, 1), 1), (interval(1, 2), 4)], window=WINDOW)
    values = [intrinsic_M1_M2(f, chamber, family.with_(kappa=kappa)).m2 for kappa in (0, 1, 3)]
    assert values[0] <= values[1] + 1e-12
    assert values[1] <= values[2] + 1e-12
    assert values[2] > values[0]
