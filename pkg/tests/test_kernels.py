import math

import numpy as np
import pytest
from scipy import integrate

from config import KernelConfig, TGrid
from errors import ConfigError, InvalidArgument
from geometry import orthogonal_chamber
from gridfn import Box, PCFunction, eta_extend
from kernels import (GLOBAL, HEAT, LOCAL, POISSON, cell_integrals, chamber_lattice, eta_heat_kernel,
                     eta_poisson_kernel, gauss_kernel, h1_norm_estimate, h1_norm_whole_space, maximal_transform,
                     maximal_via_extension, poisson_kernel, t_values, wall_normal_derivative)
from tests.conftest import interval

SMALL_GRID = TGrid(t_min=0.25, ratio=2, t_max=4)


def test_gauss_kernel_at_origin():
    assert gauss_kernel(1.0, [0.0]) == pytest.approx(1 / math.sqrt(4 * math.pi))
    assert gauss_kernel(1.0, [0.0, 0.0]) == pytest.approx(1 / (4 * math.pi))


def test_poisson_kernel_in_one_dimension():
    assert poisson_kernel(1.0, [0.0]) == pytest.approx(1 / math.pi)


@pytest.mark.parametrize("kernel", [gauss_kernel, poisson_kernel])
def test_time_must_be_positive(kernel):
    with pytest.raises(InvalidArgument):
        kernel(0.0, [0.0])
    with pytest.raises(InvalidArgument):
        eta_heat_kernel(-1.0, [0.0], [1.0], orthogonal_chamber(1, 1))


@pytest.mark.parametrize("kernel", [eta_heat_kernel, eta_poisson_kernel])
def test_kernel_vanishes_on_minus_wall(kernel):
    chamber = orthogonal_chamber(1, 1, (1,))
    assert kernel(1.0, [0.0], [0.5], chamber) == 0.0


def test_kernel_is_symmetric():
    chamber = orthogonal_chamber(2, 2, (1, 0))
    x, y = [0.3, 1.2], [1.5, 0.4]
    assert eta_heat_kernel(0.7, x, y, chamber) == pytest.approx(eta_heat_kernel(0.7, y, x, chamber))


@pytest.mark.parametrize("h", [1e-3, 1e-4])
def test_normal_derivative_vanishes_on_plus_wall(h):
    chamber = orthogonal_chamber(1, 1, (0,))
    derivative = wall_normal_derivative(eta_heat_kernel, 1.0, [0.0], [0.5], chamber, 0, h)
    assert abs(derivative) < 1e-5


def test_heat_cell_integral_of_large_cell():
    f = PCFunction.indicator(interval(-4, 4), 1, window=Box.window(4, 1))
    integrals = cell_integrals(np.array([[0.0]]), f, 0.01, HEAT)
    assert integrals[0, 0] == pytest.approx(1.0)


def test_unknown_mode():
    f = PCFunction.indicator(interval(0, 1), 1, window=Box.window(4, 1))
    with pytest.raises(InvalidArgument):
        cell_integrals(np.array([[0.0]]), f, 1.0, "wave")


def test_chamber_lattice_stays_in_chamber():
    chamber = orthogonal_chamber(2, 1, (1,))
    points, box = chamber_lattice(chamber, Box.window(2, 2), 0.5)
    assert box == Box((-2, 0), (2, 2))
    assert len(points) == 32
    assert np.all(points[:, 1] > 0)


def test_local_range_times():
    config = KernelConfig()
    assert all(t < config.local_t_max for t in t_values(SMALL_GRID, LOCAL, config))
    assert t_values(SMALL_GRID, GLOBAL, config) == [0.25, 0.5, 1.0, 2.0, 4.0]
    with pytest.raises(ConfigError):
        t_values(TGrid(t_min=2, ratio=2, t_max=4), LOCAL, config)
    with pytest.raises(InvalidArgument):
        t_values(SMALL_GRID, "semi", config)


@pytest.mark.parametrize("bits", [(0, 0), (1, 0), (1, 1)])
def test_transform_matches_transform_of_extension(bits):
    chamber = orthogonal_chamber(2, 2, bits)
    f = PCFunction.from_cells([(Box((0, 0), (1, 1)), 1), (Box((1, 0), (2, 1)), -2)], window=Box.window(2, 2))
    direct = maximal_transform(f, chamber, mode=HEAT, t_grid=SMALL_GRID, h=0.5)
    extended = maximal_via_extension(f, chamber, mode=HEAT, t_grid=SMALL_GRID, h=0.5)
    np.testing.assert_allclose(direct.values, extended.values, rtol=1e-10, atol=1e-12)


@pytest.mark.parametrize("bits", [(0,), (1,)])
def test_chamber_estimate_is_whole_space_over_order(bits):
    chamber = orthogonal_chamber(1, 1, bits)
    f = PCFunction.indicator(interval(0, 1), 1, window=Box.window(4, 1))
    estimate = h1_norm_estimate(f, chamber, t_grid=SMALL_GRID, h=0.25)
    whole = h1_norm_whole_space(eta_extend(f, chamber), t_grid=SMALL_GRID, h=0.25)
    assert estimate.extra["order"] == 2
    assert estimate.value == pytest.approx(whole.value / 2, rel=1e-9)
    assert estimate.to_dict()["points"] == 16


def test_odd_extension_has_smaller_estimate():
    f = PCFunction.indicator(interval(0, 1), 1, window=Box.window(4, 1))
    odd = h1_norm_estimate(f, orthogonal_chamber(1, 1, (1,)), t_grid=SMALL_GRID, h=0.25)
    even = h1_norm_estimate(f, orthogonal_chamber(1, 1, (0,)), t_grid=SMALL_GRID, h=0.25)
    assert 0 < odd.value < even.value


def test_heat_semigroup_on_the_line():
    t, s, x, y = 0.1, 0.1, 0.3, -0.2
    value, _ = integrate.quad(lambda z: gauss_kernel(t, [x - z]) * gauss_kernel(s, [z - y]), -np.inf, np.inf)
    assert value == pytest.approx(gauss_kernel(t + s, [x - y]), rel=1e-4)


@pytest.mark.parametrize("bits", [(0,), (1,)])
def test_eta_heat_semigroup_on_the_half_line(bits):
    chamber = orthogonal_chamber(1, 1, bits)
    t, s, x, y = 0.1, 0.1, 0.3, 0.5
    value, _ = integrate.quad(
        lambda z: eta_heat_kernel(t, [x], [z], chamber) * eta_heat_kernel(s, [z], [y], chamber), 0, np.inf)
    assert value == pytest.approx(eta_heat_kernel(t + s, [x], [y], chamber), rel=1e-4)


def test_eta_heat_semigroup_on_the_quadrant():
    chamber = orthogonal_chamber(2, 2, (1, 0))
    t, s, x, y = 0.1, 0.1, [0.3, 0.4], [0.5, 0.2]
    value, _ = integrate.dblquad(
        lambda z1, z0: eta_heat_kernel(t, x, [z0, z1], chamber) * eta_heat_kernel(s, [z0, z1], y, chamber),
        0, 4, 0, 4)
    assert value == pytest.approx(eta_heat_kernel(t + s, x, y, chamber), rel=1e-3)


def test_poisson_kernel_has_unit_mass():
    mass, _ = integrate.quad(lambda z: poisson_kernel(0.5, [z]), -np.inf, np.inf)
    assert mass == pytest.approx(1.0, abs=1e-4)


@pytest.mark.parametrize("mode", [HEAT, POISSON])
def test_finer_t_grid_never_lowers_the_maximal_function(mode):
    chamber = orthogonal_chamber(1, 1, (0,))
    f = PCFunction.from_cells([(interval(0, 1), 1), (interval(1, 2), -2)], window=Box.window(4, 1))
    coarse = maximal_transform(f, chamber, mode=mode, t_grid=TGrid(t_min=2 ** -4, ratio=2, t_max=4), h=0.25)
    fine = maximal_transform(f, chamber, mode=mode, t_grid=TGrid(t_min=2 ** -6, ratio=2, t_max=16), h=0.25)
    assert np.all(fine.values >= coarse.values - 1e-12)


@pytest.mark.parametrize("range_", [GLOBAL, LOCAL])
@pytest.mark.parametrize("bits", [(0,), (1,)])
def test_poisson_transform_matches_transform_of_extension(bits, range_):
    chamber = orthogonal_chamber(1, 1, bits)
    f = PCFunction.from_cells([(interval(0, 1), 1), (interval(1, 2), -2)], window=Box.window(4, 1))
    direct = maximal_transform(f, chamber, mode=POISSON, range_=range_, t_grid=SMALL_GRID, h=0.25)
    extended = maximal_via_extension(f, chamber, mode=POISSON, range_=range_, t_grid=SMALL_GRID, h=0.25)
    np.testing.assert_allclose(direct.values, extended.values, rtol=1e-10, atol=1e-12)
