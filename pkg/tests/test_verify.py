import json
import math
from fractions import Fraction

import pytest

from atoms import AtomList
from config import RunConfig
from errors import InvalidArgument, InvalidInput
from bmo import CubeFamily
from gridfn import Box, PCFunction
from tests.conftest import atom_on
from validator import AtomKind
from verify import (MODULES, distinctness_probe, duality_pairing, embedding_bound, embedding_check,
                    eta_configurations, run_suite)

HALF = Fraction(1, 2)


@pytest.fixture
def quick_config():
    return RunConfig().with_overrides(window_half=4, verify={"random_functions": 2, "random_lists": 2})


def test_eta_configurations():
    configs = eta_configurations(2)
    assert (1, 1, (0,)) in configs
    assert (2, 2, (1, 1)) in configs
    assert len(configs) == 2 + 2 + 4


def test_pairing_with_constant_against_cancelling_atom():
    b = PCFunction.indicator(Box.window(4, 1), 1, window=Box.window(4, 1))
    atom = atom_on([((0, HALF), 1), ((HALF, 1), -1)], 0, 1, AtomKind.A, I0=(0,))
    value, ratio = duality_pairing(b, AtomList([(1, atom)], 1), "0", bmo_value=1.0, h1_value=1.0)
    assert value == 0
    assert ratio == 0.0


def test_pairing_with_constant_against_b_atom():
    b = PCFunction.indicator(Box.window(4, 1), 1, window=Box.window(4, 1))
    atom = atom_on([((HALF, 1), 2)], HALF, 1, AtomKind.B, I1=(0,))
    value, ratio = duality_pairing(b, AtomList([(1, atom)], 1), "1", bmo_value=1.0, h1_value=2.0)
    assert value == 1
    assert ratio == pytest.approx(0.5)


def test_pairing_rejects_mismatched_walls():
    b = PCFunction.indicator(Box.window(4, 1), 1, window=Box.window(4, 1))
    atom = atom_on([((HALF, 1), 2)], HALF, 1, AtomKind.B, I1=(0,))
    with pytest.raises(InvalidInput):
        duality_pairing(b, AtomList([(1, atom)], 1), "0", bmo_value=1.0, h1_value=1.0)
    with pytest.raises(InvalidArgument):
        duality_pairing(b, AtomList([(1, atom)], 1), bmo_value=1.0, h1_value=1.0)


def test_embedding_bound():
    assert embedding_bound(1, 1) == pytest.approx(2 * math.sqrt(10) * (1 + math.sqrt(2)))


def test_embedding_needs_order():
    atom = atom_on([((HALF, 1), 2)], HALF, 1, AtomKind.B, I1=(0,))
    with pytest.raises(InvalidArgument):
        embedding_check("1", "0", AtomList([(1, atom)], 1))


def test_embedding_of_a_b_atom():
    atom = atom_on([((HALF, 1), 2)], HALF, 1, AtomKind.B, I1=(0,))
    entry = embedding_check("1", "1", AtomList([(1, atom)], 1))
    assert entry.status == "pass"
    assert entry.details["valid"]
    assert entry.details["preserved"]


def test_distinctness_arguments():
    with pytest.raises(InvalidArgument):
        distinctness_probe("1", "1", 1)
    with pytest.raises(InvalidArgument):
        distinctness_probe("1", "01", 2)
    with pytest.raises(InvalidArgument):
        distinctness_probe("0", "1", 1, levels=[5])


def test_unknown_module():
    with pytest.raises(InvalidArgument):
        run_suite(RunConfig(), only=["physics"])


def test_geometry_module(quick_config):
    report = run_suite(quick_config, only=["geometry"])
    assert report.modules == ["geometry"]
    assert [e.name for e in report.entries] == ["group_algebra", "orbit_transitivity"]
    assert report.passed
    assert report.entries[0].details["orders"] == {"R1": 2, "R2": 4, "R3": 8, "A2": 6}
    assert report.entries[1].details["points"] == 300
    assert report.fingerprint == quick_config.fingerprint()


def test_gridfn_module(quick_config):
    report = run_suite(quick_config, only=["gridfn"])
    assert report.passed
    assert report.counts == {"pass": 1}
    assert report.entries[0].details["checked"] == 16


def test_reports_are_deterministic(quick_config):
    first = run_suite(quick_config, only=["gridfn", "geometry"])
    second = run_suite(quick_config, only=["geometry", "gridfn"])
    assert first.to_json() == second.to_json()
    parsed = json.loads(first.to_json())
    assert [e["name"] for e in parsed["entries"]] == ["extension_identities", "group_algebra", "orbit_transitivity"]
    markdown = first.to_markdown()
    assert markdown.startswith("# Acceptance suite")
    assert "| group_algebra | geometry | pass |" in markdown


def test_module_names():
    assert set(MODULES) == {"geometry", "gridfn", "kernels", "atoms", "bmo", "verify"}


SUITE_NAMES = {
    "kernels": {"kernel_minus_wall_zero", "kernel_plus_wall_derivative", "maximal_equality", "maximal_l1_identity"},
    "atoms": {"whitney_counting", "whitney_refinement", "decomposition_soundness", "whitney_coefficients",
              "extension_of_atoms", "zero_eta_has_no_b_atoms", "local_large_cubes"},
    "bmo": {"oscillation_ledger", "breaking_point_constants", "even_extension_constant", "equivalence_band_d1_0",
            "equivalence_band_d1_1", "equivalence_band_d2_1", "equivalence_band_d2_10", "odd_truncation_constant"},
    "verify": {"distinctness_d1_0_1", "distinctness_d2_0_1", "embedding_d1_0_to_1", "embedding_d2_0_to_1",
               "embedding_d2_00_to_01", "embedding_d2_00_to_10", "embedding_d2_00_to_11", "embedding_d2_01_to_11",
               "embedding_d2_10_to_11", "duality_d1_0", "duality_d1_1", "duality_d2_0", "duality_d2_1",
               "duality_d2_00", "duality_d2_01", "duality_d2_10", "duality_d2_11"},
}


MODULE_VERIFY = {"random_functions": 2, "random_lists": 8, "whitney_cubes": 30, "band_functions": 4,
                 "truncation_bound": 40.0}


@pytest.fixture(scope="module")
def module_report():
    config = RunConfig().with_overrides(verify=MODULE_VERIFY)
    reports = {}

    def run(module):
        if module not in reports:
            reports[module] = run_suite(config, only=[module])
        return reports[module]
    return run


@pytest.mark.parametrize("module", ["kernels", "atoms", "bmo", "verify"])
def test_module_passes(module_report, module):
    report = module_report(module)
    assert {e.name for e in report.entries} == SUITE_NAMES[module]
    assert {e.module for e in report.entries} == {module}
    failed = [(e.name, e.status, e.measured, e.bound) for e in report.entries if e.status != "pass"]
    assert not failed
    assert report.passed


def test_maximal_equality_covers_both_kernels(module_report):
    entry = next(e for e in module_report("kernels").entries if e.name == "maximal_equality")
    assert entry.details["modes"] == ["heat", "poisson"]


def test_odd_truncation_is_held_to_the_configured_ceiling(module_report):
    entry = next(e for e in module_report("bmo").entries if e.name == "odd_truncation_constant")
    assert entry.bound == 40.0
    assert entry.measured <= entry.bound
    assert entry.details["reference_bound"] == 2
    assert len(entry.details["ratios"]) == 5


def test_refined_whitney_configurations_are_exercised(module_report):
    entry = next(e for e in module_report("atoms").entries if e.name == "whitney_refinement")
    assert entry.status == "pass"
    assert entry.details["configurations"] == 80
    assert entry.details["refined"] > 0
    assert entry.measured == 0


def test_local_pairing_with_a_large_b_atom():
    b = PCFunction.indicator(Box.window(4, 1), 1, window=Box.window(4, 1))
    atom = atom_on([((0, 2), HALF)], 0, 2, AtomKind.LOCAL_B, I1=(0,))
    f = AtomList([(1, atom)], 1, None, "local")
    value, ratio = duality_pairing(b, f, "1", "local", bmo_value=1.0, h1_value=2.0)
    assert value == 1
    assert ratio == pytest.approx(0.5)


def test_local_pairing_computes_both_norms():
    window = Box.window(4, 1)
    b = PCFunction.indicator(Box((0,), (4,)), 1, window=window)
    atom = atom_on([((0, 2), HALF)], 0, 2, AtomKind.LOCAL_B, I1=(0,))
    value, ratio = duality_pairing(b, AtomList([(1, atom)], 1, None, "local"), "1", "local",
                                   family=CubeFamily(window=window, max_level=3), h=0.25, window=window)
    assert value == 1
    assert math.isfinite(ratio)
    assert ratio > 0


def test_local_pairing_rejects_large_local_a_atoms():
    b = PCFunction.indicator(Box.window(4, 1), 1, window=Box.window(4, 1))
    atom = atom_on([((0, 1), 1), ((1, 2), -1)], 0, 2, AtomKind.LOCAL_A, I0=(0,))
    with pytest.raises(InvalidInput):
        duality_pairing(b, AtomList([(HALF, atom)], 1, None, "local"), "0", "local", bmo_value=1.0, h1_value=1.0)
