"""Acceptance suite: one test per criterion, each printing its pass/fail
line and asserting at the stated tolerance. Shared fault runs are computed
once per session."""

import pytest

from platoonsim import acceptance
from platoonsim.controllers import GainSet
from platoonsim.params import Parameters


@pytest.fixture(scope="module")
def v2v_pair():
    return acceptance._v2v_pair()


def _assert(result):
    print(result.line())
    assert result.passed, result.line()


def test_criterion_01_steady_platooning():
    _assert(acceptance.check_steady())


def test_criterion_02_join_tail():
    _assert(acceptance.check_join_tail())


def test_criterion_03_join_middle():
    _assert(acceptance.check_join_middle())


def test_criterion_04_aeb_head():
    _assert(acceptance.check_aeb_head())


def test_criterion_05_cut_in():
    _assert(acceptance.check_cut_in())


def test_criterion_06_v2v_fault_with_degradation(v2v_pair):
    _assert(acceptance.check_v2v_fault_with_degradation(v2v_pair))


def test_criterion_07_v2v_fault_without_degradation(v2v_pair):
    _assert(acceptance.check_v2v_fault_without_degradation(v2v_pair))


def test_criterion_08_radar_fault_with_degradation():
    _assert(acceptance.check_radar_fault_with_degradation())


def test_criterion_09_radar_fault_without_degradation():
    _assert(acceptance.check_radar_fault_without_degradation())


def test_criterion_10_integrated_sequence():
    _assert(acceptance.check_integrated())


def test_criterion_11_determinism():
    _assert(acceptance.check_determinism())


def test_criterion_12_extendability():
    _assert(acceptance.check_extendability())


def test_criterion_13_fsm_closure():
    _assert(acceptance.check_fsm_closure())


def test_sensitivity_perturbed_gains_fail_equilibrium():
    # the equilibrium landmark must actually constrain the controller gains
    perturbed = GainSet(kp=4.5, ki=0.2, kd=1.0, kv=6.0, ka=3.0)
    result = acceptance.check_steady(params=Parameters(gains=perturbed))
    assert not result.passed, "x10 gains should break the steady-gap band"


def test_table_formatting_is_stable():
    a = acceptance.format_table([acceptance.check_fsm_closure()])
    b = acceptance.format_table([acceptance.check_fsm_closure()])
    assert a == b
    assert "[PASS] 13" in a
