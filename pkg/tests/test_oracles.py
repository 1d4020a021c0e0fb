from __future__ import annotations

import numpy as np
import pytest

from conftest import CONFIGS
from fingerdyn.config import parse_config
from fingerdyn.oracles import (check_christoffel, check_dissipation, check_energy_conservation, check_inertia,
                               check_order, check_work_balance, compare_variants, dynamic_test_params,
                               needs_report, report_lines, run_validation)
from fingerdyn.params import FingerParams


def test_model_checks_pass_on_unit_and_finger_params(finger_params):
    report = run_validation(finger_params, seed=0, include_dynamics=False)
    failed = [c.name for c in report.checks if not c.passed]
    assert failed == []
    assert {c.name for c in report.checks} >= {'config.inertia_equivalence', 'unit.round_trip'}


def test_printed_d11_fails_naming_the_entry(rng):
    check = check_inertia(FingerParams.unit(), rng, n=50, paper_d11=True)
    assert not check.passed
    assert check.detail == 'worst entry d_11'


def test_literal_christoffel_mismatch_is_noted(rng):
    check, info = check_christoffel(FingerParams.unit(), rng, n=20, label='unit.')
    assert check.passed
    assert 'unit.christoffel_literal.C_121' in info
    assert 'unit.christoffel_literal.C_112' not in info


@pytest.mark.parametrize('check', [check_energy_conservation, check_dissipation, check_work_balance])
def test_time_domain_checks_pass(check):
    result = check(dynamic_test_params())
    assert result.passed, result


def test_order_check():
    result = check_order()
    assert result.passed, result


def test_report_is_reproducible(finger_params):
    a = run_validation(finger_params, seed=7, paper_d11=True, include_dynamics=False)
    b = run_validation(finger_params, seed=7, paper_d11=True, include_dynamics=False)
    c = run_validation(finger_params, seed=8, paper_d11=True, include_dynamics=False)
    assert report_lines(a, True) == report_lines(b, True)
    assert report_lines(a, True) != report_lines(c, True)
    assert needs_report(a)
    assert 'use_paper_d11: true' in report_lines(a, True)
    assert 'config.inertia_equivalence.status: FAIL' in report_lines(a, True)


def test_compare_zero_dynamics_is_exact():
    config = parse_config(CONFIGS / 'zero_dynamics.json')
    result = compare_variants(config.sim, config.params, config.profile)
    for field in ('max_angle_diff', 'max_velocity_diff', 'max_inertial_torque', 'max_coriolis_torque',
                  'max_neglected_torque'):
        assert np.all(getattr(result, field) == 0.0)
    assert result.peak_speed == 0.0


def test_neglected_torque_grows_with_speed():
    quasi = parse_config(CONFIGS / 'quasi_static.json')
    fast = parse_config(CONFIGS / 'high_speed.json')
    slow = compare_variants(quasi.sim, quasi.params, quasi.profile)
    quick = compare_variants(fast.sim, fast.params, fast.profile)
    assert quick.peak_speed > slow.peak_speed
    assert np.max(quick.max_coriolis_torque) > np.max(slow.max_coriolis_torque)
    assert np.max(quick.max_neglected_torque) > np.max(slow.max_neglected_torque)
