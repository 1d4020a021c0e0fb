from __future__ import annotations

import json

import numpy as np
import pytest

from conftest import CALIBRATION_PROFILE, CALIBRATION_SIM, CALIBRATION_TRUTH, CONFIGS, default_document
from fingerdyn.cli import EXIT_CALIBRATION, EXIT_CONFIG, EXIT_OK, EXIT_SIMULATION, main
from fingerdyn.simulation import COLUMNS, read_trajectory_csv


@pytest.fixture
def short_config(write_config):
    document = default_document()
    document['sim']['t_end'] = 0.2
    return write_config(document, 'short.json')


@pytest.fixture
def calibration_config(write_config):
    document = {
        'params': CALIBRATION_TRUTH,
        'sim': CALIBRATION_SIM,
        'profile': CALIBRATION_PROFILE,
        'calibration': {'free': ['cd'], 'bounds': {'cd': [0.0, 0.1]}, 'x0': {'cd': 0.05}},
    }
    return write_config(document, 'calibrate.json')


def test_simulate_zero_dynamics(tmp_path, capsys):
    out = tmp_path / 'trajectory.csv'
    assert main(['simulate', '--config', str(CONFIGS / 'zero_dynamics.json'), '--out', str(out)]) == EXIT_OK
    traj = read_trajectory_csv(out)
    assert np.all(traj.q == 0.0)
    assert traj.t[-1] == 1.0
    assert 'final q' in capsys.readouterr().out


def test_simulate_writes_trajectory_with_metadata(tmp_path, short_config):
    out = tmp_path / 'trajectory.csv'
    assert main(['simulate', '--config', str(short_config), '--out', str(out)]) == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0].startswith('# params_hash: ')
    assert [line for line in lines if not line.startswith('#')][0].split(',') == COLUMNS
    assert len(read_trajectory_csv(out)) == 201


def test_variant_flag_changes_the_run(tmp_path, short_config):
    full, reduced = tmp_path / 'full.csv', tmp_path / 'reduced.csv'
    assert main(['simulate', '--config', str(short_config), '--out', str(full)]) == EXIT_OK
    assert main(['simulate', '--config', str(short_config), '--out', str(reduced), '--variant', 'reduced']) == EXIT_OK
    a, b = read_trajectory_csv(full), read_trajectory_csv(reduced)
    assert a.metadata['variant'] == 'full' and b.metadata['variant'] == 'reduced'
    assert not np.array_equal(a.q, b.q)


def test_validate_default_config(tmp_path, capsys):
    report = tmp_path / 'report.txt'
    code = main(['validate', '--config', str(CONFIGS / 'default.json'), '--report', str(report)])
    assert code == EXIT_OK
    assert 'FAIL' not in capsys.readouterr().out


def test_validate_with_printed_d11_fails(tmp_path, capsys):
    first, second = tmp_path / 'first.txt', tmp_path / 'second.txt'
    args = ['validate', '--config', str(CONFIGS / 'zero_dynamics.json'), '--use-paper-d11', '--seed', '7']
    assert main(args + ['--report', str(first)]) == EXIT_SIMULATION
    assert 'd_11' in capsys.readouterr().out
    assert main(args + ['--report', str(second)]) == EXIT_SIMULATION
    assert first.read_bytes() == second.read_bytes()
    assert 'seed: 7' in first.read_text()


def test_compare_zero_dynamics(tmp_path):
    report = tmp_path / 'compare.txt'
    assert main(['compare', '--config', str(CONFIGS / 'zero_dynamics.json'), '--report', str(report)]) == EXIT_OK
    text = report.read_text()
    assert 'max_angle_diff: (0, 0, 0)' in text
    assert 'max_neglected_torque: (0, 0, 0)' in text


def test_calibrate_recovers_damping(tmp_path, calibration_config):
    reference, fitted = tmp_path / 'reference.csv', tmp_path / 'fitted.json'
    assert main(['simulate', '--config', str(calibration_config), '--out', str(reference)]) == EXIT_OK
    code = main(['calibrate', '--config', str(calibration_config), '--reference', str(reference),
                 '--out', str(fitted)])
    assert code == EXIT_OK
    params = json.loads(fitted.read_text())['params']
    assert params['cd'] == pytest.approx(CALIBRATION_TRUTH['cd'], rel=1e-2)
    assert params['kt1'] == CALIBRATION_TRUTH['kt1']


def test_calibrate_unidentifiable_parameter(tmp_path, write_config, capsys):
    document = {
        'params': CALIBRATION_TRUTH,
        'sim': CALIBRATION_SIM,
        'profile': {'kind': 'step', 'F0': 0.0},
        'calibration': {'free': ['alpha'], 'bounds': {'alpha': [0.0, 1.0]}, 'method': 'least-squares'},
    }
    config = write_config(document, 'flat.json')
    reference = tmp_path / 'reference.csv'
    assert main(['simulate', '--config', str(config), '--out', str(reference)]) == EXIT_OK
    code = main(['calibrate', '--config', str(config), '--reference', str(reference),
                 '--out', str(tmp_path / 'fitted.json')])
    assert code == EXIT_CALIBRATION
    assert 'flat cost = True' in capsys.readouterr().out
    assert not (tmp_path / 'fitted.json').exists()


def test_calibrate_reference_missing_column(tmp_path, calibration_config, capsys):
    reference = tmp_path / 'reference.csv'
    reference.write_text('t,q1,q3\n0,0,0\n0.05,0,0\n')
    code = main(['calibrate', '--config', str(calibration_config), '--reference', str(reference)])
    assert code == EXIT_CONFIG
    assert "'q2'" in capsys.readouterr().err


def test_invalid_config_exit_code(write_config, capsys):
    document = default_document()
    document['params']['lc1'] = 0.05
    assert main(['simulate', '--config', str(write_config(document))]) == EXIT_CONFIG
    assert 'params.lc1' in capsys.readouterr().err


def test_undecodable_config_exit_code(tmp_path, capsys):
    path = tmp_path / 'binary.json'
    path.write_bytes(b'\xff\xfe\x00{')
    assert main(['simulate', '--config', str(path)]) == EXIT_CONFIG
    assert 'UTF-8' in capsys.readouterr().err


def test_missing_config_exit_code(tmp_path):
    assert main(['simulate', '--config', str(tmp_path / 'absent.json')]) == EXIT_CONFIG


def test_diverging_run_exit_code(tmp_path, write_config, capsys):
    document = {
        'params': dict(m1=1, m2=1, m3=1, l1=1, l2=1, l3=1, lc1=0.5, lc2=0.5, lc3=0.5, kt=1e6, g=0),
        'sim': {'step': 0.1, 't_end': 10.0, 'record_every': 0.1, 'initial': {'q': [0.1, 0, 0]}},
    }
    code = main(['simulate', '--config', str(write_config(document)), '--out', str(tmp_path / 'out.csv')])
    assert code == EXIT_SIMULATION
    assert 'non-finite' in capsys.readouterr().err


def test_timing_flag(tmp_path, capsys):
    main(['simulate', '--config', str(CONFIGS / 'zero_dynamics.json'), '--out', str(tmp_path / 'out.csv'),
          '--timing'])
    assert 'simulate took' in capsys.readouterr().out
