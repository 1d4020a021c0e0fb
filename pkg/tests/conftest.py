from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from fingerdyn.config import parse_config
from fingerdyn.params import FingerParams

CONFIGS = Path(__file__).resolve().parent.parent / 'configs'


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def unit_params():
    return FingerParams.unit()


@pytest.fixture
def finger_params():
    """the illustrative finger-scale set shipped in configs/default.json"""
    return parse_config(CONFIGS / 'default.json').params


@pytest.fixture
def write_config(tmp_path):
    """write a config document to tmp_path and return its path"""
    def _write(document: dict, name: str = 'run.json') -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(document, indent=2))
        return path
    return _write


def default_document() -> dict:
    return json.loads((CONFIGS / 'default.json').read_text())


# unit-length finger with light links, used by the calibration tests
CALIBRATION_TRUTH = dict(m1=0.01, m2=0.01, m3=0.01, l1=1.0, l2=1.0, l3=1.0, lc1=0.5, lc2=0.5, lc3=0.5,
                         I1=1e-3, I2=1e-3, I3=1e-3, kt1=0.05, kt2=0.04, kt3=0.03, cd=0.02, g=0.0)
CALIBRATION_SIM = {'integrator': 'rk4', 'step': 0.01, 't_end': 3.0, 'record_every': 0.05,
                   'initial': {'q': [0.3, -0.2, 0.1], 'qdot': [0.0, 0.0, 0.0]}}
CALIBRATION_PROFILE = {'kind': 'step', 'F0': 3.0, 't_on': 0.2}
