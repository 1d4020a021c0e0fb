from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest

from fingerdyn.exceptions import ValidationError
from fingerdyn.params import FingerParams, GeneralizedForces, JointState


def test_unit_set():
    p = FingerParams.unit()
    assert (p.m1, p.l2, p.lc3) == (1.0, 1.0, 0.5)
    assert p.I1 == p.kt1 == p.cd == 0.0
    assert p.e == 0.0045
    np.testing.assert_array_equal(p.fractions, [1.0, 1.0, 1.0])


def test_unit_overrides():
    p = FingerParams.unit(kt1=2.0, g=0.0)
    np.testing.assert_array_equal(p.springs, [2.0, 0.0, 0.0])
    assert p.g == 0.0


@pytest.mark.parametrize('overrides, key', [
    (dict(lc1=1.5), 'lc1'),
    (dict(lc3=0.0), 'lc3'),
    (dict(m2=0.0), 'm2'),
    (dict(l1=-1.0), 'l1'),
    (dict(e=0.0), 'e'),
    (dict(kt2=-0.1), 'kt2'),
    (dict(cd=-1e-3), 'cd'),
    (dict(I3=-1.0), 'I3'),
    (dict(friction_force=-0.5), 'friction_force'),
    (dict(g=float('nan')), 'g'),
    (dict(m1='heavy'), 'm1'),
])
def test_invalid_params_name_the_key(overrides, key):
    with pytest.raises(ValidationError) as err:
        FingerParams.unit(**overrides)
    assert err.value.key == key
    assert key in str(err.value)


def test_digest_is_stable_and_sensitive():
    p = FingerParams.unit()
    assert p.digest() == FingerParams.unit().digest()
    assert p.digest() != replace(p, cd=1e-3).digest()
    assert len(p.digest()) == 16


def test_summary_reports_tendon_offset_in_mm(finger_params):
    text = '\n'.join(finger_params.summary())
    assert 'tendon offset e = 4.50 mm' in text
    assert 'l = (45.00, 25.00, 20.00) mm' in text


def test_joint_state_is_read_only():
    s = JointState((0.1, 0.2, 0.3))
    np.testing.assert_array_equal(s.qdot, np.zeros(3))
    with pytest.raises(ValueError):
        s.q[0] = 1.0


def test_joint_state_vector_layout():
    s = JointState.from_vector([1, 2, 3, 4, 5, 6])
    np.testing.assert_array_equal(s.q, [1, 2, 3])
    np.testing.assert_array_equal(s.qdot, [4, 5, 6])
    np.testing.assert_array_equal(s.as_vector(), [1, 2, 3, 4, 5, 6])
    assert s.is_finite()
    assert not JointState((np.nan, 0, 0)).is_finite()


def test_generalized_forces():
    assert GeneralizedForces.zero() == (0.0, 0.0, 0.0)
    tau = GeneralizedForces.from_array(np.array([1, 2, 3]))
    assert tau.tau2 == 2.0
    assert isinstance(tau.tau3, float)
