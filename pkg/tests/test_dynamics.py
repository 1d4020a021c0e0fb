from __future__ import annotations

import math

import numpy as np
import pytest

from fingerdyn.actuation import joint_torques
from fingerdyn.dynamics import (forward_dynamics, inverse_dynamics, neglected_torque, solve_inertia,
                                static_equilibrium)
from fingerdyn.enums import ModelVariant
from fingerdyn.exceptions import NoConvergence, NonFiniteInput, SingularInertia
from fingerdyn.model import inertia_matrix_closed, potential_gradient
from fingerdyn.oracles import settle
from fingerdyn.params import FingerParams, GeneralizedForces, JointState


def _random_states(rng, n):
    for q, qdot in zip(rng.uniform(-math.pi, math.pi, (n, 3)), rng.uniform(-2.0, 2.0, (n, 3))):
        yield JointState(q, qdot)


@pytest.mark.parametrize('variant', list(ModelVariant))
def test_zero_dynamics_stay_at_rest(variant):
    p = FingerParams.unit(g=0.0)
    qdd = forward_dynamics(JointState((0.4, -0.3, 0.2)), GeneralizedForces.zero(), p, variant)
    assert np.all(qdd == 0.0)


def test_gravity_only_acceleration_from_rest():
    p = FingerParams.unit()
    qdd = forward_dynamics(JointState(), GeneralizedForces.zero(), p)
    expected = -np.linalg.solve(inertia_matrix_closed(np.zeros(3), p), potential_gradient(np.zeros(3), p))
    np.testing.assert_allclose(qdd, expected, rtol=1e-12)


def test_round_trip(rng):
    p = FingerParams.unit(kt1=0.3, kt2=0.2, kt3=0.1, cd=0.05, I2=0.01)
    for s in _random_states(rng, 200):
        tau = rng.uniform(-10.0, 10.0, 3)
        back = inverse_dynamics(s, forward_dynamics(s, tau, p), p)
        np.testing.assert_allclose(back, tau, rtol=0, atol=1e-10 * max(1.0, np.max(np.abs(tau))))


@pytest.mark.parametrize('variant', list(ModelVariant))
def test_inverse_at_rest_is_static_load(variant):
    p = FingerParams.unit(kt1=0.3, kt2=0.2, kt3=0.1)
    q = (0.3, -0.5, 0.8)
    tau = inverse_dynamics(JointState(q), np.zeros(3), p, variant)
    np.testing.assert_allclose(tau, potential_gradient(q, p), rtol=1e-15)


def test_forward_is_affine_in_torque(rng):
    p = FingerParams.unit(cd=0.1)
    for s in _random_states(rng, 20):
        tau_a, tau_b = rng.uniform(-5, 5, 3), rng.uniform(-5, 5, 3)
        delta = forward_dynamics(s, tau_a + tau_b, p) - forward_dynamics(s, tau_b, p)
        np.testing.assert_allclose(delta, np.linalg.solve(inertia_matrix_closed(s.q, p), tau_a),
                                   rtol=1e-9, atol=1e-12)


def test_reduced_uses_diagonal_inertia_only():
    p = FingerParams.unit(kt1=0.5, cd=0.2)
    s = JointState((0.3, 0.4, -0.2), (1.0, -0.5, 0.7))
    tau = np.array([2.0, -1.0, 0.5])
    net = tau - potential_gradient(s.q, p) - p.cd * s.qdot
    np.testing.assert_allclose(forward_dynamics(s, tau, p, ModelVariant.REDUCED),
                               net / np.diag(inertia_matrix_closed(s.q, p)), rtol=1e-15)


def test_variants_agree_when_nothing_is_neglected():
    p = FingerParams.unit(kt1=0.5, kt2=0.4, kt3=0.3)
    s = JointState((0.3, 0.4, -0.2))
    tau = potential_gradient(s.q, p)
    for variant in ModelVariant:
        assert np.all(forward_dynamics(s, tau, p, variant) == 0.0)


def test_neglected_torque_is_the_variant_gap(rng):
    p = FingerParams.unit(kt1=0.5, cd=0.1)
    for s in _random_states(rng, 20):
        qdd = rng.uniform(-3, 3, 3)
        gap = np.array(inverse_dynamics(s, qdd, p)) - np.array(inverse_dynamics(s, qdd, p, ModelVariant.REDUCED))
        np.testing.assert_allclose(neglected_torque(s, qdd, p).total, gap, atol=1e-11)


def test_non_finite_input_is_rejected():
    p = FingerParams.unit()
    with pytest.raises(NonFiniteInput):
        forward_dynamics(JointState((np.nan, 0, 0)), GeneralizedForces.zero(), p)
    with pytest.raises(NonFiniteInput):
        forward_dynamics(JointState(), (0.0, np.inf, 0.0), p)
    with pytest.raises(NonFiniteInput):
        inverse_dynamics(JointState(), (0.0, 0.0, np.nan), p)


def test_singular_inertia_is_reported():
    with pytest.raises(SingularInertia):
        solve_inertia(np.array([[1.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 1.0]]), np.ones(3))
    with pytest.raises(SingularInertia) as err:
        solve_inertia(np.diag([1.0, 1.0, 1e-14]), np.ones(3))
    assert err.value.condition > 1e12


def test_equilibrium_at_zero_without_gravity():
    p = FingerParams.unit(g=0.0, kt1=1.0, kt2=1.0, kt3=1.0)
    np.testing.assert_array_equal(static_equilibrium(GeneralizedForces.zero(), p), np.zeros(3))


def test_equilibrium_of_pure_springs():
    p = FingerParams.unit(g=0.0, kt1=2.0, kt2=2.0, kt3=2.0)
    np.testing.assert_allclose(static_equilibrium((1.0, 1.0, 1.0), p), [0.5, 0.5, 0.5], atol=1e-10)


def test_equilibrium_needs_springs_or_gravity():
    with pytest.raises(ValueError):
        static_equilibrium((0.1, 0.0, 0.0), FingerParams.unit(g=0.0))


def test_equilibrium_reports_best_iterate():
    # a spring-less finger cannot hold more torque than its weight provides
    p = FingerParams.unit()
    with pytest.raises(NoConvergence) as err:
        static_equilibrium((100.0, 0.0, 0.0), p, max_iter=20)
    assert err.value.best.shape == (3,)
    assert err.value.residual > 0


def test_tendon_torque_of_settling_load():
    tau = joint_torques(3.0, FingerParams.unit())
    assert tau.tau1 == pytest.approx(0.0135, rel=1e-12)
    assert tau.tau1 == tau.tau2 == tau.tau3


def test_equilibrium_matches_damped_settling():
    p = FingerParams.unit(kt1=0.05, kt2=0.05, kt3=0.05)
    guess = (-math.pi / 2, 0.0, 0.0)
    q_star = static_equilibrium(joint_torques(3.0, p), p, q_guess=guess)
    np.testing.assert_allclose(potential_gradient(q_star, p), np.array(joint_torques(3.0, p)), atol=1e-10)
    rest = settle(p, 3.0, q0=guess)
    np.testing.assert_allclose(rest.q, q_star, atol=1e-6)


def test_equilibrium_from_default_guess_matches_settling():
    # zero start: gravity pulls the finger down to hang near q1 = -pi/2
    p = FingerParams.unit(kt1=0.05, kt2=0.05, kt3=0.05)
    q_star = static_equilibrium(joint_torques(3.0, p), p)
    rest = settle(p, 3.0)
    np.testing.assert_allclose(rest.q, q_star, atol=1e-4)
    assert np.all(np.abs(q_star) < math.pi)
    assert q_star[0] == pytest.approx(-math.pi / 2, abs=0.05)
