"""
Forward and inverse dynamics of the damped three-link finger.

    D(q) qdd + Cm(q, qd) qd + phi(q) + cd qd = tau

FULL keeps every term. REDUCED keeps only diag(D), drops every Christoffel
term and keeps gravity, springs and damping.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np
import scipy.linalg

from .enums import ModelVariant
from .exceptions import NoConvergence, NonFiniteInput, SingularInertia
from .model import FD_STEP, coriolis_matrix, inertia_matrix_closed, potential_gradient
from .params import FingerParams, GeneralizedForces, JointState

MAX_CONDITION = 1e12
MAX_NEWTON_STEP = 0.5  # rad, per joint


class NeglectedTorque(NamedTuple):
    """torques present in FULL but absent from REDUCED (N·m)"""
    inertial: np.ndarray
    coriolis: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.inertial + self.coriolis


def _require_finite(**arrays):
    for name, value in arrays.items():
        if not np.all(np.isfinite(value)):
            raise NonFiniteInput(f'ERROR: {name} contains non-finite values ({np.asarray(value).tolist()})')


def solve_inertia(d: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """
    solve D x = rhs through a Cholesky factorisation of the SPD inertia matrix

    :raises SingularInertia: if D is not positive definite or its condition estimate exceeds 1e12
    """
    try:
        factor, lower = scipy.linalg.cho_factor(d, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        raise SingularInertia(float('inf')) from None
    pivots = np.abs(np.diag(factor))
    condition = (pivots.max() / pivots.min()) ** 2 if pivots.min() > 0 else float('inf')
    if condition > MAX_CONDITION:
        raise SingularInertia(condition)
    return scipy.linalg.cho_solve((factor, lower), rhs, check_finite=False)


def forward_dynamics(s: JointState, tau, p: FingerParams,
                     v: ModelVariant = ModelVariant.FULL) -> np.ndarray:
    """
    joint accelerations produced by the applied torques

    :param s: JointState
    :param tau: GeneralizedForces or any 3-sequence (N·m)
    :param p: FingerParams
    :param v: ModelVariant, default FULL
    :return: qdd, array (3,) in rad/s²
    :raises NonFiniteInput: if the state or torque is not finite
    :raises SingularInertia: if D(q) cannot be factorised reliably
    """
    q, qdot = s.q, s.qdot
    tau = np.asarray(tau, dtype=float)
    _require_finite(q=q, qdot=qdot, tau=tau)

    d = inertia_matrix_closed(q, p)
    net = tau - potential_gradient(q, p) - p.cd * qdot
    if v is ModelVariant.REDUCED:
        return net / np.diag(d)
    net = net - coriolis_matrix(q, qdot, p) @ qdot
    return solve_inertia(d, net)


def inverse_dynamics(s: JointState, qddot, p: FingerParams,
                     v: ModelVariant = ModelVariant.FULL) -> GeneralizedForces:
    """
    torques required to produce the given accelerations

    :return: GeneralizedForces
    :raises NonFiniteInput: if any input is not finite
    """
    q, qdot = s.q, s.qdot
    qddot = np.asarray(qddot, dtype=float)
    _require_finite(q=q, qdot=qdot, qddot=qddot)

    d = inertia_matrix_closed(q, p)
    tau = potential_gradient(q, p) + p.cd * qdot
    if v is ModelVariant.REDUCED:
        tau = tau + np.diag(d) * qddot
    else:
        tau = tau + d @ qddot + coriolis_matrix(q, qdot, p) @ qdot
    return GeneralizedForces.from_array(tau)


def neglected_torque(s: JointState, qddot, p: FingerParams) -> NeglectedTorque:
    """
    split of the torque REDUCED ignores: off-diagonal inertia torque and Coriolis/centrifugal torque
    """
    d = inertia_matrix_closed(s.q, p)
    off_diagonal = d - np.diag(np.diag(d))
    return NeglectedTorque(
        inertial=off_diagonal @ np.asarray(qddot, dtype=float),
        coriolis=coriolis_matrix(s.q, s.qdot, p) @ s.qdot,
    )


def potential_hessian(q, p: FingerParams, step: float = FD_STEP) -> np.ndarray:
    """central-difference Jacobian of potential_gradient (stiffness matrix, N·m/rad)"""
    q = np.asarray(q, dtype=float)
    jac = np.empty((3, 3))
    for j in range(3):
        dq = np.zeros(3)
        dq[j] = step
        jac[:, j] = (potential_gradient(q + dq, p) - potential_gradient(q - dq, p)) / (2.0 * step)
    return jac


def static_equilibrium(tau_const, p: FingerParams, q_guess=(0.0, 0.0, 0.0), tol: float = 1e-10,
                       max_iter: int = 100, max_halvings: int = 30) -> np.ndarray:
    """
    configuration where gravity and springs balance a constant torque, phi(q*) = tau

    Damped Newton iteration. Each step is scaled so no joint moves more than
    MAX_NEWTON_STEP, which keeps the iterate in the basin of the guess, then
    halved (up to max_halvings times) until the max-norm residual decreases.

    :param tau_const: GeneralizedForces or 3-sequence (N·m)
    :param q_guess: starting configuration (rad), default zero
    :param tol: residual bound on ||phi(q*) - tau||_inf (N·m)
    :return: q*, array (3,)
    :raises ValueError: if neither springs nor gravity are present (no isolated root)
    :raises NoConvergence: carrying the best iterate and its residual
    """
    if p.g == 0 and not np.any(p.springs > 0):
        raise ValueError('ERROR: static equilibrium needs springs or gravity (all kt_i = 0 and g = 0)')
    tau = np.asarray(tau_const, dtype=float)
    q = np.asarray(q_guess, dtype=float).copy()
    _require_finite(tau=tau, q_guess=q)

    residual = potential_gradient(q, p) - tau
    norm = float(np.max(np.abs(residual)))
    for iteration in range(max_iter):
        if norm < tol:
            return q
        try:
            step = np.linalg.solve(potential_hessian(q, p), -residual)
        except np.linalg.LinAlgError:
            raise NoConvergence(q, norm, iteration) from None
        longest = float(np.max(np.abs(step)))
        if longest > MAX_NEWTON_STEP:
            step *= MAX_NEWTON_STEP / longest

        scale = 1.0
        for _ in range(max_halvings + 1):
            trial = q + scale * step
            trial_residual = potential_gradient(trial, p) - tau
            trial_norm = float(np.max(np.abs(trial_residual)))
            if trial_norm < norm:
                break
            scale *= 0.5
        else:
            raise NoConvergence(q, norm, iteration)
        q, residual, norm = trial, trial_residual, trial_norm

    if norm < tol:
        return q
    raise NoConvergence(q, norm, max_iter)
