"""
One-step integrators for the first-order system y = (q, qdot).

The torque callback is sampled at every stage time, so time-varying force
profiles are seen by the inner stages.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dynamics import forward_dynamics
from .enums import ModelVariant
from .exceptions import NonFiniteInput, NonFiniteState, StepUnderflow, ValidationError
from .params import FingerParams, JointState

TorqueFunction = Callable  # (t, JointState) -> GeneralizedForces

# Runge-Kutta-Fehlberg 4(5) tableau
_C = (0.0, 1 / 4, 3 / 8, 12 / 13, 1.0, 1 / 2)
_A = (
    (),
    (1 / 4,),
    (3 / 32, 9 / 32),
    (1932 / 2197, -7200 / 2197, 7296 / 2197),
    (439 / 216, -8.0, 3680 / 513, -845 / 4104),
    (-8 / 27, 2.0, -3544 / 2565, 1859 / 4104, -11 / 40),
)
_B5 = np.array([16 / 135, 0.0, 6656 / 12825, 28561 / 56430, -9 / 50, 2 / 55])
# b5 - b4, local truncation error estimate
_TR = np.array([1 / 360, 0.0, -128 / 4275, -2197 / 75240, 1 / 50, 2 / 55])

SAFETY = 0.9
GROWTH_MIN, GROWTH_MAX = 0.2, 5.0


@dataclass(frozen=True)
class AdaptiveTolerance:
    """error control of the adaptive integrator"""
    rtol: float = 1e-8
    atol: float = 1e-10
    h_min: float = 1e-9
    h_max: float = 1e-2

    def __post_init__(self):
        for name in ('rtol', 'atol', 'h_min', 'h_max'):
            if not getattr(self, name) > 0:
                raise ValidationError(name, f'{name} > 0')
        if self.h_min > self.h_max:
            raise ValidationError('h_min', f'h_min <= h_max ({self.h_min} vs {self.h_max})')


def state_derivative(torque: TorqueFunction, p: FingerParams, v: ModelVariant) -> Callable:
    """return f(t, y) -> dy/dt for the 6-vector state"""
    def f(t: float, y: np.ndarray) -> np.ndarray:
        s = JointState(y[:3], y[3:])
        qddot = forward_dynamics(s, torque(t, s), p, v)
        return np.concatenate([y[3:], qddot])
    return f


def rk4_kernel(f: Callable, t: float, y: np.ndarray, h: float) -> np.ndarray:
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def semi_implicit_euler_kernel(f: Callable, t: float, y: np.ndarray, h: float) -> np.ndarray:
    qddot = f(t, y)[3:]
    qdot = y[3:] + h * qddot
    return np.concatenate([y[:3] + h * qdot, qdot])


def rkf45_kernel(f: Callable, t: float, y: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    """
    one Fehlberg step

    :return: (5th-order solution, error estimate y5 - y4)
    """
    k = []
    for c, row in zip(_C, _A):
        y_stage = y.copy()
        for a, k_prev in zip(row, k):
            y_stage += h * a * k_prev
        k.append(f(t + c * h, y_stage))
    k = np.array(k)
    return y + h * (_B5 @ k), h * (_TR @ k)


def _check_step(h: float):
    if not h > 0:
        raise ValueError(f'ERROR: step size must be > 0 ({h=})')


def guarded_step(kernel: Callable, f: Callable, t: float, y: np.ndarray, h: float) -> np.ndarray:
    """
    run a fixed-step kernel, turning divergence into NonFiniteState

    :raises NonFiniteState: carrying the time and offending state
    """
    try:
        y_new = kernel(f, t, y, h)
    except NonFiniteInput:
        raise NonFiniteState(t, y) from None
    if not np.all(np.isfinite(y_new)):
        raise NonFiniteState(t + h, y_new)
    return y_new


def step_rk4(s: JointState, t: float, h: float, torque: TorqueFunction, p: FingerParams,
             v: ModelVariant = ModelVariant.FULL) -> JointState:
    """
    classical fourth-order Runge-Kutta step

    :raises NonFiniteState: if the integration diverged
    """
    _check_step(h)
    f = state_derivative(torque, p, v)
    return JointState.from_vector(guarded_step(rk4_kernel, f, t, s.as_vector(), h))


def step_semi_implicit_euler(s: JointState, t: float, h: float, torque: TorqueFunction, p: FingerParams,
                             v: ModelVariant = ModelVariant.FULL) -> JointState:
    """symplectic Euler: velocities first, then positions with the new velocities"""
    _check_step(h)
    f = state_derivative(torque, p, v)
    return JointState.from_vector(guarded_step(semi_implicit_euler_kernel, f, t, s.as_vector(), h))


def adaptive_kernel(f: Callable, t: float, y: np.ndarray, h_try: float,
                    tol: AdaptiveTolerance) -> tuple[np.ndarray, float, float]:
    """
    take one accepted Fehlberg step, shrinking h on rejection.
    A trial that produces non-finite values counts as a rejection.
    The proposed next step is kept within [h_min, h_max].

    :return: (y_new, t_new, h_next)
    :raises StepUnderflow: if the step has to shrink below tol.h_min
    """
    h = min(h_try, tol.h_max)
    while True:
        try:
            y_new, err = rkf45_kernel(f, t, y, h)
            scale = tol.atol + tol.rtol * np.maximum(np.abs(y), np.abs(y_new))
            ratio = float(np.max(np.abs(err) / scale))
        except NonFiniteInput:
            y_new, ratio = y, float('inf')

        if np.isfinite(ratio) and ratio <= 1.0 and np.all(np.isfinite(y_new)):
            factor = GROWTH_MAX if ratio == 0.0 else min(GROWTH_MAX, max(GROWTH_MIN, SAFETY * ratio ** -0.2))
            return y_new, t + h, min(max(h * factor, tol.h_min), tol.h_max)

        if np.isfinite(ratio):
            h = h * max(GROWTH_MIN, SAFETY * ratio ** -0.2)
        else:
            h = h * GROWTH_MIN
        if h < tol.h_min:
            raise StepUnderflow(t, y, h, tol.h_min)


def step_adaptive(s: JointState, t: float, h_try: float, torque: TorqueFunction, p: FingerParams,
                  v: ModelVariant = ModelVariant.FULL,
                  tol: AdaptiveTolerance = AdaptiveTolerance()) -> tuple[JointState, float, float]:
    """
    embedded Runge-Kutta-Fehlberg 4(5) step with error control.

    A step is accepted when |err_i| <= atol + rtol * |y_i| for every component; the
    fifth-order solution is propagated. The next step is h * 0.9 * ratio^(-1/5)
    clamped to [0.2, 5] times the current one and to h_max.

    :return: (state, t_new, h_next)
    :raises StepUnderflow: signals stiffness or divergence
    """
    _check_step(h_try)
    f = state_derivative(torque, p, v)
    y_new, t_new, h_next = adaptive_kernel(f, t, s.as_vector(), h_try, tol)
    return JointState.from_vector(y_new), t_new, h_next
