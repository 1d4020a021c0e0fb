"""
Least-squares identification of the parameters that cannot be measured on the
bench (damping, spring stiffnesses and torque fractions) from a recorded
joint-angle trajectory.
"""
from __future__ import annotations

import math
import warnings
from collections import namedtuple
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence, Union

import numpy as np
import pandas as pd
import scipy.linalg
import scipy.optimize

from .actuation import ForceProfile
from .dynamics import potential_hessian
from .enums import CalibratedParam, FitMethod
from .exceptions import (DynamicsError, IntegrationError, NotConverged, ParseError, SimulationDiverged,
                         ValidationError)
from .model import inertia_matrix_closed
from .params import FingerParams
from .simulation import SimConfig, Trajectory, simulate

REFERENCE_COLUMNS = ('t', 'q1', 'q2', 'q3')
# residual entry used for a candidate whose simulation diverged
PENALTY = 1e3
XATOL = 1e-8
FATOL = 1e-12
MAX_ITER = 2000

FitResult = namedtuple('FitResult', [
    'x_best', 'params', 'final_cost', 'iterations', 'converged', 'flat_cost', 'gradient',
    'cost_history', 'n_evaluations', 'method', 'message',
])


def load_reference_csv(path: Union[str, Path]) -> tuple[np.ndarray, np.ndarray]:
    """
    read a reference trajectory with columns `t,q1,q2,q3` (extra columns and `#` lines are ignored,
    so a trajectory written by `finger-dyn simulate` is a valid reference)

    :return: (t, q) with shapes (n,) and (n, 3)
    :raises OSError: if the file cannot be read
    :raises ParseError: naming the first missing column, or on non-numeric data
    """
    path = Path(path)
    try:
        df = pd.read_csv(path, comment='#', float_precision='round_trip')
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as err:
        raise ParseError(str(path), str(err)) from None
    df.columns = [str(c).strip() for c in df.columns]
    for column in REFERENCE_COLUMNS:
        if column not in df.columns:
            raise ParseError(str(path), f"missing column '{column}'")
    try:
        a = df[list(REFERENCE_COLUMNS)].astype(float).to_numpy()
    except ValueError as err:
        raise ParseError(str(path), f'non-numeric value ({err})') from None
    return a[:, 0], a[:, 1:]


def dominant_period(p: FingerParams, q0) -> float:
    """
    longest period of the oscillation modes linearised about q0 (inf when nothing oscillates)

    Modes come from the generalized eigenproblem K v = w^2 D v with K the potential Hessian.
    """
    d = inertia_matrix_closed(q0, p)
    k = potential_hessian(q0, p)
    k = 0.5 * (k + k.T)
    omega_sq = scipy.linalg.eigh(k, d, eigvals_only=True)
    omega_sq = omega_sq[omega_sq > 1e-12]
    if omega_sq.size == 0:
        return math.inf
    return 2.0 * math.pi / math.sqrt(float(omega_sq.min()))


@dataclass(frozen=True, eq=False)
class CalibrationProblem:
    """
    What to fit and against what.

    :param t: reference sample times (s), strictly increasing
    :param q: reference joint angles (rad), shape (n, 3)
    :param free: the parameters being identified
    :param bounds: one (lo, hi) per free parameter
    :param fixed: baseline FingerParams, free entries are overwritten by the candidate
    :param profile: actuator force during the reference run
    :param sim: integration settings, t_end is taken from the reference
    :param weights: per-joint residual weights
    """
    t: np.ndarray
    q: np.ndarray
    free: tuple
    bounds: tuple
    fixed: FingerParams
    profile: ForceProfile
    sim: SimConfig = field(default_factory=SimConfig)
    weights: np.ndarray = field(default_factory=lambda: np.ones(3))

    def __post_init__(self):
        t = np.array(self.t, dtype=float).reshape(-1)
        q = np.array(self.q, dtype=float).reshape(-1, 3)
        if t.size < 2 or t.size != q.shape[0]:
            raise ValidationError('reference', f'needs >= 2 samples with one q row per time ({t.size} times)')
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(q))):
            raise ValidationError('reference', 'samples must be finite')
        if t[0] < 0 or np.any(np.diff(t) <= 0):
            raise ValidationError('reference', 'times must be >= 0 and strictly increasing')

        free = tuple(CalibratedParam(name) for name in self.free)
        if not free:
            raise ValidationError('free', 'at least one parameter must be free')
        if len(set(free)) != len(free):
            raise ValidationError('free', 'parameters must not repeat')
        bounds = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        if len(bounds) != len(free):
            raise ValidationError('bounds', f'one (lo, hi) per free parameter ({len(bounds)} vs {len(free)})')
        for param, (lo, hi) in zip(free, bounds):
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ValidationError(f'bounds.{param.value}', f'finite lo < hi, got [{lo}, {hi}]')
            if lo < 0:
                raise ValidationError(f'bounds.{param.value}', f'{param.value} >= 0, got lo={lo}')

        weights = np.array(self.weights, dtype=float).reshape(3)
        if not np.all(np.isfinite(weights)) or np.any(weights < 0) or not np.any(weights > 0):
            raise ValidationError('weights', 'three finite weights >= 0, not all zero')

        object.__setattr__(self, 't', t)
        object.__setattr__(self, 'q', q)
        object.__setattr__(self, 'free', free)
        object.__setattr__(self, 'bounds', bounds)
        object.__setattr__(self, 'weights', weights)
        self._check_sampling()

    def _check_sampling(self):
        period = dominant_period(self.fixed, self.sim.initial.q)
        spacing = float(np.max(np.diff(self.t)))
        if spacing > period / 10.0:
            raise ValidationError('reference', f'sample spacing {spacing:.4g} s is coarser than a tenth of the '
                                               f'dominant oscillation period ({period:.4g} s)')

    @classmethod
    def from_trajectory(cls, reference: Trajectory, **kwargs) -> CalibrationProblem:
        return cls(t=reference.t, q=reference.q, **kwargs)

    @property
    def lower(self) -> np.ndarray:
        return np.array([lo for lo, _ in self.bounds])

    @property
    def upper(self) -> np.ndarray:
        return np.array([hi for _, hi in self.bounds])

    def candidate(self, x) -> FingerParams:
        """the baseline with x substituted for the free parameters"""
        return replace(self.fixed, **{param.value: float(v) for param, v in zip(self.free, x)})

    def within_bounds(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))


def residual(x: Sequence[float], prob: CalibrationProblem) -> np.ndarray:
    """
    weighted differences between simulated and reference joint angles

    The simulated q is linearly interpolated at the reference times. Entries are
    stacked joint-major: all q1 rows, then q2, then q3.

    :param x: candidate values, ordered as prob.free
    :param prob: CalibrationProblem
    :return: array (3 * n_ref,)
    :raises ValueError: if x lies outside the bounds
    :raises SimulationDiverged: if the candidate cannot be simulated
    """
    x = np.asarray(x, dtype=float)
    if not prob.within_bounds(x):
        raise ValueError(f'ERROR: candidate {x.tolist()} lies outside the bounds {list(prob.bounds)}')
    p = prob.candidate(x)
    cfg = replace(prob.sim, t_end=float(prob.t[-1]))
    try:
        traj = simulate(cfg, p, prob.profile)
    except (IntegrationError, DynamicsError) as err:
        raise SimulationDiverged({param.value: float(v) for param, v in zip(prob.free, x)}, err) from err
    diff = (traj.sample_at(prob.t) - prob.q) * prob.weights
    return diff.T.reshape(-1)


class _Objective:
    """residual evaluations projected into the bounds, with divergence penalised and costs cached"""

    def __init__(self, prob: CalibrationProblem):
        self.prob = prob
        self.size = 3 * prob.t.size
        self.costs = {}

    def residual(self, x) -> np.ndarray:
        x = np.clip(np.asarray(x, dtype=float), self.prob.lower, self.prob.upper)
        try:
            r = residual(x, self.prob)
        except SimulationDiverged as err:
            warnings.warn(f'{err}, using penalty residual')
            r = np.full(self.size, PENALTY)
        self.costs[tuple(x)] = 0.5 * float(r @ r)
        return r

    def cost(self, x) -> float:
        x = np.clip(np.asarray(x, dtype=float), self.prob.lower, self.prob.upper)
        key = tuple(x)
        if key not in self.costs:
            self.residual(x)
        return self.costs[key]

    @property
    def n_evaluations(self) -> int:
        return len(self.costs)


def cost_probe(objective: _Objective, x) -> tuple[np.ndarray, bool]:
    """
    central-difference gradient of the cost with steps of 1e-3 of each bound range,
    shrunk to stay inside the bounds

    :return: (gradient, flat) where flat means no probe changed the cost at all
    """
    prob = objective.prob
    x = np.asarray(x, dtype=float)
    centre = objective.cost(x)
    grad = np.zeros(x.size)
    variation = 0.0
    for i in range(x.size):
        delta = 1e-3 * (prob.upper[i] - prob.lower[i])
        up, down = x.copy(), x.copy()
        up[i] = min(x[i] + delta, prob.upper[i])
        down[i] = max(x[i] - delta, prob.lower[i])
        c_up, c_down = objective.cost(up), objective.cost(down)
        grad[i] = (c_up - c_down) / (up[i] - down[i])
        variation = max(variation, abs(c_up - centre), abs(c_down - centre))
    return grad, variation <= 1e-12 * max(1.0, centre)


def _fit_nelder_mead(objective: _Objective, x0: np.ndarray, history: list):
    prob = objective.prob

    def callback(xk, *args):
        history.append(objective.cost(xk))

    result = scipy.optimize.minimize(
        objective.cost, x0, method='Nelder-Mead', bounds=list(prob.bounds), callback=callback,
        options={'xatol': XATOL, 'fatol': FATOL, 'maxiter': MAX_ITER},
    )
    return np.clip(result.x, prob.lower, prob.upper), int(result.nit), bool(result.success), str(result.message)


def _fit_least_squares(objective: _Objective, x0: np.ndarray, history: list):
    prob = objective.prob

    def fun(x):
        r = objective.residual(x)
        cost = 0.5 * float(r @ r)
        history.append(min(history[-1], cost) if history else cost)
        return r

    result = scipy.optimize.least_squares(
        fun, x0, bounds=(prob.lower, prob.upper), method='trf', x_scale='jac',
        xtol=1e-12, ftol=1e-12, gtol=1e-12, max_nfev=MAX_ITER,
    )
    return np.clip(result.x, prob.lower, prob.upper), int(result.nfev), result.status > 0, str(result.message)


def fit(prob: CalibrationProblem, x0: Sequence[float],
        method: FitMethod = FitMethod.NelderMead) -> FitResult:
    """
    minimise 1/2 ||residual||^2 over the bounded free parameters

    nelder-mead: bounded simplex, stops when the simplex is smaller than 1e-8 and the
    cost spread is below 1e-12, at most 2000 iterations.
    least-squares: trust-region reflective Gauss-Newton with finite-difference Jacobian.

    After the optimiser stops, the cost gradient at the optimum is taken by central
    differences; when no probe changes the cost the fit is flagged flat (unidentifiable parameters).

    :param prob: CalibrationProblem
    :param x0: initial guess, ordered as prob.free, inside the bounds
    :param method: FitMethod
    :return: namedtuple FitResult
    :raises ValidationError: if x0 has the wrong length or lies outside the bounds
    :raises NotConverged: carrying the FitResult of the best iterate
    """
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.size != len(prob.free):
        raise ValidationError('x0', f'one initial value per free parameter ({x0.size} vs {len(prob.free)})')
    if not prob.within_bounds(x0):
        raise ValidationError('x0', f'initial guess {x0.tolist()} lies outside the bounds')

    objective = _Objective(prob)
    history = []
    if method is FitMethod.LeastSquares:
        x_best, iterations, success, message = _fit_least_squares(objective, x0, history)
    else:
        x_best, iterations, success, message = _fit_nelder_mead(objective, x0, history)

    final_cost = objective.cost(x_best)
    gradient, flat = cost_probe(objective, x_best)
    result = FitResult(
        x_best=x_best,
        params={param.value: float(v) for param, v in zip(prob.free, x_best)},
        final_cost=final_cost,
        iterations=iterations,
        converged=success and not flat,
        flat_cost=flat,
        gradient=gradient,
        cost_history=history,
        n_evaluations=objective.n_evaluations,
        method=method,
        message=message,
    )
    if not result.converged:
        raise NotConverged(result)
    return result


def fitted_params_document(prob: CalibrationProblem, result: FitResult) -> dict:
    """`params` config section with the fitted values substituted, ready to merge into a run config"""
    return {'params': prob.candidate(result.x_best).to_dict()}
