"""
Self-verification of the closed-form model against independent computations,
the FULL/REDUCED measurement and the damped-settling equilibrium oracle.

Every check is seeded and returns a CheckResult; nothing here prints.
"""
from __future__ import annotations

import math
from collections import namedtuple
from dataclasses import replace
from pathlib import Path
from typing import Union

import numpy as np

from .actuation import ForceProfile, Step
from .dynamics import forward_dynamics, inverse_dynamics, neglected_torque
from .enums import Integrator, ModelVariant
from .integrators import AdaptiveTolerance
from .model import (FD_STEP, christoffel_closed, christoffel_fd, coriolis_matrix, inertia_matrix_closed,
                    inertia_matrix_jacobian, potential_energy, potential_gradient)
from .params import FingerParams, JointState
from .simulation import SimConfig, energy_audit, simulate, simulate_variants

CheckResult = namedtuple('CheckResult', ['name', 'value', 'tolerance', 'passed', 'detail'])
ValidationReport = namedtuple('ValidationReport', ['seed', 'checks', 'info'])
VariantComparison = namedtuple('VariantComparison', [
    'max_angle_diff', 'max_velocity_diff', 'max_inertial_torque', 'max_coriolis_torque',
    'max_neglected_torque', 'peak_speed',
])

D_ENTRIES = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))
INERTIA_TOL = 1e-12
CHRISTOFFEL_TOL = 1e-6
PASSIVITY_TOL = 1e-8
GRADIENT_TOL = 1e-6
ROUND_TRIP_TOL = 1e-10
ENERGY_DRIFT_TOL = 1e-6
DISSIPATION_TOL = 1e-8
WORK_BALANCE_TOL = 1e-4
ORDER_RANGE = (3.7, 4.3)


def _entry_name(i: int, j: int, prefix: str = 'd') -> str:
    return f'{prefix}_{i + 1}{j + 1}'


def _random_angles(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.uniform(-math.pi, math.pi, size=(n, 3))


def check_inertia(p: FingerParams, rng: np.random.Generator, n: int = 1000,
                  paper_d11: bool = False, label: str = '') -> CheckResult:
    """closed-form D against the Jacobian assembly, names the worst entry"""
    worst = np.zeros((3, 3))
    for q in _random_angles(rng, n):
        diff = np.abs(inertia_matrix_closed(q, p, paper_d11=paper_d11) - inertia_matrix_jacobian(q, p))
        worst = np.maximum(worst, diff)
    i, j = max(D_ENTRIES, key=lambda ij: worst[ij])
    value = float(worst[i, j])
    return CheckResult(f'{label}inertia_equivalence', value, INERTIA_TOL, value < INERTIA_TOL,
                       f'worst entry {_entry_name(i, j)}')


def check_christoffel(p: FingerParams, rng: np.random.Generator, n: int = 200,
                      label: str = '') -> tuple[CheckResult, dict]:
    """
    closed-form Christoffel table against finite differences of D

    Also collects, as information, the largest difference between every closed-form
    entry and the literal non-symmetrised formula.
    """
    worst = np.zeros((3, 3, 3))
    literal = np.zeros((3, 3, 3))
    c333 = 0.0
    for q in _random_angles(rng, n):
        closed = christoffel_closed(q, p)
        worst = np.maximum(worst, np.abs(closed - christoffel_fd(q, p)))
        literal = np.maximum(literal, np.abs(closed - christoffel_fd(q, p, symmetric=False)))
        c333 = max(c333, abs(closed[2, 2, 2]))

    at_zero = float(np.max(np.abs(christoffel_closed(np.zeros(3), p))))
    value = float(worst.max())
    idx = np.unravel_index(int(np.argmax(worst)), worst.shape)
    passed = value < CHRISTOFFEL_TOL and at_zero == 0.0 and c333 == 0.0
    detail = f'worst entry C_{idx[0] + 1}{idx[1] + 1}{idx[2] + 1}, |C(0)|={at_zero:.1e}, |C_333|={c333:.1e}'

    info = {}
    for i, j, k in zip(*np.nonzero(literal > CHRISTOFFEL_TOL)):
        info[f'{label}christoffel_literal.C_{i + 1}{j + 1}{k + 1}'] = f'{literal[i, j, k]:.6e}'
    return CheckResult(f'{label}christoffel_equivalence', value, CHRISTOFFEL_TOL, passed, detail), info


def check_passivity(p: FingerParams, rng: np.random.Generator, n: int = 200, label: str = '') -> CheckResult:
    """qdot^T (Ddot - 2 Cm) qdot = 0 with Ddot by central difference along the flow"""
    worst = 0.0
    eps = FD_STEP
    for q in _random_angles(rng, n):
        qdot = rng.uniform(-1.0, 1.0, size=3)
        qdot /= max(1.0, float(np.linalg.norm(qdot)))
        d_dot = (inertia_matrix_closed(q + eps * qdot, p) - inertia_matrix_closed(q - eps * qdot, p)) / (2 * eps)
        form = qdot @ (d_dot - 2.0 * coriolis_matrix(q, qdot, p)) @ qdot
        worst = max(worst, abs(float(form)))
    return CheckResult(f'{label}passivity', worst, PASSIVITY_TOL, worst < PASSIVITY_TOL, '')


def check_gradient(p: FingerParams, rng: np.random.Generator, n: int = 200, label: str = '') -> CheckResult:
    """potential_gradient against central differences of potential_energy, cycling gravity/spring settings"""
    settings = [
        p,
        replace(p, g=0.0, kt1=1.0, kt2=0.7, kt3=0.4),
        replace(p, g=9.81, kt1=0.0, kt2=0.0, kt3=0.0),
        replace(p, g=9.81, kt1=0.5, kt2=0.5, kt3=0.5),
    ]
    settings = [s for s in settings if s.g > 0 or np.any(s.springs > 0)]
    worst = 0.0
    eps = FD_STEP
    for index, q in enumerate(_random_angles(rng, n)):
        ps = settings[index % len(settings)]
        analytic = potential_gradient(q, ps)
        numeric = np.empty(3)
        for j in range(3):
            dq = np.zeros(3)
            dq[j] = eps
            numeric[j] = (potential_energy(q + dq, ps) - potential_energy(q - dq, ps)) / (2 * eps)
        # scale by the characteristic torque so near-zero gradients do not blow up
        scale = max(float(np.max(np.abs(analytic))),
                    ps.g * (ps.m1 * ps.lc1 + ps.m2 * ps.l1 + ps.m3 * ps.l1) + float(ps.springs.sum()))
        worst = max(worst, float(np.max(np.abs(analytic - numeric))) / scale)
    return CheckResult(f'{label}gradient', worst, GRADIENT_TOL, worst < GRADIENT_TOL, '')


def check_round_trip(p: FingerParams, rng: np.random.Generator, n: int = 200, label: str = '') -> CheckResult:
    """inverse_dynamics(forward_dynamics(s, tau)) == tau on random FULL states"""
    worst = 0.0
    for q in _random_angles(rng, n):
        s = JointState(q, rng.uniform(-1.0, 1.0, size=3))
        scale = max(1e-3, float(np.max(np.abs(potential_gradient(q, p)))))
        tau = rng.uniform(-1.0, 1.0, size=3) * scale
        back = np.array(inverse_dynamics(s, forward_dynamics(s, tau, p), p))
        worst = max(worst, float(np.max(np.abs(back - tau))) / max(1.0, float(np.max(np.abs(tau)))))
    return CheckResult(f'{label}round_trip', worst, ROUND_TRIP_TOL, worst < ROUND_TRIP_TOL, '')


# time-domain checks, run on a unit-scale finger ---------------------------------

def dynamic_test_params() -> FingerParams:
    return FingerParams.unit(kt1=0.5, kt2=0.5, kt3=0.5)


def check_energy_conservation(p: FingerParams) -> CheckResult:
    cfg = SimConfig(step=1e-4, t_end=1.0, record_every=1e-3, initial=JointState((0.3, -0.2, 0.1)))
    traj = simulate(cfg, replace(p, cd=0.0), Step(0.0))
    drift = energy_audit(traj, p).max_drift_rel
    return CheckResult('energy_conservation', drift, ENERGY_DRIFT_TOL, drift < ENERGY_DRIFT_TOL, 'RK4 h=1e-4, 1 s')


def check_dissipation(p: FingerParams) -> CheckResult:
    cfg = SimConfig(step=1e-4, t_end=1.0, record_every=1e-3, initial=JointState((0.3, -0.2, 0.1)))
    traj = simulate(cfg, replace(p, cd=0.2), Step(0.0))
    rise = float(np.max(np.diff(traj.E))) / max(1.0, float(np.max(np.abs(traj.E))))
    return CheckResult('dissipation', rise, DISSIPATION_TOL, rise <= DISSIPATION_TOL,
                       'largest sample-to-sample energy increase')


def check_work_balance(p: FingerParams) -> CheckResult:
    h = 1e-4
    cfg = SimConfig(step=h, t_end=0.5, record_every=h, initial=JointState((0.3, -0.2, 0.1)))
    traj = simulate(cfg, replace(p, cd=0.2, e=0.05), Step(3.0, t_on=0.1))
    value = energy_audit(traj, replace(p, cd=0.2, e=0.05)).work_balance_residual
    return CheckResult('work_balance', value, WORK_BALANCE_TOL, value < WORK_BALANCE_TOL, 'record_every = h')


def oscillator_params(omega: float = 1.0) -> FingerParams:
    """unit-scale finger whose MCP joint, alone and REDUCED, is a linear oscillator of angular frequency omega"""
    base = FingerParams.unit(g=0.0)
    d11 = float(inertia_matrix_closed(np.zeros(3), base)[0, 0])
    return replace(base, kt1=d11 * omega ** 2)


def oscillator_error(h: float, integrator: Integrator = Integrator.RK4, t_end: float = 2.0,
                     q0: float = 0.5, tolerance: AdaptiveTolerance = AdaptiveTolerance()) -> float:
    """endpoint error of the single-joint reduction against q0 cos(t)"""
    cfg = SimConfig(integrator=integrator, step=h, tolerance=tolerance, t_end=t_end, record_every=t_end,
                    initial=JointState((q0, 0.0, 0.0)), variant=ModelVariant.REDUCED)
    traj = simulate(cfg, oscillator_params(), Step(0.0))
    return abs(float(traj.q[-1, 0]) - q0 * math.cos(t_end))


def convergence_order(steps=(0.1, 0.05, 0.025)) -> float:
    """slope of log(error) against log(h) for RK4 on the oscillator"""
    errors = [oscillator_error(h) for h in steps]
    slope, _ = np.polyfit(np.log(steps), np.log(errors), 1)
    return float(slope)


def check_order() -> CheckResult:
    order = convergence_order()
    lo, hi = ORDER_RANGE
    return CheckResult('rk4_order', order, hi, lo <= order <= hi, f'expected in [{lo}, {hi}]')


def run_validation(p: FingerParams, seed: int = 0, paper_d11: bool = False,
                   include_dynamics: bool = True) -> ValidationReport:
    """
    every oracle check, on the given parameters and on the unit-scale reference set

    :param p: FingerParams of the run configuration
    :param seed: seed of all random sweeps
    :param paper_d11: use the uncorrected closed-form d11
    :param include_dynamics: also run the time-domain checks
    :return: namedtuple ValidationReport(seed, checks, info)
    """
    rng = np.random.default_rng(seed)
    checks, info = [], {}
    for label, params in (('config.', p), ('unit.', FingerParams.unit(kt1=0.3, kt2=0.2, kt3=0.1))):
        checks.append(check_inertia(params, rng, paper_d11=paper_d11, label=label))
        christoffel, literal = check_christoffel(params, rng, label=label)
        checks.append(christoffel)
        info.update(literal)
        checks.append(check_passivity(params, rng, label=label))
        checks.append(check_gradient(params, rng, label=label))
        checks.append(check_round_trip(params, rng, label=label))
    if include_dynamics:
        dyn = dynamic_test_params()
        checks += [check_energy_conservation(dyn), check_dissipation(dyn), check_work_balance(dyn), check_order()]
    return ValidationReport(seed, checks, info)


def report_lines(report: ValidationReport, paper_d11: bool = False) -> list[str]:
    """plain `key: value` lines, no timestamps, so a fixed seed gives identical bytes"""
    lines = [f'seed: {report.seed}', f'use_paper_d11: {str(paper_d11).lower()}']
    for check in report.checks:
        lines.append(f'{check.name}.value: {check.value:.6e}')
        lines.append(f'{check.name}.tolerance: {check.tolerance:.1e}')
        lines.append(f'{check.name}.status: {"pass" if check.passed else "FAIL"}')
        if check.detail:
            lines.append(f'{check.name}.detail: {check.detail}')
    for key, value in report.info.items():
        lines.append(f'info.{key}: {value}')
    return lines


def write_report(path: Union[str, Path], report: ValidationReport, paper_d11: bool = False):
    Path(path).write_text('\n'.join(report_lines(report, paper_d11)) + '\n')


def needs_report(report: ValidationReport) -> bool:
    return bool(report.info) or not all(c.passed for c in report.checks)


def compare_variants(cfg: SimConfig, p: FingerParams, profile: ForceProfile) -> VariantComparison:
    """
    run FULL and REDUCED on identical inputs and measure how far apart they end up,
    with the torques REDUCED neglects evaluated along the FULL run

    :return: namedtuple VariantComparison, per-joint arrays for the differences
    """
    full, reduced = simulate_variants(cfg, p, profile)
    inertial = np.zeros(3)
    coriolis = np.zeros(3)
    total = np.zeros(3)
    for q, qd, qdd in zip(full.q, full.qd, full.qdd):
        neglected = neglected_torque(JointState(q, qd), qdd, p)
        inertial = np.maximum(inertial, np.abs(neglected.inertial))
        coriolis = np.maximum(coriolis, np.abs(neglected.coriolis))
        total = np.maximum(total, np.abs(neglected.total))
    return VariantComparison(
        max_angle_diff=np.max(np.abs(full.q - reduced.q), axis=0),
        max_velocity_diff=np.max(np.abs(full.qd - reduced.qd), axis=0),
        max_inertial_torque=inertial,
        max_coriolis_torque=coriolis,
        max_neglected_torque=total,
        peak_speed=float(np.max(np.linalg.norm(full.qd, axis=1))),
    )


def settle(p: FingerParams, F: float, q0=(0.0, 0.0, 0.0), cd: float = 5.0, tol: float = 1e-8,
           chunk: float = 5.0, max_time: float = 500.0) -> JointState:
    """
    integrate under a constant tendon force with heavy damping until max |qdot| < tol,
    the simulation side of the static-equilibrium cross-check

    :raises RuntimeError: if the finger has not come to rest after max_time
    """
    damped = replace(p, cd=cd)
    tolerance = AdaptiveTolerance(rtol=1e-10, atol=1e-12, h_max=0.05)
    state = JointState(q0)
    elapsed = 0.0
    while elapsed < max_time:
        cfg = SimConfig(integrator=Integrator.RK45, step=1e-3, tolerance=tolerance, t_end=chunk,
                        record_every=chunk, initial=state)
        state = simulate(cfg, damped, Step(F)).final_state
        elapsed += chunk
        if float(np.max(np.abs(state.qdot))) < tol:
            return state
    raise RuntimeError(f'ERROR: finger did not settle within {max_time} s (max |qdot|={np.max(np.abs(state.qdot)):.3e})')
