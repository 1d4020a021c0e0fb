"""
Time integration of the finger, trajectory recording and energy auditing.
"""
from __future__ import annotations

import json
import math
import warnings
from collections import namedtuple
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Union

import numpy as np
import pandas as pd
from scipy.integrate import cumulative_trapezoid

from .actuation import ForceProfile, describe_profile, torque_schedule
from .dynamics import forward_dynamics
from .enums import Integrator, ModelVariant
from .exceptions import ParseError, ValidationError
from .integrators import (AdaptiveTolerance, adaptive_kernel, guarded_step, rk4_kernel,
                          semi_implicit_euler_kernel, state_derivative)
from .model import kinetic_energy, potential_energy
from .params import FingerParams, JointState

COLUMNS = ['t', 'q1', 'q2', 'q3', 'qd1', 'qd2', 'qd3', 'qdd1', 'qdd2', 'qdd3',
           'tau1', 'tau2', 'tau3', 'K', 'P', 'E']

_FIXED_KERNELS = {
    Integrator.RK4: rk4_kernel,
    Integrator.SEMI_IMPLICIT_EULER: semi_implicit_euler_kernel,
}

EnergyAudit = namedtuple('EnergyAudit', ['max_drift_rel', 'work_balance_residual'])


@dataclass(frozen=True)
class SimConfig:
    """
    How a run is integrated. `step` is the fixed step of RK4 and semi-implicit
    Euler, and the first trial step of RK45.
    """
    integrator: Integrator = Integrator.RK4
    step: float = 1e-4
    tolerance: AdaptiveTolerance = AdaptiveTolerance()
    t_end: float = 2.0
    record_every: float = 1e-3
    initial: JointState = field(default_factory=JointState)
    variant: ModelVariant = ModelVariant.FULL

    def __post_init__(self):
        for name in ('step', 't_end', 'record_every'):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ValidationError(name, f'{name} > 0, got {value!r}')
        if not self.initial.is_finite():
            raise ValidationError('initial', 'initial state must be finite')

    def to_dict(self) -> dict:
        out = {
            'integrator': self.integrator.value,
            'step': self.step,
            't_end': self.t_end,
            'record_every': self.record_every,
            'variant': self.variant.value,
            'initial': {'q': self.initial.q.tolist(), 'qdot': self.initial.qdot.tolist()},
        }
        if self.integrator is Integrator.RK45:
            tol = self.tolerance
            out['tolerance'] = {'rtol': tol.rtol, 'atol': tol.atol, 'h_min': tol.h_min, 'h_max': tol.h_max}
        return out


@dataclass(eq=False)
class Trajectory:
    """
    Samples of a run. Arrays are indexed by sample; q, qd, qdd and tau have shape (n, 3).
    step_log holds (t, h) of every accepted adaptive step, empty for fixed-step runs.
    """
    t: np.ndarray
    q: np.ndarray
    qd: np.ndarray
    qdd: np.ndarray
    tau: np.ndarray
    K: np.ndarray
    P: np.ndarray
    E: np.ndarray
    metadata: dict = field(default_factory=dict)
    step_log: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))

    def __len__(self):
        return len(self.t)

    @property
    def final_state(self) -> JointState:
        return JointState(self.q[-1], self.qd[-1])

    def to_frame(self) -> pd.DataFrame:
        """one row per sample, the 16 trajectory columns"""
        data = np.column_stack([self.t, self.q, self.qd, self.qdd, self.tau, self.K, self.P, self.E])
        return pd.DataFrame(data, columns=COLUMNS)

    def write_csv(self, path: Union[str, Path]):
        """
        write `# key: value` metadata lines followed by the CSV table, numbers with
        17 significant digits

        :raises OSError: if the file cannot be written
        """
        path = Path(path)
        with path.open('w', newline='') as fh:
            for key, value in self.metadata.items():
                fh.write(f'# {key}: {value}\n')
            self.to_frame().to_csv(fh, index=False, float_format='%.17g', lineterminator='\n')

    def sample_at(self, times) -> np.ndarray:
        """
        joint angles linearly interpolated at the given times (clamped at the ends)

        :return: array (len(times), 3)
        """
        times = np.asarray(times, dtype=float)
        return np.column_stack([np.interp(times, self.t, self.q[:, j]) for j in range(3)])


def read_trajectory_csv(path: Union[str, Path]) -> Trajectory:
    """
    read a trajectory written by Trajectory.write_csv

    :raises OSError: if the file cannot be read
    :raises ParseError: if a column is missing or a value is not numeric
    """
    path = Path(path)
    metadata = {}
    try:
        with path.open(encoding='utf-8') as fh:
            for line in fh:
                if not line.startswith('#'):
                    break
                key, _, value = line[1:].partition(':')
                metadata[key.strip()] = value.strip()
        df = pd.read_csv(path, comment='#', float_precision='round_trip')
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as err:
        raise ParseError(str(path), str(err)) from None
    missing = [c for c in COLUMNS if c not in df.columns]
    if missing:
        raise ParseError(str(path), f"missing column '{missing[0]}'")
    try:
        a = df[COLUMNS].astype(float).to_numpy()
    except ValueError as err:
        raise ParseError(str(path), f'non-numeric value ({err})') from None
    return Trajectory(t=a[:, 0], q=a[:, 1:4], qd=a[:, 4:7], qdd=a[:, 7:10], tau=a[:, 10:13],
                      K=a[:, 13], P=a[:, 14], E=a[:, 15], metadata=metadata)


def run_metadata(cfg: SimConfig, p: FingerParams, profile: ForceProfile) -> dict:
    """the header lines that let a run be repeated exactly"""
    return {
        'params_hash': p.digest(),
        'variant': cfg.variant.value,
        'integrator': cfg.integrator.value,
        'config': json.dumps(cfg.to_dict(), sort_keys=True),
        'params': json.dumps(p.to_dict(), sort_keys=True),
        'profile': json.dumps(describe_profile(profile), sort_keys=True),
    }


class _Recorder:
    """accumulates samples, recomputing qdd and the torque at the sample time"""

    def __init__(self, torque, p: FingerParams, v: ModelVariant):
        self.torque = torque
        self.p = p
        self.v = v
        self.rows = []

    def __call__(self, t: float, y: np.ndarray):
        s = JointState.from_vector(y)
        tau = np.asarray(self.torque(t, s), dtype=float)
        qdd = forward_dynamics(s, tau, self.p, self.v)
        kin = kinetic_energy(s, self.p)
        pot = potential_energy(s.q, self.p)
        self.rows.append(np.concatenate([[t], s.q, s.qdot, qdd, tau, [kin, pot, kin + pot]]))

    def trajectory(self, metadata: dict, step_log) -> Trajectory:
        a = np.array(self.rows)
        return Trajectory(t=a[:, 0], q=a[:, 1:4], qd=a[:, 4:7], qdd=a[:, 7:10], tau=a[:, 10:13],
                          K=a[:, 13], P=a[:, 14], E=a[:, 15], metadata=metadata,
                          step_log=np.array(step_log, dtype=float).reshape(-1, 2))


def _run_fixed(cfg: SimConfig, f, y: np.ndarray, record: _Recorder):
    kernel = _FIXED_KERNELS[cfg.integrator]
    h = cfg.step
    n_steps = max(1, math.ceil(cfg.t_end / h - 1e-9))
    stride = max(1, round(cfg.record_every / h))
    if abs(stride * h - cfg.record_every) > 1e-9 * cfg.record_every:
        warnings.warn(f'record_every={cfg.record_every} is not a multiple of step={h}, '
                      f'recording every {stride} steps ({stride * h:.6g} s)')

    t = 0.0
    for n in range(1, n_steps + 1):
        # t = n*h avoids accumulating rounding in the clock
        t_next = cfg.t_end if n == n_steps else n * h
        y = guarded_step(kernel, f, t, y, t_next - t)
        t = t_next
        if n % stride == 0 or n == n_steps:
            record(t, y)


def _run_adaptive(cfg: SimConfig, f, y: np.ndarray, record: _Recorder) -> list:
    tol = cfg.tolerance
    step_log = []
    n_records = max(1, math.ceil(cfg.t_end / cfg.record_every - 1e-9))
    h = min(cfg.step, tol.h_max)
    t = 0.0
    for k in range(1, n_records + 1):
        target = min(k * cfg.record_every, cfg.t_end)
        while t < target:
            clipped = target - t <= h
            h_use = target - t if clipped else h
            y, t_new, h_next = adaptive_kernel(f, t, y, h_use, tol)
            step_log.append((t, t_new - t))
            landed = clipped and math.isclose(t_new - t, h_use, rel_tol=1e-9)
            # a shortened step that lands on a record time keeps the larger h
            if not landed or h_next < h_use:
                h = h_next
            t = target if landed or abs(t_new - target) <= 1e-12 * max(1.0, target) else t_new
        record(t, y)
    return step_log


def simulate(cfg: SimConfig, p: FingerParams, profile: ForceProfile) -> Trajectory:
    """
    integrate the finger from cfg.initial to cfg.t_end under the tendon force profile

    The torque is joint_torques(force_at(profile, t), p), sampled at every stage.
    Samples are taken at t = 0, every record_every and at t_end.

    :param cfg: SimConfig
    :param p: FingerParams
    :param profile: ForceProfile
    :return: Trajectory with run metadata
    :raises IntegrationError: NonFiniteState or StepUnderflow, carrying the time of failure
    """
    torque = torque_schedule(profile, p)
    f = state_derivative(torque, p, cfg.variant)
    record = _Recorder(torque, p, cfg.variant)
    y = cfg.initial.as_vector()
    record(0.0, y)

    step_log = []
    if cfg.integrator is Integrator.RK45:
        step_log = _run_adaptive(cfg, f, y, record)
    else:
        _run_fixed(cfg, f, y, record)
    return record.trajectory(run_metadata(cfg, p, profile), step_log)


def simulate_variants(cfg: SimConfig, p: FingerParams,
                      profile: ForceProfile) -> tuple[Trajectory, Trajectory]:
    """run FULL and REDUCED on identical inputs, returns (full, reduced)"""
    full = simulate(replace(cfg, variant=ModelVariant.FULL), p, profile)
    reduced = simulate(replace(cfg, variant=ModelVariant.REDUCED), p, profile)
    return full, reduced


def energy_audit(traj: Trajectory, p: FingerParams) -> EnergyAudit:
    """
    energy bookkeeping of a recorded run

    residual(t) = E(t) - E(0) - int tau.qd dt + int cd qd.qd dt, integrated by the
    trapezoidal rule over the samples.

    :return: namedtuple EnergyAudit(max_drift_rel, work_balance_residual):
        max |E - E(0)| / max |E| and max |residual| / (max |E| + max |injected work|)
    :raises ValueError: if the trajectory has fewer than two samples
    """
    if len(traj) < 2:
        raise ValueError(f'ERROR: energy audit needs at least 2 samples ({len(traj)} given)')
    drift = traj.E - traj.E[0]
    power_in = np.einsum('ij,ij->i', traj.tau, traj.qd)
    power_lost = p.cd * np.einsum('ij,ij->i', traj.qd, traj.qd)
    injected = cumulative_trapezoid(power_in, traj.t, initial=0.0)
    dissipated = cumulative_trapezoid(power_lost, traj.t, initial=0.0)
    residual = drift - injected + dissipated

    peak = float(np.max(np.abs(traj.E)))
    max_drift_rel = float(np.max(np.abs(drift))) / max(peak, 1e-12)
    scale = max(peak + float(np.max(np.abs(injected))), 1e-12)
    return EnergyAudit(max_drift_rel, float(np.max(np.abs(residual))) / scale)
