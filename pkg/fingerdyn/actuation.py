"""
Actuator force profiles and the tendon torque distribution.

The TCP muscle force is an input time series; electrothermal muscle physics is
not modelled. The tendon torque tau = F_eff * e is shared between the joints as
(alpha, beta, gamma) * tau.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Optional, Union

import numpy as np
import pandas as pd

from .enums import ProfileKind
from .exceptions import ParseError, ValidationError
from .params import FingerParams, GeneralizedForces


def _check_force(name: str, value: float):
    if not math.isfinite(value) or value < 0:
        raise ValidationError(name, f'{name} >= 0 N, got {value}')


@dataclass(frozen=True)
class Step:
    """F0 while t_on <= t < t_off, zero otherwise"""
    F0: float
    t_on: float = 0.0
    t_off: float = math.inf

    kind = ProfileKind.Step

    def __post_init__(self):
        _check_force('F0', self.F0)
        if self.t_on < 0:
            raise ValidationError('t_on', 't_on >= 0')
        if not self.t_off > self.t_on:
            raise ValidationError('t_off', f't_off > t_on ({self.t_off} vs {self.t_on})')

    def __call__(self, t: float) -> float:
        return self.F0 if self.t_on <= t < self.t_off else 0.0


@dataclass(frozen=True)
class Ramp:
    """F0 until t0, linear to F1 at t1, F1 afterwards"""
    F0: float
    F1: float
    t0: float
    t1: float

    kind = ProfileKind.Ramp

    def __post_init__(self):
        _check_force('F0', self.F0)
        _check_force('F1', self.F1)
        if self.t0 < 0:
            raise ValidationError('t0', 't0 >= 0')
        if not self.t1 > self.t0:
            raise ValidationError('t1', f't1 > t0 ({self.t1} vs {self.t0})')

    def __call__(self, t: float) -> float:
        if t <= self.t0:
            return self.F0
        if t >= self.t1:
            return self.F1
        return self.F0 + (self.F1 - self.F0) * (t - self.t0) / (self.t1 - self.t0)


@dataclass(frozen=True)
class Pulse:
    """periodic square wave: F0 during the first duty fraction of every period"""
    F0: float
    period: float
    duty: float = 0.5

    kind = ProfileKind.Pulse

    def __post_init__(self):
        _check_force('F0', self.F0)
        if not self.period > 0:
            raise ValidationError('period', 'period > 0')
        if not 0.0 <= self.duty <= 1.0:
            raise ValidationError('duty', '0 <= duty <= 1')

    def __call__(self, t: float) -> float:
        phase = math.fmod(t, self.period) / self.period
        return self.F0 if phase < self.duty else 0.0


@dataclass(frozen=True, eq=False)
class ForceTable:
    """
    measured force samples, linearly interpolated and clamped outside their domain.
    The temperature column is carried as metadata only.
    """
    t: np.ndarray
    F: np.ndarray
    T: Optional[np.ndarray] = field(default=None, compare=False)

    kind = ProfileKind.Table

    def __post_init__(self):
        t = np.array(self.t, dtype=float).reshape(-1)
        force = np.array(self.F, dtype=float).reshape(-1)
        if t.size == 0 or t.size != force.size:
            raise ValidationError('F', f'needs one force per time sample ({t.size} times, {force.size} forces)')
        if not np.all(np.isfinite(t)) or np.any(t < 0):
            raise ValidationError('t', 'times must be finite and >= 0')
        if np.any(np.diff(t) <= 0):
            raise ValidationError('t', 'times must be strictly increasing')
        if not np.all(np.isfinite(force)) or np.any(force < 0):
            raise ValidationError('F', 'forces must be finite and >= 0')
        object.__setattr__(self, 't', t)
        object.__setattr__(self, 'F', force)
        if self.T is not None:
            object.__setattr__(self, 'T', np.array(self.T, dtype=float).reshape(-1))

    def __call__(self, t: float) -> float:
        return float(np.interp(t, self.t, self.F))


ForceProfile = Union[Step, Ramp, Pulse, ForceTable]


def load_force_table(path: Union[str, Path]) -> ForceTable:
    """
    read a two-column `t,F` CSV (header row required, SI units), an extra `T` column is kept as metadata

    :raises OSError: if the file cannot be read
    :raises ParseError: if a required column is missing or a value is not numeric
    """
    path = Path(path)
    try:
        df = pd.read_csv(path, comment='#', float_precision='round_trip')
    except (pd.errors.ParserError, UnicodeDecodeError) as err:
        raise ParseError(str(path), str(err)) from None
    except pd.errors.EmptyDataError:
        raise ParseError(str(path), 'file is empty') from None
    df.columns = [str(c).strip() for c in df.columns]
    for column in ('t', 'F'):
        if column not in df.columns:
            raise ParseError(str(path), f"missing column '{column}'")
    try:
        numeric = df.astype(float)
    except ValueError as err:
        raise ParseError(str(path), f'non-numeric value ({err})') from None
    temperature = numeric['T'].to_numpy() if 'T' in numeric.columns else None
    try:
        return ForceTable(numeric['t'].to_numpy(), numeric['F'].to_numpy(), temperature)
    except ValidationError as err:
        raise ParseError(f'{path} column {err.key}', err.constraint) from None


def force_at(profile: ForceProfile, t: float) -> float:
    """
    actuator force (N) at time t (s)

    :raises ValueError: if t < 0
    """
    if t < 0:
        raise ValueError(f'ERROR: force profiles start at t = 0 ({t=})')
    return float(profile(t))


def joint_torques(F: float, p: FingerParams) -> GeneralizedForces:
    """
    tendon force to joint torques: F_eff = max(F - friction, 0), tau = F_eff * e,
    returned as (alpha, beta, gamma) * tau

    :param F: actuator force (N), >= 0
    :param p: FingerParams
    :return: GeneralizedForces (N·m)
    :raises ValueError: if F is negative
    """
    if F < 0:
        raise ValueError(f'ERROR: tendon force must be >= 0 N ({F=})')
    # a tendon cannot push
    effective = max(F - p.friction_force, 0.0)
    tau = effective * p.e
    return GeneralizedForces(p.alpha * tau, p.beta * tau, p.gamma * tau)


def torque_schedule(profile: ForceProfile, p: FingerParams) -> Callable:
    """return torque(t, state) -> GeneralizedForces for the integrators"""
    def torque(t, state=None):
        return joint_torques(force_at(profile, t), p)
    return torque


def describe_profile(profile: ForceProfile) -> dict:
    """
    JSON-ready description of a profile, used in trajectory metadata and fitted-params files.
    Tables are summarised by their sample count, span and a digest of the samples.
    """
    if isinstance(profile, ForceTable):
        payload = np.concatenate([profile.t, profile.F]).tobytes()
        return {
            'kind': profile.kind.value,
            'points': int(profile.t.size),
            't_first': float(profile.t[0]),
            't_last': float(profile.t[-1]),
            'sha256': hashlib.sha256(payload).hexdigest()[:16],
        }
    out = {'kind': profile.kind.value}
    out.update(asdict(profile))
    # JSON has no infinity
    return {k: (None if isinstance(v, float) and math.isinf(v) else v) for k, v in out.items()}
