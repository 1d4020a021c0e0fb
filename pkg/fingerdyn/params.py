from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, fields
from typing import NamedTuple

import numpy as np

from .exceptions import ValidationError


@dataclass(frozen=True)
class FingerParams:
    """
    Physical constants of the three-link finger (SI units).

    Links 1, 2, 3 are the proximal, middle and distal phalanges; joints 1, 2, 3
    are MCP, PIP and DIP. No numeric link parameters are published for the
    prototype, every concrete set in this package is illustrative.
    """
    m1: float
    m2: float
    m3: float
    l1: float
    l2: float
    l3: float
    lc1: float
    lc2: float
    lc3: float
    I1: float = 0.0
    I2: float = 0.0
    I3: float = 0.0
    kt1: float = 0.0
    kt2: float = 0.0
    kt3: float = 0.0
    cd: float = 0.0
    e: float = 0.0045
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0
    friction_force: float = 0.0
    g: float = 9.81

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ValidationError(f.name, f'must be a number, got {value!r}')
            if not math.isfinite(value):
                raise ValidationError(f.name, 'must be finite')
            object.__setattr__(self, f.name, float(value))

        for name in ('m1', 'm2', 'm3', 'l1', 'l2', 'l3', 'e'):
            if getattr(self, name) <= 0:
                raise ValidationError(name, f'{name} > 0')
        for i in (1, 2, 3):
            lc, length = getattr(self, f'lc{i}'), getattr(self, f'l{i}')
            if not 0 < lc <= length:
                raise ValidationError(f'lc{i}', f'0 < lc{i} <= l{i} ({lc} vs l{i}={length})')
        for name in ('I1', 'I2', 'I3', 'kt1', 'kt2', 'kt3', 'cd', 'friction_force',
                     'alpha', 'beta', 'gamma'):
            if getattr(self, name) < 0:
                raise ValidationError(name, f'{name} >= 0')

    @classmethod
    def unit(cls, **overrides) -> FingerParams:
        """
        unit-scale reference set: m_i=1 kg, l_i=1 m, lc_i=0.5 m, I_i=0, no springs, no damping

        :param overrides: any field to replace, e.g. kt1=2.0
        """
        values = dict(m1=1.0, m2=1.0, m3=1.0, l1=1.0, l2=1.0, l3=1.0, lc1=0.5, lc2=0.5, lc3=0.5)
        values.update(overrides)
        return cls(**values)

    @property
    def springs(self) -> np.ndarray:
        return np.array([self.kt1, self.kt2, self.kt3])

    @property
    def fractions(self) -> np.ndarray:
        return np.array([self.alpha, self.beta, self.gamma])

    def to_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        """sha256 of the canonical JSON encoding, used to tag trajectories"""
        payload = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()[:16]

    def summary(self) -> list[str]:
        """human readable description lines (SI values, with mm for lengths)"""
        mm = 1000.0
        return [
            f'link lengths l = ({self.l1 * mm:.2f}, {self.l2 * mm:.2f}, {self.l3 * mm:.2f}) mm, '
            f'masses m = ({self.m1:.4g}, {self.m2:.4g}, {self.m3:.4g}) kg',
            f'springs kt = ({self.kt1:.4g}, {self.kt2:.4g}, {self.kt3:.4g}) N·m/rad, '
            f'damping cd = {self.cd:.4g} N·m·s/rad',
            f'tendon offset e = {self.e * mm:.2f} mm, torque fractions '
            f'(alpha, beta, gamma) = ({self.alpha:.4g}, {self.beta:.4g}, {self.gamma:.4g}), '
            f'friction = {self.friction_force:.4g} N',
        ]


@dataclass(frozen=True, eq=False)
class JointState:
    """joint angles q (rad) and angular velocities qdot (rad/s)"""
    q: np.ndarray = field(default_factory=lambda: np.zeros(3))
    qdot: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        q = np.array(self.q, dtype=float).reshape(3)
        qdot = np.array(self.qdot, dtype=float).reshape(3)
        q.flags.writeable = False
        qdot.flags.writeable = False
        object.__setattr__(self, 'q', q)
        object.__setattr__(self, 'qdot', qdot)

    @classmethod
    def from_vector(cls, y) -> JointState:
        """build from the 6-vector (q, qdot) used by the integrators"""
        return cls(y[:3], y[3:])

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.q, self.qdot])

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.q)) and np.all(np.isfinite(self.qdot)))


class GeneralizedForces(NamedTuple):
    """joint torques at MCP, PIP and DIP (N·m)"""
    tau1: float
    tau2: float
    tau3: float

    @classmethod
    def zero(cls) -> GeneralizedForces:
        return cls(0.0, 0.0, 0.0)

    @classmethod
    def from_array(cls, values) -> GeneralizedForces:
        a, b, c = (float(v) for v in values)
        return cls(a, b, c)
