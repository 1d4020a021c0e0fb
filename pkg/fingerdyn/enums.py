from __future__ import annotations

from enum import Enum


class ModelVariant(str, Enum):
    """Which terms of the equations of motion are kept"""
    FULL = 'full'
    REDUCED = 'reduced'


class Integrator(str, Enum):
    """Time integrators available to the simulation runner"""
    RK4 = 'rk4'
    SEMI_IMPLICIT_EULER = 'semi-implicit-euler'
    RK45 = 'rk45'


class ProfileKind(str, Enum):
    """Actuator force profile shapes"""
    Step = 'step'
    Ramp = 'ramp'
    Pulse = 'pulse'
    Table = 'table'


class FitMethod(str, Enum):
    """Optimizers used by the calibration"""
    NelderMead = 'nelder-mead'
    LeastSquares = 'least-squares'


class CalibratedParam(str, Enum):
    """The FingerParams fields the calibration is allowed to free"""
    cd = 'cd'
    kt1 = 'kt1'
    kt2 = 'kt2'
    kt3 = 'kt3'
    alpha = 'alpha'
    beta = 'beta'
    gamma = 'gamma'


def enum_from_string(enum_cls, value: str, key: str):
    """
    return the member of enum_cls whose value is `value` (case-insensitive)

    :param enum_cls: one of the Enums above
    :param value: str, e.g. 'reduced'
    :param key: dotted config path reported on failure
    :return: enum member
    :raises ValidationError: if no member matches
    """
    from .exceptions import ValidationError

    for member in enum_cls:
        if isinstance(value, str) and member.value == value.lower():
            return member
    allowed = ', '.join(repr(m.value) for m in enum_cls)
    raise ValidationError(key, f'must be one of {allowed}, got {value!r}')
