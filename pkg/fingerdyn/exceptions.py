from __future__ import annotations

import numpy as np


class FingerDynError(Exception):
    """Base class of every error raised by fingerdyn"""


# configuration -----------------------------------------------------------------

class ConfigError(FingerDynError):
    """A run configuration or input file could not be used"""


class ParseError(ConfigError):
    def __init__(self, location: str, message: str):
        self.location = location
        super().__init__(f'ERROR: cannot parse {location}: {message}')


class ValidationError(ConfigError, ValueError):
    def __init__(self, key: str, constraint: str):
        self.key = key
        self.constraint = constraint
        super().__init__(f'ERROR: invalid value for {key} ({constraint})')

    def prefixed(self, section: str) -> ValidationError:
        """return the same error with `section.` prepended to the key path"""
        return ValidationError(f'{section}.{self.key}', self.constraint)


# dynamics ----------------------------------------------------------------------

class DynamicsError(FingerDynError):
    """The equations of motion cannot be evaluated"""


class NonFiniteInput(DynamicsError, ValueError):
    pass


class SingularInertia(DynamicsError):
    def __init__(self, condition: float):
        self.condition = condition
        super().__init__(f'ERROR: inertia matrix is numerically singular ({condition=:.3e}), '
                         f'check the link parameters')


class NoConvergence(DynamicsError):
    def __init__(self, best, residual: float, iterations: int):
        self.best = np.asarray(best, dtype=float)
        self.residual = residual
        self.iterations = iterations
        super().__init__(f'ERROR: equilibrium solver did not converge after {iterations} iterations '
                         f'(residual={residual:.3e} N·m, best q={self.best.tolist()})')


# integration -------------------------------------------------------------------

class IntegrationError(FingerDynError):
    def __init__(self, t: float, state, message: str):
        self.t = t
        self.state = state
        super().__init__(f'ERROR: {message} at t={t:.6g} s')


class NonFiniteState(IntegrationError):
    def __init__(self, t: float, state):
        super().__init__(t, state, 'state became non-finite (integration diverged)')


class StepUnderflow(IntegrationError):
    def __init__(self, t: float, state, h: float, h_min: float):
        self.h = h
        super().__init__(t, state, f'adaptive step {h:.3e} s fell below h_min={h_min:.3e} s')


# calibration -------------------------------------------------------------------

class CalibrationError(FingerDynError):
    pass


class SimulationDiverged(CalibrationError):
    def __init__(self, candidate: dict, cause: Exception):
        self.candidate = candidate
        self.cause = cause
        super().__init__(f'ERROR: simulation diverged for candidate {candidate} ({cause})')


class NotConverged(CalibrationError):
    def __init__(self, result):
        self.result = result
        reason = 'cost is flat (zero gradient), parameters are unidentifiable' if result.flat_cost \
            else result.message
        super().__init__(f'ERROR: calibration did not converge: {reason}')
