from __future__ import annotations

from .params import FingerParams, JointState, GeneralizedForces
from .enums import ModelVariant, Integrator, ProfileKind, FitMethod, CalibratedParam
from .model import (velocity_jacobians, rotational_energy_matrix, inertia_matrix_closed, inertia_matrix_jacobian,
                    kinetic_energy, potential_energy, potential_gradient, christoffel_closed, christoffel_fd,
                    coriolis_matrix, link_positions, com_positions)
from .dynamics import forward_dynamics, inverse_dynamics, static_equilibrium, neglected_torque
from .actuation import Step, Ramp, Pulse, ForceTable, force_at, joint_torques, load_force_table
from .integrators import AdaptiveTolerance, step_rk4, step_semi_implicit_euler, step_adaptive
from .simulation import SimConfig, Trajectory, simulate, energy_audit, read_trajectory_csv
from .calibration import CalibrationProblem, residual, fit
from .config import RunConfig, parse_config
