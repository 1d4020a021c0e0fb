"""
Kinematic and energetic quantities of the planar three-link finger.

Angles are relative joint angles: link i points along q1 + ... + qi, measured
from the horizontal, with gravity acting along -y. The zero configuration is
the finger straight and horizontal. Every function here is pure.
"""
from __future__ import annotations

import math

import numpy as np

from .params import FingerParams, JointState

FD_STEP = 1e-6

# rotational pattern matrices: link i spins at q1 + ... + qi
_ROTATION_PATTERNS = (
    np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]),
    np.array([[1.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 0.0]]),
    np.ones((3, 3)),
)


def _angles(q):
    q1, q2, q3 = float(q[0]), float(q[1]), float(q[2])
    return q1, q1 + q2, q1 + q2 + q3


def com_positions(q, p: FingerParams) -> np.ndarray:
    """
    centre-of-mass positions of the three links in the base frame

    :param q: joint angles (rad)
    :param p: FingerParams
    :return: array (3, 2), row i = (x, y) of link i+1
    """
    a1, a12, a123 = _angles(q)
    pip = np.array([p.l1 * math.cos(a1), p.l1 * math.sin(a1)])
    dip = pip + p.l2 * np.array([math.cos(a12), math.sin(a12)])
    return np.array([
        p.lc1 * np.array([math.cos(a1), math.sin(a1)]),
        pip + p.lc2 * np.array([math.cos(a12), math.sin(a12)]),
        dip + p.lc3 * np.array([math.cos(a123), math.sin(a123)]),
    ])


def link_positions(q, p: FingerParams) -> np.ndarray:
    """
    joint and fingertip positions: rows are MCP, PIP, DIP, fingertip

    :return: array (4, 2) in metres
    """
    points = np.zeros((4, 2))
    lengths = (p.l1, p.l2, p.l3)
    for i, angle in enumerate(_angles(q)):
        points[i + 1] = points[i] + lengths[i] * np.array([math.cos(angle), math.sin(angle)])
    return points


def velocity_jacobians(q, p: FingerParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    linear-velocity Jacobians of the three link centres of mass.
    The third row of each is zero, motion is planar.

    :return: (Jv1, Jv2, Jv3), each 3x3
    """
    a1, a12, a123 = _angles(q)
    s1, c1 = math.sin(a1), math.cos(a1)
    s12, c12 = math.sin(a12), math.cos(a12)
    s123, c123 = math.sin(a123), math.cos(a123)

    jv1 = np.array([
        [-p.lc1 * s1, 0.0, 0.0],
        [p.lc1 * c1, 0.0, 0.0],
        [0.0, 0.0, 0.0],
    ])
    jv2 = np.array([
        [-p.l1 * s1 - p.lc2 * s12, -p.lc2 * s12, 0.0],
        [p.l1 * c1 + p.lc2 * c12, p.lc2 * c12, 0.0],
        [0.0, 0.0, 0.0],
    ])
    w13 = -p.lc3 * s123
    w12 = -p.l2 * s12 + w13
    w11 = -p.l1 * s1 + w12
    w23 = p.lc3 * c123
    w22 = p.l2 * c12 + w23
    w21 = p.l1 * c1 + w22
    jv3 = np.array([
        [w11, w12, w13],
        [w21, w22, w23],
        [0.0, 0.0, 0.0],
    ])
    return jv1, jv2, jv3


def rotational_energy_matrix(p: FingerParams) -> np.ndarray:
    """
    constant rotational contribution R to the inertia matrix, K_rot = 1/2 qdot^T R qdot

    In the plane the conjugation R_i I_i R_i^T collapses to the scalar I_i, so
    R is the inertia-weighted sum of the three 0/1 pattern matrices.
    """
    return (p.I1 * _ROTATION_PATTERNS[0]
            + p.I2 * _ROTATION_PATTERNS[1]
            + p.I3 * _ROTATION_PATTERNS[2])


def inertia_matrix_closed(q, p: FingerParams, paper_d11: bool = False) -> np.ndarray:
    """
    closed-form inertia matrix D(q)

    The m3 term of d11 carries 2*l1*lc3*cos(q2+q3); the printed form drops the
    factor 2*l1, which is dimensionally wrong and disagrees with the Jacobian
    assembly. paper_d11=True reproduces the printed form, for the validation
    demo only.

    :param q: joint angles (rad), only q2 and q3 matter
    :param p: FingerParams
    :param paper_d11: bool, use the uncorrected d11
    :return: 3x3 symmetric array (kg·m²)
    """
    c2 = math.cos(float(q[1]))
    c3 = math.cos(float(q[2]))
    c23 = math.cos(float(q[1]) + float(q[2]))
    m1, m2, m3 = p.m1, p.m2, p.m3
    l1, l2 = p.l1, p.l2
    lc1, lc2, lc3 = p.lc1, p.lc2, p.lc3

    d11_cross = lc3 * c23 if paper_d11 else 2.0 * l1 * lc3 * c23
    d11 = (m1 * lc1 ** 2
           + m2 * (l1 ** 2 + lc2 ** 2 + 2.0 * l1 * lc2 * c2)
           + m3 * (l1 ** 2 + l2 ** 2 + lc3 ** 2 + 2.0 * l1 * l2 * c2 + 2.0 * l2 * lc3 * c3 + d11_cross)
           + p.I1 + p.I2 + p.I3)
    d12 = (m2 * (lc2 ** 2 + l1 * lc2 * c2)
           + m3 * (l2 ** 2 + lc3 ** 2 + 2.0 * l2 * lc3 * c3 + l1 * l2 * c2 + l1 * lc3 * c23)
           + p.I2 + p.I3)
    d13 = m3 * (lc3 ** 2 + l1 * lc3 * c23 + l2 * lc3 * c3) + p.I3
    d22 = m3 * (l2 ** 2 + lc3 ** 2 + 2.0 * l2 * lc3 * c3) + m2 * lc2 ** 2 + p.I2 + p.I3
    d23 = m3 * (lc3 ** 2 + l2 * lc3 * c3) + p.I3
    d33 = m3 * lc3 ** 2 + p.I3
    return np.array([
        [d11, d12, d13],
        [d12, d22, d23],
        [d13, d23, d33],
    ])


def inertia_matrix_jacobian(q, p: FingerParams) -> np.ndarray:
    """
    inertia matrix assembled as sum_i m_i Jv_i^T Jv_i + R, the oracle for inertia_matrix_closed

    :return: 3x3 symmetric array (kg·m²)
    """
    d = rotational_energy_matrix(p)
    for mass, jv in zip((p.m1, p.m2, p.m3), velocity_jacobians(q, p)):
        d = d + mass * (jv.T @ jv)
    # J^T J is symmetric in exact arithmetic, make it so in floating point too
    return 0.5 * (d + d.T)


def kinetic_energy(s: JointState, p: FingerParams) -> float:
    """1/2 qdot^T D(q) qdot with the Jacobian-assembled D (J)"""
    qdot = np.asarray(s.qdot, dtype=float)
    return 0.5 * float(qdot @ inertia_matrix_jacobian(s.q, p) @ qdot)


def potential_energy(q, p: FingerParams) -> float:
    """gravity plus torsional-spring potential energy (J)"""
    a1, a12, a123 = _angles(q)
    gravity = p.g * ((p.m1 * p.lc1 + (p.m2 + p.m3) * p.l1) * math.sin(a1)
                     + (p.m2 * p.lc2 + p.m3 * p.l2) * math.sin(a12)
                     + p.m3 * p.lc3 * math.sin(a123))
    elastic = 0.5 * (p.kt1 * float(q[0]) ** 2 + p.kt2 * float(q[1]) ** 2 + p.kt3 * float(q[2]) ** 2)
    return gravity + elastic


def potential_gradient(q, p: FingerParams) -> np.ndarray:
    """
    dP/dq in closed form, the phi_k terms of the equations of motion

    :return: array (3,) in N·m
    """
    a1, a12, a123 = _angles(q)
    g3 = p.g * p.m3 * p.lc3 * math.cos(a123)
    g2 = p.g * (p.m2 * p.lc2 + p.m3 * p.l2) * math.cos(a12) + g3
    g1 = p.g * (p.m1 * p.lc1 + (p.m2 + p.m3) * p.l1) * math.cos(a1) + g2
    return np.array([
        g1 + p.kt1 * float(q[0]),
        g2 + p.kt2 * float(q[1]),
        g3 + p.kt3 * float(q[2]),
    ])


def christoffel_closed(q, p: FingerParams) -> np.ndarray:
    """
    closed-form Christoffel coefficients, C[i-1, j-1, k-1] = C_ijk

    The table is symmetric in (i, j); entries not assigned below are zero.

    :return: array (3, 3, 3) in kg·m²
    """
    s2 = math.sin(float(q[1]))
    s3 = math.sin(float(q[2]))
    s23 = math.sin(float(q[1]) + float(q[2]))
    h1 = p.l1 * p.lc2 * s2
    h2 = p.l1 * p.lc3 * s23
    h3 = p.l2 * p.lc3 * s3
    h4 = p.l1 * p.l2 * s2

    a = p.m2 * h1 + p.m3 * (h2 + h4)
    b = p.m3 * (h2 + h3)
    h = p.m3 * h3

    c = np.zeros((3, 3, 3))
    c[0, 0, 1] = a
    c[0, 0, 2] = b
    c[0, 1, 2] = c[1, 0, 2] = c[1, 1, 2] = h
    c[0, 1, 0] = c[1, 0, 0] = c[1, 1, 0] = -a
    c[1, 2, 1] = c[2, 1, 1] = c[2, 2, 1] = c[0, 2, 1] = c[2, 0, 1] = -h
    c[0, 2, 0] = c[2, 0, 0] = c[1, 2, 0] = c[2, 1, 0] = c[2, 2, 0] = -b
    return c


def inertia_derivatives(q, p: FingerParams, step: float = FD_STEP) -> np.ndarray:
    """
    central differences of the Jacobian-assembled D

    :return: array (3, 3, 3), [i, a, b] = d(d_ab)/dq_i
    """
    q = np.asarray(q, dtype=float)
    out = np.empty((3, 3, 3))
    for i in range(3):
        dq = np.zeros(3)
        dq[i] = step
        out[i] = (inertia_matrix_jacobian(q + dq, p) - inertia_matrix_jacobian(q - dq, p)) / (2.0 * step)
    return out


def christoffel_fd(q, p: FingerParams, symmetric: bool = True, step: float = FD_STEP) -> np.ndarray:
    """
    Christoffel coefficients from finite differences of D, the oracle for christoffel_closed

    C_ijk = d(d_kj)/dq_i - 1/2 d(d_ij)/dq_k. Taken literally this is not symmetric
    in (i, j); the closed-form table is its (i, j) symmetrisation. Both give the
    same quadratic velocity torque.

    :param symmetric: bool, default True, symmetrise in (i, j); False returns the literal formula
    :param step: finite-difference step (rad)
    :return: array (3, 3, 3)
    """
    dd = inertia_derivatives(q, p, step)
    raw = np.einsum('ikj->ijk', dd) - 0.5 * np.einsum('kij->ijk', dd)
    if not symmetric:
        return raw
    return 0.5 * (raw + raw.transpose(1, 0, 2))


def coriolis_matrix(q, qdot, p: FingerParams, christoffel: np.ndarray | None = None) -> np.ndarray:
    """
    Cm[k, j] = sum_i C_ijk qdot_i, so that Cm @ qdot is the quadratic velocity torque

    :param christoffel: optional precomputed tensor (defaults to christoffel_closed)
    :return: 3x3 array (N·m·s/rad)
    """
    if christoffel is None:
        christoffel = christoffel_closed(q, p)
    return np.einsum('ijk,i->kj', christoffel, np.asarray(qdot, dtype=float))
