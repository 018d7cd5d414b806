"""Nondimensional two-axis vibratory gyroscope.

The proof-mass dynamics are scaled by a reference frequency ``omega0`` and a
reference length ``q0``; in those units the plant is

    qdd = -M qdot - N q + u + E,    M = D + 2 Omega,  N = K_b

with ``Omega`` the skew-symmetric Coriolis matrix of the angular rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

__all__ = [
    "PhysicalParams",
    "NondimParams",
    "PlantState",
    "NonFiniteStateError",
    "PAPER_PHYSICAL",
    "nondimensionalize",
    "dimensional_force",
    "nondimensional_force",
    "dynamics",
    "step_rk4",
    "input_response",
    "state_response",
    "LinearRK4",
]


class NonFiniteStateError(ArithmeticError):
    """Raised when a plant state or acceleration stops being finite."""


@dataclass(frozen=True)
class PhysicalParams:
    """Gyroscope constants in SI units."""

    mass: float  # kg
    k_xx: float  # N/m
    k_yy: float
    k_xy: float
    d_xx: float  # N s/m
    d_yy: float
    d_xy: float
    angular_rate: float  # rad/s
    ref_freq: float = 1000.0  # rad/s
    ref_length: float = 1e-6  # m

    def validate(self) -> None:
        for name in ("mass", "ref_freq", "ref_length", "k_xx", "k_yy", "d_xx", "d_yy"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be finite and > 0, got {v!r}")
        for name in ("k_xy", "d_xy", "angular_rate"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


#: Gyroscope table used throughout the examples and presets.
PAPER_PHYSICAL = PhysicalParams(
    mass=1.8e-7,
    k_xx=63.955,
    k_yy=95.92,
    k_xy=12.779,
    d_xx=1.8e-6,
    d_yy=1.8e-6,
    d_xy=3.6e-7,
    angular_rate=100.0,
    ref_freq=1000.0,
    ref_length=1e-6,
)


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class NondimParams:
    """Dimensionless stiffness, damping and rate entries.

    The matrices are derived (cached, read-only) from the scalar fields, so
    the scalars stay the single source of truth.
    """

    wx2: float
    wy2: float
    wxy: float
    d_xx: float
    d_yy: float
    d_xy: float
    omega_z: float

    @cached_property
    def D(self) -> np.ndarray:
        return _frozen([[self.d_xx, self.d_xy], [self.d_xy, self.d_yy]])

    @cached_property
    def K_b(self) -> np.ndarray:
        return _frozen([[self.wx2, self.wxy], [self.wxy, self.wy2]])

    @cached_property
    def Omega(self) -> np.ndarray:
        return _frozen([[0.0, -self.omega_z], [self.omega_z, 0.0]])

    @cached_property
    def M(self) -> np.ndarray:
        return _frozen(self.D + 2.0 * self.Omega)

    @property
    def N(self) -> np.ndarray:
        return self.K_b


def nondimensionalize(p: PhysicalParams) -> NondimParams:
    p.validate()
    m, w0 = p.mass, p.ref_freq
    stiff = m * w0**2
    damp = m * w0
    return NondimParams(
        wx2=p.k_xx / stiff,
        wy2=p.k_yy / stiff,
        wxy=p.k_xy / stiff,
        d_xx=p.d_xx / damp,
        d_yy=p.d_yy / damp,
        d_xy=p.d_xy / damp,
        omega_z=p.angular_rate / w0,
    )


def dimensional_force(u, p: PhysicalParams) -> np.ndarray:
    """Nondimensional control -> force in newtons, ``u* = u m omega0^2 q0``."""
    return np.asarray(u, dtype=float) * (p.mass * p.ref_freq**2 * p.ref_length)


def nondimensional_force(u_star, p: PhysicalParams) -> np.ndarray:
    return np.asarray(u_star, dtype=float) / (p.mass * p.ref_freq**2 * p.ref_length)


@dataclass(frozen=True)
class PlantState:
    q: np.ndarray
    qdot: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "q", np.asarray(self.q, dtype=float))
        object.__setattr__(self, "qdot", np.asarray(self.qdot, dtype=float))

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.q).all() and np.isfinite(self.qdot).all() and math.isfinite(self.t))


def dynamics(s: PlantState, u, E, p: NondimParams) -> np.ndarray:
    """Acceleration ``-M qdot - N q + u + E``."""
    M, N = p.M, p.N
    acc = -M @ s.qdot - N @ s.q + np.asarray(u, dtype=float) + np.asarray(E, dtype=float)
    if not np.all(np.isfinite(acc)):
        raise NonFiniteStateError(f"non-finite acceleration at t={s.t}")
    return acc


def step_rk4(
    s: PlantState,
    u,
    E_fn: Callable[[float], np.ndarray] | None,
    p: NondimParams,
    dt: float,
) -> PlantState:
    """Advance one classical RK4 step with ``u`` held constant (zero-order hold)."""
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt!r}")
    M, N = p.M, p.N
    u = np.asarray(u, dtype=float)
    t, q, v = s.t, s.q, s.qdot
    h = 0.5 * dt

    if E_fn is None:
        def acc(tt, qq, vv):
            return u - M @ vv - N @ qq
    else:
        def acc(tt, qq, vv):
            return u + E_fn(tt) - M @ vv - N @ qq

    a1 = acc(t, q, v)
    q2, v2 = q + h * v, v + h * a1
    a2 = acc(t + h, q2, v2)
    q3, v3 = q + h * v2, v + h * a2
    a3 = acc(t + h, q3, v3)
    q4, v4 = q + dt * v3, v + dt * a3
    a4 = acc(t + dt, q4, v4)
    q_new = q + dt / 6.0 * (v + 2.0 * v2 + 2.0 * v3 + v4)
    v_new = v + dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
    out = PlantState(q_new, v_new, t + dt)
    if not out.is_finite():
        raise NonFiniteStateError(f"non-finite plant state after step from t={t}")
    return out


def input_response(p: NondimParams, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Sensitivities ``(dq/du, dqdot/du)`` of one RK4 step to the held input.

    An RK4 step of a linear plant is affine in ``u``, so these 2x2 matrices
    are exact and independent of the state.
    """
    zero = PlantState(np.zeros(2), np.zeros(2), 0.0)
    Gq = np.empty((2, 2))
    Gv = np.empty((2, 2))
    for j in range(2):
        unit = np.zeros(2)
        unit[j] = 1.0
        nxt = step_rk4(zero, unit, None, p, dt)
        Gq[:, j] = nxt.q
        Gv[:, j] = nxt.qdot
    return Gq, Gv


def state_response(p: NondimParams, dt: float) -> np.ndarray:
    """4x4 map of one unforced RK4 step on ``[q, qdot]``."""
    Phi = np.empty((4, 4))
    for j in range(4):
        x = np.zeros(4)
        x[j] = 1.0
        nxt = step_rk4(PlantState(x[:2], x[2:], 0.0), np.zeros(2), None, p, dt)
        Phi[:2, j] = nxt.q
        Phi[2:, j] = nxt.qdot
    return Phi


class LinearRK4:
    """The :func:`step_rk4` map of a fixed plant and ``dt`` as matrices.

    For a linear plant one RK4 step is exactly

        x' = Phi x + Gu u + Ge0 E(t) + Geh E(t + dt/2) + Ge1 E(t + dt)

    with ``x = [q, qdot]``. The matrices are read off :func:`step_rk4` by
    stepping unit inputs, so both agree to rounding; this form only skips
    the per-stage Python work inside long simulation loops.
    """

    def __init__(self, p: NondimParams, dt: float):
        if not dt > 0:
            raise ValueError(f"dt must be > 0, got {dt!r}")
        self.dt = float(dt)
        self.Phi = state_response(p, dt)
        Gq, Gv = input_response(p, dt)
        self.Gu = np.vstack([Gq, Gv])
        h = 0.5 * dt
        self.Ge = []
        for stage in (0.0, h, dt):
            G = np.empty((4, 2))
            for j in range(2):
                unit = np.zeros(2)
                unit[j] = 1.0

                def E(tt, unit=unit, stage=stage):
                    return unit if tt == stage else np.zeros(2)

                nxt = step_rk4(PlantState(np.zeros(2), np.zeros(2), 0.0), np.zeros(2), E, p, dt)
                G[:2, j] = nxt.q
                G[2:, j] = nxt.qdot
            self.Ge.append(G)
        for M in (self.Phi, self.Gu, *self.Ge):
            M.setflags(write=False)

    def free(self, x: np.ndarray, E_fn: Callable[[float], np.ndarray] | None = None, t: float = 0.0) -> np.ndarray:
        """Next state with zero input (and the disturbance, if given)."""
        out = self.Phi @ x
        if E_fn is not None:
            G0, Gh, G1 = self.Ge
            out = out + G0 @ E_fn(t) + Gh @ E_fn(t + 0.5 * self.dt) + G1 @ E_fn(t + self.dt)
        return out

    def step(self, x: np.ndarray, u, E_fn: Callable[[float], np.ndarray] | None = None, t: float = 0.0) -> np.ndarray:
        out = self.free(x, E_fn, t) + self.Gu @ u
        if not np.isfinite(out).all():
            raise NonFiniteStateError(f"non-finite plant state after step from t={t}")
        return out
