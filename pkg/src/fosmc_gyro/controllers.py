"""Fractional sliding-mode and super-twisting control laws.

Per axis the sliding variable is

    s = edot + alpha D^(mu-1) e + beta D^(mu-2) e + gamma * int sp(e, r/m) dt

with ``sp(x, p) = sign(x)|x|^p`` and ``D`` the GL operator. The FOSMC law is the
equivalent control plus the reaching term ``-K_s s``; the compound law adds the
super-twisting term ``-k1 |sp(e)|^(1/2) sign(e) - k2 int sign(e) dt``.

The functions below evaluate those laws literally on the sampled histories.
:class:`FractionalSMC` wraps them into a sampled-data controller and offers a
predictive realisation of the equivalent control that stays stable at
practical sample rates (see its docstring).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .frac_calc import GLBank, SampledHistory, differint, gl_weights, sign, signed_pow
from .plant import LinearRK4, NondimParams, input_response

__all__ = [
    "SurfaceGains",
    "STCGains",
    "ControllerState",
    "ControlOutput",
    "FractionalSMC",
    "tracking_error",
    "sliding_surface",
    "equivalent_control",
    "fosmc_control",
    "stc_control",
    "compound_control",
    "lyapunov_diagnostics",
    "DISTURBANCE_MODES",
    "PREHISTORY_MODES",
    "SCHEMES",
]

DISTURBANCE_MODES = ("known", "unknown")
PREHISTORY_MODES = ("zero", "initial")
SCHEMES = ("predictive", "explicit")


def _axis(v, name: str) -> np.ndarray:
    a = np.broadcast_to(np.asarray(v, dtype=float), (2,)).copy()
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} must be finite")
    return a


@dataclass(frozen=True, eq=False)
class SurfaceGains:
    """Diagonal surface and reaching gains plus the fractional order and exponent."""

    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    K_s: np.ndarray
    mu: float = 2.5
    r_exp: float = 1.5
    m_exp: float = 1.25

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "K_s"):
            object.__setattr__(self, name, _axis(getattr(self, name), name))

    @property
    def power(self) -> float:
        return self.r_exp / self.m_exp

    def validate(self, strict: bool = True) -> None:
        """Check positivity; ``strict=False`` admits zero gains and ``mu >= 2`` for analysis."""
        for name in ("alpha", "beta", "gamma", "K_s"):
            v = getattr(self, name)
            if np.any(v < 0) or (strict and np.any(v <= 0)):
                raise ValueError(f"{name} must be > 0, got {v.tolist()}")
        if not (self.r_exp > 0 and self.m_exp > 0):
            raise ValueError("r_exp and m_exp must be > 0")
        if self.mu < 2 or (strict and self.mu <= 2):
            raise ValueError(f"mu must be > 2, got {self.mu!r}")

    def __eq__(self, other):
        if not isinstance(other, SurfaceGains):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, f), getattr(other, f))
            for f in ("alpha", "beta", "gamma", "K_s", "mu", "r_exp", "m_exp")
        )


@dataclass(frozen=True, eq=False)
class STCGains:
    k1: np.ndarray
    k2: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "k1", _axis(self.k1, "k1"))
        object.__setattr__(self, "k2", _axis(self.k2, "k2"))

    def validate(self, strict: bool = True) -> None:
        for name in ("k1", "k2"):
            v = getattr(self, name)
            if np.any(v < 0) or (strict and np.any(v <= 0)):
                raise ValueError(f"{name} must be > 0, got {v.tolist()}")

    def __eq__(self, other):
        if not isinstance(other, STCGains):
            return NotImplemented
        return np.array_equal(self.k1, other.k1) and np.array_equal(self.k2, other.k2)


class ControllerState:
    """Error histories and integral accumulators owned by one controller.

    ``record`` must be called once per sample. Both accumulators use the
    trapezoidal rule between consecutive samples and start at zero.

    With ``prehistory="initial"`` the GL operators see the error as having
    sat at its first recorded value forever, instead of jumping from zero at
    ``t = 0``.
    """

    def __init__(
        self,
        dt: float,
        capacity: int,
        power: float,
        memory_len: Optional[int] = None,
        disturbance_mode: str = "unknown",
        prehistory: str = "zero",
    ):
        if disturbance_mode not in DISTURBANCE_MODES:
            raise ValueError(f"disturbance_mode must be one of {DISTURBANCE_MODES}")
        if prehistory not in PREHISTORY_MODES:
            raise ValueError(f"prehistory must be one of {PREHISTORY_MODES}")
        if not power > 0:
            raise ValueError("power must be > 0")
        self.dt = float(dt)
        self.power = float(power)
        self.memory_len = int(memory_len) if memory_len else int(capacity)
        if self.memory_len > capacity:
            raise ValueError("memory_len cannot exceed the history capacity")
        self.disturbance_mode = disturbance_mode
        self.prehistory = prehistory
        self.e_hist = SampledHistory(dt, capacity, shape=(2,))
        self.edot_hist = SampledHistory(dt, capacity, shape=(2,))
        self.I_pow = np.zeros(2)
        self.I_sign = np.zeros(2)
        self._prev: Optional[np.ndarray] = None

    def record(self, e, edot) -> None:
        e = np.array(e, dtype=float)
        edot = np.array(edot, dtype=float)
        sp = _sp(e, self.power)
        sg = np.sign(e)
        if self._prev is None:
            if self.prehistory == "initial":
                self.e_hist.set_baseline(e)
        else:
            h = 0.5 * self.dt
            self.I_pow = self.I_pow + h * (sp + self._prev_sp)
            self.I_sign = self.I_sign + h * (sg + self._prev_sign)
        self.e_hist.append(e)
        self.edot_hist.append(edot)
        self._prev = e
        self._edot = edot
        self._prev_sp, self._prev_sign = sp, sg

    @property
    def e(self) -> np.ndarray:
        """Newest error sample (read-only view)."""
        if self._prev is None:
            raise ValueError("history is empty")
        v = self._prev.view()
        v.flags.writeable = False
        return v

    @property
    def edot(self) -> np.ndarray:
        if self._prev is None:
            raise ValueError("history is empty")
        v = self._edot.view()
        v.flags.writeable = False
        return v

    def fractional(self, order: float) -> np.ndarray:
        """GL derivative of the error history of the given order, per axis."""
        return differint(self.e_hist, gl_weights(order, self.memory_len))


@dataclass
class ControlOutput:
    u_eq: np.ndarray
    u_s: np.ndarray
    u_stc: np.ndarray
    u_total: np.ndarray
    s: np.ndarray
    V: float
    Vdot: float


def tracking_error(q, q_d) -> np.ndarray:
    return np.asarray(q, dtype=float) - np.asarray(q_d, dtype=float)


def sliding_surface(cs: ControllerState, gains: SurfaceGains) -> np.ndarray:
    mu = gains.mu
    return (
        cs.edot
        + gains.alpha * cs.fractional(mu - 1.0)
        + gains.beta * cs.fractional(mu - 2.0)
        + gains.gamma * cs.I_pow
    )


def equivalent_control(cs, plant: NondimParams, q, qdot, qdd_d, E_hat, gains: SurfaceGains) -> np.ndarray:
    """Model-cancelling part of the FOSMC law, evaluated on the recorded histories."""
    mu = gains.mu
    return (
        plant.M @ np.asarray(qdot, dtype=float)
        + plant.N @ np.asarray(q, dtype=float)
        - np.asarray(E_hat, dtype=float)
        + np.asarray(qdd_d, dtype=float)
        - gains.alpha * cs.fractional(mu)
        - gains.beta * cs.fractional(mu - 1.0)
        - gains.gamma * signed_pow(cs.e, gains.power)
    )


def fosmc_control(cs, plant, q, qdot, qdd_d, E_hat, gains: SurfaceGains) -> np.ndarray:
    return equivalent_control(cs, plant, q, qdot, qdd_d, E_hat, gains) - gains.K_s * sliding_surface(cs, gains)


def stc_control(cs: ControllerState, g: STCGains, gains: SurfaceGains) -> np.ndarray:
    """Super-twisting term on the signed error power.

    ``|sp(e, p)|^(1/2) = |e|^(p/2)`` and ``sign(sp(e, p)) = sign(e)``.
    """
    e = cs.e
    return -g.k1 * np.abs(e) ** (0.5 * gains.power) * sign(e) - g.k2 * cs.I_sign


def lyapunov_diagnostics(s_now, s_prev, dt: float) -> tuple[float, float]:
    """``V = s's / 2`` and its backward-difference rate."""
    if not dt > 0:
        raise ValueError("dt must be > 0")
    s_now = np.asarray(s_now, dtype=float)
    s_prev = np.asarray(s_prev, dtype=float)
    V = 0.5 * float(s_now @ s_now)
    V_prev = 0.5 * float(s_prev @ s_prev)
    return V, (V - V_prev) / dt


def compound_control(
    cs: ControllerState,
    plant: NondimParams,
    q,
    qdot,
    qdd_d,
    E_hat,
    gains: SurfaceGains,
    stc: Optional[STCGains] = None,
    s_prev=None,
) -> ControlOutput:
    """Literal FOSMC + STC evaluation. ``stc=None`` means the plain FOSMC law."""
    s = sliding_surface(cs, gains)
    u_eq = equivalent_control(cs, plant, q, qdot, qdd_d, E_hat, gains)
    u_s = -gains.K_s * s
    u_stc = stc_control(cs, stc, gains) if stc is not None else np.zeros(2)
    V, Vdot = lyapunov_diagnostics(s, s if s_prev is None else s_prev, cs.dt)
    return ControlOutput(u_eq, u_s, u_stc, u_eq + u_s + u_stc, s, V, Vdot)


Reference = Sequence[np.ndarray]  # (q_d, qdot_d, qdd_d)


class FractionalSMC:
    """Sampled-data FOSMC / FOSMC+STC controller with a zero-order-hold output.

    ``scheme="explicit"`` applies the literal law via :func:`compound_control`.
    Its ``-alpha D^mu e`` feedback reacts to a sample only one step late while
    its gain on the newest sample scales as ``dt^-mu``, so the loop diverges
    within a few dozen steps at any practical ``dt``.

    ``scheme="predictive"`` (default) keeps the law's structure but evaluates
    it as a sampled-data equivalent control: the RK4 plant step is affine in
    the held input, so the surface value one step ahead is an explicit
    function of ``u``. The input is chosen such that

        s[k+1] = s[k] + dt * (-K_s s[k] + u_stc[k])

    i.e. the closed loop realises the surface dynamics that the continuous
    derivation arrives at after substituting the compound law. The reported
    ``u_s`` and ``u_stc`` are the plant-input shares of the reaching and
    super-twisting terms; ``u_eq`` is the remainder holding ``s`` constant.
    """

    def __init__(
        self,
        plant: NondimParams,
        gains: SurfaceGains,
        stc: Optional[STCGains],
        dt: float,
        capacity: int,
        memory_len: Optional[int] = None,
        disturbance_mode: str = "unknown",
        prehistory: str = "initial",
        scheme: str = "predictive",
    ):
        if scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        self.plant = plant
        self.gains = gains
        self.stc = stc
        self.dt = float(dt)
        self.scheme = scheme
        self.state = ControllerState(dt, capacity, gains.power, memory_len, disturbance_mode, prehistory)
        self._bank = GLBank((gains.mu - 1.0, gains.mu - 2.0), self.state.memory_len, dt)
        self._Gq, self._Gv = input_response(plant, dt)
        c = gains.alpha * self._bank.head[0] + gains.beta * self._bank.head[1]
        self._A = self._Gv + c[:, None] * self._Gq
        self._A_inv = np.linalg.inv(self._A)
        self._stepper = LinearRK4(plant, dt)
        self._head_col = self._bank.head[:, None]
        self._ab = np.vstack([gains.alpha, gains.beta])
        self._c = c
        self._half_gamma = 0.5 * self.dt * gains.gamma
        self._half_power = 0.5 * gains.power
        self._s_prev: Optional[np.ndarray] = None
        self._ahead: Optional[np.ndarray] = None

    def update(
        self,
        t: float,
        q,
        qdot,
        ref_now: Reference,
        ref_next: Reference,
        E_fn: Optional[Callable[[float], np.ndarray]] = None,
    ) -> ControlOutput:
        """Record the current sample and return the input to hold over ``[t, t+dt]``."""
        q = np.asarray(q, dtype=float)
        qdot = np.asarray(qdot, dtype=float)
        q_d, qdot_d, qdd_d = ref_now
        cs = self.state
        cs.record(tracking_error(q, q_d), qdot - qdot_d)
        known = cs.disturbance_mode == "known"
        if self.scheme == "explicit":
            E_hat = E_fn(t) if (known and E_fn is not None) else np.zeros(2)
            out = compound_control(cs, self.plant, q, qdot, qdd_d, E_hat, self.gains, self.stc, self._s_prev)
        else:
            out = self._predictive(t, q, qdot, ref_now, ref_next, E_fn if known else None)
        if self._s_prev is None:
            out.Vdot = 0.0
        self._s_prev = out.s
        return out

    def _predictive(self, t, q, qdot, ref_now, ref_next, E_hat_fn) -> ControlOutput:
        g = self.gains
        cs = self.state
        dt = self.dt
        e = cs._prev
        b = cs.e_hist.baseline
        bank = self._bank
        if self._ahead is not None and len(cs.e_hist) <= bank.memory_len:
            # Full memory: the current value is the head term plus last step's lookahead.
            now = self._head_col * (e - b) + self._ahead
            ahead = bank.ahead(cs.e_hist)
        else:
            now, ahead = bank.evaluate(cs.e_hist, lookahead=True)
        self._ahead = ahead
        gI = g.gamma * cs.I_pow
        s = cs._edot + (self._ab * now).sum(axis=0) + gI

        if self.stc is not None:
            u_stc_law = -self.stc.k1 * np.abs(e) ** self._half_power * cs._prev_sign - self.stc.k2 * cs.I_sign
        else:
            u_stc_law = np.zeros(2)
        x = self._stepper.free(np.concatenate((q, qdot)), E_hat_fn, t)
        e_free = x[:2] - ref_next[0]
        # s[k+1] with u = 0, apart from the gamma * sp(e[k+1]) half of the trapezoid.
        s_free = (
            x[2:] - ref_next[1]
            + self._c * (e_free - b)
            + (self._ab * ahead).sum(axis=0)
            + gI
            + self._half_gamma * cs._prev_sp
        )
        target = s + dt * (-g.K_s * s + u_stc_law)
        rhs = target - s_free
        A_inv, hg, p = self._A_inv, self._half_gamma, g.power
        u = A_inv @ (rhs - hg * _sp(e_free, p))
        # One fixed-point pass on the trapezoid term; its sensitivity to u is
        # O(gamma dt^3) relative to A, so the remaining error is far below rounding of s.
        u = A_inv @ (rhs - hg * _sp(e_free + self._Gq @ u, p))

        u_s = A_inv @ (-dt * g.K_s * s)
        u_stc = A_inv @ (dt * u_stc_law)
        u_eq = u - u_s - u_stc
        V = 0.5 * float(s @ s)
        s_prev = self._s_prev
        Vdot = 0.0 if s_prev is None else (V - 0.5 * float(s_prev @ s_prev)) / dt
        return ControlOutput(u_eq, u_s, u_stc, u_eq + u_s + u_stc, s, V, Vdot)


def _sp(x: np.ndarray, p: float) -> np.ndarray:
    return np.sign(x) * np.abs(x) ** p
