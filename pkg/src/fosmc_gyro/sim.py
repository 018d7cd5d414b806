"""Closed-loop experiments: reference, disturbance, the control loop and metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import Iterator, Optional

import numpy as np

from .controllers import (
    DISTURBANCE_MODES,
    PREHISTORY_MODES,
    SCHEMES,
    FractionalSMC,
    STCGains,
    SurfaceGains,
)
from .plant import (
    PAPER_PHYSICAL,
    NondimParams,
    NonFiniteStateError,
    PhysicalParams,
    LinearRK4,
    nondimensionalize,
)

__all__ = [
    "CONTROLLER_KINDS",
    "ConfigError",
    "SimulationAborted",
    "ReferenceSpec",
    "DisturbanceSpec",
    "SimConfig",
    "TelemetryRecord",
    "Telemetry",
    "Metrics",
    "Comparison",
    "reference",
    "run",
    "compute_metrics",
    "compare",
]

CONTROLLER_KINDS = ("FOSMC", "FOSMC_STC")


class ConfigError(ValueError):
    """Invalid experiment configuration; ``key`` names the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


class SimulationAborted(RuntimeError):
    """The closed loop produced a non-finite state or control."""

    def __init__(self, step: int, t: float, last_u, reason: str):
        self.step = step
        self.t = t
        self.last_u = None if last_u is None else np.asarray(last_u, dtype=float)
        u_txt = "n/a" if last_u is None else np.array2string(self.last_u, precision=6)
        super().__init__(f"simulation aborted at step {step} (t={t:.6g}): {reason}; last control {u_txt}")


@dataclass(frozen=True)
class ReferenceSpec:
    """Per-axis sinusoids ``A_i sin(w_i t)``."""

    amplitude: tuple = (1.0, 1.2)
    frequency: tuple = (4.17, 5.11)

    def __post_init__(self):
        object.__setattr__(self, "amplitude", tuple(float(a) for a in self.amplitude))
        object.__setattr__(self, "frequency", tuple(float(w) for w in self.frequency))
        object.__setattr__(self, "arrays", (np.array(self.amplitude), np.array(self.frequency)))


def reference(t: float, spec: ReferenceSpec = ReferenceSpec()):
    """Desired position, velocity and acceleration at time ``t``."""
    A, w = spec.arrays
    wt = w * t
    q_d = A * np.sin(wt)
    return q_d, A * w * np.cos(wt), -(w * w) * q_d


@dataclass(frozen=True)
class DisturbanceSpec:
    """Per-axis sinusoidal disturbance ``a_i sin(w_i t)``; zero by default."""

    amplitude: tuple = (0.0, 0.0)
    frequency: tuple = (0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "amplitude", tuple(float(a) for a in self.amplitude))
        object.__setattr__(self, "frequency", tuple(float(w) for w in self.frequency))
        object.__setattr__(self, "arrays", (np.array(self.amplitude), np.array(self.frequency)))

    def __call__(self, t: float) -> np.ndarray:
        a, w = self.arrays
        return a * np.sin(w * t)

    @property
    def is_zero(self) -> bool:
        return not any(self.amplitude)


def _paper_surface() -> SurfaceGains:
    return SurfaceGains(alpha=40.0, beta=50.0, gamma=60.0, K_s=10.0, mu=2.5, r_exp=1.5, m_exp=1.25)


def _paper_stc() -> STCGains:
    return STCGains(k1=20.0, k2=20.0)


@dataclass(eq=False)
class SimConfig:
    """Everything needed to reproduce one closed-loop run.

    Exactly one of ``physical`` / ``nondim`` describes the plant; physical
    parameters are mapped through :func:`nondimensionalize`.
    """

    dt: float = 1e-3
    horizon: float = 60.0
    controller: str = "FOSMC_STC"
    scheme: str = "predictive"
    surface: SurfaceGains = field(default_factory=_paper_surface)
    stc: STCGains = field(default_factory=_paper_stc)
    physical: Optional[PhysicalParams] = PAPER_PHYSICAL
    nondim: Optional[NondimParams] = None
    q0: tuple = (0.5, 0.5)
    qdot0: tuple = (0.0, 0.0)
    reference: ReferenceSpec = field(default_factory=ReferenceSpec)
    disturbance: DisturbanceSpec = field(default_factory=DisturbanceSpec)
    disturbance_mode: str = "unknown"
    u_max: Optional[float] = None
    memory_len: Optional[int] = None
    prehistory: str = "initial"

    @property
    def plant(self) -> NondimParams:
        if self.nondim is not None:
            return self.nondim
        return nondimensionalize(self.physical)

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.dt))

    def validate(self) -> None:
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ConfigError("dt", f"must be > 0, got {self.dt!r}")
        if not (math.isfinite(self.horizon) and self.horizon > 0):
            raise ConfigError("horizon", f"must be > 0, got {self.horizon!r}")
        if not self.dt < self.horizon:
            raise ConfigError("dt", "must be smaller than horizon")
        if self.controller not in CONTROLLER_KINDS:
            raise ConfigError("controller", f"must be one of {CONTROLLER_KINDS}, got {self.controller!r}")
        if self.scheme not in SCHEMES:
            raise ConfigError("scheme", f"must be one of {SCHEMES}, got {self.scheme!r}")
        if self.disturbance_mode not in DISTURBANCE_MODES:
            raise ConfigError("disturbance_mode", f"must be one of {DISTURBANCE_MODES}")
        if self.prehistory not in PREHISTORY_MODES:
            raise ConfigError("prehistory", f"must be one of {PREHISTORY_MODES}")
        if self.u_max is not None and not self.u_max > 0:
            raise ConfigError("u_max", f"must be > 0 when set, got {self.u_max!r}")
        if self.memory_len is not None and (int(self.memory_len) != self.memory_len or self.memory_len < 1):
            raise ConfigError("memory_len", f"must be a positive integer, got {self.memory_len!r}")
        if (self.physical is None) == (self.nondim is None):
            raise ConfigError("plant", "exactly one of physical / nondim must be given")
        if self.physical is not None:
            try:
                self.physical.validate()
            except ValueError as exc:
                raise ConfigError("plant.physical", str(exc)) from None
        try:
            self.surface.validate()
        except ValueError as exc:
            raise ConfigError("surface", str(exc)) from None
        if self.controller == "FOSMC_STC":
            try:
                self.stc.validate()
            except ValueError as exc:
                raise ConfigError("stc", str(exc)) from None
        for key in ("q0", "qdot0"):
            v = getattr(self, key)
            if len(v) != 2 or not all(math.isfinite(x) for x in v):
                raise ConfigError(key, "must be two finite numbers")

    def __eq__(self, other):
        if not isinstance(other, SimConfig):
            return NotImplemented
        return all(getattr(self, f.name) == getattr(other, f.name) for f in fields(self))


@dataclass
class TelemetryRecord:
    t: float
    q: np.ndarray
    q_d: np.ndarray
    e: np.ndarray
    qdot: np.ndarray
    s: np.ndarray
    u_total: np.ndarray
    u_eq: np.ndarray
    u_s: np.ndarray
    u_stc: np.ndarray
    V: float
    Vdot: float


_VECTOR_FIELDS = ("q", "q_d", "e", "qdot", "s", "u_total", "u_eq", "u_s", "u_stc")
_SCALAR_FIELDS = ("t", "V", "Vdot")


class Telemetry:
    """Columnar store of :class:`TelemetryRecord` samples.

    Indexing yields records; the arrays (``tel.q``, ``tel.u_total`` ...) are
    what metrics and writers use.
    """

    def __init__(self, n: int):
        self._n = 0
        for name in _SCALAR_FIELDS:
            setattr(self, name, np.zeros(n))
        for name in _VECTOR_FIELDS:
            setattr(self, name, np.zeros((n, 2)))

    @classmethod
    def from_arrays(cls, **arrays) -> "Telemetry":
        n = len(arrays["t"])
        tel = cls(n)
        for name in _SCALAR_FIELDS + _VECTOR_FIELDS:
            getattr(tel, name)[:] = arrays[name]
        tel._n = n
        return tel

    def append(self, rec: TelemetryRecord) -> None:
        k = self._n
        for name in _SCALAR_FIELDS + _VECTOR_FIELDS:
            getattr(self, name)[k] = getattr(rec, name)
        self._n += 1

    def _write(self, k, t, q, q_d, e, qdot, out, u) -> None:
        self.t[k] = t
        self.q[k] = q
        self.q_d[k] = q_d
        self.e[k] = e
        self.qdot[k] = qdot
        self.s[k] = out.s
        self.u_total[k] = u
        self.u_eq[k] = out.u_eq
        self.u_s[k] = out.u_s
        self.u_stc[k] = out.u_stc
        self.V[k] = out.V
        self.Vdot[k] = out.Vdot

    def _trim(self) -> None:
        for name in _SCALAR_FIELDS + _VECTOR_FIELDS:
            setattr(self, name, getattr(self, name)[: self._n])

    def __len__(self) -> int:
        return self._n

    def __getitem__(self, k: int) -> TelemetryRecord:
        if k < 0:
            k += self._n
        if not 0 <= k < self._n:
            raise IndexError(k)
        kw = {name: float(getattr(self, name)[k]) for name in _SCALAR_FIELDS}
        kw.update({name: getattr(self, name)[k].copy() for name in _VECTOR_FIELDS})
        return TelemetryRecord(**kw)

    def __iter__(self) -> Iterator[TelemetryRecord]:
        for k in range(self._n):
            yield self[k]


def run(config: SimConfig) -> Telemetry:
    """Simulate ``config``; one record per control step at ``t = k dt``."""
    config.validate()
    dt = config.dt
    n = config.n_steps
    plant = config.plant
    stc = config.stc if config.controller == "FOSMC_STC" else None
    ctrl = FractionalSMC(
        plant,
        config.surface,
        stc,
        dt,
        capacity=n + 1,
        memory_len=config.memory_len,
        disturbance_mode=config.disturbance_mode,
        prehistory=config.prehistory,
        scheme=config.scheme,
    )
    E_fn = None if config.disturbance.is_zero else config.disturbance
    ref = config.reference
    stepper = LinearRK4(plant, dt)
    x = np.concatenate([np.array(config.q0, dtype=float), np.array(config.qdot0, dtype=float)])
    tel = Telemetry(n)
    u_lim = config.u_max
    last_u = None
    ref_now = reference(0.0, ref)
    # Overflow on the way to a non-finite state is detected and reported below.
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(n):
            # t is recomputed rather than accumulated so the clock never drifts from k*dt
            t = k * dt
            q, qdot = x[:2], x[2:]
            ref_next = reference((k + 1) * dt, ref)
            try:
                out = ctrl.update(t, q, qdot, ref_now, ref_next, E_fn)
            except (NonFiniteStateError, FloatingPointError) as exc:
                raise SimulationAborted(k, t, last_u, str(exc)) from None
            u = out.u_total
            if not (np.isfinite(u).all() and np.isfinite(out.s).all()):
                raise SimulationAborted(k, t, u, "non-finite control")
            if u_lim is not None:
                u = np.clip(u, -u_lim, u_lim)
            tel._write(k, t, q, ref_now[0], ctrl.state._prev, qdot, out, u)
            last_u = u
            try:
                x = stepper.step(x, u, E_fn, t)
            except NonFiniteStateError as exc:
                raise SimulationAborted(k, t, last_u, str(exc)) from None
            ref_now = ref_next
    tel._n = n
    tel._trim()
    return tel


@dataclass
class Metrics:
    """Per-axis scalar performance figures.

    ``settling_time`` is ``inf`` on axes that are still outside the band at
    the end of the run (``settled`` is then False).
    """

    rms_error: np.ndarray
    max_overshoot: np.ndarray
    settling_time: np.ndarray
    settled: np.ndarray
    chattering_index: np.ndarray
    band: float

    def as_dict(self) -> dict:
        out = {"band": self.band}
        for name in ("rms_error", "max_overshoot", "settling_time", "settled", "chattering_index"):
            vals = getattr(self, name)
            for axis, v in zip("xy", vals):
                out[f"{name}_{axis}"] = bool(v) if name == "settled" else float(v)
        return out


def compute_metrics(tel: Telemetry, band: float = 0.05) -> Metrics:
    """Tracking and chattering figures of a run.

    - ``rms_error``: RMS of ``e`` over the whole run.
    - ``max_overshoot``: largest ``|e|`` from the first sign change of ``e``
      (first crossing of the reference) onwards; zero if it never crosses.
    - ``settling_time``: time of the first sample after which ``|e| <= band``
      holds for the rest of the run.
    - ``chattering_index``: total variation of ``u_total`` over the last half
      of the run divided by that window's duration.
    """
    n = len(tel)
    if n < 2:
        raise ValueError("metrics need at least two telemetry records")
    if not band > 0:
        raise ValueError("band must be > 0")
    e = tel.e
    t = tel.t
    rms = np.sqrt(np.mean(e**2, axis=0))

    overshoot = np.zeros(2)
    settling = np.zeros(2)
    settled = np.ones(2, dtype=bool)
    for i in range(2):
        ei = e[:, i]
        s0 = np.sign(ei[0])
        if s0 == 0:
            cross = 0
        else:
            idx = np.flatnonzero(np.sign(ei) != s0)
            cross = int(idx[0]) if idx.size else None
        overshoot[i] = float(np.max(np.abs(ei[cross:]))) if cross is not None else 0.0

        outside = np.flatnonzero(np.abs(ei) > band)
        if outside.size == 0:
            settling[i] = t[0]
        elif outside[-1] == n - 1:
            settling[i] = math.inf
            settled[i] = False
        else:
            settling[i] = t[outside[-1] + 1]

    h = n // 2
    window = tel.u_total[h:]
    elapsed = t[-1] - t[h] + (t[1] - t[0])
    tv = np.sum(np.abs(np.diff(window, axis=0)), axis=0)
    chatter = tv / elapsed
    return Metrics(rms, overshoot, settling, settled, chatter, float(band))


@dataclass
class Comparison:
    metrics_a: Metrics
    metrics_b: Metrics
    deltas: dict
    telemetry_a: Telemetry
    telemetry_b: Telemetry


def _same_setup(a: SimConfig, b: SimConfig) -> None:
    if a.plant != b.plant:
        raise ValueError("configs use different plant parameters")
    if a.reference != b.reference:
        raise ValueError("configs use different reference trajectories")
    if a.dt != b.dt or a.horizon != b.horizon:
        raise ValueError("configs use different dt or horizon")


def compare(a: SimConfig, b: SimConfig, band: float = 0.05) -> Comparison:
    """Run both configs and report ``B - A`` for every metric."""
    _same_setup(a, b)
    tel_a = run(a)
    tel_b = run(b)
    ma = compute_metrics(tel_a, band)
    mb = compute_metrics(tel_b, band)
    da, db = ma.as_dict(), mb.as_dict()
    deltas = {}
    for k, va in da.items():
        if k in ("band",) or isinstance(va, bool):
            continue
        vb = db[k]
        deltas[k] = 0.0 if va == vb else vb - va
    return Comparison(ma, mb, deltas, tel_a, tel_b)
