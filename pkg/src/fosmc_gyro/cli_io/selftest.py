"""Analytic oracle checks for the GL operator, run by ``validate-frac``."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..frac_calc import GLWeights, SampledHistory, differint, gl_weights, signed_pow

__all__ = ["Check", "run_checks", "wrong_recurrence_weights", "format_table"]

WeightsFn = Callable[[float, int], GLWeights]


@dataclass
class Check:
    name: str
    passed: bool
    value: float
    expected: float
    tol: str


def wrong_recurrence_weights(order: float, length: int) -> GLWeights:
    """Deliberately broken generator (drops the +1), used as a negative control."""
    w = np.empty(length)
    w[0] = 1.0
    for k in range(1, length):
        w[k] = w[k - 1] * (1.0 - order / k)
    return GLWeights(float(order), w)


def _binom_weights(order: float, length: int) -> np.ndarray:
    # (-1)^k C(order, k) through the gamma function, independent of the recurrence
    return np.array([
        (-1) ** k * math.gamma(order + 1) / (math.gamma(k + 1) * math.gamma(order - k + 1))
        for k in range(length)
    ])


def _power_history(p: float, dt: float) -> SampledHistory:
    n = int(round(1.0 / dt)) + 1
    h = SampledHistory(dt, n)
    for v in np.linspace(0.0, 1.0, n) ** p:
        h.append(v)
    return h


def _rel(a: float, b: float) -> float:
    return abs(a - b) / abs(b)


def run_checks(weights: WeightsFn = gl_weights) -> list[Check]:
    out: list[Check] = []

    def exact(name, got, want):
        got, want = np.asarray(got, float), np.asarray(want, float)
        err = float(np.max(np.abs(got - want)))
        out.append(Check(name, err == 0.0, err, 0.0, "exact"))

    exact("order=0 weights are the identity", weights(0.0, 6).weights, [1, 0, 0, 0, 0, 0])
    exact("order=1 degeneration: [1, -1, 0, ...]", weights(1.0, 6).weights, [1, -1, 0, 0, 0, 0])
    exact("order=2 degeneration: [1, -2, 1, 0, ...]", weights(2.0, 6).weights, [1, -2, 1, 0, 0, 0])

    w = weights(0.5, 8).weights
    ref = _binom_weights(0.5, 8)
    err = float(np.max(np.abs(w - ref)))
    out.append(Check("order=0.5 weights vs gamma binomial", err < 1e-14, err, 0.0, "abs 1e-14"))

    rng = np.random.default_rng(12345)
    f = rng.standard_normal(50)
    h = SampledHistory(0.01, 50)
    for v in f:
        h.append(v)
    bd1 = (f[-1] - f[-2]) / 0.01
    bd2 = (f[-1] - 2 * f[-2] + f[-3]) / 0.01**2
    for order, want in ((1.0, bd1), (2.0, bd2)):
        got = differint(h, weights(order, 50))
        out.append(Check(f"order={order:g} equals backward difference", math.isclose(got, want, rel_tol=1e-12), got, want, "rel 1e-12"))

    cases = (
        ("D^0.5 t at t=1, dt=1e-4", 1.0, 0.5, 1e-4, 0.01),
        ("D^1.5 t^2 at t=1, dt=1e-4", 2.0, 1.5, 1e-4, 0.02),
        ("D^0.5 t^2 at t=1, dt=1e-4", 2.0, 0.5, 1e-4, 0.01),
        ("D^-0.5 t at t=1, dt=1e-4", 1.0, -0.5, 1e-4, 0.01),
    )
    for name, p, order, dt, tol in cases:
        h = _power_history(p, dt)
        got = differint(h, weights(order, len(h)))
        want = math.gamma(p + 1) / math.gamma(p + 1 - order)
        out.append(Check(name, _rel(got, want) < tol, got, want, f"rel {tol:g}"))

    # Halving dt must shrink the error (first-order convergence trend).
    errs = []
    for dt in (2e-3, 1e-3):
        h = _power_history(1.0, dt)
        errs.append(abs(differint(h, weights(0.5, len(h))) - 2 / math.sqrt(math.pi)))
    out.append(Check("D^0.5 t error shrinks when dt halves", errs[1] < errs[0], errs[1], errs[0], "strict"))

    got = signed_pow(-2.0, 1.2)
    want = -math.exp(1.2 * math.log(2.0))
    out.append(Check("signed_pow(-2, 1.2)", math.isclose(got, want, rel_tol=1e-12), got, want, "rel 1e-12"))
    return out


def format_table(checks: list[Check]) -> str:
    width = max(len(c.name) for c in checks)
    lines = [f"{'check':<{width}}  result  {'value':>14}  {'expected':>14}  tol"]
    for c in checks:
        lines.append(
            f"{c.name:<{width}}  {'PASS' if c.passed else 'FAIL':<6}  {c.value:>14.8g}  {c.expected:>14.8g}  {c.tol}"
        )
    n_fail = sum(not c.passed for c in checks)
    lines.append(f"{len(checks) - n_fail}/{len(checks)} checks passed")
    return "\n".join(lines)
