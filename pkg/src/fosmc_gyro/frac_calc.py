"""Grünwald-Letnikov differintegration of uniformly sampled signals.

The GL operator of real order ``nu`` approximates

    D^nu f(t) ~ dt^(-nu) * sum_k w_k f(t - k dt),     w_k = (-1)^k binom(nu, k)

with the weights generated by the recurrence ``w_k = w_{k-1} (1 - (nu + 1)/k)``.
Negative orders give fractional integrals.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

__all__ = [
    "GLWeights",
    "SampledHistory",
    "GLBank",
    "gl_weights",
    "differint",
    "signed_pow",
    "sign",
]


@dataclass(frozen=True, eq=False)
class GLWeights:
    """Binomial weights ``w_0 .. w_{L-1}`` of a GL operator."""

    order: float
    weights: np.ndarray

    @property
    def memory_len(self) -> int:
        return len(self.weights)


@lru_cache(maxsize=64)
def _weights_cached(order: float, length: int) -> np.ndarray:
    w = np.empty(length)
    w[0] = 1.0
    acc = 1.0
    for k in range(1, length):
        acc *= 1.0 - (order + 1.0) / k
        w[k] = acc
    w.setflags(write=False)
    return w


def gl_weights(order: float, length: int) -> GLWeights:
    """Return the first ``length`` GL weights for ``order``.

    The recurrence is evaluated sequentially, so for a non-negative integer
    order ``n`` the factor at ``k = n + 1`` is exactly zero and every later
    weight vanishes.
    """
    if int(length) != length or length < 1:
        raise ValueError(f"length must be a positive integer, got {length!r}")
    return GLWeights(float(order), _weights_cached(float(order), int(length)))


class SampledHistory:
    """Bounded FIFO of uniformly spaced samples, most recent last.

    Samples may be scalars (``shape=()``) or fixed-shape arrays. Values before
    recording began are taken to equal ``baseline`` forever into the past;
    the default baseline of zero is the usual GL lower terminal.

    Storage is a doubled, channels-first buffer so the live window of every
    channel is one contiguous slice, which keeps the GL sums single BLAS calls.
    """

    def __init__(self, dt: float, capacity: int, shape: tuple[int, ...] = (), baseline=0.0):
        if not dt > 0:
            raise ValueError(f"dt must be > 0, got {dt!r}")
        if int(capacity) != capacity or capacity < 1:
            raise ValueError(f"capacity must be a positive integer, got {capacity!r}")
        self.dt = float(dt)
        self.capacity = int(capacity)
        self.shape = tuple(shape)
        self._buf = np.zeros((*self.shape, 2 * self.capacity))
        self._end = 0
        self._count = 0
        self.set_baseline(baseline)

    def __len__(self) -> int:
        return min(self._count, self.capacity)

    @property
    def total_recorded(self) -> int:
        return self._count

    def append(self, value) -> None:
        if self._end == self._buf.shape[-1]:
            keep = self.capacity - 1
            if keep:
                self._buf[..., :keep] = self._buf[..., self._end - keep:self._end]
            self._end = keep
        self._buf[..., self._end] = value
        self._end += 1
        self._count += 1

    def window(self) -> np.ndarray:
        """Live samples in chronological order (oldest first), read-only."""
        view = np.moveaxis(self._buf[..., self._end - len(self):self._end], -1, 0)
        view.flags.writeable = False
        return view

    def _tail(self, m: int) -> np.ndarray:
        # (m, *shape) view over the newest m samples
        return self._buf[..., self._end - m:self._end].T

    def latest(self):
        if not self._count:
            raise ValueError("history is empty")
        v = self._buf[..., self._end - 1]
        return float(v) if self.shape == () else v.copy()

    def set_baseline(self, baseline) -> None:
        self.baseline = np.broadcast_to(np.asarray(baseline, dtype=float), self.shape).copy()
        self.baseline.flags.writeable = False
        self.has_baseline = bool(np.any(self.baseline != 0))


def _constant_part(order: float) -> float:
    # D^order of a signal that has been constant forever: sum_{k>=0} w_k = (1 - 1)^order.
    if order == 0:
        return 1.0
    if order > 0:
        return 0.0
    raise ValueError("a nonzero baseline is only defined for non-negative orders")


def differint(hist: SampledHistory, w: GLWeights):
    """GL differintegral of ``hist`` at its newest sample.

    Returns ``dt^-order * sum_{k < min(L, n)} w_k (f_k - b) + b * D^order[1]``
    where ``f_0`` is the newest sample, ``n`` the number of stored samples and
    ``b`` the baseline. With a zero baseline this is the plain truncated GL sum
    in which missing history contributes nothing.
    """
    n = len(hist)
    if n == 0:
        raise ValueError("cannot differintegrate an empty history")
    m = min(n, w.memory_len)
    win = hist.window()[n - m:]
    rev = w.weights[:m][::-1]
    b = hist.baseline
    if np.any(b != 0):
        val = np.tensordot(rev, win - b, axes=(0, 0)) * hist.dt ** (-w.order)
        val = val + b * _constant_part(w.order)
    else:
        val = np.tensordot(rev, win, axes=(0, 0)) * hist.dt ** (-w.order)
    return float(val) if hist.shape == () else val


class GLBank:
    """Several GL operators sharing one history, evaluated in one product.

    ``evaluate`` returns the current values of every operator, shape
    ``(n_orders, *hist.shape)``, and with ``lookahead=True`` also the part of
    each operator's value at the *next* sample that depends only on samples
    already recorded. The value at the next sample ``f`` is then
    ``head * (f - baseline) + lookahead``.
    """

    def __init__(self, orders: Sequence[float], memory_len: int, dt: float):
        self.orders = tuple(float(o) for o in orders)
        self.memory_len = L = int(memory_len)
        self.dt = float(dt)
        r = len(self.orders)
        scale = np.array([dt ** (-o) for o in self.orders])
        w = np.vstack([gl_weights(o, L + 1).weights for o in self.orders]) * scale[:, None]
        # Column j multiplies the j-th oldest sample of a full window; the
        # first r rows give current values, the last r the lookahead parts.
        self._table = np.ascontiguousarray(np.vstack([w[:, :L][:, ::-1], w[:, 1:L + 1][:, ::-1]]))
        self._r = r
        self._now_sum = np.cumsum(w[:, :L], axis=1)
        self._next_sum = np.hstack([np.zeros((r, 1)), np.cumsum(w[:, 1:L], axis=1)])
        self.head = scale.copy()
        self._const = np.array([_constant_part(o) if o >= 0 else np.nan for o in self.orders])
        self._integrates = bool(np.isnan(self._const).any())

    def evaluate(self, hist: SampledHistory, lookahead: bool = False):
        n = len(hist)
        if n == 0:
            raise ValueError("cannot differintegrate an empty history")
        if len(hist.shape) > 1:
            raise ValueError("GLBank supports scalar or 1-D samples only")
        L, r = self.memory_len, self._r
        b = hist.baseline
        offset = hist.has_baseline
        if offset and self._integrates:
            raise ValueError("a nonzero baseline is only defined for non-negative orders")
        m = min(n, L)
        # At the next sample, the last L-1 recorded samples stay inside the memory window.
        mn = min(n, L - 1)
        if lookahead and mn == m:
            both = self._table[:, L - m:] @ hist._tail(m)
            now, nxt = both[:r], both[r:]
        else:
            now = self._table[:r, L - m:] @ hist._tail(m)
            if lookahead:
                nxt = self._table[r:, L - mn:] @ hist._tail(mn) if mn else np.zeros_like(now)
        if offset:
            # sum w_k (f_k - b) + b D[1] = sum w_k f_k - b (sum w_k - D[1])
            now = now - np.multiply.outer(self._now_sum[:, m - 1] - self._const, b)
        if not lookahead:
            return now
        if offset:
            nxt = nxt - np.multiply.outer(self._next_sum[:, mn] - self._const, b)
        return now, nxt

    def ahead(self, hist: SampledHistory) -> np.ndarray:
        """Only the lookahead parts; see :meth:`evaluate`.

        While the history is shorter than the memory, the current value at
        the next sample follows from this without another full product.
        """
        n = len(hist)
        if n == 0:
            raise ValueError("cannot differintegrate an empty history")
        L, r = self.memory_len, self._r
        mn = min(n, L - 1)
        b = hist.baseline
        shape = (r, *hist.shape)
        nxt = self._table[r:, L - mn:] @ hist._tail(mn) if mn else np.zeros(shape)
        if hist.has_baseline:
            if self._integrates:
                raise ValueError("a nonzero baseline is only defined for non-negative orders")
            nxt = nxt - np.multiply.outer(self._next_sum[:, mn] - self._const, b)
        return nxt


def signed_pow(x, p: float):
    """``sign(x) * |x|**p``; real-valued, odd, zero at zero."""
    if not p > 0:
        raise ValueError(f"exponent must be > 0, got {p!r}")
    x = np.asarray(x, dtype=float)
    out = np.sign(x) * np.abs(x) ** p
    return float(out) if out.ndim == 0 else out


def sign(x):
    """Sign with ``sign(0) == 0``."""
    out = np.sign(np.asarray(x, dtype=float))
    return float(out) if out.ndim == 0 else out
