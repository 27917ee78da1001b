"""Fixed-step classical RK4 with periodic sampling.

``rhs`` callables take ``(t, y, *args)`` and return dy/dt.  If ``rhs`` is a
numba dispatcher, :func:`integrate` runs the whole loop in compiled code;
otherwise it falls back to plain Python.  Both paths do the same arithmetic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from numba.core.registry import CPUDispatcher

from .errors import NonFiniteState

DEFAULT_STEP = 1e-4


@dataclass(frozen=True)
class IntegrationConfig:
    step: float = DEFAULT_STEP
    t_start: float = 0.0
    t_end: float = 100.0
    sample_every: int = 1

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError(f"step must be > 0, got {self.step}")
        if not self.t_end > self.t_start:
            raise ValueError(f"t_end ({self.t_end}) must exceed t_start ({self.t_start})")
        if int(self.sample_every) != self.sample_every or self.sample_every < 1:
            raise ValueError(f"sample_every must be a positive integer, got {self.sample_every}")

    def step_plan(self) -> tuple[int, float]:
        """Number of full steps and the length of a trailing partial step (0 if none)."""
        span = self.t_end - self.t_start
        ratio = span / self.step
        n = int(round(ratio))
        if abs(ratio - n) <= 1e-9 * max(1.0, ratio):
            return n, 0.0
        n = int(math.floor(ratio))
        return n, span - n * self.step


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        if len(self.times) != len(self.states):
            raise ValueError("times and states must have equal length")

    def __len__(self):
        return len(self.times)


def rk4_step(rhs, t: float, state, h: float, *args) -> np.ndarray:
    y = np.asarray(state)
    k1 = np.asarray(rhs(t, y, *args))
    k2 = np.asarray(rhs(t + 0.5 * h, y + 0.5 * h * k1, *args))
    k3 = np.asarray(rhs(t + 0.5 * h, y + 0.5 * h * k2, *args))
    k4 = np.asarray(rhs(t + h, y + h * k3, *args))
    out = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise NonFiniteState(t + h)
    return out


@njit(cache=True)
def rk4_step_jit(rhs, t, y, h, args):
    k1 = rhs(t, y, *args)
    k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1, *args)
    k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2, *args)
    k4 = rhs(t + h, y + h * k3, *args)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@njit(cache=True)
def _integrate_jit(rhs, y0, t0, h, n, tail, every, args):
    n_samples = n // every + 1
    if n % every != 0 or tail > 0.0:
        n_samples += 1
    times = np.empty(n_samples)
    states = np.empty((n_samples, y0.shape[0]), dtype=y0.dtype)
    times[0] = t0
    states[0] = y0
    y = y0.copy()
    j = 1
    for i in range(n):
        t = t0 + i * h
        y = rk4_step_jit(rhs, t, y, h, args)
        if not np.all(np.isfinite(y)):
            return times[:j], states[:j], t + h
        if (i + 1) % every == 0 or (i == n - 1 and tail == 0.0):
            times[j] = t + h
            states[j] = y
            j += 1
    if tail > 0.0:
        t = t0 + n * h
        y = rk4_step_jit(rhs, t, y, tail, args)
        if not np.all(np.isfinite(y)):
            return times[:j], states[:j], t + tail
        times[j] = t + tail
        states[j] = y
        j += 1
    return times[:j], states[:j], np.nan


def integrate(rhs, config: IntegrationConfig, initial, args: tuple = ()) -> Trajectory:
    """Integrate from ``config.t_start`` to ``config.t_end``.

    Samples the initial state, every ``sample_every``-th step, and always the
    final state.  A shortened last step lands exactly on ``t_end`` when the
    span is not a whole number of steps.
    """
    y0 = np.array(initial, dtype=np.result_type(np.asarray(initial).dtype, np.float64))
    n, tail = config.step_plan()
    every = int(config.sample_every)
    if isinstance(rhs, CPUDispatcher):
        times, states, failed_at = _integrate_jit(rhs, y0, float(config.t_start), float(config.step),
                                                  n, float(tail), every, tuple(args))
        if not math.isnan(failed_at):
            raise NonFiniteState(failed_at)
        if tail == 0.0:
            times[-1] = config.t_end
        return Trajectory(times, states)

    times = [config.t_start]
    states = [y0.copy()]
    y = y0
    for i in range(n):
        t = config.t_start + i * config.step
        y = rk4_step(rhs, t, y, config.step, *args)
        if (i + 1) % every == 0 or (i == n - 1 and tail == 0.0):
            times.append(t + config.step)
            states.append(y)
    if tail > 0.0:
        y = rk4_step(rhs, config.t_start + n * config.step, y, tail, *args)
        times.append(config.t_end)
        states.append(y)
    times[-1] = config.t_end
    return Trajectory(np.array(times), np.array(states))
