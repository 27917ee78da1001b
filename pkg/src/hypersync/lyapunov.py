"""Finite-time Lyapunov spectrum (tangent integration + QR) and Kaplan-Yorke dimension."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .dynamics import RabinovichParams, drive_rhs
from .errors import NonFiniteState
from .integrator import DEFAULT_STEP

REFERENCE_INITIAL_POINT = (0.01,) * 6


@njit(cache=True)
def _jacobian(x, p):
    u, a, b, g = p[0], p[1], p[2], p[3]
    x1, x2, x3, x4, x5, x6 = x[0], x[1], x[2], x[3], x[4], x[5]
    J = np.empty((6, 6))
    J[0, 0] = -u + x3
    J[0, 1] = x4
    J[0, 2] = x1 + x5
    J[0, 3] = x2 + x6
    J[0, 4] = x3
    J[0, 5] = x4

    J[1, 0] = x4
    J[1, 1] = -u - x3
    J[1, 2] = -x2 + x6
    J[1, 3] = x1 - x5
    J[1, 4] = -x4
    J[1, 5] = x3

    J[2, 0] = -2.0 * x1 + 2.0 * x5
    J[2, 1] = 2.0 * x2 + 2.0 * x6
    J[2, 2] = a - b * (3.0 * x3 * x3 + x4 * x4)
    J[2, 3] = -2.0 * b * x3 * x4
    J[2, 4] = 2.0 * x1
    J[2, 5] = 2.0 * x2

    J[3, 0] = -2.0 * x2 + 2.0 * x6
    J[3, 1] = -2.0 * x1 - 2.0 * x5
    J[3, 2] = -2.0 * b * x3 * x4
    J[3, 3] = a - b * (x3 * x3 + 3.0 * x4 * x4)
    J[3, 4] = -2.0 * x2
    J[3, 5] = 2.0 * x1

    J[4, 0] = -3.0 * x3
    J[4, 1] = 3.0 * x4
    J[4, 2] = -3.0 * x1
    J[4, 3] = 3.0 * x2
    J[4, 4] = g - b * (3.0 * x5 * x5 + x6 * x6)
    J[4, 5] = -2.0 * b * x5 * x6

    J[5, 0] = -3.0 * x4
    J[5, 1] = -3.0 * x3
    J[5, 2] = -3.0 * x2
    J[5, 3] = -3.0 * x1
    J[5, 4] = -2.0 * b * x5 * x6
    J[5, 5] = g - b * (x5 * x5 + 3.0 * x6 * x6)
    return J


def jacobian_real(state6, params: RabinovichParams) -> np.ndarray:
    """Exact 6x6 Jacobian of the realified right-hand side."""
    return _jacobian(np.ascontiguousarray(state6, dtype=np.float64), params.as_array())


@njit(cache=True)
def _tangent_rhs(t, s, p):
    # s = state (6) followed by the 6x6 tangent basis, row-major, columns are vectors
    out = np.empty(42)
    x = s[:6]
    out[:6] = drive_rhs(t, x, p)
    out[6:] = (_jacobian(x, p) @ s[6:].reshape((6, 6))).ravel()
    return out


@njit(cache=True)
def _spectrum_kernel(x0, p, h, n, m, n_skip):
    s = np.zeros(42)
    s[:6] = x0
    s[6:] = np.eye(6).ravel()
    log_sum = np.zeros(6)
    div_sum = 0.0
    for i in range(n):
        t = i * h
        if i >= n_skip:
            div_sum += np.trace(_jacobian(s[:6], p))
        k1 = _tangent_rhs(t, s, p)
        k2 = _tangent_rhs(t + 0.5 * h, s + 0.5 * h * k1, p)
        k3 = _tangent_rhs(t + 0.5 * h, s + 0.5 * h * k2, p)
        k4 = _tangent_rhs(t + h, s + h * k3, p)
        s = s + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(s)):
            return log_sum, div_sum, s[:6], t + h
        if i + 1 == n_skip:
            s[6:] = np.eye(6).ravel()
        elif i >= n_skip and ((i + 1 - n_skip) % m == 0 or i == n - 1):
            q, r = np.linalg.qr(s[6:].reshape((6, 6)))
            for j in range(6):
                if r[j, j] < 0.0:
                    q[:, j] = -q[:, j]
                log_sum[j] += np.log(abs(r[j, j]))
            s[6:] = q.copy().ravel()
    return log_sum, div_sum, s[:6], np.nan


def kaplan_yorke(exponents) -> float:
    """Kaplan-Yorke (Lyapunov) dimension from exponents sorted descending."""
    le = np.asarray(exponents, dtype=np.float64)
    if le.size == 0 or le[0] < 0:
        return 0.0
    partial = np.cumsum(le)
    nonneg = np.nonzero(partial >= 0)[0]
    j = int(nonneg[-1]) + 1  # number of leading exponents with non-negative partial sum
    if j == le.size:
        return float(le.size)
    return j + float(partial[j - 1]) / abs(float(le[j]))


@dataclass
class LyapunovReport:
    exponents: np.ndarray
    horizon: float
    dimension: float
    initial_point: tuple
    mean_divergence: float = float("nan")
    final_state: np.ndarray = field(default=None, repr=False)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "exponent"])
            for i, v in enumerate(self.exponents, start=1):
                w.writerow([i, repr(float(v))])

    def summary(self) -> str:
        return f"horizon {self.horizon!r} dimension {self.dimension!r}"


def lyapunov_spectrum(params: RabinovichParams, initial=REFERENCE_INITIAL_POINT, horizon: float = 100.0,
                      reorth_interval: float = 0.1, step: float = DEFAULT_STEP,
                      transient: float = 0.0) -> LyapunovReport:
    """Finite-time Lyapunov exponents of the realified system.

    The state and an identity tangent basis are integrated together; the
    basis is QR-renormalised every ``reorth_interval`` seconds and the
    exponents are the accumulated log stretch factors divided by ``horizon``.
    An optional ``transient`` is integrated first and discarded.
    """
    if not horizon > 0:
        raise ValueError("horizon must be > 0")
    if not reorth_interval > 0:
        raise ValueError("reorth_interval must be > 0")
    if transient < 0:
        raise ValueError("transient must be >= 0")
    m = max(1, int(round(reorth_interval / step)))
    n_skip = int(round(transient / step))
    n = n_skip + int(round(horizon / step))
    x0 = np.ascontiguousarray(initial, dtype=np.float64)
    log_sum, div_sum, final, failed_at = _spectrum_kernel(x0, params.as_array(), float(step), n, m, n_skip)
    if not np.isnan(failed_at):
        raise NonFiniteState(failed_at)
    span = (n - n_skip) * step
    exps = np.sort(log_sum / span)[::-1]
    return LyapunovReport(exponents=exps, horizon=float(horizon), dimension=kaplan_yorke(exps),
                          initial_point=tuple(float(v) for v in x0),
                          mean_divergence=div_sum / (n - n_skip), final_state=final)
