"""Adaptive synchronisation of two complex Rabinovich systems with parameter estimation.

The response carries estimates ``A_hat``, ``B_hat`` of the drive's parameter
blocks and is steered by the controller

    theta = [F(x)-F(y)] A + G(x) - G(y) + [H(x)-H(y)] B - K1 e - K2 e_A - K3 e_B

with ``e = y - x``, ``e_A = A_hat - A``, ``e_B = B_hat - B``, while the
estimates follow

    dA_hat/dt = -conj(F(y)) e + K2 e,    dB_hat/dt = -conj(H(y)) e + K3 e.

Along solutions ``V = (|e|^2 + |e_A|^2 + |e_B|^2) / 2`` obeys
``dV/dt = -e* K1 e``; :func:`run_sync_experiment` checks this step by step.

Flat state layout (complex, 12 entries): drive x,y,z | response x,y,z |
A_hat | B_hat.  The 24-real embedding interleaves real and imaginary parts
(``view(float64)``), so drive occupies reals 0-5, response 6-11, A_hat 12-17
and B_hat 18-23.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .dynamics import RabinovichParams, as_state, fgh_diagonals
from .errors import NonFiniteState
from .integrator import DEFAULT_STEP

log = logging.getLogger(__name__)

REFERENCE_DRIVE_INIT = (1 + 1j, 1 + 1j, 1 + 1j)
REFERENCE_RESPONSE_INIT = (3 + 3j, 3 + 3j, 3 + 3j)
# tolerated per-step growth of V caused by discretisation
V_STEP_TOLERANCE = 1e-9


@dataclass(frozen=True)
class GainMatrices:
    K1: tuple = (66.0, 55.0, 77.0)
    K2: tuple = (13.0, 12.0, 15.0)
    K3: tuple = (15.0, 15.0, 59.0)

    def __post_init__(self):
        for name in ("K1", "K2", "K3"):
            k = tuple(float(v) for v in getattr(self, name))
            if len(k) != 3:
                raise ValueError(f"{name} needs 3 diagonal entries, got {len(k)}")
            if not all(v > 0 for v in k):
                raise ValueError(f"{name} must be positive definite, got {k}")
            object.__setattr__(self, name, k)

    def arrays(self):
        return (np.array(self.K1), np.array(self.K2), np.array(self.K3))

    def scaled(self, k1=1.0, k2=1.0, k3=1.0) -> "GainMatrices":
        return GainMatrices(tuple(k1 * v for v in self.K1), tuple(k2 * v for v in self.K2),
                            tuple(k3 * v for v in self.K3))


REFERENCE_GAINS = GainMatrices()


@dataclass(frozen=True)
class ParameterEstimates:
    A_hat: np.ndarray
    B_hat: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "A_hat", as_state(self.A_hat))
        object.__setattr__(self, "B_hat", as_state(self.B_hat))

    @classmethod
    def zeros(cls) -> "ParameterEstimates":
        return cls(np.zeros(3, np.complex128), np.zeros(3, np.complex128))

    @classmethod
    def exact(cls, params: RabinovichParams) -> "ParameterEstimates":
        return cls(params.A, params.B)

    def as_params(self) -> RabinovichParams:
        """Real parts read back as (upsilon, alpha, beta, gamma); beta from the z-equation slot."""
        return RabinovichParams(float(self.A_hat[0].real), float(self.A_hat[1].real),
                                float(self.B_hat[2].real), float(self.A_hat[2].real))


@dataclass(frozen=True)
class SyncAugmentedState:
    drive: np.ndarray
    response: np.ndarray
    estimates: ParameterEstimates

    def __post_init__(self):
        object.__setattr__(self, "drive", as_state(self.drive))
        object.__setattr__(self, "response", as_state(self.response))

    def pack(self) -> np.ndarray:
        return np.concatenate([self.drive, self.response, self.estimates.A_hat, self.estimates.B_hat])

    def to_real(self) -> np.ndarray:
        return self.pack().view(np.float64).copy()

    @classmethod
    def unpack(cls, s) -> "SyncAugmentedState":
        s = np.asarray(s, dtype=np.complex128)
        return cls(s[0:3], s[3:6], ParameterEstimates(s[6:9], s[9:12]))

    @classmethod
    def from_real(cls, r) -> "SyncAugmentedState":
        r = np.ascontiguousarray(r, dtype=np.float64)
        if r.shape != (24,):
            raise ValueError(f"augmented real state has 24 components, got {r.shape}")
        return cls.unpack(r.view(np.complex128))


# -- kernels ---------------------------------------------------------------

@njit(cache=True)
def _theta(x, y, A, B, Ah, Bh, K1, K2, K3):
    Fx, Gx, Hx = fgh_diagonals(x)
    Fy, Gy, Hy = fgh_diagonals(y)
    e = y - x
    return (Fx - Fy) * A + Gx - Gy + (Hx - Hy) * B - K1 * e - K2 * (Ah - A) - K3 * (Bh - B)


@njit(cache=True)
def _response_rhs(x, y, Ah, Bh, A, B, K1, K2, K3):
    Fy, Gy, Hy = fgh_diagonals(y)
    e = y - x
    dy = Fy * Ah + Gy + Hy * Bh + _theta(x, y, A, B, Ah, Bh, K1, K2, K3)
    dAh = -np.conj(Fy) * e + K2 * e
    dBh = -np.conj(Hy) * e + K3 * e
    return dy, dAh, dBh


@njit(cache=True)
def _coupled_rhs(s, A, B, A_drive, K1, K2, K3):
    x = s[0:3]
    Fx, Gx, Hx = fgh_diagonals(x)
    dy, dAh, dBh = _response_rhs(x, s[3:6], s[6:9], s[9:12], A, B, K1, K2, K3)
    out = np.empty(12, np.complex128)
    out[0:3] = Fx * A_drive + Gx + Hx * B
    out[3:6] = dy
    out[6:9] = dAh
    out[9:12] = dBh
    return out


@njit(cache=True)
def _lyap_V(s, A, B):
    v = 0.0
    for i in range(3):
        v += abs(s[3 + i] - s[i]) ** 2 + abs(s[6 + i] - A[i]) ** 2 + abs(s[9 + i] - B[i]) ** 2
    return 0.5 * v


@njit(cache=True)
def _sup_err(s):
    m = 0.0
    for i in range(3):
        d = s[3 + i] - s[i]
        m = max(m, abs(d.real), abs(d.imag))
    return m


@njit(cache=True)
def _sync_kernel(s0, A, B, A_drive, K1, K2, K3, h, n, every):
    n_out = n // every + 1
    states = np.empty((n_out, 12), np.complex128)
    V = np.empty(n_out)
    block_err = np.empty(n_out)
    s = s0.copy()
    states[0] = s
    v_prev = _lyap_V(s, A, B)
    V[0] = v_prev
    block_err[0] = _sup_err(s)
    blk = 0.0
    max_rise = -np.inf
    j = 1
    for i in range(n):
        k1 = _coupled_rhs(s, A, B, A_drive, K1, K2, K3)
        k2 = _coupled_rhs(s + 0.5 * h * k1, A, B, A_drive, K1, K2, K3)
        k3 = _coupled_rhs(s + 0.5 * h * k2, A, B, A_drive, K1, K2, K3)
        k4 = _coupled_rhs(s + h * k3, A, B, A_drive, K1, K2, K3)
        s = s + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not (np.all(np.isfinite(s.real)) and np.all(np.isfinite(s.imag))):
            return states[:j], V[:j], block_err[:j], max_rise, (i + 1) * h
        v = _lyap_V(s, A, B)
        if v - v_prev > max_rise:
            max_rise = v - v_prev
        v_prev = v
        blk = max(blk, _sup_err(s))
        if (i + 1) % every == 0:
            states[j] = s
            V[j] = v
            block_err[j] = blk
            blk = 0.0
            j += 1
    return states[:j], V[:j], block_err[:j], max_rise, np.nan


# -- public operations -----------------------------------------------------

def controller_theta(drive, response, true_params: RabinovichParams, estimates: ParameterEstimates,
                     gains: GainMatrices) -> np.ndarray:
    """Control input in matrix form, built from the F/G/H decomposition."""
    K1, K2, K3 = gains.arrays()
    return _theta(as_state(drive), as_state(response), true_params.A, true_params.B,
                  estimates.A_hat, estimates.B_hat, K1, K2, K3)


def controller_theta_expanded(drive, response, true_params: RabinovichParams,
                              estimates: ParameterEstimates, gains: GainMatrices) -> np.ndarray:
    """The same control input written out component by component for the Rabinovich system."""
    xd, yd, zd = as_state(drive)
    xr, yr, zr = as_state(response)
    ups, alp, bet, gam = true_params.upsilon, true_params.alpha, true_params.beta, true_params.gamma
    Ah, Bh = estimates.A_hat, estimates.B_hat
    eA = Ah - np.array([ups, alp, gam])
    eB = Bh - np.array([0.0, bet, bet])
    e = np.array([xr - xd, yr - yd, zr - zd])
    (k11, k12, k13), (k21, k22, k23), (k31, k32, k33) = gains.K1, gains.K2, gains.K3
    phi1 = -k11 * e[0] - k21 * eA[0] - k31 * eB[0]
    phi2 = -k12 * e[1] - k22 * eA[1] - k32 * eB[1]
    phi3 = -k13 * e[2] - k23 * eA[2] - k33 * eB[2]
    th1 = (ups * (xr - xd)
           + (yd * np.conj(xd) + zd * np.conj(yd) - yr * np.conj(xr) - zr * np.conj(yr)) + phi1)
    th2 = (alp * (yd - yr)
           - (xd ** 2 - 2 * np.conj(xd) * zd + bet * abs(yd) ** 2 * yd
              - xr ** 2 + 2 * np.conj(xr) * zr - bet * abs(yr) ** 2 * yr) + phi2)
    th3 = (gam * (zd - zr)
           - (3 * xd * yd + bet * abs(zd) ** 2 * zd - 3 * xr * yr - bet * abs(zr) ** 2 * zr) + phi3)
    return np.array([th1, th2, th3], dtype=np.complex128)


def estimate_update(response, error, gains: GainMatrices):
    """Time derivatives (dA_hat/dt, dB_hat/dt) of the parameter estimates."""
    F, _, H = fgh_diagonals(as_state(response))
    e = as_state(error)
    _, K2, K3 = gains.arrays()
    return -np.conj(F) * e + K2 * e, -np.conj(H) * e + K3 * e


def coupled_rhs(aug: SyncAugmentedState, true_params: RabinovichParams, gains: GainMatrices,
                drive_param_override: float | None = None) -> SyncAugmentedState:
    """Time derivative of the drive/response/estimator system.

    ``drive_param_override`` replaces gamma in the drive only; the controller
    keeps using ``true_params``.
    """
    A_drive = true_params.A
    if drive_param_override is not None:
        A_drive = A_drive.copy()
        A_drive[2] = drive_param_override
    K1, K2, K3 = gains.arrays()
    d = _coupled_rhs(aug.pack(), true_params.A, true_params.B, A_drive, K1, K2, K3)
    return SyncAugmentedState.unpack(d)


def lyapunov_V(error, e_A, e_B) -> float:
    e, a, b = (np.asarray(v, dtype=np.complex128) for v in (error, e_A, e_B))
    return 0.5 * float(np.vdot(e, e).real + np.vdot(a, a).real + np.vdot(b, b).real)


def windowed_sync_time(times, point_err, block_err, threshold: float, window: float = 1.0):
    """Earliest sample time after which the error stays below ``threshold`` for ``window`` seconds.

    ``block_err[i]`` is the largest sup-norm error over the integration steps
    in ``(times[i-1], times[i]]``, so no excursion between samples is missed.
    Returns None when no qualifying time exists within the record.
    """
    times = np.asarray(times)
    if len(times) < 2:
        return None
    dt = times[1] - times[0]
    w = max(1, int(round(window / dt)))
    below = np.asarray(block_err) < threshold
    # bad[k] counts failing blocks among the first k
    bad = np.concatenate([[0], np.cumsum(~below)])
    for i in range(len(times) - w):
        if point_err[i] < threshold and bad[i + 1 + w] - bad[i + 1] == 0:
            return float(times[i])
    return None


@dataclass
class SyncRunReport:
    times: np.ndarray
    errors: np.ndarray        # (N, 6) real error components
    e_A: np.ndarray           # (N, 6)
    e_B: np.ndarray           # (N, 6)
    V: np.ndarray
    sync_time: float | None
    final_estimates: ParameterEstimates
    max_V_step_increase: float
    block_error: np.ndarray = field(repr=False, default=None)
    states: np.ndarray = field(repr=False, default=None)

    @property
    def lyapunov_violation(self) -> bool:
        return self.max_V_step_increase > V_STEP_TOLERANCE

    def to_csv(self, path) -> None:
        cols = (["t"] + [f"e{i}" for i in range(1, 7)] + [f"eA{i}" for i in range(1, 7)]
                + [f"eB{i}" for i in range(1, 7)] + ["V"])
        data = np.column_stack([self.times, self.errors, self.e_A, self.e_B, self.V])
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            for row in data:
                w.writerow([repr(float(v)) for v in row])


def run_sync_experiment(params: RabinovichParams, gains: GainMatrices = REFERENCE_GAINS,
                        drive_init=REFERENCE_DRIVE_INIT, response_init=REFERENCE_RESPONSE_INIT,
                        estimate_init: ParameterEstimates | None = None, horizon: float = 100.0,
                        sync_threshold: float = 1e-2, step: float = DEFAULT_STEP,
                        sample_interval: float = 0.01, window: float = 1.0) -> SyncRunReport:
    if not horizon > 0:
        raise ValueError("horizon must be > 0")
    if not sync_threshold > 0:
        raise ValueError("sync_threshold must be > 0")
    if estimate_init is None:
        estimate_init = ParameterEstimates.zeros()
    aug = SyncAugmentedState(drive_init, response_init, estimate_init)
    every = max(1, int(round(sample_interval / step)))
    n = int(round(horizon / step))
    n -= n % every
    K1, K2, K3 = gains.arrays()
    A, B = params.A, params.B
    states, V, blk, max_rise, failed_at = _sync_kernel(aug.pack(), A, B, A, K1, K2, K3,
                                                       float(step), n, every)
    if not np.isnan(failed_at):
        raise NonFiniteState(failed_at)
    times = np.arange(len(states)) * (every * step)
    err = (states[:, 3:6] - states[:, 0:3]).view(np.float64).reshape(-1, 6)
    eA = np.ascontiguousarray(states[:, 6:9] - A).view(np.float64).reshape(-1, 6)
    eB = np.ascontiguousarray(states[:, 9:12] - B).view(np.float64).reshape(-1, 6)
    point = np.abs(err).max(axis=1)
    t_sync = windowed_sync_time(times, point, blk, sync_threshold, window)
    final = SyncAugmentedState.unpack(states[-1]).estimates
    report = SyncRunReport(times, err, eA, eB, V, t_sync, final, float(max_rise), blk, states)
    if report.lyapunov_violation:
        log.warning("V increased by %.3g in one step (tolerance %.1g); check the update-law signs",
                    report.max_V_step_increase, V_STEP_TOLERANCE)
    return report
