"""Complex-valued Rabinovich system.

State convention: a complex 3-vector ``(x, y, z)`` whose real embedding is
``(Re x, Im x, Re y, Im y, Re z, Im z)``.  For a contiguous ``complex128``
array this is exactly ``state.view(np.float64)``, which the kernels exploit.

The system is written in the general form ``F(s) A + G(s) + H(s) B`` with
``A = (upsilon, alpha, gamma)`` and ``B = (0, beta, beta)``; F and H are
diagonal, so the jitted helpers return their diagonals only.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from numba import njit


@dataclass(frozen=True)
class RabinovichParams:
    upsilon: float
    alpha: float
    beta: float
    gamma: float

    @property
    def A(self) -> np.ndarray:
        """Linear-term block (upsilon, alpha, gamma) as a complex 3-vector."""
        return np.array([self.upsilon, self.alpha, self.gamma], dtype=np.complex128)

    @property
    def B(self) -> np.ndarray:
        """Nonlinear-term block (0, beta, beta) as a complex 3-vector."""
        return np.array([0.0, self.beta, self.beta], dtype=np.complex128)

    def as_array(self) -> np.ndarray:
        return np.array([self.upsilon, self.alpha, self.beta, self.gamma], dtype=np.float64)

    def replace(self, **changes) -> "RabinovichParams":
        values = dict(upsilon=self.upsilon, alpha=self.alpha, beta=self.beta, gamma=self.gamma)
        values.update(changes)
        return RabinovichParams(**values)

    @classmethod
    def from_blocks(cls, A, B) -> "RabinovichParams":
        A = np.asarray(A)
        B = np.asarray(B)
        return cls(float(A[0].real), float(A[1].real), float(B[1].real), float(A[2].real))


REFERENCE_PARAMS = RabinovichParams(upsilon=-0.03, alpha=0.5, beta=0.001, gamma=0.11)


def as_state(state) -> np.ndarray:
    """Coerce a 3-sequence of complex numbers to a contiguous complex128 array."""
    s = np.ascontiguousarray(state, dtype=np.complex128)
    if s.shape != (3,):
        raise ValueError(f"complex state must have shape (3,), got {s.shape}")
    return s


def realify(state) -> np.ndarray:
    """Complex 3-vector -> 6 reals in the fixed (Re x, Im x, Re y, ...) order."""
    return as_state(state).view(np.float64).copy()


def complexify(state6) -> np.ndarray:
    x = np.ascontiguousarray(state6, dtype=np.float64)
    if x.shape != (6,):
        raise ValueError(f"real state must have shape (6,), got {x.shape}")
    return x.view(np.complex128).copy()


@njit(cache=True)
def fgh_diagonals(s):
    x, y, z = s[0], s[1], s[2]
    F = np.empty(3, np.complex128)
    G = np.empty(3, np.complex128)
    H = np.empty(3, np.complex128)
    F[0] = -x
    F[1] = y
    F[2] = z
    G[0] = y * np.conj(x) + z * np.conj(y)
    G[1] = -x * x + 2.0 * np.conj(x) * z
    G[2] = -3.0 * x * y
    H[0] = 0.0
    H[1] = -(y.real * y.real + y.imag * y.imag) * y
    H[2] = -(z.real * z.real + z.imag * z.imag) * z
    return F, G, H


@njit(cache=True)
def rhs_complex(s, A, B):
    """Direct term-by-term evaluation of the complex system (not via F/G/H)."""
    x, y, z = s[0], s[1], s[2]
    ups, alp, gam = A[0], A[1], A[2]
    bet_y, bet_z = B[1], B[2]
    out = np.empty(3, np.complex128)
    out[0] = -ups * x + y * np.conj(x) + z * np.conj(y)
    out[1] = alp * y - x * x + 2.0 * np.conj(x) * z - bet_y * abs(y) ** 2 * y
    out[2] = gam * z - 3.0 * x * y - bet_z * abs(z) ** 2 * z
    return out


@njit(cache=True)
def drive_rhs(t, x, p):
    """Realified right-hand side; ``p = (upsilon, alpha, beta, gamma)``."""
    u, a, b, g = p[0], p[1], p[2], p[3]
    x1, x2, x3, x4, x5, x6 = x[0], x[1], x[2], x[3], x[4], x[5]
    r2y = x3 * x3 + x4 * x4
    r2z = x5 * x5 + x6 * x6
    out = np.empty(6)
    out[0] = -u * x1 + x1 * x3 + x2 * x4 + x3 * x5 + x4 * x6
    out[1] = -u * x2 + x1 * x4 - x2 * x3 + x3 * x6 - x4 * x5
    # +2(x1 x5 + x2 x6): the real part of 2 conj(x) z
    out[2] = a * x3 + (x2 * x2 - x1 * x1) + 2.0 * (x1 * x5 + x2 * x6) - b * x3 * r2y
    out[3] = a * x4 - 2.0 * x1 * x2 + 2.0 * (x1 * x6 - x2 * x5) - b * x4 * r2y
    out[4] = g * x5 - 3.0 * (x1 * x3 - x2 * x4) - b * x5 * r2z
    out[5] = g * x6 - 3.0 * (x1 * x4 + x2 * x3) - b * x6 * r2z
    return out


def rabinovich_rhs_complex(state, params: RabinovichParams) -> np.ndarray:
    return rhs_complex(as_state(state), params.A, params.B)


def rabinovich_rhs_real(state6, params: RabinovichParams) -> np.ndarray:
    return drive_rhs(0.0, np.ascontiguousarray(state6, dtype=np.float64), params.as_array())


@dataclass(frozen=True)
class FGHDecomposition:
    F: np.ndarray  # 3x3 diagonal
    G: np.ndarray  # 3-vector
    H: np.ndarray  # 3x3 diagonal

    def recompose(self, A, B) -> np.ndarray:
        return self.F @ np.asarray(A, dtype=np.complex128) + self.G + self.H @ np.asarray(B, dtype=np.complex128)


def fgh_eval(state) -> FGHDecomposition:
    F, G, H = fgh_diagonals(as_state(state))
    return FGHDecomposition(np.diag(F), G, np.diag(H))


class Stability(enum.Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    MARGINAL = "marginal"


def equilibrium_eigenvalues(params: RabinovichParams) -> np.ndarray:
    """Roots of (upsilon + l)^2 (alpha - l)^2 (gamma - l)^2 at the origin, descending.

    Read off the factored characteristic polynomial; beta does not enter.
    """
    roots = [-params.upsilon, -params.upsilon, params.alpha, params.alpha, params.gamma, params.gamma]
    return np.array(sorted(roots, reverse=True), dtype=np.float64)


def classify_stability(params: RabinovichParams) -> Stability:
    eig = equilibrium_eigenvalues(params)
    if np.all(eig < 0):
        return Stability.STABLE
    if np.any(eig > 0):
        return Stability.UNSTABLE
    return Stability.MARGINAL
