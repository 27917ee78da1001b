"""Hyperchaotic complex Rabinovich systems: dynamics, Lyapunov spectra,
adaptive synchronisation and a two-channel secure-communication pipeline."""
from .dynamics import (REFERENCE_PARAMS, RabinovichParams, Stability, classify_stability,
                       equilibrium_eigenvalues, rabinovich_rhs_complex, rabinovich_rhs_real)
from .errors import HypersyncError
from .integrator import DEFAULT_STEP, IntegrationConfig, Trajectory, integrate, rk4_step
from .lyapunov import LyapunovReport, kaplan_yorke, lyapunov_spectrum
from .sync import GainMatrices, ParameterEstimates, SyncRunReport, run_sync_experiment

__version__ = "0.1.0"
