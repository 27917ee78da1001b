import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numba import njit

from hypersync.dynamics import REFERENCE_PARAMS, drive_rhs
from hypersync.errors import NonFiniteState
from hypersync.integrator import IntegrationConfig, integrate, rk4_step


@njit(cache=True)
def _decay(t, y, k):
    return -k * y


def _decay_py(t, y, k):
    return -k * y


def _forced(t, y):
    return np.array([np.cos(t) * y[0] + y[1], -y[0] * y[1]])


def test_rk4_order_ratio():
    # error at t=1 halves the step -> ratio ~ 2**4
    y0 = np.array([1.0, 0.5])
    ref = integrate(_forced, IntegrationConfig(step=1e-4, t_end=1.0), y0).states[-1]
    errs = []
    for h in (0.1, 0.05):
        y = integrate(_forced, IntegrationConfig(step=h, t_end=1.0), y0).states[-1]
        errs.append(np.abs(y - ref).max())
    assert 12 <= errs[0] / errs[1] <= 20


def test_single_step_matches_taylor():
    y1 = rk4_step(_decay_py, 0.0, np.array([1.0]), 0.1, 1.0)
    # RK4 reproduces exp(-h) through the h^4 term
    want = 1 - 0.1 + 0.1 ** 2 / 2 - 0.1 ** 3 / 6 + 0.1 ** 4 / 24
    assert y1[0] == pytest.approx(want, abs=1e-15)


def test_jit_and_python_paths_identical():
    cfg = IntegrationConfig(step=1e-3, t_end=2.0, sample_every=50)
    x0 = np.full(6, 0.3)
    a = integrate(drive_rhs, cfg, x0, args=(REFERENCE_PARAMS.as_array(),))
    b = integrate(drive_rhs.py_func, cfg, x0, args=(REFERENCE_PARAMS.as_array(),))
    assert np.array_equal(a.times, b.times)
    assert np.array_equal(a.states, b.states)


def test_sampling_includes_endpoints():
    tr = integrate(_decay, IntegrationConfig(step=0.01, t_end=1.0, sample_every=30), np.array([1.0]), (2.0,))
    assert tr.times[0] == 0.0 and tr.times[-1] == 1.0
    assert len(tr) == 100 // 30 + 2
    assert np.allclose(tr.times[1:4], [0.3, 0.6, 0.9])


def test_partial_last_step_lands_on_end():
    cfg = IntegrationConfig(step=0.3, t_end=1.0)
    assert cfg.step_plan() == (3, pytest.approx(0.1))
    for fn in (_decay, _decay_py):
        tr = integrate(fn, cfg, np.array([1.0]), (1.0,))
        assert tr.times[-1] == 1.0
        assert tr.states[-1, 0] == pytest.approx(math.exp(-1.0), rel=1e-3)


def test_nonfinite_raises_with_time():
    @njit
    def blowup(t, y):
        return y * y

    with pytest.raises(NonFiniteState) as info:
        integrate(blowup, IntegrationConfig(step=1e-2, t_end=5.0), np.array([1.0]))
    assert 0.9 < info.value.time < 5.0
    with pytest.raises(NonFiniteState), np.errstate(over="ignore", invalid="ignore"):
        integrate(blowup.py_func, IntegrationConfig(step=1e-2, t_end=5.0), np.array([1.0]))


@pytest.mark.parametrize("kwargs", [dict(step=0), dict(step=-1e-3), dict(t_end=0.0),
                                    dict(sample_every=0), dict(sample_every=1.5)])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        IntegrationConfig(**kwargs)


def test_complex_states_supported():
    tr = integrate(_decay_py, IntegrationConfig(step=1e-3, t_end=1.0), np.array([1 + 1j]), (1j,))
    # dy/dt = -i y rotates the phase
    assert tr.states[-1, 0] == pytest.approx((1 + 1j) * np.exp(-1j), abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 3.0), st.floats(-5, 5))
def test_linear_decay_accuracy(k, y0):
    tr = integrate(_decay, IntegrationConfig(step=1e-3, t_end=1.0), np.array([y0]), (k,))
    assert tr.states[-1, 0] == pytest.approx(y0 * math.exp(-k), rel=1e-10, abs=1e-12)
