import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypersync.dynamics import REFERENCE_PARAMS, RabinovichParams, rabinovich_rhs_real
from hypersync.lyapunov import jacobian_real, kaplan_yorke, lyapunov_spectrum

TARGET_EXPONENTS = (2.5124, 0.1533, 0.0571, -0.0089, -0.4718, -2.5927)
# regression values for the default configuration (step 1e-4, reorth 0.1, horizon 100)
FROZEN = (2.3533, 0.1174, 0.0628, 0.0067, -0.4432, -2.4703)


def test_kaplan_yorke_target_exponents():
    assert kaplan_yorke(TARGET_EXPONENTS) == pytest.approx(5.8648, abs=5e-4)


def test_kaplan_yorke_hand_examples():
    assert kaplan_yorke([-0.1, -0.5]) == 0.0
    assert kaplan_yorke([1.0, -0.5, -1.0]) == pytest.approx(2.5)
    assert kaplan_yorke([0.5, 0.2, 0.0]) == 3.0
    assert kaplan_yorke([0.0, 0.0]) == 2.0


sorted_exps = st.lists(st.floats(-5, 5, allow_nan=False), min_size=2, max_size=8).map(
    lambda v: sorted(v, reverse=True))


@given(sorted_exps, st.floats(0, 3))
def test_kaplan_yorke_monotone_in_leading_exponent(le, bump):
    raised = [le[0] + bump] + le[1:]
    assert kaplan_yorke(raised) >= kaplan_yorke(le) - 1e-12


@given(sorted_exps)
def test_kaplan_yorke_ignores_exponents_past_cutoff(le):
    d = kaplan_yorke(le)
    if 0 < d < len(le):
        extra = le + [min(le) - 1.0]
        assert kaplan_yorke(extra) == pytest.approx(d)


@given(sorted_exps)
def test_kaplan_yorke_range(le):
    assert 0 <= kaplan_yorke(le) <= len(le)


def test_jacobian_matches_finite_differences():
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(100):
        x = rng.uniform(-10, 10, 6)
        J = jacobian_real(x, REFERENCE_PARAMS)
        fd = np.empty((6, 6))
        for k in range(6):
            h = 1e-6 * max(1.0, abs(x[k]))
            dx = np.zeros(6)
            dx[k] = h
            fd[:, k] = (rabinovich_rhs_real(x + dx, REFERENCE_PARAMS) - rabinovich_rhs_real(x - dx, REFERENCE_PARAMS)) / (2 * h)
        worst = max(worst, np.abs(J - fd).max() / max(1.0, np.abs(J).max()))
    assert worst <= 1e-6


def test_zero_field_gives_zero_exponents():
    rep = lyapunov_spectrum(RabinovichParams(0, 0, 0, 0), initial=np.zeros(6), horizon=5.0)
    assert np.all(rep.exponents == 0.0)


def test_stable_parameters_all_negative():
    rep = lyapunov_spectrum(RabinovichParams(1, -1, 0.001, -1), initial=np.full(6, 1e-3), horizon=20.0)
    assert np.all(rep.exponents < 0)
    assert np.allclose(rep.exponents, -1.0, atol=0.1)
    assert rep.dimension == 0.0


def test_transient_skip_changes_averaging_window():
    a = lyapunov_spectrum(REFERENCE_PARAMS, horizon=5.0)
    b = lyapunov_spectrum(REFERENCE_PARAMS, horizon=5.0, transient=1.0)
    assert a.horizon == b.horizon == 5.0
    assert not np.allclose(a.exponents, b.exponents)


def test_bad_arguments():
    with pytest.raises(ValueError):
        lyapunov_spectrum(REFERENCE_PARAMS, horizon=0)
    with pytest.raises(ValueError):
        lyapunov_spectrum(REFERENCE_PARAMS, reorth_interval=-1)


def test_reference_spectrum_regression(reference_spectrum):
    assert np.allclose(reference_spectrum.exponents, FROZEN, atol=2e-4)


def test_sum_matches_mean_divergence(reference_spectrum):
    total = reference_spectrum.exponents.sum()
    assert total == pytest.approx(reference_spectrum.mean_divergence, rel=0.05)


def test_reproducible_bit_identical(reference_spectrum):
    again = lyapunov_spectrum(REFERENCE_PARAMS)
    assert np.array_equal(again.exponents, reference_spectrum.exponents)


def test_report_csv(tmp_path, reference_spectrum):
    path = tmp_path / "le.csv"
    reference_spectrum.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "index,exponent"
    assert len(lines) == 7
    assert float(lines[1].split(",")[1]) == reference_spectrum.exponents[0]
    assert "dimension" in reference_spectrum.summary() and "horizon" in reference_spectrum.summary()
