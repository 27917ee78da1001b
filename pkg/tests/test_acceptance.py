"""End-to-end acceptance checks.  Each test prints one PASS/FAIL line, collected
again in the terminal summary under "acceptance criteria"."""
import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import record_criterion
from hypersync import comm, metrics
from hypersync.dynamics import (REFERENCE_PARAMS, RabinovichParams, Stability, classify_stability, complexify,
                                equilibrium_eigenvalues, rabinovich_rhs_complex, rabinovich_rhs_real)
from hypersync.integrator import IntegrationConfig, integrate
from hypersync.lyapunov import jacobian_real, kaplan_yorke
from hypersync.sync import REFERENCE_GAINS, ParameterEstimates, controller_theta, controller_theta_expanded

TRUE = np.array([-0.03, 0.5, 0.001, 0.11])


def check(label, ok, detail):
    record_criterion(label, bool(ok), detail)
    assert ok, f"{label}: {detail}"


def test_ac1a_sync_time(sync_run):
    rep, elapsed = sync_run
    ok = rep.sync_time is not None and rep.sync_time <= 15.0 and elapsed <= 30.0
    check("AC1a synchronisation time", ok, f"sync at t={rep.sync_time} s (limit 15), runtime {elapsed:.1f} s (limit 30)")


def test_ac1b_estimates_at_100s(sync_run):
    rep, _ = sync_run
    est = rep.final_estimates.as_params().as_array()
    err = np.abs(est - TRUE)
    names = ("upsilon", "alpha", "beta", "gamma")
    detail = ", ".join(f"{n} {v:.5f} (err {e:.1e})" for n, v, e in zip(names, est, err))
    check("AC1b parameter estimates within 1e-3 at t=100", np.all(err <= 1e-3), detail)


def test_ac2_lyapunov_function_nonincreasing(sync_run):
    rep, _ = sync_run
    ok = rep.max_V_step_increase <= 1e-9 and np.all(rep.V >= 0)
    check("AC2 V(t) never rises by more than 1e-9 per step", ok, f"largest per-step change {rep.max_V_step_increase:.3e}")


def test_ac3_lyapunov_spectrum(reference_spectrum):
    le = reference_spectrum.exponents
    ky = reference_spectrum.dimension
    ky_target = kaplan_yorke((2.5124, 0.1533, 0.0571, -0.0089, -0.4718, -2.5927))
    ok = (le[0] > 0 and le[1] > 0 and le[2] > 0 and abs(le[3]) <= 0.05 and le[4] < 0 and le[5] < 0
          and 2.26 <= le[0] <= 2.77 and -2.86 <= le[5] <= -2.33 and abs(ky - 5.8648) <= 0.3
          and abs(ky_target - 5.8648) <= 5e-4)
    check("AC3 Lyapunov spectrum and dimension", ok,
          "exponents " + ", ".join(f"{v:.4f}" for v in le) + f"; KY {ky:.4f}; KY(target exponents) {ky_target:.5f}")


def test_ac4_equilibrium_eigenvalues():
    grid = list(itertools.product((-0.5, 0.0, 0.7), repeat=3))
    bad = []
    for u, a, g in grid:
        p = RabinovichParams(u, a, 0.001, g)
        eig = equilibrium_eigenvalues(p)
        want = Stability.STABLE if (-u < 0 and a < 0 and g < 0) else (
            Stability.UNSTABLE if (-u > 0 or a > 0 or g > 0) else Stability.MARGINAL)
        if sorted(eig.tolist()) != sorted([-u, -u, a, a, g, g]) or classify_stability(p) is not want:
            bad.append((u, a, g))
    exact = sorted(equilibrium_eigenvalues(REFERENCE_PARAMS).tolist()) == sorted([0.03, 0.03, 0.5, 0.5, 0.11, 0.11])
    check("AC4 equilibrium eigenvalues and stability grid", exact and not bad,
          f"reference set exact: {exact}; grid mismatches {len(bad)}/27")


def test_ac5_text_roundtrip(text_roundtrip, story_text):
    rec, rep, elapsed = text_roundtrip
    got = rep.message.to_text()
    wrong = sum(a != b for a, b in zip(got, story_text)) + abs(len(got) - len(story_text))
    ok = got == story_text and len(story_text) >= 500 and rec.header.split_index <= 10 and elapsed <= 60
    check("AC5 text round trip", ok,
          f"{len(story_text)} chars, {wrong} wrong, part 1 = {rec.header.split_index} symbols, runtime {elapsed:.1f} s")


def test_ac6_image_roundtrip_with_noise(image_roundtrips):
    parts, ok = [], True
    for variance, (noisy, got) in image_roundtrips.items():
        p, s = metrics.psnr(noisy, got), metrics.ssim(noisy, got)
        ok &= p >= 60 and s >= 0.999 and noisy.shape == (64, 64)
        parts.append(f"var {variance}: PSNR {p:.2f} dB SSIM {s:.6f}")
    check("AC6 noisy image round trip", ok, "; ".join(parts))


def test_ac7_oracle_equivalences():
    rng = np.random.default_rng(2024)
    rhs_err = 0.0
    for _ in range(1000):
        s = complexify(rng.uniform(-10, 10, 6))
        c = rabinovich_rhs_complex(s, REFERENCE_PARAMS).view(np.float64)
        rhs_err = max(rhs_err, np.abs(c - rabinovich_rhs_real(s.view(np.float64), REFERENCE_PARAMS)).max()
                      / max(1.0, np.abs(c).max()))
    theta_err = 0.0
    for _ in range(1000):
        x, y = complexify(rng.uniform(-10, 10, 6)), complexify(rng.uniform(-10, 10, 6))
        est = ParameterEstimates(complexify(rng.uniform(-1, 1, 6)), complexify(rng.uniform(-1, 1, 6)))
        a = controller_theta(x, y, REFERENCE_PARAMS, est, REFERENCE_GAINS)
        b = controller_theta_expanded(x, y, REFERENCE_PARAMS, est, REFERENCE_GAINS)
        theta_err = max(theta_err, np.abs(a - b).max() / max(1.0, np.abs(a).max()))
    jac_err = 0.0
    for _ in range(100):
        x = rng.uniform(-10, 10, 6)
        J = jacobian_real(x, REFERENCE_PARAMS)
        fd = np.empty((6, 6))
        for k in range(6):
            h = 1e-6 * max(1.0, abs(x[k]))
            dx = np.zeros(6)
            dx[k] = h
            fd[:, k] = (rabinovich_rhs_real(x + dx, REFERENCE_PARAMS) - rabinovich_rhs_real(x - dx, REFERENCE_PARAMS)) / (2 * h)
        jac_err = max(jac_err, np.abs(J - fd).max() / max(1.0, np.abs(J).max()))

    def f(t, y):
        return np.array([np.cos(t) * y[0] + y[1], -y[0] * y[1]])
    y0 = np.array([1.0, 0.5])
    ref = integrate(f, IntegrationConfig(step=1e-4, t_end=1.0), y0).states[-1]
    e1, e2 = (np.abs(integrate(f, IntegrationConfig(step=h, t_end=1.0), y0).states[-1] - ref).max() for h in (0.1, 0.05))
    ratio = e1 / e2
    ok = rhs_err <= 1e-12 and theta_err <= 1e-12 and jac_err <= 1e-6 and 12 <= ratio <= 20
    check("AC7 oracle equivalences", ok,
          f"rhs {rhs_err:.1e}, controller {theta_err:.1e}, Jacobian {jac_err:.1e}, RK4 ratio {ratio:.2f}")


def test_ac8_inverse_function_suite():
    @settings(max_examples=300, deadline=None)
    @given(st.integers(0, 0x10FFFF), st.floats(1, 2e6), st.floats(-1, 1), st.floats(-60, 60), st.integers(0, 255))
    def inverses(s, d, g, x6, p):
        assert abs(comm.psi1(comm.phi1(s, d, g), g, d) - s) <= 1e-9 * max(1, s)
        assert abs(comm.psi2(x6, comm.phi2(x6, p)) - p) <= 1e-9 * max(1, p)

    @settings(max_examples=200, deadline=None)
    @given(st.text(min_size=1, max_size=300), st.floats(0.001, 0.999))
    def split_and_text(t, f):
        msg = comm.Message.from_text(t)
        assert comm.gather(comm.split_message(msg, f)) == msg
        assert msg.to_text() == t

    @settings(max_examples=100, deadline=None)
    @given(st.integers(1, 16), st.integers(1, 16), st.integers(0, 2 ** 32 - 1))
    def image_codec(m, n, seed):
        img = np.random.default_rng(seed).integers(0, 256, (m, n), dtype=np.uint8)
        assert np.array_equal(comm.Message.from_image(img).to_image(), img)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=64), st.floats(0, 5), st.integers(0, 2 ** 63))
    def noise(x, sigma, seed):
        assert np.array_equal(comm.awgn(x, 0.0, seed), np.asarray(x, dtype=float))
        assert np.array_equal(comm.awgn(x, sigma, seed), comm.awgn(x, sigma, seed))

    failures = []
    for prop in (inverses, split_and_text, image_codec, noise):
        try:
            prop()
        except AssertionError as exc:
            failures.append(f"{prop.__name__}: {exc}")
    check("AC8 inverse-function properties", not failures,
          "psi1/phi1, psi2/phi2, split/gather, text and image codecs, AWGN identity and seeding"
          + ("" if not failures else " -- " + "; ".join(failures)))
