import time
from pathlib import Path

import numpy as np
import pytest

from hypersync import comm
from hypersync.dynamics import REFERENCE_PARAMS
from hypersync.imaging import gaussian_image_noise, read_pgm
from hypersync.lyapunov import lyapunov_spectrum
from hypersync.sync import REFERENCE_GAINS, run_sync_experiment

DATA = Path(__file__).parent / "data"
ACCEPTANCE_LINES = []


def record_criterion(label, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def _timed(fn, *args, **kwargs):
    t0 = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - t0


@pytest.fixture(scope="session")
def sync_run():
    rep, elapsed = _timed(run_sync_experiment, REFERENCE_PARAMS, REFERENCE_GAINS, horizon=100.0)
    return rep, elapsed


@pytest.fixture(scope="session")
def reference_spectrum():
    return lyapunov_spectrum(REFERENCE_PARAMS)


@pytest.fixture(scope="session")
def story_text():
    return (DATA / "lighthouse.txt").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def text_roundtrip(story_text):
    def run():
        msg = comm.Message.from_text(story_text)
        rec = comm.transmit(msg, fraction=10 / len(msg))
        return rec, comm.decode(rec)
    (rec, rep), elapsed = _timed(run)
    return rec, rep, elapsed


@pytest.fixture(scope="session")
def cameraman64():
    return read_pgm(DATA / "cameraman64.pgm")


@pytest.fixture(scope="session")
def image_roundtrips(cameraman64):
    out = {}
    for k, variance in enumerate((0.03, 0.07, 0.1)):
        noisy = gaussian_image_noise(cameraman64, variance, seed=np.random.SeedSequence([2024, k]))
        msg = comm.Message.from_image(noisy)
        rec = comm.transmit(msg, fraction=10 / len(msg))
        out[variance] = (noisy, comm.decode(rec).message.to_image())
    return out
