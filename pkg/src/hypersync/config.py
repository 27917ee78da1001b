"""Experiment configuration: a flat ``key = value`` file format with ``#`` comments.

Sequences are whitespace- or comma-separated; complex numbers use Python
syntax (``1+1j``).  ``none`` clears optional values.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from .dynamics import REFERENCE_PARAMS, RabinovichParams
from .errors import ConfigError
from .integrator import DEFAULT_STEP
from .lyapunov import REFERENCE_INITIAL_POINT
from .sync import REFERENCE_DRIVE_INIT, REFERENCE_GAINS, REFERENCE_RESPONSE_INIT, GainMatrices


def _floats(n):
    def parse(text):
        vals = tuple(float(v) for v in text.replace(",", " ").split())
        if len(vals) != n:
            raise ValueError(f"expected {n} numbers, got {len(vals)}")
        return vals
    return parse


def _complexes(text):
    vals = tuple(complex(v) for v in text.replace(",", " ").split())
    if len(vals) != 3:
        raise ValueError(f"expected 3 complex numbers, got {len(vals)}")
    return vals


def _optional(parse):
    return lambda text: None if text.lower() == "none" else parse(text)


def _choice(*options):
    def parse(text):
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return text
    return parse


def _opt(default, parse, doc):
    return field(default=default, metadata={"parse": parse, "doc": doc})


@dataclass
class ExperimentConfig:
    upsilon: float = _opt(REFERENCE_PARAMS.upsilon, float, "system parameter upsilon")
    alpha: float = _opt(REFERENCE_PARAMS.alpha, float, "system parameter alpha")
    beta: float = _opt(REFERENCE_PARAMS.beta, float, "system parameter beta")
    gamma: float = _opt(REFERENCE_PARAMS.gamma, float, "system parameter gamma")
    k1: tuple = _opt(REFERENCE_GAINS.K1, _floats(3), "response feedback gain diagonal")
    k2: tuple = _opt(REFERENCE_GAINS.K2, _floats(3), "A-estimate feedback gain diagonal")
    k3: tuple = _opt(REFERENCE_GAINS.K3, _floats(3), "B-estimate feedback gain diagonal")
    drive_init: tuple = _opt(REFERENCE_DRIVE_INIT, _complexes, "drive initial state (x, y, z)")
    response_init: tuple = _opt(REFERENCE_RESPONSE_INIT, _complexes, "response initial state")
    initial_point: tuple = _opt(REFERENCE_INITIAL_POINT, _floats(6), "real initial state for simulate/lyapunov")
    step: float = _opt(DEFAULT_STEP, float, "RK4 step (s)")
    horizon: float = _opt(100.0, float, "simulate/sync/lyapunov horizon (s)")
    sample_interval: float = _opt(0.01, float, "output sample spacing for simulate/sync (s)")
    reorth_interval: float = _opt(0.1, float, "QR renormalisation interval (s)")
    transient: float = _opt(0.0, float, "lyapunov transient discarded before averaging (s)")
    sync_threshold: float = _opt(1e-2, float, "sup-norm error threshold for sync time")
    sync_window: float = _opt(1.0, float, "seconds the error must stay below threshold")
    dwell: float = _opt(5.0, float, "seconds per parameter-modulated symbol")
    sample_period: float = _opt(0.05, float, "seconds per masked symbol")
    start_time: float = _opt(20.0, float, "payload start after key sync (s)")
    channel_period: float = _opt(1e-3, float, "channel-1 sample spacing (s)")
    comm_horizon: float | None = _opt(None, _optional(float), "transmission length (s); none = just enough")
    split_fraction: float | None = _opt(None, _optional(float),
                                        "share of symbols sent by modulation; none = 10 symbols at most")
    modulated_parameter: str = _opt("gamma", _choice("gamma", "alpha", "upsilon"), "parameter carrying part 1")
    masked_component: int = _opt(5, int, "real state index (0-5) masking part 2")
    hold: str = _opt("cubic", _choice("cubic", "zoh"), "channel-1 reconstruction at the receiver")
    noise_sigma: float = _opt(0.0, float, "channel noise std-dev relative to channel RMS")
    image_noise: float = _opt(0.0, float, "Gaussian variance on [0,1] intensities added before sending")
    seed: int = _opt(0, int, "seed for all random streams (numpy PCG64)")
    out_dir: str = _opt("out", str, "output directory")

    def __post_init__(self):
        for name in ("step", "sample_interval", "reorth_interval", "sync_threshold", "sync_window"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0")
        if self.horizon < 0:
            raise ConfigError("horizon must be >= 0")
        if self.transient < 0:
            raise ConfigError("transient must be >= 0")
        if self.noise_sigma < 0 or self.image_noise < 0:
            raise ConfigError("noise levels must be >= 0")
        if self.split_fraction is not None and not 0 < self.split_fraction < 1:
            raise ConfigError("split_fraction must lie in (0, 1)")
        if not 0 <= self.masked_component < 6:
            raise ConfigError("masked_component must lie in 0..5")

    @property
    def params(self) -> RabinovichParams:
        return RabinovichParams(self.upsilon, self.alpha, self.beta, self.gamma)

    @property
    def gains(self) -> GainMatrices:
        try:
            return GainMatrices(self.k1, self.k2, self.k3)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def fraction_for(self, length: int) -> float:
        if self.split_fraction is not None:
            return self.split_fraction
        return min(0.5, 10 / length) if length > 1 else 0.5

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    @classmethod
    def describe(cls) -> list[tuple[str, str, str]]:
        """(key, default, description) for every option."""
        out = []
        for f in dataclasses.fields(cls):
            default = f.default
            if isinstance(default, tuple):
                default = " ".join(str(v) for v in default)
            out.append((f.name, str(default), f.metadata["doc"]))
        return out


def parse_config(text: str, source: str = "<config>") -> ExperimentConfig:
    fields = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        if key not in fields:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        try:
            values[key] = fields[key].metadata["parse"](value)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {exc}") from None
    return ExperimentConfig(**values)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, str(path))
