"""Ground-truth synthetic flight timestreams.

Generates chopper-modulated detector voltages through a parameterized
receiver chain with white noise, deterministic linear gain drift, and a
periodic train of downward square glitches, together with a per-sample
truth sidecar. Everything is a pure function of the scenario and its
seed, so output files are byte-identical across runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from ._io import atomic_write_csv
from .pipeline import REFERENCE, SCENE, Timestream
from .radiometry import RadiometerChain

CHOPPER_SCENE_COUNTS = 1000.0
CHOPPER_REFERENCE_COUNTS = 0.0

DEFAULT_START_TIME = 1_725_000_000.0


@dataclass(frozen=True)
class SceneProfile:
    """Scene brightness temperature vs time: constant, ramp, or piecewise
    (step) profile."""

    kind: str
    value_k: float = 0.0
    end_k: float | None = None
    times_s: tuple[float, ...] = ()
    values_k: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ("constant", "ramp", "piecewise"):
            raise ValueError(f"unknown scene profile kind {self.kind!r}")
        if self.kind == "ramp" and self.end_k is None:
            raise ValueError("ramp profile needs end_k")
        if self.kind == "piecewise":
            if len(self.times_s) != len(self.values_k) or not self.times_s:
                raise ValueError("piecewise profile needs matching times and values")
            if any(t2 <= t1 for t1, t2 in zip(self.times_s, self.times_s[1:])):
                raise ValueError("piecewise times must be strictly increasing")

    @classmethod
    def constant(cls, value_k: float) -> "SceneProfile":
        return cls(kind="constant", value_k=value_k)

    @classmethod
    def ramp(cls, start_k: float, end_k: float) -> "SceneProfile":
        return cls(kind="ramp", value_k=start_k, end_k=end_k)

    @classmethod
    def piecewise(cls, times_s, values_k) -> "SceneProfile":
        return cls(kind="piecewise", times_s=tuple(times_s), values_k=tuple(values_k))

    def evaluate(self, t_rel: np.ndarray, duration_s: float) -> np.ndarray:
        if self.kind == "constant":
            return np.full_like(t_rel, self.value_k)
        if self.kind == "ramp":
            return self.value_k + (self.end_k - self.value_k) * t_rel / duration_s
        idx = np.searchsorted(np.asarray(self.times_s), t_rel, side="right") - 1
        idx = np.clip(idx, 0, len(self.values_k) - 1)
        return np.asarray(self.values_k, dtype=float)[idx]


@dataclass(frozen=True)
class GlitchTrain:
    """Periodic downward square spikes, in-phase across channels."""

    period_s: float = 1.0
    width_samples: int = 3
    depth_v: float = -1.0

    def __post_init__(self):
        if self.period_s <= 0:
            raise ValueError("glitch period must be > 0")
        if self.width_samples < 1:
            raise ValueError("glitch width must be >= 1 sample")
        if not (self.depth_v < 0):
            raise ValueError("glitch depth must be negative (downward spikes)")


@dataclass(frozen=True)
class Scenario:
    """Full description of one synthetic flight segment."""

    duration_s: float
    chain: RadiometerChain
    scene: SceneProfile
    t_ref_k: float
    seed: int
    sample_rate_hz: float = 200.0
    chop_rate_hz: float = 17.0
    t_ref_drift_k_per_s: float = 0.0
    n_channels: int = 6
    noise_net_mk_rts: float = 0.0
    drift_v_per_s: float = 0.0
    glitches: GlitchTrain | None = None
    start_time: float = DEFAULT_START_TIME

    def __post_init__(self):
        if self.duration_s <= 0:
            raise ValueError("duration must be > 0")
        if not (self.chop_rate_hz < self.sample_rate_hz / 4.0):
            raise ValueError("chop rate must be below a quarter of the sample rate")
        if self.n_channels < 1:
            raise ValueError("need at least one channel")
        if self.noise_net_mk_rts < 0:
            raise ValueError("injected NET must be >= 0")

    @property
    def channel_names(self) -> tuple[str, ...]:
        return tuple(f"ch_{i:02d}" for i in range(self.n_channels))

    def noise_sigma_v(self) -> float:
        """Per-sample voltage noise realizing the injected NET.

        The injected NET is the post-demodulation equivalent: differencing
        two half-cycle means doubles the raw per-sample NET, so
        sigma = K_v (NET/2) sqrt(f_s).
        """
        net_k = self.noise_net_mk_rts / 1e3
        return self.chain.volts_per_kelvin * 0.5 * net_k * math.sqrt(self.sample_rate_hz)


@dataclass(frozen=True)
class TruthSidecar:
    """Per-sample ground truth: phase, glitch indicator, scene temperature,
    and the deterministic (noise-free) voltage common to all channels."""

    times: np.ndarray = field(repr=False)
    phase: np.ndarray = field(repr=False)
    glitch: np.ndarray = field(repr=False)
    scene_temp_k: np.ndarray = field(repr=False)
    noiseless_v: np.ndarray = field(repr=False)


def glitch_start_indices(scenario: Scenario) -> np.ndarray:
    """Deterministic sample indices where glitch events begin."""
    if scenario.glitches is None:
        return np.empty(0, dtype=int)
    n = int(round(scenario.duration_s * scenario.sample_rate_hz))
    stride = int(round(scenario.glitches.period_s * scenario.sample_rate_hz))
    first = stride
    last = n - scenario.glitches.width_samples
    if stride <= 0 or first > last:
        return np.empty(0, dtype=int)
    return np.arange(first, last + 1, stride)


def generate(scenario: Scenario) -> tuple[Timestream, TruthSidecar]:
    """Synthesize the timestream and its ground-truth sidecar."""
    fs = scenario.sample_rate_hz
    n = int(round(scenario.duration_s * fs))
    t_rel = np.arange(n) / fs
    times = scenario.start_time + t_rel

    half_cycles = np.floor(t_rel * (2.0 * scenario.chop_rate_hz)).astype(np.int64)
    phase = np.where(half_cycles % 2 == 0, SCENE, REFERENCE).astype(np.int8)

    scene_k = scenario.scene.evaluate(t_rel, scenario.duration_s)
    ref_k = scenario.t_ref_k + scenario.t_ref_drift_k_per_s * t_rel
    looking_at_k = np.where(phase == SCENE, scene_k, ref_k)

    k_v = scenario.chain.volts_per_kelvin
    glitch_v = np.zeros(n)
    glitch_flag = np.zeros(n, dtype=bool)
    if scenario.glitches is not None:
        width = scenario.glitches.width_samples
        for start in glitch_start_indices(scenario):
            glitch_v[start:start + width] += scenario.glitches.depth_v
            glitch_flag[start:start + width] = True

    noiseless = k_v * looking_at_k + scenario.drift_v_per_s * t_rel + glitch_v

    rng = np.random.default_rng(scenario.seed)
    sigma = scenario.noise_sigma_v()
    noise = rng.normal(0.0, sigma, size=(n, scenario.n_channels)) if sigma > 0 \
        else np.zeros((n, scenario.n_channels))
    volts = noiseless[:, None] + noise

    ts = Timestream(
        times=times,
        volts=volts,
        channel_names=scenario.channel_names,
        phase=phase,
        ref_temp_k=ref_k,
        mask=np.ones(n, dtype=bool),
        sample_rate_hz=fs,
    )
    sidecar = TruthSidecar(times=times, phase=phase, glitch=glitch_flag,
                           scene_temp_k=scene_k, noiseless_v=noiseless)
    return ts, sidecar


def write_timestream(ts: Timestream, sidecar: TruthSidecar, out_dir) -> tuple[Path, Path]:
    """Emit timestream.csv (the pipeline input contract) and truth.csv."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    chopper = np.where(ts.phase == SCENE, CHOPPER_SCENE_COUNTS,
                       CHOPPER_REFERENCE_COUNTS)

    data = {"unix_time_s": ts.times, "chopper_pos": chopper,
            "ref_temp_k": ts.ref_temp_k}
    for j, name in enumerate(ts.channel_names):
        data[name] = ts.volts[:, j]
    data_path = out / "timestream.csv"
    atomic_write_csv(pd.DataFrame(data), data_path)

    truth = pd.DataFrame({
        "unix_time_s": sidecar.times,
        "phase": sidecar.phase.astype(int),
        "glitch": sidecar.glitch.astype(int),
        "scene_temp_k": sidecar.scene_temp_k,
        "noiseless_v": sidecar.noiseless_v,
    })
    truth_path = out / "truth.csv"
    atomic_write_csv(truth, truth_path)
    return data_path, truth_path
