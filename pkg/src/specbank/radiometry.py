"""Radiometer sensitivity limits, chain noise budget, and two-point
hot/cold calibration.

All noise-equivalent temperatures are reported in mK sqrt(s), i.e. the
equivalent white-noise level at 1 s integration / 1 Hz sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import K_B, T_REF_NOISE

T_HOT_K = 293.0   # room-temperature load
T_COLD_K = 77.0   # liquid-nitrogen load

# Channels whose hot-cold voltage contrast falls below this are disabled.
RESPONSIVITY_FLOOR_V = 1e-12

BUDGET_SOURCES = ("radiometric", "detector", "audio_amp", "adc_quantization")


@dataclass(frozen=True)
class RadiometerChain:
    """Gain, noise, and readout parameters of one band's receiver chain.

    Scalar, band-integrated quantities per channel: the frequency shape of
    the RF gain is folded into ``optical_efficiency`` x ``rf_gain_db``.
    ``adc_fullscale_v`` is the total input span (20 V means +-10 V) and
    ``adc_sample_rate_hz`` the converter rate used to spread quantization
    noise into a spectral density.
    """

    band: str
    rf_gain_db: float
    noise_figure_db: float
    optical_efficiency: float
    bandwidth_hz: float
    detector_responsivity_v_per_w: float
    detector_nep_w_per_rthz: float
    audio_gain_db: float
    audio_input_noise_v_per_rthz: float
    front_loss_db: float = 0.0
    adc_bits: int = 18
    adc_fullscale_v: float = 20.0
    adc_sample_rate_hz: float = 1e6
    dicke_factor: float = 1.0

    def __post_init__(self):
        for name in ("rf_gain_db", "noise_figure_db", "front_loss_db", "audio_gain_db"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if not (0.0 < self.optical_efficiency <= 1.0):
            raise ValueError("optical_efficiency must be in (0, 1]")
        if self.bandwidth_hz <= 0:
            raise ValueError("bandwidth must be > 0")
        if self.adc_bits < 1:
            raise ValueError("adc_bits must be >= 1")
        if self.dicke_factor < 1.0:
            raise ValueError("dicke_factor must be >= 1")
        if self.detector_responsivity_v_per_w <= 0:
            raise ValueError("detector responsivity must be > 0")
        if self.detector_nep_w_per_rthz < 0 or self.audio_input_noise_v_per_rthz < 0:
            raise ValueError("noise densities must be >= 0")
        if self.adc_sample_rate_hz <= 0 or self.adc_fullscale_v <= 0:
            raise ValueError("ADC rate and fullscale must be > 0")

    @property
    def rf_gain(self) -> float:
        return 10.0 ** (self.rf_gain_db / 10.0)

    @property
    def front_loss(self) -> float:
        return 10.0 ** (self.front_loss_db / 10.0)

    @property
    def audio_voltage_gain(self) -> float:
        return 10.0 ** (self.audio_gain_db / 20.0)

    @property
    def receiver_temperature_k(self) -> float:
        return noise_figure_to_temperature(self.noise_figure_db)

    @property
    def watts_per_kelvin(self) -> float:
        """Detected power slope at the diode, dP/dT of the scene."""
        return (K_B * self.bandwidth_hz * self.rf_gain
                * self.optical_efficiency / self.front_loss)

    @property
    def volts_per_kelvin(self) -> float:
        """End-to-end voltage responsivity at the ADC input."""
        return (self.detector_responsivity_v_per_w * self.watts_per_kelvin
                * self.audio_voltage_gain)

    @property
    def adc_lsb_v(self) -> float:
        return self.adc_fullscale_v / (2 ** self.adc_bits)


def noise_figure_to_temperature(nf_db: float) -> float:
    """Noise temperature T = (10^(NF/10) - 1) * 290 K."""
    if nf_db < 0:
        raise ValueError("noise figure must be >= 0 dB")
    return (10.0 ** (nf_db / 10.0) - 1.0) * T_REF_NOISE


def radiometer_net(t_sys_k: float, bandwidth_hz: float, kappa: float = 1.0) -> float:
    """Radiometer-equation sensitivity NET = kappa T_sys / sqrt(B tau) at
    tau = 1 s, in mK sqrt(s)."""
    if t_sys_k <= 0 or bandwidth_hz <= 0:
        raise ValueError("system temperature and bandwidth must be > 0")
    return 1e3 * kappa * t_sys_k / math.sqrt(bandwidth_hz)


@dataclass(frozen=True)
class NoiseBudget:
    """Per-source NET contributions in mK sqrt(s), quadrature total, and
    the dominant (argmax) source."""

    contributions: dict[str, float]
    total_mk_rts: float
    dominant: str
    t_sys_k: float


def noise_budget(chain: RadiometerChain, t_scene_k: float = 290.0) -> NoiseBudget:
    """Temperature-referred noise budget of the detection chain.

    Every term is a density in mK sqrt(s) = mK/sqrt(Hz):

      radiometric: kappa T_sys / sqrt(B)
      detector:    NEP / (dP/dT)
      audio_amp:   e_n / (R_det dP/dT)
      adc:         (LSB/sqrt(12)) / sqrt(f_adc/2) / (dV/dT)

    The total is the quadrature sum; ``dominant`` is the largest term.
    """
    wpk = chain.watts_per_kelvin
    if wpk <= 0:
        raise ValueError("chain has no power response (check efficiency and gain)")
    t_sys = t_scene_k + chain.receiver_temperature_k

    radiometric = radiometer_net(t_sys, chain.bandwidth_hz, chain.dicke_factor)
    detector = 1e3 * chain.detector_nep_w_per_rthz / wpk
    audio = 1e3 * chain.audio_input_noise_v_per_rthz / (
        chain.detector_responsivity_v_per_w * wpk)
    q_density = (chain.adc_lsb_v / math.sqrt(12.0)) / math.sqrt(
        chain.adc_sample_rate_hz / 2.0)
    adc = 1e3 * q_density / chain.volts_per_kelvin

    terms = {
        "radiometric": radiometric,
        "detector": detector,
        "audio_amp": audio,
        "adc_quantization": adc,
    }
    total = math.sqrt(sum(v * v for v in terms.values()))
    dominant = max(BUDGET_SOURCES, key=lambda k: terms[k])
    return NoiseBudget(contributions=terms, total_mk_rts=total,
                       dominant=dominant, t_sys_k=t_sys)


@dataclass(frozen=True)
class CalibrationTable:
    """Per-channel responsivity from the hot/cold load pair.

    ``responsivity_v[i]`` is the demodulated voltage contrast between the
    hot (293 K) and cold (77 K) loads; channels below the floor are
    disabled rather than calibrated.
    """

    channel_names: tuple[str, ...]
    responsivity_v: np.ndarray = field(repr=False)
    enabled: np.ndarray = field(repr=False)
    t_hot_k: float = T_HOT_K
    t_cold_k: float = T_COLD_K
    band: str = ""
    date: str = ""

    def __post_init__(self):
        r = np.asarray(self.responsivity_v, dtype=float)
        e = np.asarray(self.enabled, dtype=bool)
        if r.shape != (len(self.channel_names),) or e.shape != r.shape:
            raise ValueError("responsivity/enabled must have one entry per channel")
        if self.t_hot_k <= self.t_cold_k:
            raise ValueError("hot load must be warmer than cold load")
        if np.any(e & (r == 0.0)):
            raise ValueError("enabled channels must have nonzero responsivity")
        r = r.copy(); r.setflags(write=False)
        e = e.copy(); e.setflags(write=False)
        object.__setattr__(self, "responsivity_v", r)
        object.__setattr__(self, "enabled", e)
        object.__setattr__(self, "channel_names", tuple(self.channel_names))

    @property
    def contrast_k(self) -> float:
        return self.t_hot_k - self.t_cold_k

    def responsivity_for(self, name: str) -> float:
        return float(self.responsivity_v[self.channel_names.index(name)])

    def is_enabled(self, name: str) -> bool:
        return bool(self.enabled[self.channel_names.index(name)])


def two_point_fit(v_hot, v_cold, channel_names=None, *,
                  floor_v: float = RESPONSIVITY_FLOOR_V,
                  band: str = "", date: str = "") -> CalibrationTable:
    """Fit the per-channel linear response from hot/cold load voltages.

    R_i = v_hot_i - v_cold_i over the 216 K contrast. Degenerate channels
    (|R_i| below the floor) are flagged disabled, not fatal.
    """
    v_hot = np.asarray(v_hot, dtype=float)
    v_cold = np.asarray(v_cold, dtype=float)
    if v_hot.shape != v_cold.shape or v_hot.ndim != 1:
        raise ValueError("v_hot and v_cold must be 1-D and the same length")
    if channel_names is None:
        channel_names = tuple(f"ch_{i:02d}" for i in range(v_hot.size))
    if len(channel_names) != v_hot.size:
        raise ValueError("one channel name per voltage")
    responsivity = v_hot - v_cold
    enabled = np.abs(responsivity) >= floor_v
    return CalibrationTable(channel_names=tuple(channel_names),
                            responsivity_v=responsivity, enabled=enabled,
                            band=band, date=date)


def net_from_samples(values, sample_rate_hz: float) -> float:
    """NET in mK sqrt(s) from a kelvin-valued series: the sample standard
    deviation scaled to the 1 Hz equivalent, std / sqrt(rate).

    Non-finite entries are ignored; fewer than 2 valid samples is an error.
    """
    if sample_rate_hz <= 0:
        raise ValueError("sample rate must be > 0")
    v = np.asarray(values, dtype=float)
    v = v[np.isfinite(v)]
    if v.size < 2:
        raise ValueError("need at least 2 valid samples for a noise estimate")
    return 1e3 * float(np.std(v, ddof=1)) / math.sqrt(sample_rate_hz)
