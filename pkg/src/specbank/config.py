"""JSON configuration loading with strict schema checking.

Configs are versioned; unknown keys are rejected in strict mode (the
default) or warned about with ``lenient=True``. Parse errors carry the
line and column from the JSON decoder.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .grid import FrequencyGrid
from .radiometry import CalibrationTable, RadiometerChain
from .synth import GlitchTrain, Scenario, SceneProfile
from .waveguide import DEFAULT_CONDUCTIVITY, WaveguideSpec, standard_guide

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1


def load_json(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror or exc}") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return obj


def _check_keys(obj: dict, required: set[str], optional: set[str],
                where: str, lenient: bool) -> None:
    missing = required - obj.keys()
    if missing:
        raise ConfigError(f"{where}: missing keys {sorted(missing)}")
    unknown = obj.keys() - required - optional
    if unknown:
        if lenient:
            log.warning("%s: ignoring unknown keys %s", where, sorted(unknown))
        else:
            raise ConfigError(f"{where}: unknown keys {sorted(unknown)} "
                              f"(pass lenient mode to ignore)")


def _check_version(obj: dict, where: str) -> None:
    version = obj.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"{where}: schema_version must be {SCHEMA_VERSION}, "
                          f"got {version!r}")


def _number(obj: dict, key: str, where: str, *, optional=False, default=None):
    if key not in obj:
        if optional:
            return default
        raise ConfigError(f"{where}: missing {key!r}")
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: {key!r} must be a number")
    return float(value)


# --- band (filter-bank design) config --------------------------------------

@dataclass(frozen=True)
class BandConfig:
    name: str
    guide: WaveguideSpec
    channels: tuple[tuple[float, float], ...]   # (f0_hz, hpbw_hz)
    grid: FrequencyGrid
    spacing_multipliers: tuple[float, ...] | None


def _parse_guide(obj, conductivity, where: str) -> WaveguideSpec:
    if isinstance(obj, str):
        try:
            return standard_guide(obj, conductivity)
        except KeyError as exc:
            raise ConfigError(f"{where}: {exc.args[0]}") from None
    if isinstance(obj, dict):
        _check_keys(obj, {"name", "width_a_m", "height_b_m"}, set(), where, lenient=False)
        return WaveguideSpec(
            name=str(obj["name"]),
            width_a=_number(obj, "width_a_m", where),
            height_b=_number(obj, "height_b_m", where),
            conductivity=conductivity,
        )
    raise ConfigError(f"{where}: guide must be a catalog name or an object")


def load_band_config(path, lenient: bool = False) -> BandConfig:
    obj = load_json(path)
    where = str(path)
    _check_version(obj, where)
    _check_keys(obj, {"schema_version", "name", "guide", "channels", "grid"},
                {"conductivity_s_per_m", "spacing_multipliers"}, where, lenient)

    conductivity = DEFAULT_CONDUCTIVITY
    if "conductivity_s_per_m" in obj:
        raw = obj["conductivity_s_per_m"]
        conductivity = None if raw is None else _number(obj, "conductivity_s_per_m", where)
    guide = _parse_guide(obj["guide"], conductivity, where)

    if not isinstance(obj["channels"], list) or not obj["channels"]:
        raise ConfigError(f"{where}: channels must be a non-empty list")
    channels = []
    for i, ch in enumerate(obj["channels"]):
        ctx = f"{where}: channels[{i}]"
        if not isinstance(ch, dict):
            raise ConfigError(f"{ctx}: must be an object")
        _check_keys(ch, {"f0_ghz", "hpbw_ghz"}, set(), ctx, lenient)
        channels.append((_number(ch, "f0_ghz", ctx) * 1e9,
                         _number(ch, "hpbw_ghz", ctx) * 1e9))

    g = obj["grid"]
    ctx = f"{where}: grid"
    if not isinstance(g, dict):
        raise ConfigError(f"{ctx}: must be an object")
    _check_keys(g, {"start_ghz", "stop_ghz", "points"}, set(), ctx, lenient)
    points = g["points"]
    if not isinstance(points, int) or points < 2:
        raise ConfigError(f"{ctx}: points must be an integer >= 2")
    grid = FrequencyGrid.from_ghz(_number(g, "start_ghz", ctx),
                                  _number(g, "stop_ghz", ctx), points)

    multipliers = None
    if "spacing_multipliers" in obj:
        raw = obj["spacing_multipliers"]
        if not isinstance(raw, list) or not raw:
            raise ConfigError(f"{where}: spacing_multipliers must be a non-empty list")
        multipliers = tuple(float(m) for m in raw)

    return BandConfig(name=str(obj["name"]), guide=guide, channels=tuple(channels),
                      grid=grid, spacing_multipliers=multipliers)


# --- radiometer chain config ------------------------------------------------

_CHAIN_REQUIRED = {
    "schema_version", "band", "rf_gain_db", "noise_figure_db",
    "optical_efficiency", "bandwidth_hz", "detector_responsivity_v_per_w",
    "detector_nep_w_per_rthz", "audio_gain_db", "audio_input_noise_v_per_rthz",
}
_CHAIN_OPTIONAL = {
    "front_loss_db", "adc_bits", "adc_fullscale_v", "adc_sample_rate_hz",
    "dicke_factor", "t_scene_k",
}


def _chain_from_dict(obj: dict, where: str, lenient: bool) -> RadiometerChain:
    _check_keys(obj, _CHAIN_REQUIRED - {"schema_version"} if "schema_version" not in obj
                else _CHAIN_REQUIRED, _CHAIN_OPTIONAL, where, lenient)
    adc_bits = obj.get("adc_bits", 18)
    if not isinstance(adc_bits, int):
        raise ConfigError(f"{where}: adc_bits must be an integer")
    try:
        return RadiometerChain(
            band=str(obj["band"]),
            rf_gain_db=_number(obj, "rf_gain_db", where),
            noise_figure_db=_number(obj, "noise_figure_db", where),
            optical_efficiency=_number(obj, "optical_efficiency", where),
            bandwidth_hz=_number(obj, "bandwidth_hz", where),
            detector_responsivity_v_per_w=_number(obj, "detector_responsivity_v_per_w", where),
            detector_nep_w_per_rthz=_number(obj, "detector_nep_w_per_rthz", where),
            audio_gain_db=_number(obj, "audio_gain_db", where),
            audio_input_noise_v_per_rthz=_number(obj, "audio_input_noise_v_per_rthz", where),
            front_loss_db=_number(obj, "front_loss_db", where, optional=True, default=0.0),
            adc_bits=adc_bits,
            adc_fullscale_v=_number(obj, "adc_fullscale_v", where, optional=True, default=20.0),
            adc_sample_rate_hz=_number(obj, "adc_sample_rate_hz", where,
                                       optional=True, default=1e6),
            dicke_factor=_number(obj, "dicke_factor", where, optional=True, default=1.0),
        )
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def load_chain_config(path, lenient: bool = False) -> tuple[RadiometerChain, float]:
    """Returns (chain, scene temperature for budgeting)."""
    obj = load_json(path)
    where = str(path)
    _check_version(obj, where)
    chain = _chain_from_dict(obj, where, lenient)
    t_scene = _number(obj, "t_scene_k", where, optional=True, default=290.0)
    return chain, t_scene


# --- synthetic scenario config ----------------------------------------------

def _parse_scene(obj, where: str, lenient: bool) -> SceneProfile:
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ConfigError(f"{where}: scene must be an object with a 'kind'")
    kind = obj["kind"]
    try:
        if kind == "constant":
            _check_keys(obj, {"kind", "value_k"}, set(), where, lenient)
            return SceneProfile.constant(_number(obj, "value_k", where))
        if kind == "ramp":
            _check_keys(obj, {"kind", "start_k", "end_k"}, set(), where, lenient)
            return SceneProfile.ramp(_number(obj, "start_k", where),
                                     _number(obj, "end_k", where))
        if kind == "piecewise":
            _check_keys(obj, {"kind", "times_s", "values_k"}, set(), where, lenient)
            return SceneProfile.piecewise(obj["times_s"], obj["values_k"])
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None
    raise ConfigError(f"{where}: unknown scene kind {kind!r}")


def load_scenario_config(path, lenient: bool = False) -> Scenario:
    obj = load_json(path)
    where = str(path)
    _check_version(obj, where)
    _check_keys(
        obj,
        {"schema_version", "duration_s", "chain", "scene", "t_ref_k", "seed"},
        {"sample_rate_hz", "chop_rate_hz", "t_ref_drift_k_per_s", "n_channels",
         "noise_net_mk_rts", "drift_v_per_s", "glitches", "start_time"},
        where, lenient)
    if not isinstance(obj["chain"], dict):
        raise ConfigError(f"{where}: chain must be an object")
    chain = _chain_from_dict(obj["chain"], f"{where}: chain", lenient)
    scene = _parse_scene(obj["scene"], f"{where}: scene", lenient)

    glitches = None
    if obj.get("glitches") is not None:
        g = obj["glitches"]
        ctx = f"{where}: glitches"
        if not isinstance(g, dict):
            raise ConfigError(f"{ctx}: must be an object or null")
        _check_keys(g, {"period_s", "width_samples", "depth_v"}, set(), ctx, lenient)
        width = g["width_samples"]
        if not isinstance(width, int):
            raise ConfigError(f"{ctx}: width_samples must be an integer")
        try:
            glitches = GlitchTrain(period_s=_number(g, "period_s", ctx),
                                   width_samples=width,
                                   depth_v=_number(g, "depth_v", ctx))
        except ValueError as exc:
            raise ConfigError(f"{ctx}: {exc}") from None

    seed = obj["seed"]
    if not isinstance(seed, int):
        raise ConfigError(f"{where}: seed must be an integer")
    n_channels = obj.get("n_channels", 6)
    if not isinstance(n_channels, int):
        raise ConfigError(f"{where}: n_channels must be an integer")

    try:
        return Scenario(
            duration_s=_number(obj, "duration_s", where),
            chain=chain,
            scene=scene,
            t_ref_k=_number(obj, "t_ref_k", where),
            seed=seed,
            sample_rate_hz=_number(obj, "sample_rate_hz", where, optional=True, default=200.0),
            chop_rate_hz=_number(obj, "chop_rate_hz", where, optional=True, default=17.0),
            t_ref_drift_k_per_s=_number(obj, "t_ref_drift_k_per_s", where,
                                        optional=True, default=0.0),
            n_channels=n_channels,
            noise_net_mk_rts=_number(obj, "noise_net_mk_rts", where, optional=True, default=0.0),
            drift_v_per_s=_number(obj, "drift_v_per_s", where, optional=True, default=0.0),
            glitches=glitches,
            start_time=_number(obj, "start_time", where, optional=True,
                               default=1_725_000_000.0),
        )
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


# --- pipeline processing config ---------------------------------------------

@dataclass(frozen=True)
class PipelineConfig:
    chopper_threshold: float = 500.0
    scene_when_high: bool = True
    sample_rate_hz: float | None = None
    k_mad: float = 6.0
    buffer_samples: int = 3
    abs_floor_v: float = 0.0
    min_phase_samples: int = 2
    max_masked_fraction: float = 0.25
    detector_strategy: str = "summed_median_mad"


def load_pipeline_config(path, lenient: bool = False) -> PipelineConfig:
    obj = load_json(path)
    where = str(path)
    _check_version(obj, where)
    _check_keys(obj, {"schema_version"},
                {"chopper_threshold", "scene_when_high", "sample_rate_hz",
                 "deglitch", "demodulate", "detector_strategy"}, where, lenient)
    kwargs = {}
    if "chopper_threshold" in obj:
        kwargs["chopper_threshold"] = _number(obj, "chopper_threshold", where)
    if "scene_when_high" in obj:
        if not isinstance(obj["scene_when_high"], bool):
            raise ConfigError(f"{where}: scene_when_high must be a boolean")
        kwargs["scene_when_high"] = obj["scene_when_high"]
    if obj.get("sample_rate_hz") is not None:
        kwargs["sample_rate_hz"] = _number(obj, "sample_rate_hz", where)
    strategy = obj.get("detector_strategy", "summed_median_mad")
    if strategy != "summed_median_mad":
        raise ConfigError(f"{where}: only the 'summed_median_mad' glitch detector "
                          f"is implemented (got {strategy!r})")
    if "deglitch" in obj:
        d = obj["deglitch"]
        ctx = f"{where}: deglitch"
        if not isinstance(d, dict):
            raise ConfigError(f"{ctx}: must be an object")
        _check_keys(d, set(), {"k_mad", "buffer_samples", "abs_floor_v"}, ctx, lenient)
        if "k_mad" in d:
            kwargs["k_mad"] = _number(d, "k_mad", ctx)
        if "buffer_samples" in d:
            if not isinstance(d["buffer_samples"], int) or d["buffer_samples"] < 0:
                raise ConfigError(f"{ctx}: buffer_samples must be an integer >= 0")
            kwargs["buffer_samples"] = d["buffer_samples"]
        if "abs_floor_v" in d:
            kwargs["abs_floor_v"] = _number(d, "abs_floor_v", ctx)
    if "demodulate" in obj:
        d = obj["demodulate"]
        ctx = f"{where}: demodulate"
        if not isinstance(d, dict):
            raise ConfigError(f"{ctx}: must be an object")
        _check_keys(d, set(), {"min_phase_samples", "max_masked_fraction"}, ctx, lenient)
        if "min_phase_samples" in d:
            if not isinstance(d["min_phase_samples"], int) or d["min_phase_samples"] < 1:
                raise ConfigError(f"{ctx}: min_phase_samples must be an integer >= 1")
            kwargs["min_phase_samples"] = d["min_phase_samples"]
        if "max_masked_fraction" in d:
            kwargs["max_masked_fraction"] = _number(d, "max_masked_fraction", ctx)
    return PipelineConfig(**kwargs)


# --- calibration table (de)serialization ------------------------------------

def load_calibration(path, lenient: bool = False) -> CalibrationTable:
    obj = load_json(path)
    where = str(path)
    _check_version(obj, where)
    _check_keys(obj, {"schema_version", "responsivity_v"},
                {"band", "date", "t_hot_k", "t_cold_k", "disabled"}, where, lenient)
    resp = obj["responsivity_v"]
    if not isinstance(resp, dict) or not resp:
        raise ConfigError(f"{where}: responsivity_v must map channel names to volts")
    names = tuple(sorted(resp))
    values = []
    for name in names:
        v = resp[name]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{where}: responsivity_v[{name!r}] must be a number")
        values.append(float(v))
    disabled = set(obj.get("disabled", []))
    unknown = disabled - set(names)
    if unknown:
        raise ConfigError(f"{where}: disabled lists unknown channels {sorted(unknown)}")
    enabled = np.array([name not in disabled and values[i] != 0.0
                        for i, name in enumerate(names)])
    try:
        return CalibrationTable(
            channel_names=names,
            responsivity_v=np.asarray(values),
            enabled=enabled,
            t_hot_k=_number(obj, "t_hot_k", where, optional=True, default=293.0),
            t_cold_k=_number(obj, "t_cold_k", where, optional=True, default=77.0),
            band=str(obj.get("band", "")),
            date=str(obj.get("date", "")),
        )
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def calibration_to_dict(cal: CalibrationTable) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "band": cal.band,
        "date": cal.date,
        "t_hot_k": cal.t_hot_k,
        "t_cold_k": cal.t_cold_k,
        "responsivity_v": {name: float(cal.responsivity_v[i])
                           for i, name in enumerate(cal.channel_names)},
        "disabled": [name for i, name in enumerate(cal.channel_names)
                     if not cal.enabled[i]],
    }
