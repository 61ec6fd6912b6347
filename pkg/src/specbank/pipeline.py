"""Flight-data reduction: load, deglitch, demodulate, calibrate, report.

The deglitcher works on the cross-channel voltage sum (glitches are
in-phase across channels) with a robust median/MAD threshold and masks a
small buffer around each flagged run. Demodulation pairs each contiguous
scene segment with the following reference segment and differences the
phase means, which cancels common-mode offsets and, to first order,
linear gain drift.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd

from .errors import PipelineError, TimestreamError
from .radiometry import CalibrationTable, net_from_samples

log = logging.getLogger(__name__)

SCENE = 0
REFERENCE = 1

MAD_TO_SIGMA = 1.4826

REQUIRED_COLUMNS = ("unix_time_s", "chopper_pos", "ref_temp_k")


@dataclass(frozen=True)
class Timestream:
    """Timestamped multi-channel detector voltages with chopper phase,
    reference-load temperature, and a validity mask (True = valid)."""

    times: np.ndarray = field(repr=False)
    volts: np.ndarray = field(repr=False)
    channel_names: tuple[str, ...]
    phase: np.ndarray = field(repr=False)
    ref_temp_k: np.ndarray = field(repr=False)
    mask: np.ndarray = field(repr=False)
    sample_rate_hz: float
    rate_warning: bool = False

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.volts, dtype=float)
        ph = np.asarray(self.phase, dtype=np.int8)
        rt = np.asarray(self.ref_temp_k, dtype=float)
        mk = np.asarray(self.mask, dtype=bool)
        n = t.size
        if n < 1:
            raise ValueError("timestream must have at least one sample")
        if v.shape != (n, len(self.channel_names)):
            raise ValueError("volts must be (n_samples, n_channels)")
        if ph.shape != (n,) or rt.shape != (n,) or mk.shape != (n,):
            raise ValueError("per-sample series must all have the same length")
        if n > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("timestamps must be strictly increasing")
        if self.sample_rate_hz <= 0:
            raise ValueError("sample rate must be > 0")
        for name, arr in (("times", t), ("volts", v), ("phase", ph),
                          ("ref_temp_k", rt), ("mask", mk)):
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "channel_names", tuple(self.channel_names))

    @property
    def n_samples(self) -> int:
        return self.times.size

    @property
    def n_channels(self) -> int:
        return len(self.channel_names)

    @property
    def masked_fraction(self) -> float:
        return 1.0 - float(np.mean(self.mask))


def load_timestream(path, *, chopper_threshold: float = 500.0,
                    scene_when_high: bool = True,
                    sample_rate_hz: float | None = None) -> Timestream:
    """Read the CSV contract: unix_time_s, chopper_pos, ref_temp_k, ch_**.

    The chopper position column is binarized at the threshold. Hard
    errors (missing column, NaN voltage, non-monotonic time) name the
    1-based file row, counting the header.
    """
    try:
        frame = pd.read_csv(path, dtype=float, float_precision="round_trip")
    except ValueError as exc:
        raise TimestreamError(f"{path}: non-numeric data ({exc})") from None
    for col in REQUIRED_COLUMNS:
        if col not in frame.columns:
            raise TimestreamError(f"{path}: missing required column {col!r}")
    channels = [c for c in frame.columns if c.startswith("ch_")]
    if not channels:
        raise TimestreamError(f"{path}: no channel columns (ch_*)")
    if len(frame) == 0:
        raise TimestreamError(f"{path}: no data rows")

    def first_bad_row(bad: np.ndarray) -> int:
        return int(np.flatnonzero(bad)[0]) + 2  # +1 header, +1 one-based

    values = frame[list(REQUIRED_COLUMNS) + channels].to_numpy()
    nan_rows = ~np.isfinite(values).all(axis=1)
    if nan_rows.any():
        raise TimestreamError("non-finite value", row=first_bad_row(nan_rows))

    t = frame["unix_time_s"].to_numpy()
    if t.size > 1:
        non_increasing = np.diff(t) <= 0
        if non_increasing.any():
            raise TimestreamError("timestamp not strictly increasing",
                                  row=first_bad_row(non_increasing) + 1)

    if sample_rate_hz is None:
        if t.size > 1:
            sample_rate_hz = 1.0 / float(np.median(np.diff(t)))
        else:
            sample_rate_hz = 1.0
    rate_warning = False
    if t.size > 1:
        median_dt = float(np.median(np.diff(t)))
        rate_warning = abs(median_dt - 1.0 / sample_rate_hz) > 0.1 / sample_rate_hz
        if rate_warning:
            log.warning("median sample interval %.6g s is >10%% off the declared "
                        "rate %.6g Hz", median_dt, sample_rate_hz)

    high = frame["chopper_pos"].to_numpy() >= chopper_threshold
    scene = high if scene_when_high else ~high
    phase = np.where(scene, SCENE, REFERENCE).astype(np.int8)

    return Timestream(
        times=t,
        volts=frame[channels].to_numpy(),
        channel_names=tuple(channels),
        phase=phase,
        ref_temp_k=frame["ref_temp_k"].to_numpy(),
        mask=np.ones(t.size, dtype=bool),
        sample_rate_hz=float(sample_rate_hz),
        rate_warning=rate_warning,
    )


@dataclass(frozen=True)
class GlitchReport:
    """Flagged sample intervals (half-open, buffered) and their peak
    deviations in robust-sigma units."""

    intervals: tuple[tuple[int, int], ...]
    peak_deviation: tuple[float, ...]
    fraction_flagged: float
    threshold_sigma: float
    robust_sigma_v: float
    fallback_used: bool = False


def _runs(flags: np.ndarray):
    """(start, stop) half-open runs of True."""
    padded = np.concatenate(([False], flags, [False])).astype(np.int8)
    edges = np.flatnonzero(np.diff(padded))
    return list(zip(edges[::2], edges[1::2]))


def deglitch(ts: Timestream, k: float = 6.0, buffer: int = 3,
             abs_floor: float = 0.0) -> tuple[Timestream, GlitchReport]:
    """Flag RFI spikes on the summed-channel diagnostic and mask them.

    The diagnostic d(t) = sum of channel voltages is compared against its
    median over currently-valid samples; |d - med| > k * 1.4826 * MAD
    flags a sample, each flagged run is widened by ``buffer`` samples on
    both sides, and the widened runs are masked. Voltages are untouched
    (mask-only) and the mask is never cleared, so the operation is
    monotone and idempotent on its own output.

    If the MAD is zero while values still differ (pathological streams),
    the threshold falls back to |d - med| > abs_floor and the report says
    so.
    """
    if buffer < 0:
        raise ValueError("buffer must be >= 0")
    valid = ts.mask
    if int(valid.sum()) < 16:
        raise ValueError("need at least 16 valid samples for a usable median/MAD")

    diag = ts.volts.sum(axis=1)
    med = float(np.median(diag[valid]))
    mad = float(np.median(np.abs(diag[valid] - med)))
    sigma = MAD_TO_SIGMA * mad
    dev = np.abs(diag - med)

    fallback = False
    if sigma == 0.0:
        if np.all(dev[valid] == 0.0):
            core = np.zeros(ts.n_samples, dtype=bool)
        else:
            fallback = True
            core = valid & (dev > abs_floor)
            log.warning("deglitch MAD is zero with nonconstant extremes; "
                        "falling back to absolute floor %.3g V", abs_floor)
    else:
        core = valid & (dev > k * sigma)

    flagged = np.zeros(ts.n_samples, dtype=bool)
    intervals = []
    peaks = []
    for start, stop in _runs(core):
        lo = max(0, int(start) - buffer)
        hi = min(ts.n_samples, int(stop) + buffer)
        if intervals and lo <= intervals[-1][1]:
            prev_lo, _ = intervals.pop()
            peaks.pop()
            lo = prev_lo
        intervals.append((lo, hi))
        scale = sigma if sigma > 0 else np.inf
        peaks.append(float(dev[lo:hi].max() / scale) if sigma > 0 else np.inf)
        flagged[lo:hi] = True

    report = GlitchReport(
        intervals=tuple(intervals),
        peak_deviation=tuple(peaks),
        fraction_flagged=float(np.mean(flagged)),
        threshold_sigma=k,
        robust_sigma_v=sigma,
        fallback_used=fallback,
    )
    return replace(ts, mask=ts.mask & ~flagged), report


@dataclass(frozen=True)
class Demodulated:
    """Per-cycle scene-minus-reference voltage differences."""

    times: np.ndarray = field(repr=False)
    delta_v: np.ndarray = field(repr=False)        # (n_cycles, n_channels)
    t_ref_k: np.ndarray = field(repr=False)
    channel_names: tuple[str, ...]
    n_candidate_cycles: int
    diagnostic: str = ""

    @property
    def n_cycles(self) -> int:
        return self.times.size

    @property
    def cycle_yield(self) -> float:
        if self.n_candidate_cycles == 0:
            return 0.0
        return self.n_cycles / self.n_candidate_cycles

    @property
    def cycle_rate_hz(self) -> float | None:
        if self.n_cycles < 2:
            return None
        return (self.n_cycles - 1) / float(self.times[-1] - self.times[0])


def demodulate(ts: Timestream, min_phase_samples: int = 2,
               max_masked_fraction: float = 0.25) -> Demodulated:
    """Difference the mean scene and reference voltages within each chop
    cycle (one contiguous scene run followed by one reference run).

    Edge runs truncated by the stream boundaries are dropped. A cycle is
    dropped when either phase has fewer than ``min_phase_samples`` valid
    samples or the cycle's masked fraction exceeds the threshold. Cycle
    timestamps are the midpoint of the cycle span.
    """
    n = ts.n_samples
    edges = np.flatnonzero(np.diff(ts.phase)) + 1
    all_starts = np.concatenate(([0], edges))
    all_stops = np.concatenate((edges, [n]))

    # reduceat covers every run; edge runs (unknown true extent) are then
    # dropped by slicing the interior
    masked_v = np.where(ts.mask[:, None], ts.volts, 0.0)
    sums = np.add.reduceat(masked_v, all_starts, axis=0)
    counts = np.add.reduceat(ts.mask.astype(np.int64), all_starts)
    trefs = np.add.reduceat(ts.ref_temp_k, all_starts) / (all_stops - all_starts)

    keep = slice(1, len(all_starts) - 1)
    starts, stops = all_starts[keep], all_stops[keep]
    run_phase = ts.phase[starts] if starts.size else np.empty(0, dtype=np.int8)
    run_sum, run_count = sums[keep], counts[keep]
    run_total = stops - starts
    run_tref = trefs[keep]

    if len(starts) == 0:
        return Demodulated(times=np.empty(0), delta_v=np.empty((0, ts.n_channels)),
                           t_ref_k=np.empty(0), channel_names=ts.channel_names,
                           n_candidate_cycles=0,
                           diagnostic="no complete chop cycles in stream")

    pair_idx = [k for k in range(len(starts) - 1)
                if run_phase[k] == SCENE and run_phase[k + 1] == REFERENCE]
    n_candidates = len(pair_idx)
    if n_candidates == 0:
        return Demodulated(times=np.empty(0), delta_v=np.empty((0, ts.n_channels)),
                           t_ref_k=np.empty(0), channel_names=ts.channel_names,
                           n_candidate_cycles=0,
                           diagnostic="chopper phase never completes a scene+reference cycle")

    pair_idx = np.asarray(pair_idx)
    ns = run_count[pair_idx]
    nr = run_count[pair_idx + 1]
    total = run_total[pair_idx] + run_total[pair_idx + 1]
    masked_frac = 1.0 - (ns + nr) / total
    ok = (ns >= min_phase_samples) & (nr >= min_phase_samples) & \
         (masked_frac <= max_masked_fraction)
    kept = pair_idx[ok]

    if kept.size == 0:
        return Demodulated(times=np.empty(0), delta_v=np.empty((0, ts.n_channels)),
                           t_ref_k=np.empty(0), channel_names=ts.channel_names,
                           n_candidate_cycles=n_candidates,
                           diagnostic="all cycles dropped by validity thresholds")

    with np.errstate(invalid="ignore"):
        scene_mean = run_sum[kept] / run_count[kept, None]
        ref_mean = run_sum[kept + 1] / run_count[kept + 1, None]
    delta_v = scene_mean - ref_mean
    t_start = ts.times[starts[kept]]
    t_stop = ts.times[stops[kept + 1] - 1]
    cycle_times = 0.5 * (t_start + t_stop)
    t_ref = 0.5 * (run_tref[kept] + run_tref[kept + 1])

    return Demodulated(times=cycle_times, delta_v=delta_v, t_ref_k=t_ref,
                       channel_names=ts.channel_names,
                       n_candidate_cycles=n_candidates)


@dataclass(frozen=True)
class Calibrated:
    """Per-cycle brightness temperatures for enabled channels."""

    times: np.ndarray = field(repr=False)
    temps_k: dict[str, np.ndarray] = field(repr=False)
    skipped_channels: tuple[str, ...] = ()


def calibrate(demod: Demodulated, cal: CalibrationTable) -> Calibrated:
    """Brightness temperature T_i = (293 - 77) V_i / R_i + T_ref per cycle.

    Channels disabled in the calibration table are omitted with a notice.
    """
    temps: dict[str, np.ndarray] = {}
    skipped = []
    for j, name in enumerate(demod.channel_names):
        if name not in cal.channel_names:
            raise ValueError(f"calibration table has no entry for channel {name!r}")
        if not cal.is_enabled(name):
            skipped.append(name)
            log.info("channel %s disabled in calibration; omitted", name)
            continue
        r = cal.responsivity_for(name)
        temps[name] = cal.contrast_k * demod.delta_v[:, j] / r + demod.t_ref_k
    return Calibrated(times=demod.times, temps_k=temps,
                      skipped_channels=tuple(skipped))


def quality_report(calibrated: Calibrated, demod: Demodulated,
                   ts: Timestream) -> dict:
    """Per-channel NET (at the achieved cycle rate), masked fraction, and
    cycle yield, plus stream-level context."""
    rate = demod.cycle_rate_hz
    channels = {}
    for name in ts.channel_names:
        series = calibrated.temps_k.get(name)
        entry = {
            "masked_fraction": ts.masked_fraction,
            "cycle_yield": demod.cycle_yield if series is not None else 0.0,
            "n_cycles": int(series.size) if series is not None else 0,
            "net_mk_rts": None,
        }
        if series is not None and series.size >= 2 and rate:
            entry["net_mk_rts"] = net_from_samples(series, rate)
        channels[name] = entry
    return {
        "channels": channels,
        "n_candidate_cycles": demod.n_candidate_cycles,
        "cycle_rate_hz": rate,
        "sample_rate_hz": ts.sample_rate_hz,
        "rate_warning": ts.rate_warning,
    }
