"""Resonant-cavity channel synthesis and filter-bank assembly.

Each channel is a transmission-line surrogate: an evanescent coupling
section, a half-wave resonant cavity, and a second identical coupling
section, cascaded as transfer matrices and referenced to the main guide's
modal impedance. Channels hang off the main line through an ideal
symmetric shunt tee. Cavity length sets the center frequency, coupling
length sets the bandwidth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .constants import C0
from .errors import BandEdgeError, SynthesisError, UnachievableBandwidthError
from .grid import FrequencyGrid
from .network import ChainLink, SMatrix, cascade_chain, cascade_pair
from .waveguide import (
    CUTOFF_GUARD,
    WaveguideSpec,
    guided_wavelength,
    propagation_constant,
    section_smatrix,
    te10_cutoff,
    wave_impedance,
)

# Coupling-section cutoff sits this factor above the channel center.
NARROW_CUTOFF_FACTOR = 1.5

DEFAULT_SPACING_MULTIPLIERS = tuple(np.arange(1.0, 3.0 + 1e-9, 0.25))


@dataclass(frozen=True)
class ChannelDesign:
    """Synthesized geometry of one resonant-cavity channel filter."""

    f0_target: float
    hpbw_target: float
    main_guide: WaveguideSpec
    narrow_guide: WaveguideSpec
    cavity_guide: WaveguideSpec
    narrow_length: float
    cavity_length: float
    achieved_f0: float | None = None
    achieved_hpbw: float | None = None

    def __post_init__(self):
        fc_n = te10_cutoff(self.narrow_guide)
        want = NARROW_CUTOFF_FACTOR * self.f0_target
        if abs(fc_n - want) > 1e-6 * want:
            raise ValueError(
                f"narrow guide cutoff {fc_n:.6g} Hz is not {NARROW_CUTOFF_FACTOR} x "
                f"the target center {self.f0_target:.6g} Hz"
            )
        if self.narrow_length < 0 or self.cavity_length <= 0:
            raise ValueError("section lengths must be positive (narrow may be 0 for tests)")


def make_narrow_guide(f0: float, main_guide: WaveguideSpec) -> WaveguideSpec:
    """Coupling-section guide: width for cutoff = 1.5 f0, main-guide height."""
    width = C0 / (2.0 * NARROW_CUTOFF_FACTOR * f0)
    return WaveguideSpec(
        name=f"{main_guide.name}-narrow",
        width_a=width,
        height_b=main_guide.height_b,
        conductivity=main_guide.conductivity,
    )


def _abcd_line(spec: WaveguideSpec, length: float, f: np.ndarray, guard: float):
    gamma = propagation_constant(spec, f, guard)
    z = wave_impedance(spec, f, guard)
    gl = gamma * length
    return np.cosh(gl), z * np.sinh(gl), np.sinh(gl) / z, np.cosh(gl)


def _abcd_mul(m1, m2):
    a1, b1, c1, d1 = m1
    a2, b2, c2, d2 = m2
    return (a1 * a2 + b1 * c2, a1 * b2 + b1 * d2,
            c1 * a2 + d1 * c2, c1 * b2 + d1 * d2)


def _channel_sparams(design: ChannelDesign, f: np.ndarray, guard: float):
    """(S11, S21, S12, S22) of narrow-cavity-narrow at frequencies f,
    referenced to the main guide's modal impedance."""
    narrow = _abcd_line(design.narrow_guide, design.narrow_length, f, guard)
    cavity = _abcd_line(design.cavity_guide, design.cavity_length, f, guard)
    a, b, c, d = _abcd_mul(_abcd_mul(narrow, cavity), narrow)
    z0 = wave_impedance(design.main_guide, f, guard)
    delta = a + b / z0 + c * z0 + d
    det = a * d - b * c
    s11 = (a + b / z0 - c * z0 - d) / delta
    s21 = 2.0 / delta
    s12 = 2.0 * det / delta
    s22 = (-a + b / z0 - c * z0 + d) / delta
    return s11, s21, s12, s22


def _single_mode_band(spec: WaveguideSpec) -> tuple[float, float]:
    """Usable sweep range of the main guide, with margin off cutoff and
    off the first higher mode (TE20 or TE01)."""
    fc = te10_cutoff(spec)
    ceiling = min(C0 / spec.width_a, C0 / (2.0 * spec.height_b))
    return fc * 1.02, ceiling * 0.98


def _check_single_mode(spec: WaveguideSpec, grid: FrequencyGrid) -> None:
    lo, hi = _single_mode_band(spec)
    f = grid.points
    if f[0] < lo or f[-1] > hi:
        raise ValueError(
            f"grid [{f[0]:.4g}, {f[-1]:.4g}] Hz leaves the single-mode range "
            f"[{lo:.4g}, {hi:.4g}] Hz of {spec.name}"
        )


def channel_twoport(design: ChannelDesign, grid: FrequencyGrid,
                    guard: float = CUTOFF_GUARD) -> SMatrix:
    """Two-port S-matrix of one channel filter over the grid."""
    _check_single_mode(design.main_guide, grid)
    s11, s21, s12, s22 = _channel_sparams(design, grid.points, guard)
    entries = np.empty((len(grid), 2, 2), dtype=complex)
    entries[:, 0, 0] = s11
    entries[:, 0, 1] = s12
    entries[:, 1, 0] = s21
    entries[:, 1, 1] = s22
    return SMatrix(grid=grid, entries=entries, port_labels=("a", "b"))


def tee_smatrix(grid: FrequencyGrid) -> SMatrix:
    """Ideal lossless symmetric shunt tee: S = (1/3) [[-1,2,2],[2,-1,2],[2,2,-1]]."""
    block = np.full((3, 3), 2.0 / 3.0, dtype=complex)
    np.fill_diagonal(block, -1.0 / 3.0)
    entries = np.broadcast_to(block, (len(grid), 3, 3))
    return SMatrix(grid=grid, entries=entries.copy(),
                   port_labels=("main_in", "main_out", "stub"))


def channel_threeport(design: ChannelDesign, grid: FrequencyGrid,
                      guard: float = CUTOFF_GUARD) -> SMatrix:
    """Three-port channel: shunt tee on the main line with the channel
    two-port cascaded onto the stub arm. Ports: upstream, downstream, tap.
    """
    tee = tee_smatrix(grid)
    two = channel_twoport(design, grid, guard)
    out = cascade_pair(tee, two, 2, 0)
    return out.relabeled(("main_in", "main_out", "tap"))


# --- synthesis -------------------------------------------------------------

class _PeakNotFound(Exception):
    """No interior transmission maximum anywhere in the usable band."""


class _Sweeper:
    """Tracks the channel resonance of a trial geometry.

    Finds the interior |S21|^2 local maximum nearest a tracking frequency,
    refines the peak by bounded scalar minimization, and measures the
    half-power bandwidth with root bracketing. Bandwidth is None when the
    half-power points fall outside the single-mode band.
    """

    def __init__(self, design: ChannelDesign, guard: float):
        self.design = design
        self.guard = guard
        self.flo, self.fhi = _single_mode_band(design.main_guide)

    def power(self, f) -> np.ndarray:
        f = np.atleast_1d(np.asarray(f, dtype=float))
        _, s21, _, _ = _channel_sparams(self.design, f, self.guard)
        return np.abs(s21) ** 2

    def _power_scalar(self, f: float) -> float:
        return float(self.power(np.array([f]))[0])

    def measure(self, f_track: float, bw_hint: float):
        span = 8.0 * bw_hint
        peak_idx = None
        for _ in range(40):
            lo = max(f_track - span, self.flo)
            hi = min(f_track + span, self.fhi)
            f = np.linspace(lo, hi, 801)
            p = self.power(f)
            interior = np.flatnonzero((p[1:-1] > p[:-2]) & (p[1:-1] >= p[2:])) + 1
            if interior.size:
                peak_idx = int(interior[np.argmin(np.abs(f[interior] - f_track))])
                break
            if lo <= self.flo and hi >= self.fhi:
                raise _PeakNotFound
            span *= 2.5
        if peak_idx is None:
            raise _PeakNotFound

        res = minimize_scalar(
            lambda x: -self._power_scalar(x),
            bounds=(f[peak_idx - 1], f[peak_idx + 1]),
            method="bounded",
            options={"xatol": f_track * 1e-10},
        )
        f_peak = float(res.x)
        p_peak = self._power_scalar(f_peak)
        half = 0.5 * p_peak
        dx = f[1] - f[0]

        def crossing(direction: int):
            bound = self.flo if direction < 0 else self.fhi
            x_prev, step = f_peak, dx
            for _ in range(4000):
                x = x_prev + direction * step
                if (direction < 0 and x <= bound) or (direction > 0 and x >= bound):
                    x = bound
                if self._power_scalar(x) < half:
                    lo_, hi_ = (x, x_prev) if direction < 0 else (x_prev, x)
                    return brentq(lambda y: self._power_scalar(y) - half, lo_, hi_, xtol=1.0)
                if x == bound:
                    return None
                x_prev = x
                step *= 1.3
            return None

        lo_x = crossing(-1)
        hi_x = crossing(+1)
        hpbw = None if (lo_x is None or hi_x is None) else (hi_x - lo_x)
        return f_peak, hpbw, p_peak


def _loss_limited_floor(design: ChannelDesign, f0: float, guard: float) -> float:
    """Approximate minimum achievable HPBW from cavity conductor loss,
    hpbw_min ~ f0 / Q_u with Q_u = beta / (2 alpha)."""
    gamma = propagation_constant(design.cavity_guide, f0, guard)
    alpha, beta = gamma.real, gamma.imag
    if alpha <= 0:
        return 0.0
    return f0 * (2.0 * alpha / beta)


def synthesize_channel(f0: float, hpbw: float, main_guide: WaveguideSpec, *,
                       tol_f: float | None = None, tol_bw: float | None = None,
                       max_iterations: int = 100,
                       guard: float = CUTOFF_GUARD) -> ChannelDesign:
    """Find cavity and coupling lengths hitting a center frequency and
    half-power bandwidth.

    Two-variable damped secant on the residuals (peak - f0, hpbw - target)
    against (cavity_length, narrow_length), seeded with a half guided
    wavelength cavity and a quarter evanescent decay length coupling. At
    that seed the coupling is typically so strong that the passband is
    wider than the single-mode band, so a bootstrap first grows the
    coupling length until the bandwidth becomes measurable.
    """
    tol_f = f0 * 1e-4 if tol_f is None else tol_f
    tol_bw = hpbw * 0.05 if tol_bw is None else tol_bw

    flo, fhi = _single_mode_band(main_guide)
    if not (flo < f0 < fhi):
        raise ValueError(
            f"center {f0:.4g} Hz is outside the single-mode band "
            f"[{flo:.4g}, {fhi:.4g}] Hz of {main_guide.name}"
        )
    if hpbw <= 0 or hpbw >= 0.3 * f0:
        raise UnachievableBandwidthError(
            f"half-power bandwidth {hpbw:.4g} Hz is not well below the center "
            f"frequency {f0:.4g} Hz"
        )

    narrow_guide = make_narrow_guide(f0, main_guide)
    cavity_guide = replace(main_guide, name=f"{main_guide.name}-cavity")

    floor = _loss_limited_floor(
        ChannelDesign(f0, hpbw, main_guide, narrow_guide, cavity_guide,
                      narrow_length=1e-6, cavity_length=1e-6),
        f0, guard)
    if hpbw < floor:
        raise UnachievableBandwidthError(
            f"requested HPBW {hpbw:.4g} Hz is below the conductor-loss floor "
            f"~{floor:.4g} Hz of the cavity; the requested resolution is "
            f"loss-limited at this conductivity"
        )

    cavity_length = 0.5 * guided_wavelength(cavity_guide, f0, guard)
    alpha_ev = propagation_constant(narrow_guide, f0, guard).real
    narrow_length = 0.25 / alpha_ev

    def design_at(nl: float, cl: float) -> ChannelDesign:
        return ChannelDesign(f0, hpbw, main_guide, narrow_guide, cavity_guide,
                             narrow_length=nl, cavity_length=cl)

    def measure(nl, cl, f_track, bw_hint):
        return _Sweeper(design_at(nl, cl), guard).measure(f_track, bw_hint)

    # Bootstrap: weaken the coupling until the HPBW exists in-band.
    f_track, bw_hint = f0, hpbw
    current = None
    for _ in range(80):
        try:
            current = measure(narrow_length, cavity_length, f_track, bw_hint)
        except _PeakNotFound:
            narrow_length *= 1.5
            continue
        if current[1] is not None:
            break
        f_track = current[0]
        narrow_length *= 1.5
    if current is None or current[1] is None:
        raise SynthesisError(
            "bootstrap failed: no measurable passband in the single-mode band",
            last_design=design_at(narrow_length, cavity_length))

    f_peak, bw, _ = current
    for _ in range(max_iterations):
        residual = np.array([f_peak - f0, bw - hpbw])
        if abs(residual[0]) <= tol_f and abs(residual[1]) <= tol_bw:
            final = design_at(narrow_length, cavity_length)
            return replace(final, achieved_f0=f_peak, achieved_hpbw=bw)

        d_c = cavity_length * 1e-3
        d_n = narrow_length * 1e-3
        try:
            m_c = measure(narrow_length, cavity_length + d_c, f_peak, bw)
            m_n = measure(narrow_length + d_n, cavity_length, f_peak, bw)
        except _PeakNotFound:
            m_c = m_n = None
        if m_c is None or m_n is None or m_c[1] is None or m_n[1] is None:
            raise SynthesisError(
                "finite-difference probe lost the passband",
                last_design=design_at(narrow_length, cavity_length))

        jac = np.array([
            [(m_c[0] - f_peak) / d_c, (m_n[0] - f_peak) / d_n],
            [(m_c[1] - bw) / d_c, (m_n[1] - bw) / d_n],
        ])
        try:
            step = np.linalg.solve(jac, -residual)
        except np.linalg.LinAlgError:
            raise SynthesisError(
                "singular secant Jacobian",
                last_design=design_at(narrow_length, cavity_length)) from None
        step[0] = np.clip(step[0], -0.3 * cavity_length, 0.3 * cavity_length)
        step[1] = np.clip(step[1], -0.3 * narrow_length, 0.3 * narrow_length)

        accepted = False
        for damp in (1.0, 0.5, 0.25, 0.1):
            cl_new = max(cavity_length + damp * step[0], 1e-7)
            nl_new = max(narrow_length + damp * step[1], 1e-8)
            try:
                m_new = measure(nl_new, cl_new, f_peak, bw)
            except _PeakNotFound:
                continue
            if m_new[1] is not None:
                accepted = True
                break
        if not accepted:
            raise SynthesisError(
                "all damped steps left the measurable region",
                last_design=design_at(narrow_length, cavity_length))
        cavity_length, narrow_length = cl_new, nl_new
        f_peak, bw, _ = m_new

    last = replace(design_at(narrow_length, cavity_length),
                   achieved_f0=f_peak, achieved_hpbw=bw)
    hint = ""
    if bw > hpbw + tol_bw:
        hint = ("; bandwidth stuck above target, possibly loss-limited "
                "at this conductivity")
    raise SynthesisError(
        f"no convergence after {max_iterations} iterations: "
        f"peak {f_peak:.6g} Hz (target {f0:.6g}), HPBW {bw:.6g} Hz "
        f"(target {hpbw:.6g}){hint}",
        last_design=last)


# --- bank assembly ---------------------------------------------------------

@dataclass(frozen=True)
class BankLayout:
    """Ordered channels along the through guide with connecting spacings.

    ``spacings[i]`` is the connecting-guide length before channel i.
    Channels must be ordered by descending center frequency so the
    highest channel taps first.
    """

    channels: tuple[ChannelDesign, ...]
    spacings: tuple[float, ...]
    main_guide: WaveguideSpec
    spacing_multipliers: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(self.channels))
        object.__setattr__(self, "spacings", tuple(float(s) for s in self.spacings))
        if self.spacing_multipliers is not None:
            object.__setattr__(self, "spacing_multipliers",
                               tuple(float(m) for m in self.spacing_multipliers))
        if not self.channels:
            raise ValueError("bank needs at least one channel")
        if len(self.spacings) != len(self.channels):
            raise ValueError("one spacing per channel (before each channel)")
        if any(s < 0 for s in self.spacings):
            raise ValueError("spacings must be >= 0")
        f0s = [c.achieved_f0 or c.f0_target for c in self.channels]
        if any(f0s[i] < f0s[i + 1] for i in range(len(f0s) - 1)):
            raise ValueError("channels must be ordered by descending center frequency")

    @property
    def port_labels(self) -> tuple[str, ...]:
        taps = tuple(f"tap_{i:02d}" for i in range(len(self.channels)))
        return ("in",) + taps + ("thru",)


def _bank_from_parts(threeports, spacings, main_guide: WaveguideSpec,
                     grid: FrequencyGrid, guard: float) -> SMatrix:
    links = []
    for three, spacing in zip(threeports, spacings):
        links.append(ChainLink(section_smatrix(main_guide, spacing, grid, guard), 0, 1))
        links.append(ChainLink(three, 0, 1))
    return cascade_chain(links)


def assemble_bank(layout: BankLayout, grid: FrequencyGrid,
                  guard: float = CUTOFF_GUARD) -> SMatrix:
    """(N+2)-port bank: input, one tap per channel in order, through."""
    threeports = [channel_threeport(ch, grid, guard) for ch in layout.channels]
    bank = _bank_from_parts(threeports, layout.spacings, layout.main_guide, grid, guard)
    return bank.relabeled(layout.port_labels)


def optimize_spacings(channels, candidate_multipliers=None, objective=None,
                      grid: FrequencyGrid | None = None,
                      guard: float = CUTOFF_GUARD) -> BankLayout:
    """Pick per-link spacings as multiples of the band-center guided
    wavelength by coordinate descent over a discrete candidate set.

    The default objective is the mean over channels of tap-port through
    power, each evaluated at that channel's achieved center frequency.
    Ties break toward the smallest multiplier (shortest bank). The result
    is never worse than the all-ones starting layout.
    """
    channels = tuple(channels)
    if not channels:
        raise ValueError("no channels to lay out")
    multipliers_grid = tuple(candidate_multipliers) if candidate_multipliers is not None \
        else DEFAULT_SPACING_MULTIPLIERS
    if not multipliers_grid:
        raise ValueError("candidate multiplier set is empty")
    main_guide = channels[0].main_guide

    f0s = [c.achieved_f0 or c.f0_target for c in channels]
    band_center = float(np.mean(f0s))
    lambda_g = guided_wavelength(main_guide, band_center, guard)

    if grid is None:
        grid = FrequencyGrid(np.array(sorted(set(f0s))))
    threeports = [channel_threeport(ch, grid, guard) for ch in channels]

    if objective is None:
        idx_of = np.searchsorted(grid.points, f0s)

        def objective(bank: SMatrix) -> float:
            powers = [
                float(np.abs(bank.entries[idx_of[i], 1 + i, 0]) ** 2)
                for i in range(len(channels))
            ]
            return float(np.mean(powers))

    def evaluate(mults) -> float:
        spacings = [m * lambda_g for m in mults]
        return objective(_bank_from_parts(threeports, spacings, main_guide, grid, guard))

    mults = [1.0] * len(channels)
    best = evaluate(mults)
    tie_eps = 1e-12 * max(1.0, abs(best))
    for _ in range(20):
        changed = False
        for link in range(len(channels)):
            best_m, best_obj = mults[link], best
            for cand in sorted(multipliers_grid):
                if cand == mults[link]:
                    continue
                trial = list(mults)
                trial[link] = cand
                obj = evaluate(trial)
                better = obj > best_obj + tie_eps
                tied_shorter = abs(obj - best_obj) <= tie_eps and cand < best_m
                if better or tied_shorter:
                    best_m, best_obj = cand, obj
            if best_m != mults[link]:
                mults[link] = best_m
                best = best_obj
                changed = True
        if not changed:
            break

    return BankLayout(
        channels=channels,
        spacings=tuple(m * lambda_g for m in mults),
        main_guide=main_guide,
        spacing_multipliers=tuple(mults),
    )


# --- passband metrics ------------------------------------------------------

@dataclass(frozen=True)
class PassbandMetrics:
    f_peak_hz: float
    hpbw_hz: float
    peak_efficiency: float


def passband_metrics(bank: SMatrix, tap_index: int,
                     grid: FrequencyGrid | None = None) -> PassbandMetrics:
    """Peak frequency, half-power bandwidth, and peak through power of one
    tap, from grid samples of |S(tap, in)|^2.

    ``tap_index`` is the channel index; the tap port is 1 + tap_index per
    the bank port ordering (for a plain two-port use tap_index 0). Peak by
    parabolic interpolation around the grid maximum, crossings by linear
    interpolation; frequencies without a half-power crossing inside the
    grid raise BandEdgeError.
    """
    if grid is not None and grid != bank.grid:
        raise ValueError("metrics grid must be the bank's own grid")
    f = bank.grid.points
    port = 1 + tap_index
    if not (0 < port < bank.n_ports):
        raise ValueError("tap index out of range")
    p = np.abs(bank.entries[:, port, 0]) ** 2

    i = int(np.argmax(p))
    if i in (0, p.size - 1):
        raise BandEdgeError("transmission maximum sits at the grid edge")
    y0, y1, y2 = p[i - 1], p[i], p[i + 1]
    denom = y0 - 2.0 * y1 + y2
    offset = 0.0 if denom == 0 else 0.5 * (y0 - y2) / denom
    df = 0.5 * (f[i + 1] - f[i - 1])
    f_peak = f[i] + offset * df
    p_peak = y1 - 0.25 * (y0 - y2) * offset
    half = 0.5 * p_peak

    def interp_crossing(j_out, j_in):
        return f[j_out] + (half - p[j_out]) / (p[j_in] - p[j_out]) * (f[j_in] - f[j_out])

    lo = None
    for j in range(i, 0, -1):
        if p[j - 1] < half <= p[j]:
            lo = interp_crossing(j - 1, j)
            break
    hi = None
    for j in range(i, p.size - 1):
        if p[j + 1] < half <= p[j]:
            hi = interp_crossing(j + 1, j)
            break
    if lo is None or hi is None:
        raise BandEdgeError("no half-power crossing within the grid")
    return PassbandMetrics(f_peak_hz=float(f_peak), hpbw_hz=float(hi - lo),
                           peak_efficiency=float(p_peak))
