"""Analytic TE10 electromagnetics for rectangular waveguide.

Cutoff, dispersion, conductor loss, modal impedance, and the two-port
S-matrix of a uniform section. Single-mode approximation throughout: the
tracked mode is TE10 of the width dimension (one half-wave across
``width_a``), so ``width_a`` sets the cutoff even for coupling sections
narrower than they are tall.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import C0, ETA0, MU0
from .errors import CutoffSingularityError
from .grid import FrequencyGrid

# Machined aluminum, the default block material.
DEFAULT_CONDUCTIVITY = 3.5e7

# Relative half-width of the guard band around cutoff where the conductor
# attenuation diverges and evaluation is refused.
CUTOFF_GUARD = 1e-3


@dataclass(frozen=True)
class WaveguideSpec:
    """Rectangular guide cross-section and wall conductivity.

    ``conductivity`` is in S/m; ``None`` means a perfect conductor.
    """

    name: str
    width_a: float
    height_b: float
    conductivity: float | None = DEFAULT_CONDUCTIVITY

    def __post_init__(self):
        if not (self.width_a > 0.0 and self.height_b > 0.0):
            raise ValueError(f"{self.name}: guide dimensions must be positive")
        if self.conductivity is not None and not (self.conductivity > 0.0):
            raise ValueError(f"{self.name}: conductivity must be > 0 or None")

    @property
    def is_perfect_conductor(self) -> bool:
        return self.conductivity is None


# EIA inner dimensions, meters.
_STANDARD_GUIDES = {
    "WR-5": (1.2954e-3, 0.6477e-3),
    "WR-15": (3.7592e-3, 1.8796e-3),
}


def standard_guide(name: str, conductivity: float | None = DEFAULT_CONDUCTIVITY) -> WaveguideSpec:
    """Look up a named guide from the built-in catalog."""
    key = name.upper().replace("WR", "WR-").replace("WR--", "WR-")
    if key not in _STANDARD_GUIDES:
        known = ", ".join(sorted(_STANDARD_GUIDES))
        raise KeyError(f"unknown guide {name!r}; catalog has {known}")
    a, b = _STANDARD_GUIDES[key]
    return WaveguideSpec(name=key, width_a=a, height_b=b, conductivity=conductivity)


def te10_cutoff(spec: WaveguideSpec) -> float:
    """TE10 cutoff frequency f_c = c / (2 a), Hz."""
    return C0 / (2.0 * spec.width_a)


def _check_guard(f: np.ndarray, fc: float, guard: float) -> None:
    bad = np.abs(f - fc) < guard * fc
    if np.any(bad):
        fbad = float(np.asarray(f)[bad][0] if np.ndim(f) else f)
        raise CutoffSingularityError(fbad, fc, guard)


def propagation_constant(spec: WaveguideSpec, f, guard: float = CUTOFF_GUARD):
    """Complex propagation constant gamma = alpha + i beta, 1/m.

    Above cutoff: beta = (2 pi f / c) sqrt(1 - (fc/f)^2) and alpha is the
    TE10 conductor attenuation

        alpha_c = Rs / (b eta0 sqrt(1 - (fc/f)^2)) * (1 + (2b/a)(fc/f)^2),
        Rs = sqrt(pi f mu0 / sigma)

    (zero for a perfect conductor). Below cutoff the mode decays reactively
    with alpha = (2 pi f / c) sqrt((fc/f)^2 - 1) and conductor loss is
    neglected.

    Raises CutoffSingularityError inside the guard band around fc.
    """
    scalar = np.isscalar(f)
    f = np.atleast_1d(np.asarray(f, dtype=float))
    if np.any(f <= 0):
        raise ValueError("frequency must be > 0")
    fc = te10_cutoff(spec)
    _check_guard(f, fc, guard)

    ratio = (fc / f) ** 2
    k = 2.0 * math.pi * f / C0
    prop = f > fc
    alpha = np.zeros_like(f)
    beta = np.zeros_like(f)

    root = np.sqrt(np.maximum(1.0 - ratio, 0.0))
    beta[prop] = (k * root)[prop]
    if not spec.is_perfect_conductor:
        rs = np.sqrt(math.pi * f * MU0 / spec.conductivity)
        with np.errstate(divide="ignore"):
            a_c = rs / (spec.height_b * ETA0 * np.where(prop, root, 1.0))
        alpha[prop] = (a_c * (1.0 + (2.0 * spec.height_b / spec.width_a) * ratio))[prop]

    root_ev = np.sqrt(np.maximum(ratio - 1.0, 0.0))
    alpha[~prop] = (k * root_ev)[~prop]

    gamma = alpha + 1j * beta
    return complex(gamma[0]) if scalar else gamma


def wave_impedance(spec: WaveguideSpec, f, guard: float = CUTOFF_GUARD):
    """TE10 wave impedance, ohm (complex).

    Propagating: eta0 / sqrt(1 - (fc/f)^2), real and above eta0.
    Evanescent: i eta0 / sqrt((fc/f)^2 - 1), purely inductive.
    """
    scalar = np.isscalar(f)
    f = np.atleast_1d(np.asarray(f, dtype=float))
    if np.any(f <= 0):
        raise ValueError("frequency must be > 0")
    fc = te10_cutoff(spec)
    _check_guard(f, fc, guard)

    ratio = (fc / f) ** 2
    prop = f > fc
    z = np.zeros_like(f, dtype=complex)
    z[prop] = ETA0 / np.sqrt(1.0 - ratio[prop])
    z[~prop] = 1j * ETA0 / np.sqrt(ratio[~prop] - 1.0)
    return complex(z[0]) if scalar else z


def guided_wavelength(spec: WaveguideSpec, f: float, guard: float = CUTOFF_GUARD) -> float:
    """Guided wavelength lambda_g = 2 pi / beta, m. Requires f above cutoff."""
    gamma = propagation_constant(spec, f, guard)
    beta = np.imag(gamma)
    if np.any(np.atleast_1d(beta) <= 0):
        raise ValueError("guided wavelength is undefined below cutoff")
    return 2.0 * math.pi / beta


def section_smatrix(spec: WaveguideSpec, length: float, grid: FrequencyGrid,
                    guard: float = CUTOFF_GUARD):
    """Two-port S-matrix of a uniform section, referenced to the guide's
    own modal impedance: S11 = S22 = 0, S21 = S12 = exp(-gamma L).
    """
    from .network import SMatrix  # deferred to keep module imports acyclic

    if length < 0:
        raise ValueError("section length must be >= 0")
    gamma = propagation_constant(spec, grid.points, guard)
    t = np.exp(-gamma * length)
    entries = np.zeros((len(grid), 2, 2), dtype=complex)
    entries[:, 0, 1] = t
    entries[:, 1, 0] = t
    return SMatrix(grid=grid, entries=entries, port_labels=("in", "out"))
