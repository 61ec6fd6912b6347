"""TE10 dispersion, loss, impedance, and uniform-section behavior."""

import math

import numpy as np
import pytest

from specbank import (
    FrequencyGrid,
    WaveguideSpec,
    cascade_pair,
    propagation_constant,
    section_smatrix,
    standard_guide,
    te10_cutoff,
    wave_impedance,
)
from specbank.constants import C0, ETA0, MU0
from specbank.errors import CutoffSingularityError

WR15 = standard_guide("WR-15")
WR5 = standard_guide("WR-5")
WR15_PEC = standard_guide("WR-15", conductivity=None)


class TestCutoff:
    def test_wr15_value(self):
        # c / (2 * 3.7592 mm), evaluated independently
        assert te10_cutoff(WR15) == pytest.approx(39_874_502_287.7208, rel=1e-12)
        assert te10_cutoff(WR15) == pytest.approx(39.875e9, rel=2e-5)

    def test_wr5_value(self):
        assert te10_cutoff(WR5) == pytest.approx(115_714_241_932.99368, rel=1e-12)
        assert te10_cutoff(WR5) == pytest.approx(115.71e9, rel=1e-4)

    def test_doubling_width_halves_cutoff(self, rng):
        for _ in range(50):
            a = rng.uniform(0.5e-3, 20e-3)
            spec = WaveguideSpec("g", a, a / 2)
            wide = WaveguideSpec("g2", 2 * a, a / 2)
            assert te10_cutoff(wide) == pytest.approx(te10_cutoff(spec) / 2, rel=1e-12)

    def test_scales_inverse_with_width(self, rng):
        for _ in range(50):
            a = rng.uniform(0.5e-3, 20e-3)
            k = rng.uniform(1.1, 10.0)
            base = te10_cutoff(WaveguideSpec("g", a, a / 3))
            scaled = te10_cutoff(WaveguideSpec("g", k * a, a / 3))
            assert scaled * k == pytest.approx(base, rel=1e-12)


class TestSpecValidation:
    def test_rejects_nonpositive_dimensions(self):
        with pytest.raises(ValueError):
            WaveguideSpec("bad", -1e-3, 1e-3)
        with pytest.raises(ValueError):
            WaveguideSpec("bad", 1e-3, 0.0)

    def test_rejects_nonpositive_conductivity(self):
        with pytest.raises(ValueError):
            WaveguideSpec("bad", 2e-3, 1e-3, conductivity=0.0)

    def test_perfect_conductor_flag(self):
        assert WR15_PEC.is_perfect_conductor
        assert not WR15.is_perfect_conductor

    def test_catalog_unknown_guide(self):
        with pytest.raises(KeyError):
            standard_guide("WR-999")


class TestPropagationConstant:
    def test_lossless_above_cutoff_purely_imaginary(self):
        fc = te10_cutoff(WR15_PEC)
        f = 2 * fc
        gamma = propagation_constant(WR15_PEC, f)
        expected_beta = (2 * math.pi * f / C0) * math.sqrt(3) / 2
        assert gamma.real == 0.0
        assert gamma.imag == pytest.approx(expected_beta, rel=1e-12)

    def test_evanescent_at_half_cutoff(self):
        fc = te10_cutoff(WR15_PEC)
        f = fc / 2
        gamma = propagation_constant(WR15_PEC, f)
        assert gamma.imag == 0.0
        assert gamma.real == pytest.approx((2 * math.pi * f / C0) * math.sqrt(3), rel=1e-12)

    def test_wr15_aluminum_60ghz_attenuation(self):
        # Independent hand evaluation of the textbook TE10 alpha_c.
        a, b, sigma, f = 3.7592e-3, 1.8796e-3, 3.5e7, 60e9
        fc = C0 / (2 * a)
        rs = math.sqrt(math.pi * f * MU0 / sigma)
        root = math.sqrt(1 - (fc / f) ** 2)
        expected = rs / (b * ETA0 * root) * (1 + (2 * b / a) * (fc / f) ** 2)
        gamma = propagation_constant(WR15, 60e9)
        assert 0.1 < gamma.real < 1.0
        assert gamma.real == pytest.approx(expected, rel=1e-12)
        assert gamma.real == pytest.approx(0.22415009787422188, rel=1e-12)

    def test_guard_band_raises(self):
        fc = te10_cutoff(WR15)
        for f in (fc, fc * 1.0005, fc * 0.9995):
            with pytest.raises(CutoffSingularityError):
                propagation_constant(WR15, f)

    def test_attenuation_decreases_with_conductivity(self, rng):
        f = 60e9
        sigmas = np.sort(rng.uniform(1e6, 1e8, size=20))
        alphas = [propagation_constant(standard_guide("WR-15", s), f).real
                  for s in sigmas]
        assert all(a1 > a2 for a1, a2 in zip(alphas, alphas[1:]))

    def test_vectorized_matches_scalar(self):
        f = np.array([50e9, 60e9, 70e9])
        vec = propagation_constant(WR15, f)
        for k, fk in enumerate(f):
            assert vec[k] == propagation_constant(WR15, float(fk))


class TestWaveImpedance:
    def test_free_space_limit(self):
        fc = te10_cutoff(WR15_PEC)
        z = wave_impedance(WR15_PEC, 1e4 * fc)
        assert z == pytest.approx(ETA0, rel=1e-7)

    def test_at_twice_cutoff(self):
        fc = te10_cutoff(WR15_PEC)
        z = wave_impedance(WR15_PEC, 2 * fc)
        assert z == pytest.approx(ETA0 * 2 / math.sqrt(3), rel=1e-12)
        assert z.imag == 0.0

    def test_unit_magnitude_reactive_point(self):
        fc = te10_cutoff(WR15_PEC)
        z = wave_impedance(WR15_PEC, fc / math.sqrt(2))
        assert z.real == 0.0
        assert z.imag == pytest.approx(ETA0, rel=1e-12)


class TestSectionSMatrix:
    def test_zero_length_is_identity(self):
        grid = FrequencyGrid(np.linspace(50e9, 70e9, 32))
        s = section_smatrix(WR15, 0.0, grid)
        assert np.allclose(s.entries[:, 0, 1], 1.0)
        assert np.allclose(s.entries[:, 0, 0], 0.0)
        assert np.allclose(s.entries[:, 1, 1], 0.0)

    def test_lossless_propagating_unimodular(self):
        grid = FrequencyGrid(np.linspace(50e9, 70e9, 32))
        s = section_smatrix(WR15_PEC, 0.01, grid)
        assert np.max(np.abs(np.abs(s.entries[:, 1, 0]) - 1.0)) < 1e-14

    def test_evanescent_decay_oracle(self):
        # |S21| = exp(-alpha L) with alpha from the evanescent formula,
        # recomputed here from scratch.
        grid = FrequencyGrid(np.linspace(20e9, 30e9, 16))
        length = 2e-3
        s = section_smatrix(WR15_PEC, length, grid)
        fc = C0 / (2 * WR15_PEC.width_a)
        alpha = (2 * math.pi * grid.points / C0) * np.sqrt((fc / grid.points) ** 2 - 1)
        assert np.allclose(np.abs(s.entries[:, 1, 0]), np.exp(-alpha * length), rtol=1e-12)

    def test_negative_length_rejected(self):
        grid = FrequencyGrid(np.linspace(50e9, 70e9, 4))
        with pytest.raises(ValueError):
            section_smatrix(WR15, -1e-3, grid)

    def test_composition_equals_combined_length(self):
        grid = FrequencyGrid(np.linspace(50e9, 70e9, 32))
        l1, l2 = 3.1e-3, 1.7e-3
        joined = cascade_pair(section_smatrix(WR15, l1, grid),
                              section_smatrix(WR15, l2, grid), 1, 0)
        combined = section_smatrix(WR15, l1 + l2, grid)
        err = np.abs(joined.entries - combined.entries)
        scale = np.maximum(np.abs(combined.entries), 1.0)
        assert np.max(err / scale) < 1e-12
