"""Synthetic timestream generation: determinism, truth sidecar, contracts."""

import filecmp

import numpy as np
import pytest

from specbank import (
    GlitchTrain,
    RadiometerChain,
    Scenario,
    SceneProfile,
    demodulate,
    generate,
    load_timestream,
    write_timestream,
)
from specbank.synth import glitch_start_indices

CHAIN = RadiometerChain(
    band="g", rf_gain_db=40.0, noise_figure_db=6.0, optical_efficiency=0.20,
    bandwidth_hz=2e9, detector_responsivity_v_per_w=450.0,
    detector_nep_w_per_rthz=50e-12, audio_gain_db=34.0,
    audio_input_noise_v_per_rthz=1e-9,
)


def scenario(**overrides):
    params = dict(duration_s=30.0, chain=CHAIN, scene=SceneProfile.constant(250.0),
                  t_ref_k=290.0, seed=42, n_channels=2)
    params.update(overrides)
    return Scenario(**params)


class TestGenerate:
    def test_null_contrast_demodulates_to_zero(self):
        sc = scenario(scene=SceneProfile.constant(290.0), t_ref_k=290.0)
        ts, _ = generate(sc)
        demod = demodulate(ts)
        assert demod.n_cycles > 0
        assert np.all(demod.delta_v == 0.0)

    def test_glitch_train_exactly_periodic(self):
        sc = scenario(duration_s=10.0,
                      glitches=GlitchTrain(period_s=1.0, width_samples=3,
                                           depth_v=-1e-3))
        starts = glitch_start_indices(sc)
        assert np.all(np.diff(starts) == 200)   # 1.0 s at 200 Hz
        ts, truth = generate(sc)
        idx = np.flatnonzero(truth.glitch)
        assert idx.size == starts.size * 3
        # downward relative to the noiseless baseline without glitches
        baseline = generate(scenario(duration_s=10.0))[1].noiseless_v
        assert np.all(truth.noiseless_v[idx] < baseline[idx])

    def test_residuals_match_injected_noise_level(self):
        sc = scenario(duration_s=100.0, noise_net_mk_rts=200.0, n_channels=1)
        ts, truth = generate(sc)
        residual = np.asarray(ts.volts)[:, 0] - truth.noiseless_v
        assert residual.size >= 10_000
        assert np.std(residual) == pytest.approx(sc.noise_sigma_v(), rel=0.1)

    def test_phase_alternates_at_chop_rate(self):
        sc = scenario(duration_s=5.0)
        ts, _ = generate(sc)
        edges = np.flatnonzero(np.diff(ts.phase)) + 1
        # 17 Hz chop = 34 phase flips per second
        assert edges.size == pytest.approx(34 * 5, abs=2)

    def test_scene_profiles(self):
        ramp = SceneProfile.ramp(200.0, 300.0)
        t = np.array([0.0, 5.0, 10.0])
        assert np.allclose(ramp.evaluate(t, 10.0), [200.0, 250.0, 300.0])
        steps = SceneProfile.piecewise([0.0, 4.0], [100.0, 110.0])
        assert np.allclose(steps.evaluate(t, 10.0), [100.0, 110.0, 110.0])

    def test_scenario_validation(self):
        with pytest.raises(ValueError, match="chop"):
            scenario(chop_rate_hz=60.0)
        with pytest.raises(ValueError, match="negative"):
            GlitchTrain(depth_v=0.5)
        with pytest.raises(ValueError, match="width"):
            GlitchTrain(width_samples=0, depth_v=-1.0)


class TestWriteTimestream:
    def test_round_trip_is_lossless(self, tmp_path):
        sc = scenario(duration_s=5.0, noise_net_mk_rts=150.0)
        ts, sidecar = generate(sc)
        data_path, _ = write_timestream(ts, sidecar, tmp_path)
        back = load_timestream(data_path, sample_rate_hz=sc.sample_rate_hz)
        assert np.array_equal(back.times, ts.times)
        assert np.array_equal(back.volts, ts.volts)
        assert np.array_equal(back.phase, ts.phase)
        assert np.array_equal(back.ref_temp_k, ts.ref_temp_k)

    def test_row_counts_match(self, tmp_path):
        ts, sidecar = generate(scenario(duration_s=3.0))
        data_path, truth_path = write_timestream(ts, sidecar, tmp_path)
        n_data = sum(1 for _ in open(data_path))
        n_truth = sum(1 for _ in open(truth_path))
        assert n_data == n_truth == ts.n_samples + 1

    def test_fixed_seed_byte_identical(self, tmp_path):
        sc = scenario(duration_s=5.0, noise_net_mk_rts=150.0,
                      glitches=GlitchTrain(period_s=1.0, width_samples=3,
                                           depth_v=-1e-4))
        for sub in ("a", "b"):
            ts, sidecar = generate(sc)
            write_timestream(ts, sidecar, tmp_path / sub)
        assert filecmp.cmp(tmp_path / "a" / "timestream.csv",
                           tmp_path / "b" / "timestream.csv", shallow=False)
        assert filecmp.cmp(tmp_path / "a" / "truth.csv",
                           tmp_path / "b" / "truth.csv", shallow=False)

    def test_different_seed_differs(self, tmp_path):
        a, _ = generate(scenario(duration_s=2.0, noise_net_mk_rts=150.0, seed=1))
        b, _ = generate(scenario(duration_s=2.0, noise_net_mk_rts=150.0, seed=2))
        assert not np.array_equal(a.volts, b.volts)
