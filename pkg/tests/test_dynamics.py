import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp

from spinlev import analysis
from spinlev.dynamics import (MechState, Protocol, Segment, SpinState,
                              SystemState, build_parametric_excitation,
                              derivs_full_bloch, derivs_rate,
                              integrate_trajectory, noise_kick_std,
                              read_trajectory_csv, run_ensemble,
                              trajectory_noise)
from spinlev.errors import InvariantViolated
from spinlev.params import KB, ModelKind
from spinlev.steady import steady_populations, sz_steady
from conftest import TWO_PI, make_params


class TestNoiseStream:
    def test_kick_variance_calibrated(self):
        p = make_params(sim={"model": ModelKind.MECH, "dt": 2e-5})
        kicks = trajectory_noise(p, traj_index=0, n_steps=1_000_000)
        expected = (2 * KB * 300.0 * p.mech.gamma * 2e-5 / 1e-22)
        assert np.var(kicks) == pytest.approx(expected, rel=0.01)
        assert noise_kick_std(p)**2 == pytest.approx(expected, rel=1e-12)

    def test_streams_keyed_by_trajectory_index(self):
        p = make_params(sim={"model": ModelKind.MECH, "dt": 2e-5})
        a = trajectory_noise(p, 0, 1000)
        b = trajectory_noise(p, 1, 1000)
        assert not np.array_equal(a, b)
        assert np.array_equal(a, trajectory_noise(p, 0, 1000))

    def test_zero_temperature_means_no_kicks(self):
        p = make_params(mech={"temperature_T": 0.0},
                        sim={"model": ModelKind.MECH, "dt": 2e-5})
        assert not np.any(trajectory_noise(p, 0, 100))


class TestBareOscillator:
    def test_damped_cosine_matches_analytic(self):
        p = make_params(mech={"temperature_T": 0.0},
                        drive={"rabi_omega": 0.0, "torque_coeff": 0.0},
                        sim={"model": ModelKind.MECH, "dt": 1e-6,
                             "duration": 0.1})
        phi0 = 1e-3
        tr = integrate_trajectory(SystemState(mech=MechState(phi=phi0)), p)
        w0, g = p.mech.omega_phi, p.mech.gamma
        wd = math.sqrt(w0**2 - g**2 / 4)
        ref = phi0 * np.exp(-g * tr.times / 2) * (
            np.cos(wd * tr.times) + (g / (2 * wd)) * np.sin(wd * tr.times))
        assert np.max(np.abs(tr.phi - ref)) < 1e-3 * phi0

    def test_deterministic_given_seed(self):
        p = make_params(sim={"model": ModelKind.MECH, "dt": 2e-5,
                             "duration": 1.0, "seed": 5})
        a = integrate_trajectory(SystemState(), p)
        b = integrate_trajectory(SystemState(), p)
        assert np.array_equal(a.data, b.data)

    def test_angle_beyond_small_angle_regime_aborts(self):
        p = make_params(mech={"temperature_T": 0.0},
                        sim={"model": ModelKind.MECH, "dt": 2e-5,
                             "duration": 0.01})
        with pytest.raises(InvariantViolated):
            integrate_trajectory(SystemState(mech=MechState(phi=2.0)), p)

    def test_thermal_psd_matches_fluctuation_dissipation(self):
        p = make_params(drive={"rabi_omega": 0.0, "torque_coeff": 0.0},
                        sim={"model": ModelKind.MECH, "dt": 2e-5,
                             "duration": 60.0, "seed": 21})
        tr = integrate_trajectory(SystemState(), p)
        psd = analysis.welch_psd(tr.phi, 2e-5, segment_len=16384)
        f0 = p.mech.omega_phi / TWO_PI
        mask = (psd.freqs >= f0 / 4) & (psd.freqs <= 4 * f0)
        model = analysis.thermal_psd_model(psd.freqs[mask], p.mech)
        # octave-band averages beat the per-bin chi^2 scatter down far
        # enough for a 15% comparison
        edges = f0 * np.array([0.25, 0.5, 0.8, 0.95, 1.05, 1.25, 2.0, 4.0])
        f = psd.freqs[mask]
        for lo, hi in zip(edges[:-1], edges[1:]):
            band = (f >= lo) & (f < hi)
            ratio = np.mean(psd.values[mask][band]) / np.mean(model[band])
            assert abs(ratio - 1) < 0.15, (lo, hi, ratio)


class TestSpinModels:
    def test_bloch_steady_matches_rate_closed_form(self):
        p = make_params()
        for phi, tol in ((0.0, 1e-6), (1.2e-3, 1e-4), (-2e-3, 1e-4)):
            def rhs(t, y):
                st_ = SystemState(
                    mech=MechState(phi=phi),
                    spin=SpinState(coherence_S=complex(y[3], y[4]),
                                   pop0=y[0], pop_m1=y[1], pop_p1=y[2]))
                d = derivs_full_bloch(st_, p)
                return [d.spin.pop0, d.spin.pop_m1, d.spin.pop_p1,
                        d.spin.coherence_S.real, d.spin.coherence_S.imag]
            sol = solve_ivp(rhs, [0, 0.2], [1, 0, 0, 0, 0], method="Radau",
                            rtol=1e-10, atol=1e-12)
            p0, pm, pp = sol.y[0, -1], sol.y[1, -1], sol.y[2, -1]
            s0, sm, sp = steady_populations(p, phi)
            assert p0 == pytest.approx(s0, abs=tol)
            assert pm - pp == pytest.approx(sz_steady(p, phi), abs=tol)

    def test_resonant_pumping_rate_convention(self):
        # on resonance the pumping rate into the magnetized state is
        # Omega^2 * T2* / 2
        p = make_params(drive={"detuning": 0.0})
        state = SystemState(spin=SpinState(pop0=1.0))
        d = derivs_rate(state, p)
        w = p.drive.rabi_omega**2 * p.spin.t2_star / 2.0
        # dS_-1/dt at (1,0,0): +a*p0 + W*p0
        expected = (1.0 / p.spin.t1) + w
        assert d.spin.pop_m1 == pytest.approx(expected, rel=1e-12)

    def test_far_detuned_pumping_vanishes(self):
        p = make_params(drive={"detuning": TWO_PI * 1e12})
        state = SystemState(spin=SpinState(pop0=1.0))
        d = derivs_rate(state, p)
        assert d.spin.pop_m1 == pytest.approx(1.0 / p.spin.t1, rel=1e-6)

    def test_undriven_bloch_relaxation_structure(self):
        p = make_params(drive={"rabi_omega": 0.0})
        state = SystemState(spin=SpinState(pop0=0.5, pop_m1=0.3, pop_p1=0.2))
        d = derivs_full_bloch(state, p)
        a, l = 1.0 / p.spin.t1, p.spin.gamma_las
        assert d.spin.coherence_S == 0j
        assert d.spin.pop_m1 == pytest.approx(-a * (0.3 - 0.5) - l * 0.3)
        assert d.spin.pop_p1 == pytest.approx(-a * (0.2 - 0.5) - l * 0.2)
        assert d.spin.pop0 == pytest.approx(-(d.spin.pop_m1 + d.spin.pop_p1))

    def test_rate_and_bloch_trajectories_agree_in_slow_libration(self):
        common = dict(mech={"temperature_T": 300.0},
                      sim={"dt": 5e-9, "duration": 0.05, "seed": 3,
                           "record_stride": 2000})
        init = SystemState(mech=MechState(phi=2e-3))
        tr_rate = integrate_trajectory(
            init, make_params(sim={**common["sim"], "model": ModelKind.RATE},
                              mech=common["mech"]))
        tr_bloch = integrate_trajectory(
            init, make_params(sim={**common["sim"],
                                   "model": ModelKind.FULL_BLOCH},
                              mech=common["mech"]))
        rms_sig = np.sqrt(np.mean(tr_rate.phi**2))
        rms_diff = np.sqrt(np.mean((tr_rate.phi - tr_bloch.phi)**2))
        assert rms_diff < 0.02 * rms_sig

    def test_populations_conserved_and_bounded(self):
        p = make_params(sim={"duration": 0.05, "record_stride": 10})
        tr = integrate_trajectory(SystemState(), p)
        total = tr.populations.sum(axis=1)
        assert np.max(np.abs(total - 1.0)) < 1e-9
        assert tr.populations.min() >= 0.0
        assert tr.populations.max() <= 1.0


class TestProtocol:
    def test_overlapping_segments_rejected(self):
        with pytest.raises(ValueError):
            Protocol(segments=(Segment(0.0, 1.0), Segment(0.5, 2.0)))

    def test_empty_segment_rejected(self):
        with pytest.raises(ValueError):
            Protocol(segments=(Segment(1.0, 1.0),))

    @given(st.lists(st.floats(0.01, 0.5), min_size=1, max_size=5),
           st.floats(0.5, 3.0))
    @settings(max_examples=50, deadline=None)
    def test_timeline_is_gap_free_and_covers_duration(self, widths, duration):
        segments = []
        cursor = 0.0
        for w in widths:
            segments.append(Segment(cursor, cursor + w))
            cursor += w + 0.05
        proto = Protocol(segments=tuple(segments))
        t1s, rabis, dets = proto.timeline(duration, 1.0, -2.0)
        assert t1s[-1] == pytest.approx(duration)
        assert np.all(np.diff(t1s) > 0)
        assert len(t1s) == len(rabis) == len(dets)

    def test_overrides_applied(self):
        proto = Protocol(segments=(
            Segment(0.0, 0.5, rabi_override=7.0, detuning_override=-3.0),))
        t1s, rabis, dets = proto.timeline(1.0, 1.0, -2.0)
        assert rabis[0] == 7.0 and dets[0] == -3.0
        assert rabis[-1] == 0.0 and dets[-1] == -2.0

    def test_zero_pulses_is_always_off(self):
        proto = build_parametric_excitation(TWO_PI * 480, 0)
        assert proto.segments == ()

    def test_five_pulses_one_per_period(self):
        proto = build_parametric_excitation(TWO_PI * 480, 5, duty=0.5)
        period = 1.0 / 480.0
        assert len(proto.segments) == 5
        for k, seg in enumerate(proto.segments):
            assert seg.t_start == pytest.approx(k * period)
            assert seg.t_end - seg.t_start == pytest.approx(0.5 * period)

    def test_resonant_gating_grows_amplitude(self):
        p = make_params(mech={"temperature_T": 0.0},
                        drive={"detuning": 0.0},
                        sim={"dt": 1e-6, "duration": 6.0 / 480.0})
        proto = build_parametric_excitation(p.mech.omega_phi, 5)
        tr = integrate_trajectory(SystemState(), p, protocol=proto)
        period = 1.0 / 480.0
        dt_rec = tr.times[1] - tr.times[0]
        per_period = int(round(period / dt_rec))
        peaks = [np.ptp(tr.phi[k * per_period:(k + 1) * per_period])
                 for k in range(5)]
        assert all(b > a for a, b in zip(peaks, peaks[1:]))


class TestEnsembleAndExport:
    def test_single_trajectory_statistics(self):
        p = make_params(sim={"model": ModelKind.MECH, "dt": 2e-5,
                             "duration": 0.2, "n_traj": 1})
        res = run_ensemble(p)
        assert np.array_equal(res.phi_mean, res.trajectories[0].phi)
        assert np.allclose(res.phi_var, 0.0)

    def test_thread_count_does_not_change_results(self):
        p = make_params(sim={"model": ModelKind.MECH, "dt": 2e-5,
                             "duration": 0.2, "n_traj": 6})
        a = run_ensemble(p, threads=1)
        b = run_ensemble(p, threads=3)
        assert np.array_equal(a.phi_mean, b.phi_mean)
        assert np.array_equal(a.phi_var, b.phi_var)

    def test_keep_limits_retained_trajectories_not_statistics(self):
        p = make_params(sim={"model": ModelKind.MECH, "dt": 2e-5,
                             "duration": 0.2, "n_traj": 6})
        full = run_ensemble(p)
        partial = run_ensemble(p, keep=2)
        assert len(partial.trajectories) == 2
        assert np.array_equal(full.phi_var, partial.phi_var)

    def test_csv_round_trip(self, tmp_path):
        p = make_params(sim={"model": ModelKind.MECH, "dt": 2e-5,
                             "duration": 0.1, "record_stride": 5})
        tr = integrate_trajectory(SystemState(mech=MechState(phi=1e-3)), p)
        path = tmp_path / "traj.csv"
        tr.to_csv(path, extra_metadata={"note": "round trip"})
        times, data, meta = read_trajectory_csv(path)
        assert meta["note"] == "round trip"
        assert meta["model"] == "mech"
        assert np.allclose(times, tr.times, rtol=1e-9, atol=1e-15)
        assert np.allclose(data, tr.data, rtol=1e-9, atol=1e-15)
