import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phaselock.plant import (
    NoiseConfig,
    Observation,
    Plant,
    PlantConfig,
    PlantState,
    Port,
    actuator_phase,
    expected_rate,
    sample_counts,
    step_noise,
)

GAIN_1700 = 2.0 * math.pi / 1700.0


def make_config(**kwargs):
    return PlantConfig(**kwargs)


class TestActuatorPhase:
    def test_zero_input(self):
        assert actuator_phase(0, 0.123, 0.0) == 0.0

    def test_full_span_is_two_pi(self):
        assert actuator_phase(1700, GAIN_1700, 0.0) == pytest.approx(2.0 * math.pi)

    def test_half_span_is_pi(self):
        assert actuator_phase(850, GAIN_1700, 0.0) == pytest.approx(math.pi)

    @pytest.mark.parametrize("s", [-1, 4096, 100000])
    def test_out_of_range_rejected(self, s):
        with pytest.raises(ValueError):
            actuator_phase(s, GAIN_1700, 0.0)


class TestExpectedRate:
    def test_constructive_port_reaches_twice_c0(self):
        cfg = make_config(c0=1500.0, visibility=1.0)
        assert expected_rate(cfg, 0.0, 0.0, 0.0, Port.D1) == pytest.approx(3000.0)

    def test_complementary_port_dark(self):
        cfg = make_config(c0=1500.0, visibility=1.0)
        assert expected_rate(cfg, 0.0, 0.0, 0.0, Port.D2) == pytest.approx(0.0)

    def test_quadrature_gives_mean_rate(self):
        cfg = make_config(c0=1500.0, visibility=0.8)
        rate = expected_rate(cfg, 0.0, math.pi / 2.0, 0.0, Port.D1)
        assert rate == pytest.approx(1500.0)

    @given(
        c0=st.floats(1.0, 1e5),
        v=st.floats(0.0, 1.0),
        delta=st.floats(-50.0, 50.0),
    )
    def test_complementarity_exact(self, c0, v, delta):
        # the complement construction leaves at most the final rounding,
        # so the port sum can sit one ulp off 2*c0 for adversarial c0
        cfg = make_config(c0=c0, visibility=v)
        d1 = expected_rate(cfg, 0.0, delta, 0.0, Port.D1)
        d2 = expected_rate(cfg, 0.0, delta, 0.0, Port.D2)
        assert abs((d1 + d2) - 2.0 * c0) <= math.ulp(2.0 * c0)

    @given(v=st.floats(0.0, 1.0), delta=st.floats(-50.0, 50.0))
    def test_bounded_by_fringe_extremes(self, v, delta):
        cfg = make_config(c0=1500.0, visibility=v)
        for port in Port:
            rate = expected_rate(cfg, 0.0, delta, 0.0, port)
            assert 1500.0 * (1.0 - v) - 1e-9 <= rate <= 1500.0 * (1.0 + v) + 1e-9

    @given(delta=st.floats(-20.0, 20.0))
    def test_two_pi_periodic(self, delta):
        cfg = make_config(c0=1500.0, visibility=0.9)
        a = expected_rate(cfg, 0.0, delta, 0.0, Port.D1)
        b = expected_rate(cfg, 0.0, delta + 2.0 * math.pi, 0.0, Port.D1)
        assert a == pytest.approx(b, abs=1e-6)


class TestConfigValidation:
    def test_visibility_above_one_rejected(self):
        with pytest.raises(ValueError):
            make_config(visibility=1.2).validate()

    def test_nonpositive_c0_rejected(self):
        with pytest.raises(ValueError):
            make_config(c0=0.0).validate()

    def test_sine_needs_period(self):
        with pytest.raises(ValueError):
            NoiseConfig(sine_amplitude=1.0, sine_period=0.0).validate()


class TestStepNoise:
    def test_all_terms_off_leaves_phase(self):
        rng = np.random.default_rng(0)
        state = step_noise(PlantState(), NoiseConfig(), rng)
        assert state.phi_noise == 0.0
        assert state.tick == 1

    def test_pure_drift_accumulates(self):
        rng = np.random.default_rng(0)
        state = PlantState()
        cfg = NoiseConfig(drift_rate=0.01)
        for _ in range(100):
            state = step_noise(state, cfg, rng)
        assert state.phi_noise == pytest.approx(1.0)
        assert state.tick == 100

    def test_diffusion_increment_std(self):
        # oracle: sample statistics of the generated increments themselves
        rng = np.random.default_rng(42)
        cfg = NoiseConfig(diffusion=0.05)
        state = PlantState()
        phases = [0.0]
        for _ in range(10_000):
            state = step_noise(state, cfg, rng)
            phases.append(state.phi_noise)
        increments = np.diff(phases)
        assert abs(np.std(increments) - 0.05) / 0.05 < 0.05

    def test_sine_term_round_trips_per_period(self):
        rng = np.random.default_rng(0)
        cfg = NoiseConfig(sine_amplitude=1.3, sine_period=50.0)
        state = PlantState()
        for _ in range(50):
            state = step_noise(state, cfg, rng)
        assert state.phi_noise == pytest.approx(0.0, abs=1e-9)


class TestSampleCounts:
    def test_zero_rate_always_zero(self):
        rng = np.random.default_rng(1)
        assert all(sample_counts(0.0, rng) == 0 for _ in range(100))

    def test_negative_rate_rejected(self):
        with pytest.raises(ValueError):
            sample_counts(-1.0, np.random.default_rng(0))

    def test_poisson_std_matches_sqrt_mean(self):
        # mu = 2645.080 has sigma_p = 51.430
        rng = np.random.default_rng(7)
        samples = [sample_counts(2645.080, rng) for _ in range(10_000)]
        sigma_p = math.sqrt(2645.080)
        assert abs(np.std(samples, ddof=1) - sigma_p) / sigma_p < 0.05

    def test_poisson_mean_within_standard_error(self):
        rng = np.random.default_rng(11)
        n = 10_000
        samples = [sample_counts(366.777, rng) for _ in range(n)]
        se = math.sqrt(366.777 / n)
        assert abs(np.mean(samples) - 366.777) < 3.0 * se


class TestAdvance:
    def test_noiseless_rates_at_lock(self):
        cfg = make_config(c0=1500.0, visibility=1.0, amp_offset=0.0)
        plant = Plant(cfg)
        obs = plant.advance(0, 0, np.random.default_rng(0))
        assert obs.rate_d1 == pytest.approx(3000.0)
        assert obs.rate_d2 == pytest.approx(0.0)

    def test_seeded_runs_identical(self):
        cfg = make_config(noise=NoiseConfig(diffusion=0.1, seed=3))

        def run():
            plant = Plant(cfg)
            rng = np.random.default_rng(5)
            return [plant.advance(10, 20, rng) for _ in range(50)]

        a, b = run(), run()
        assert a == b

    def test_ports_sum_to_twice_c0_each_tick(self):
        cfg = make_config(
            c0=1234.5,
            visibility=0.93,
            noise=NoiseConfig(diffusion=0.2, drift_rate=0.01, seed=9),
        )
        plant = Plant(cfg)
        rng = np.random.default_rng(0)
        word_rng = np.random.default_rng(1)
        for _ in range(1000):
            s1, s2 = word_rng.integers(0, 4096, size=2)
            obs = plant.advance(int(s1), int(s2), rng)
            assert obs.rate_d1 + obs.rate_d2 == 2.0 * cfg.c0

    def test_tick_advances_by_one(self):
        plant = Plant(make_config())
        rng = np.random.default_rng(0)
        for expected in range(1, 20):
            plant.advance(0, 0, rng)
            assert plant.state.tick == expected

    def test_observation_counts_are_bounded_counters(self):
        plant = Plant(make_config())
        rng = np.random.default_rng(0)
        obs = plant.advance(100, 200, rng)
        assert isinstance(obs, Observation)
        for value in (
            obs.counts.cc_tg_d1,
            obs.counts.cc_tg_d2,
            obs.counts.singles_tg,
            obs.counts.singles_d1,
            obs.counts.singles_d2,
        ):
            assert 0 <= value < 2**24
