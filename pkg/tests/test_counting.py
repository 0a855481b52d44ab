import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phaselock.counting import (
    COUNTER_MASK,
    Channel,
    CountReport,
    DelayConfig,
    PulseEvent,
    WindowAccumulator,
    apply_delay,
    count_coincidences,
    events_from_csv,
    events_to_csv,
    synthesize_window_events,
)
from phaselock.plant import NoiseConfig, Plant, PlantConfig


def make_events(times_by_channel: dict[Channel, list[int]]) -> list[PulseEvent]:
    events = [
        PulseEvent(channel, t // 256, t % 256)
        for channel, times in times_by_channel.items()
        for t in times
    ]
    events.sort(key=lambda ev: ev.time)
    return events


# --- independent oracles ---------------------------------------------------

def oracle_shift(events, cfg: DelayConfig):
    """Scalar re-derivation of apply_delay on absolute times."""
    delays = {Channel.TG: cfg.delay_tg, Channel.D1: cfg.delay_d1,
              Channel.D2: cfg.delay_d2}
    out, dropped = [], 0
    for ev in events:
        t = ev.cycle * 256 + ev.toa + delays[ev.channel]
        if t < 0:
            dropped += 1
        else:
            out.append((t, ev.channel))
    out.sort(key=lambda item: item[0])
    return out, dropped


def oracle_pair_count_naive(times_a, times_b, window):
    """Literal quadratic earliest-first matcher, no shortcuts."""
    matched_b = [False] * len(times_b)
    count = 0
    for ta in times_a:
        for j, tb in enumerate(times_b):
            if not matched_b[j] and abs(ta - tb) <= window:
                matched_b[j] = True
                count += 1
                break
    return count


def oracle_pair_count_fast(times_a, times_b, window):
    """Same policy via vectorized candidate windows (for large streams)."""
    tb = np.asarray(times_b)
    matched = np.zeros(len(times_b), dtype=bool)
    lo = np.searchsorted(tb, np.asarray(times_a) - window, side="left")
    hi = np.searchsorted(tb, np.asarray(times_a) + window, side="right")
    count = 0
    for i in range(len(times_a)):
        for j in range(lo[i], hi[i]):
            if not matched[j]:
                matched[j] = True
                count += 1
                break
    return count


def oracle_report(events, window):
    times = {ch: [ev.time for ev in events if ev.channel is ch] for ch in Channel}
    return CountReport(
        singles_tg=len(times[Channel.TG]) & COUNTER_MASK,
        singles_d1=len(times[Channel.D1]) & COUNTER_MASK,
        singles_d2=len(times[Channel.D2]) & COUNTER_MASK,
        cc_tg_d1=oracle_pair_count_fast(times[Channel.TG], times[Channel.D1], window),
        cc_tg_d2=oracle_pair_count_fast(times[Channel.TG], times[Channel.D2], window),
        cc_d1_d2=oracle_pair_count_fast(times[Channel.D1], times[Channel.D2], window),
    )


def random_stream(rng, n_events, max_time):
    channels = [Channel.TG, Channel.D1, Channel.D2]
    times = rng.integers(0, max_time, size=n_events)
    picks = rng.integers(0, 3, size=n_events)
    events = [
        PulseEvent(channels[p], int(t) // 256, int(t) % 256)
        for p, t in zip(picks, times)
    ]
    events.sort(key=lambda ev: ev.time)
    return events


class TestPulseEvent:
    def test_toa_must_fit_8_bits(self):
        with pytest.raises(ValueError):
            PulseEvent(Channel.TG, 0, 256)

    def test_time_composition(self):
        assert PulseEvent(Channel.D1, 3, 250).time == 3 * 256 + 250


class TestApplyDelay:
    def test_zero_delay_is_identity(self):
        events = random_stream(np.random.default_rng(0), 200, 10_000)
        shifted, dropped = apply_delay(events, DelayConfig())
        assert shifted == events
        assert dropped == 0

    def test_carry_into_cycle(self):
        shifted, _ = apply_delay(
            [PulseEvent(Channel.D1, 3, 250)], DelayConfig(delay_d1=10)
        )
        assert shifted == [PulseEvent(Channel.D1, 4, 4)]

    def test_negative_time_drops_and_tallies(self):
        events = make_events({Channel.TG: [5, 500]})
        shifted, dropped = apply_delay(events, DelayConfig(delay_tg=-100))
        assert dropped == 1
        assert [ev.time for ev in shifted] == [400]

    def test_unsorted_input_rejected(self):
        events = [PulseEvent(Channel.TG, 1, 0), PulseEvent(Channel.TG, 0, 0)]
        with pytest.raises(ValueError):
            apply_delay(events, DelayConfig())

    def test_matches_scalar_shift_oracle_on_random_streams(self):
        rng = np.random.default_rng(42)
        for _ in range(20):
            events = random_stream(rng, 1000, 50_000)
            cfg = DelayConfig(*(int(d) for d in rng.integers(-600, 600, size=3)))
            shifted, dropped = apply_delay(events, cfg)
            expected, expected_dropped = oracle_shift(events, cfg)
            assert dropped == expected_dropped
            assert [(ev.time, ev.channel) for ev in shifted] == expected


class TestCountCoincidences:
    def test_empty_stream_all_zero(self):
        report = count_coincidences([], window=1)
        assert report == CountReport()

    @pytest.mark.parametrize("window", [0, 1, 5])
    def test_boundary_inclusive(self, window):
        events = make_events({Channel.TG: [100], Channel.D1: [100 + window]})
        assert count_coincidences(events, window).cc_tg_d1 == 1
        events = make_events({Channel.TG: [100], Channel.D1: [100 + window + 1]})
        assert count_coincidences(events, window).cc_tg_d1 == 0

    def test_one_pairing_per_event(self):
        # two D1 arrivals inside one Tg window: only one pairing allowed
        events = make_events({Channel.TG: [100], Channel.D1: [100, 101]})
        assert count_coincidences(events, window=5).cc_tg_d1 == 1

    def test_unsorted_input_rejected(self):
        events = [PulseEvent(Channel.TG, 1, 0), PulseEvent(Channel.D1, 0, 0)]
        with pytest.raises(ValueError):
            count_coincidences(events, window=1)

    def test_negative_window_rejected(self):
        with pytest.raises(ValueError):
            count_coincidences([], window=-1)

    def test_matches_naive_oracle_small_streams(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            events = random_stream(rng, int(rng.integers(0, 300)), 4000)
            window = int(rng.integers(0, 8))
            report = count_coincidences(events, window)
            times = {
                ch: [ev.time for ev in events if ev.channel is ch] for ch in Channel
            }
            assert report.cc_tg_d1 == oracle_pair_count_naive(
                times[Channel.TG], times[Channel.D1], window
            )
            assert report.cc_tg_d2 == oracle_pair_count_naive(
                times[Channel.TG], times[Channel.D2], window
            )
            assert report.cc_d1_d2 == oracle_pair_count_naive(
                times[Channel.D1], times[Channel.D2], window
            )

    @settings(max_examples=50, deadline=None)
    @given(
        times=st.lists(st.integers(0, 2000), max_size=120),
        picks=st.lists(st.integers(0, 2), min_size=120, max_size=120),
        window=st.integers(0, 6),
    )
    def test_matches_naive_oracle_property(self, times, picks, window):
        channels = [Channel.TG, Channel.D1, Channel.D2]
        events = sorted(
            (
                PulseEvent(channels[p], t // 256, t % 256)
                for p, t in zip(picks, times)
            ),
            key=lambda ev: ev.time,
        )
        report = count_coincidences(events, window)
        expected = oracle_report(events, window)
        assert report == expected

    @settings(max_examples=30, deadline=None)
    @given(
        shift=st.integers(0, 3000),
        seed=st.integers(0, 1000),
        window=st.integers(0, 4),
    )
    def test_uniform_delay_leaves_coincidences(self, shift, seed, window):
        events = random_stream(np.random.default_rng(seed), 150, 20_000)
        cfg = DelayConfig(delay_tg=shift, delay_d1=shift, delay_d2=shift)
        shifted, dropped = apply_delay(events, cfg)
        assert dropped == 0
        before = count_coincidences(events, window)
        after = count_coincidences(shifted, window)
        assert (before.cc_tg_d1, before.cc_tg_d2, before.cc_d1_d2) == (
            after.cc_tg_d1,
            after.cc_tg_d2,
            after.cc_d1_d2,
        )

    def test_coincidences_bounded_by_singles(self):
        rng = np.random.default_rng(9)
        events = random_stream(rng, 2000, 100_000)
        report = count_coincidences(events, window=3)
        assert report.cc_tg_d1 <= min(report.singles_tg, report.singles_d1)
        assert report.cc_tg_d2 <= min(report.singles_tg, report.singles_d2)
        assert report.cc_d1_d2 <= min(report.singles_d1, report.singles_d2)


class TestWindowAccumulator:
    def test_disjoint_windows_stay_separate(self):
        acc = WindowAccumulator()
        acc.add(CountReport(singles_tg=5, cc_tg_d1=2))
        first = acc.close()
        acc.add(CountReport(singles_tg=7, cc_tg_d1=1))
        second = acc.close()
        assert (first.singles_tg, first.cc_tg_d1, first.window_index) == (5, 2, 0)
        assert (second.singles_tg, second.cc_tg_d1, second.window_index) == (7, 1, 1)

    def test_counter_wraps_mod_2_24(self):
        acc = WindowAccumulator()
        acc.add(CountReport(singles_tg=COUNTER_MASK))
        acc.add(CountReport(singles_tg=1))
        assert acc.close().singles_tg == 0

    def test_singles_conserved_over_run(self):
        rng = np.random.default_rng(4)
        acc = WindowAccumulator()
        generated = 0
        total = 0
        for window in range(20):
            events = random_stream(rng, int(rng.integers(0, 400)), 30_000)
            generated += sum(ev.channel is Channel.TG for ev in events)
            acc.add(count_coincidences(events, window=1))
            total += acc.close().singles_tg
        assert total == generated


class TestRatePathConsistency:
    def test_event_path_matches_rate_path_means(self):
        cfg = PlantConfig(
            c0=60.0,
            visibility=0.8,
            singles_tg=10.0,
            singles_d1=8.0,
            singles_d2=8.0,
            noise=NoiseConfig(diffusion=0.05, seed=21),
        )
        plant = Plant(cfg)
        shot_rng = np.random.default_rng(100)
        event_rng = np.random.default_rng(200)
        windows = 1000
        rate_path = {"d1": 0, "d2": 0}
        event_path = {"d1": 0, "d2": 0}
        for w in range(windows):
            obs = plant.advance(500, 700, shot_rng)
            rate_path["d1"] += obs.counts.cc_tg_d1
            rate_path["d2"] += obs.counts.cc_tg_d2
            events = synthesize_window_events(
                event_rng,
                window_index=w,
                pair_rate_d1=obs.rate_d1,
                pair_rate_d2=obs.rate_d2,
                background_tg=cfg.singles_tg,
                background_d1=cfg.singles_d1,
                background_d2=cfg.singles_d2,
            )
            report = count_coincidences(events, window=1, window_index=w)
            event_path["d1"] += report.cc_tg_d1
            event_path["d2"] += report.cc_tg_d2
        for key in ("d1", "d2"):
            mean_rate = rate_path[key] / windows
            mean_event = event_path[key] / windows
            assert abs(mean_event - mean_rate) / mean_rate < 0.05


class TestEventCsv:
    def test_round_trip(self):
        events = random_stream(np.random.default_rng(0), 50, 5000)
        assert events_from_csv(events_to_csv(events)) == events

    def test_bad_header_rejected(self):
        with pytest.raises(ValueError):
            events_from_csv("nope\nTg,0,0\n")
