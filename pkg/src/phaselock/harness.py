"""Experiment orchestration: configs, scenario runs, paired comparisons.

A run executes the 1 Hz loop (plant advance -> feedback selection ->
controller step -> log) under a timed schedule of events and is fully
determined by (config, seed).  The noise-phase stream and the shot-noise
stream are seeded independently, so the classical and adaptive controllers
of one seed face the identical noise-phase trajectory.

Config files are YAML with nested sections; unknown keys are errors.  The
time-series CSV uses the fixed header
``t,cc_tg_d1,cc_tg_d2,s_ctrl1,s_ctrl2,dp,en_control,target,phi_noise``
preceded by ``# key=value`` provenance lines echoing the resolved config.
"""

from __future__ import annotations

import statistics
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from .calibration import auto_calibrate, CalibrationResult
from .control import (
    AdaptiveParams,
    ControlState,
    FeedbackTarget,
    FixedParams,
    adaptive_po_step,
    adaptive_step_size,
    po_step,
    select_feedback,
)
from .metrics import (
    IntervalSpec,
    noise_stats,
    percent_decrease_noise,
    percent_decrease_time,
    rise_fall_time,
    visibility,
)
from .plant import DAC_MAX, NoiseConfig, Plant, PlantConfig

CSV_HEADER = "t,cc_tg_d1,cc_tg_d2,s_ctrl1,s_ctrl2,dp,en_control,target,phi_noise"

SCHEDULE_ACTIONS = ("control_on", "control_off", "switch_target", "noise_burst")


class ConfigError(ValueError):
    """Configuration file is malformed or fails validation."""


class CalibrationMissingError(ConfigError):
    """Adaptive control requested without circular bounds."""


@dataclass(frozen=True)
class ScheduleEvent:
    tick: int
    action: str
    value: object = None

    def validate(self, duration: int) -> None:
        if self.action not in SCHEDULE_ACTIONS:
            raise ConfigError(
                f"unknown schedule action {self.action!r}; "
                f"expected one of {SCHEDULE_ACTIONS}"
            )
        if not 0 <= self.tick < duration:
            raise ConfigError(
                f"schedule tick {self.tick} outside run duration {duration}"
            )
        if self.action == "switch_target":
            if self.value not in ("TgD1", "TgD2"):
                raise ConfigError(
                    f"switch_target value must be TgD1 or TgD2, got {self.value!r}"
                )
        elif self.action == "noise_burst":
            if not isinstance(self.value, (int, float)):
                raise ConfigError("noise_burst value must be radians (a number)")


@dataclass(frozen=True)
class ControllerConfig:
    kind: str = "adaptive"  # classical | adaptive
    p: int = 50
    beta: int = 50
    shift: int = 3
    i_max: int = 3000

    def validate(self) -> None:
        if self.kind not in ("classical", "adaptive"):
            raise ConfigError(
                f"controller.kind must be classical or adaptive, got {self.kind!r}"
            )


@dataclass(frozen=True)
class ActuatorConfig:
    s1_init: int = 0
    s2_init: int = 850
    drive: str = "st2"  # which stretcher the controller actuates

    def validate(self) -> None:
        if self.drive not in ("st1", "st2"):
            raise ConfigError(f"actuator.drive must be st1 or st2, got {self.drive!r}")
        for name, value in (("s1_init", self.s1_init), ("s2_init", self.s2_init)):
            if not 0 <= value <= DAC_MAX:
                raise ConfigError(f"actuator.{name}={value} outside [0, {DAC_MAX}]")


@dataclass(frozen=True)
class CalibrationConfig:
    s_min: int = 0
    s_max: int = 1700
    file: str | None = None  # calibration record overriding the inline bounds

    def validate(self) -> None:
        if self.file is None and not 0 <= self.s_min < self.s_max <= DAC_MAX:
            raise ConfigError(
                f"calibration bounds must satisfy 0 <= s_min < s_max <= {DAC_MAX}, "
                f"got [{self.s_min}, {self.s_max}]"
            )


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    duration: int = 700
    target: str = "TgD1"
    plant: PlantConfig = field(default_factory=lambda: PlantConfig(
        amp_offset=0.5,
        noise=NoiseConfig(
            diffusion=0.10,
            drift_rate=0.012,
            sine_amplitude=1.8,
            sine_period=167.0,
            seed=7,
        ),
    ))
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    actuator: ActuatorConfig = field(default_factory=ActuatorConfig)
    calibration: CalibrationConfig = field(default_factory=CalibrationConfig)
    schedule: tuple[ScheduleEvent, ...] = (
        ScheduleEvent(tick=454, action="switch_target", value="TgD2"),
        ScheduleEvent(tick=601, action="control_off"),
    )

    def validate(self) -> None:
        if self.duration < 1:
            raise ConfigError(f"duration must be >= 1, got {self.duration}")
        if self.seed < 0:
            raise ConfigError(f"seed must be >= 0, got {self.seed}")
        if self.target not in ("TgD1", "TgD2"):
            raise ConfigError(f"target must be TgD1 or TgD2, got {self.target!r}")
        try:
            self.plant.validate()
        except ValueError as exc:
            raise ConfigError(f"plant: {exc}") from exc
        self.controller.validate()
        self.actuator.validate()
        self.calibration.validate()
        ticks = [ev.tick for ev in self.schedule]
        if ticks != sorted(ticks):
            raise ConfigError("schedule events must be tick-ordered")
        for ev in self.schedule:
            ev.validate(self.duration)


@dataclass(frozen=True)
class TimeSeriesRecord:
    t: int
    cc_tg_d1: int
    cc_tg_d2: int
    s_ctrl1: int
    s_ctrl2: int
    dp: int
    en_control: int
    target: str
    phi_noise: float


# --- config file handling -------------------------------------------------

def _config_to_dict(cfg: ExperimentConfig) -> dict:
    data = asdict(cfg)
    data["schedule"] = [
        {k: v for k, v in asdict(ev).items() if v is not None}
        for ev in cfg.schedule
    ]
    if cfg.calibration.file is None:
        data["calibration"].pop("file")
    return data


def serialize_config(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(_config_to_dict(cfg), sort_keys=True)


def _build_section(section: str, data: dict, defaults):
    known = set(defaults.__dataclass_fields__)
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown key(s) in {section}: {', '.join(sorted(unknown))}")
    return replace(defaults, **data)


def config_from_dict(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    raw = dict(raw)
    defaults = ExperimentConfig()

    plant_data = dict(raw.pop("plant", {}))
    noise_data = dict(plant_data.pop("noise", {}))
    noise = _build_section("plant.noise", noise_data, defaults.plant.noise)
    plant = _build_section("plant", plant_data, defaults.plant)
    plant = replace(plant, noise=noise)

    controller = _build_section(
        "controller", dict(raw.pop("controller", {})), defaults.controller
    )
    actuator = _build_section(
        "actuator", dict(raw.pop("actuator", {})), defaults.actuator
    )
    calibration = _build_section(
        "calibration", dict(raw.pop("calibration", {})), defaults.calibration
    )

    schedule_raw = raw.pop("schedule", None)
    if schedule_raw is None:
        schedule = defaults.schedule
    else:
        events = []
        for item in schedule_raw:
            item = dict(item)
            unknown = set(item) - {"tick", "action", "value"}
            if unknown:
                raise ConfigError(
                    f"unknown key(s) in schedule event: {', '.join(sorted(unknown))}"
                )
            if "tick" not in item or "action" not in item:
                raise ConfigError("schedule events need 'tick' and 'action'")
            events.append(
                ScheduleEvent(
                    tick=int(item["tick"]),
                    action=str(item["action"]),
                    value=item.get("value"),
                )
            )
        schedule = tuple(events)

    top_known = {"seed", "duration", "target"}
    unknown = set(raw) - top_known
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {', '.join(sorted(unknown))}")

    cfg = ExperimentConfig(
        seed=int(raw.get("seed", defaults.seed)),
        duration=int(raw.get("duration", defaults.duration)),
        target=str(raw.get("target", defaults.target)),
        plant=plant,
        controller=controller,
        actuator=actuator,
        calibration=calibration,
        schedule=schedule,
    )
    cfg.validate()
    return cfg


def load_config(path) -> ExperimentConfig:
    """Parse and validate a YAML config file, resolving all defaults."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if raw is None:
        raw = {}
    cfg = config_from_dict(raw)
    if cfg.calibration.file is not None:
        record = read_calibration_record(cfg.calibration.file)
        cfg = replace(
            cfg,
            calibration=CalibrationConfig(
                s_min=record["s_min"], s_max=record["s_max"], file=cfg.calibration.file
            ),
        )
        cfg.validate()
    return cfg


def write_calibration_record(path, result: CalibrationResult, seed: int,
                             timestamp: str) -> None:
    payload = {
        "s_min": result.s_min,
        "s_max": result.s_max,
        "gain_estimate": result.gain_estimate,
        "timestamp": timestamp,
        "seed": seed,
    }
    Path(path).write_text(yaml.safe_dump(payload, sort_keys=True), encoding="utf-8")


def read_calibration_record(path) -> dict:
    p = Path(path)
    if not p.exists():
        raise CalibrationMissingError(f"calibration record not found: {path}")
    record = yaml.safe_load(p.read_text(encoding="utf-8"))
    if not isinstance(record, dict) or not {"s_min", "s_max"} <= set(record):
        raise CalibrationMissingError(
            f"calibration record {path} must contain s_min and s_max"
        )
    return record


# --- running --------------------------------------------------------------

def _streams(cfg: ExperimentConfig, seed: int):
    """Independent RNG streams: noise realization and shot noise."""
    noise_rng = np.random.default_rng(
        np.random.SeedSequence([cfg.plant.noise.seed, seed, 0])
    )
    shot_rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
    return noise_rng, shot_rng


def controller_params(cfg: ExperimentConfig):
    if cfg.controller.kind == "classical":
        params = FixedParams(p=cfg.controller.p)
    else:
        params = AdaptiveParams(
            beta=cfg.controller.beta,
            shift=cfg.controller.shift,
            i_max=cfg.controller.i_max,
            s_min=cfg.calibration.s_min,
            s_max=cfg.calibration.s_max,
        )
    params.validate()
    return params


def run_experiment(cfg: ExperimentConfig, seed: int | None = None) -> list[TimeSeriesRecord]:
    """Execute one seeded scenario and return its per-tick records.

    When the schedule disables control the sync pulse is withheld from the
    controller, so the control word stays frozen for those ticks.
    """
    cfg.validate()
    run_seed = cfg.seed if seed is None else seed
    noise_rng, shot_rng = _streams(cfg, run_seed)
    plant = Plant(cfg.plant, noise_rng=noise_rng)
    params = controller_params(cfg)
    adaptive = cfg.controller.kind == "adaptive"

    s_held = cfg.actuator.s1_init if cfg.actuator.drive == "st2" else cfg.actuator.s2_init
    state = ControlState(
        s_ctrl=cfg.actuator.s2_init if cfg.actuator.drive == "st2" else cfg.actuator.s1_init
    )
    target = FeedbackTarget(cfg.target)
    enabled = True
    by_tick: dict[int, list[ScheduleEvent]] = {}
    for ev in cfg.schedule:
        by_tick.setdefault(ev.tick, []).append(ev)

    records: list[TimeSeriesRecord] = []
    for t in range(cfg.duration):
        for ev in by_tick.get(t, ()):
            if ev.action == "control_on":
                enabled = True
            elif ev.action == "control_off":
                enabled = False
            elif ev.action == "switch_target":
                target = FeedbackTarget(ev.value)
            elif ev.action == "noise_burst":
                plant.inject_phase(float(ev.value))
        state = replace(state, en_control=enabled)

        if cfg.actuator.drive == "st2":
            s1, s2 = s_held, state.s_ctrl
        else:
            s1, s2 = state.s_ctrl, s_held
        obs = plant.advance(s1, s2, shot_rng)
        feedback = select_feedback(obs.counts, target)

        if enabled:
            dp = adaptive_step_size(feedback, params) if adaptive else params.p
            step = adaptive_po_step if adaptive else po_step
            state = step(state, feedback, params)
        else:
            dp = 0

        records.append(
            TimeSeriesRecord(
                t=t,
                cc_tg_d1=obs.counts.cc_tg_d1,
                cc_tg_d2=obs.counts.cc_tg_d2,
                s_ctrl1=s1,
                s_ctrl2=s2,
                dp=dp,
                en_control=int(enabled),
                target=target.value,
                phi_noise=plant.state.phi_noise,
            )
        )
    return records


def _provenance_lines(cfg: ExperimentConfig, seed: int) -> list[str]:
    lines = [f"# seed={seed}"]
    flat = yaml.safe_dump(_config_to_dict(cfg), sort_keys=True,
                          default_flow_style=True, width=10**6).strip()
    lines.append(f"# config={flat}")
    return lines


def write_timeseries_csv(path, records: list[TimeSeriesRecord],
                         cfg: ExperimentConfig, seed: int) -> None:
    lines = _provenance_lines(cfg, seed)
    lines.append(CSV_HEADER)
    for r in records:
        lines.append(
            f"{r.t},{r.cc_tg_d1},{r.cc_tg_d2},{r.s_ctrl1},{r.s_ctrl2},"
            f"{r.dp},{r.en_control},{r.target},{r.phi_noise!r}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def read_timeseries_csv(path) -> dict[str, np.ndarray]:
    """Load a run CSV back into column arrays (provenance lines skipped)."""
    lines = [
        line
        for line in Path(path).read_text(encoding="utf-8").splitlines()
        if line and not line.startswith("#")
    ]
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError(f"{path} does not carry the expected header {CSV_HEADER!r}")
    columns = CSV_HEADER.split(",")
    data: dict[str, list] = {name: [] for name in columns}
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) != len(columns):
            raise ValueError(f"malformed row in {path}: {line!r}")
        for name, part in zip(columns, parts):
            data[name].append(part)
    out: dict[str, np.ndarray] = {}
    for name in columns:
        if name == "target":
            out[name] = np.asarray(data[name])
        elif name == "phi_noise":
            out[name] = np.asarray(data[name], dtype=float)
        else:
            out[name] = np.asarray(data[name], dtype=int)
    return out


# --- comparison -----------------------------------------------------------

@dataclass(frozen=True)
class SeedComparison:
    seed: int
    rise_classical: float
    rise_adaptive: float
    delta_t_percent: float
    sigma_classical: float
    sigma_adaptive: float
    delta_sigma_percent: float
    cv_classical: float
    cv_adaptive: float
    visibility_classical: float
    visibility_adaptive: float


@dataclass(frozen=True)
class ComparisonReport:
    rows: tuple[SeedComparison, ...]
    transition: IntervalSpec
    steady_windows: tuple[tuple[IntervalSpec, str], ...]

    @property
    def mean_delta_t_percent(self) -> float:
        return statistics.fmean(r.delta_t_percent for r in self.rows)

    @property
    def mean_delta_sigma_percent(self) -> float:
        return statistics.fmean(r.delta_sigma_percent for r in self.rows)

    @property
    def frac_rise_improved(self) -> float:
        return statistics.fmean(
            r.rise_adaptive < r.rise_classical for r in self.rows
        )

    @property
    def frac_cv_improved(self) -> float:
        return statistics.fmean(r.cv_adaptive < r.cv_classical for r in self.rows)

    @property
    def frac_visibility_improved(self) -> float:
        return statistics.fmean(
            r.visibility_adaptive >= r.visibility_classical for r in self.rows
        )


def _switch_tick(cfg: ExperimentConfig) -> int | None:
    for ev in cfg.schedule:
        if ev.action == "switch_target":
            return ev.tick
    return None


def _control_off_tick(cfg: ExperimentConfig) -> int:
    for ev in cfg.schedule:
        if ev.action == "control_off":
            return ev.tick
    return cfg.duration


def default_analysis_windows(
    cfg: ExperimentConfig,
) -> tuple[IntervalSpec, tuple[tuple[IntervalSpec, str], ...]]:
    """Transition interval and steady-state windows implied by the schedule.

    The transition interval brackets the target switch (short pre-switch
    baseline, post-switch tail); steady windows are the locked stretches
    before the switch and after re-locking, each on its locked-high channel.
    """
    switch = _switch_tick(cfg)
    off = _control_off_tick(cfg)
    if switch is None:
        raise ConfigError("schedule has no switch_target event to analyze")
    transition = IntervalSpec(switch - 4, min(switch + 76, off - 1))
    first_high = "cc_tg_d1" if cfg.target == "TgD1" else "cc_tg_d2"
    second_high = "cc_tg_d2" if first_high == "cc_tg_d1" else "cc_tg_d1"
    steady = (
        (IntervalSpec(150, switch - 5), first_high),
        (IntervalSpec(switch + 46, off - 1), second_high),
    )
    return transition, steady


def _other_channel(name: str) -> str:
    return "cc_tg_d2" if name == "cc_tg_d1" else "cc_tg_d1"


def _window_visibility(high, low) -> float:
    """Fringe contrast of a steady window; 0 when lock was lost entirely."""
    try:
        return visibility(high, low)
    except ValueError:
        return 0.0


def compare_algorithms(cfg: ExperimentConfig, seeds: list[int]) -> ComparisonReport:
    """Run classical and adaptive on identical noise realizations per seed.

    The controller choice is the only difference inside a seed; rise times
    are measured on the post-switch channel, noise figures on the locked-high
    channel of each steady window, visibility from the locked-high/low pair.
    """
    if len(seeds) < 2:
        raise ValueError("need at least 2 seeds for a comparison")
    transition, steady = default_analysis_windows(cfg)
    post_channel = "cc_tg_d2" if cfg.target == "TgD1" else "cc_tg_d1"

    rows = []
    for seed in seeds:
        runs = {}
        for kind in ("classical", "adaptive"):
            run_cfg = replace(cfg, controller=replace(cfg.controller, kind=kind))
            records = run_experiment(run_cfg, seed=seed)
            runs[kind] = {
                "cc_tg_d1": np.array([r.cc_tg_d1 for r in records]),
                "cc_tg_d2": np.array([r.cc_tg_d2 for r in records]),
                "phi_noise": np.array([r.phi_noise for r in records]),
            }
        assert np.array_equal(runs["classical"]["phi_noise"],
                              runs["adaptive"]["phi_noise"]), "paired seeds must share phi_noise"

        rise = {
            kind: rise_fall_time(runs[kind][post_channel], transition).duration
            for kind in runs
        }
        sigma = {}
        cv = {}
        vis = {}
        for kind in runs:
            stats = [
                noise_stats(runs[kind][channel], window)
                for window, channel in steady
            ]
            sigma[kind] = statistics.fmean(s.std for s in stats)
            cv[kind] = statistics.fmean(s.cv for s in stats)
            vis[kind] = statistics.fmean(
                _window_visibility(
                    runs[kind][channel][int(w.t_start): int(w.t_end) + 1],
                    runs[kind][_other_channel(channel)][int(w.t_start): int(w.t_end) + 1],
                )
                for w, channel in steady
            )
        rows.append(
            SeedComparison(
                seed=seed,
                rise_classical=rise["classical"],
                rise_adaptive=rise["adaptive"],
                delta_t_percent=percent_decrease_time(
                    rise["classical"], rise["adaptive"]
                ) if rise["classical"] > 0 else 0.0,
                sigma_classical=sigma["classical"],
                sigma_adaptive=sigma["adaptive"],
                delta_sigma_percent=percent_decrease_noise(
                    sigma["classical"], sigma["adaptive"]
                ),
                cv_classical=cv["classical"],
                cv_adaptive=cv["adaptive"],
                visibility_classical=vis["classical"],
                visibility_adaptive=vis["adaptive"],
            )
        )
    return ComparisonReport(
        rows=tuple(rows), transition=transition, steady_windows=steady
    )


def comparison_csv(report: ComparisonReport) -> str:
    header = (
        "seed,rise_classical,rise_adaptive,delta_t_percent,"
        "sigma_classical,sigma_adaptive,delta_sigma_percent,"
        "cv_classical,cv_adaptive,visibility_classical,visibility_adaptive"
    )
    lines = [header]
    for r in report.rows:
        lines.append(
            f"{r.seed},{r.rise_classical:.3f},{r.rise_adaptive:.3f},"
            f"{r.delta_t_percent:.2f},{r.sigma_classical:.3f},"
            f"{r.sigma_adaptive:.3f},{r.delta_sigma_percent:.2f},"
            f"{r.cv_classical:.4f},{r.cv_adaptive:.4f},"
            f"{r.visibility_classical:.4f},{r.visibility_adaptive:.4f}"
        )
    return "\n".join(lines) + "\n"


def comparison_summary(report: ComparisonReport) -> str:
    n = len(report.rows)
    rc = [r.rise_classical for r in report.rows]
    ra = [r.rise_adaptive for r in report.rows]
    lines = [
        f"paired seeds: {n}",
        f"transition window: [{report.transition.t_start:.0f}, "
        f"{report.transition.t_end:.0f}] s",
        (
            f"rise time 10-90%: classical {statistics.fmean(rc):.2f} "
            f"+/- {statistics.stdev(rc):.2f} s, adaptive "
            f"{statistics.fmean(ra):.2f} +/- {statistics.stdev(ra):.2f} s"
        ),
        f"mean delta_t: {report.mean_delta_t_percent:+.1f} %  "
        f"(adaptive faster in {100 * report.frac_rise_improved:.0f}% of seeds)",
        f"mean delta_sigma: {report.mean_delta_sigma_percent:+.1f} %",
        f"adaptive CV lower in {100 * report.frac_cv_improved:.0f}% of seeds",
        f"adaptive visibility >= classical in "
        f"{100 * report.frac_visibility_improved:.0f}% of seeds",
    ]
    return "\n".join(lines) + "\n"


def make_calibration_probe(cfg: ExperimentConfig, seed: int | None = None):
    """Plant probe for auto-calibration: one window per control word.

    The sweep requires a phase-quiet plant, so the slow noise process is
    disabled for its duration; shot noise stays active.
    """
    run_seed = cfg.seed if seed is None else seed
    quiet = replace(
        cfg.plant, noise=NoiseConfig(seed=cfg.plant.noise.seed)
    )
    noise_rng, shot_rng = _streams(cfg, run_seed)
    plant = Plant(quiet, noise_rng=noise_rng)
    held = cfg.actuator.s1_init if cfg.actuator.drive == "st2" else cfg.actuator.s2_init
    target = FeedbackTarget(cfg.target)

    def probe(s_ctrl: int) -> float:
        if cfg.actuator.drive == "st2":
            obs = plant.advance(held, s_ctrl, shot_rng)
        else:
            obs = plant.advance(s_ctrl, held, shot_rng)
        return float(select_feedback(obs.counts, target))

    return probe


def calibrate_from_config(cfg: ExperimentConfig, seed: int | None = None) -> CalibrationResult:
    probe = make_calibration_probe(cfg, seed)
    return auto_calibrate(probe)
