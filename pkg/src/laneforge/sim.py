"""Differential-drive simulation core.

Kinematics are an ideal unicycle integrated by exact circular arcs, so a
constant command gives step-size-invariant trajectories. Domain
randomization draws every simulation parameter uniformly from a
configured range at reset time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from enum import Enum

import numpy as np

from .errors import InvalidRange, NoMapsRegistered, SteppedAfterDone
from .geometry import LanePose, TrackMap, wrap_angle

EPISODE_SECONDS = 15.0


def _clamp(v, lo, hi):
    return lo if v < lo else hi if v > hi else v


@dataclass(frozen=True)
class Action:
    """Network-level command. Fields are clamped at construction."""

    throttle: float
    steering: float

    def __post_init__(self):
        object.__setattr__(self, "throttle", _clamp(float(self.throttle), 0.0, 1.0))
        object.__setattr__(self, "steering", _clamp(float(self.steering), -1.0, 1.0))


@dataclass(frozen=True)
class PwmSignals:
    """Wheel-level command. Fields are clamped at construction."""

    left: float
    right: float

    def __post_init__(self):
        object.__setattr__(self, "left", _clamp(float(self.left), -1.0, 1.0))
        object.__setattr__(self, "right", _clamp(float(self.right), -1.0, 1.0))


def action_to_pwm(a: Action) -> PwmSignals:
    """Mix throttle/steering into wheel PWM.

    Positive steering speeds up the right wheel, turning the robot left.
    """
    return PwmSignals(a.throttle - a.steering / 2.0,
                      a.throttle + a.steering / 2.0)


@dataclass(frozen=True)
class RobotState:
    x: float = 0.0
    y: float = 0.0
    heading: float = 0.0
    v_left: float = 0.0
    v_right: float = 0.0
    t: float = 0.0


@dataclass(frozen=True)
class SimParams:
    wheel_base: float = 0.102
    wheel_gain: float = 1.2
    cam_height: float = 0.11
    cam_pitch: float = 0.25
    cam_fov: float = 1.6
    light_intensity: float = 1.0
    road_color: tuple = (0.25, 0.25, 0.27)
    lane_white: tuple = (0.85, 0.85, 0.85)
    lane_yellow: tuple = (0.85, 0.75, 0.10)
    sky_color: tuple = (0.35, 0.55, 0.85)
    grass_color: tuple = (0.15, 0.45, 0.15)
    friction_scale: float = 1.0
    dt: float = 1.0 / 30.0


NOMINAL_PARAMS = SimParams()

_SCALAR_FIELDS = ("wheel_base", "wheel_gain", "cam_height", "cam_pitch",
                  "cam_fov", "light_intensity", "friction_scale")
_COLOR_FIELDS = ("road_color", "lane_white", "lane_yellow", "sky_color",
                 "grass_color")


def default_dr_ranges() -> dict:
    """Nominal DR ranges: strong visual variation, mild physical variation."""
    rng = {
        "wheel_base": (0.095, 0.11),
        "wheel_gain": (1.05, 1.35),
        "cam_height": (0.095, 0.125),
        "cam_pitch": (0.20, 0.30),
        "cam_fov": (1.45, 1.75),
        "light_intensity": (0.55, 1.45),
        "friction_scale": (0.88, 1.12),
    }
    for name in _COLOR_FIELDS:
        nominal = np.array(getattr(NOMINAL_PARAMS, name))
        lo = np.clip(nominal - 0.12, 0.0, 1.0)
        hi = np.clip(nominal + 0.12, 0.0, 1.0)
        rng[name] = (tuple(lo), tuple(hi))
    return rng


def sample_domain_randomization(seed, dr_ranges: dict | None = None,
                                enabled: bool = True) -> SimParams:
    """Draw SimParams uniformly from the configured ranges.

    With DR disabled (or no ranges given) the fixed nominal parameters
    come back, independent of the seed. Identical seed and config give
    identical parameters.
    """
    if not enabled or dr_ranges is None:
        return NOMINAL_PARAMS
    for name, rng in dr_ranges.items():
        lo, hi = np.asarray(rng[0], float), np.asarray(rng[1], float)
        if np.any(lo > hi):
            raise InvalidRange(f"range for {name!r} is reversed: {rng}")
    gen = np.random.default_rng(seed)
    out = {}
    for name in _SCALAR_FIELDS:
        if name in dr_ranges:
            lo, hi = dr_ranges[name]
            out[name] = float(gen.uniform(lo, hi))
    for name in _COLOR_FIELDS:
        if name in dr_ranges:
            lo = np.asarray(dr_ranges[name][0], float)
            hi = np.asarray(dr_ranges[name][1], float)
            out[name] = tuple(float(v) for v in gen.uniform(lo, hi))
    return replace(NOMINAL_PARAMS, **out)


class DoneReason(Enum):
    RUNNING = "running"
    OFF_ROAD = "off_road"
    TIME_LIMIT = "time_limit"


@dataclass(frozen=True)
class StepResult:
    state: RobotState
    lane_pose: LanePose
    done: bool
    done_reason: DoneReason


def integrate_unicycle(x, y, heading, v, omega, dt):
    """Exact-arc update of a unicycle pose over one interval."""
    if abs(omega) < 1e-9:
        return (x + v * math.cos(heading) * dt,
                y + v * math.sin(heading) * dt,
                float(wrap_angle(heading + omega * dt)))
    r = v / omega
    h2 = heading + omega * dt
    return (x + r * (math.sin(h2) - math.sin(heading)),
            y - r * (math.cos(h2) - math.cos(heading)),
            float(wrap_angle(h2)))


class Environment:
    """Gym-style episode loop over a set of registered maps.

    One instance is owned by a single thread of control; run several
    instances for parallel collection.
    """

    def __init__(self, maps: list[TrackMap],
                 episode_seconds: float = EPISODE_SECONDS,
                 dr_ranges: dict | None = None,
                 spawn_d_max: float = 0.05, spawn_phi_max: float = 0.2,
                 terminate_off_road: bool = True):
        self.maps = list(maps)
        self.episode_seconds = episode_seconds
        self.dr_ranges = dr_ranges if dr_ranges is not None else default_dr_ranges()
        self.spawn_d_max = spawn_d_max
        self.spawn_phi_max = spawn_phi_max
        self.terminate_off_road = terminate_off_road
        self.track: TrackMap | None = None
        self.params: SimParams = NOMINAL_PARAMS
        self.state: RobotState = RobotState()
        self._steps = 0
        self._done = True

    @property
    def max_steps(self) -> int:
        return round(self.episode_seconds / self.params.dt)

    @property
    def done(self) -> bool:
        return self._done

    def reset(self, seed, map_choice: str | int = "random",
              dr: bool = False) -> tuple[RobotState, SimParams]:
        """Start an episode: pick a map, sample params, spawn in-lane."""
        if not self.maps:
            raise NoMapsRegistered("environment has no maps registered")
        gen = np.random.default_rng(seed)
        if map_choice == "random":
            self.track = self.maps[int(gen.integers(len(self.maps)))]
        elif isinstance(map_choice, int):
            self.track = self.maps[map_choice]
        else:
            by_name = {m.name: m for m in self.maps}
            self.track = by_name[map_choice]
        self.params = sample_domain_randomization(
            int(gen.integers(2 ** 63)), self.dr_ranges, enabled=dr)

        lengths = np.array([s.length for s in self.track.segments])
        seg = int(gen.choice(len(lengths), p=lengths / lengths.sum()))
        s = float(gen.uniform(0.0, lengths[seg]))
        d = float(gen.uniform(-self.spawn_d_max, self.spawn_d_max))
        phi = float(gen.uniform(-self.spawn_phi_max, self.spawn_phi_max))
        piece = self.track.segments[seg]
        q = piece.point_at(s)
        tang = piece.tangent_at(s)
        left = np.array([-tang[1], tang[0]])
        p = q + d * left
        heading = float(wrap_angle(math.atan2(tang[1], tang[0]) + phi))
        self.state = RobotState(x=float(p[0]), y=float(p[1]), heading=heading)
        self._steps = 0
        self._done = False
        return self.state, self.params

    def step(self, pwm: PwmSignals) -> StepResult:
        if self._done:
            raise SteppedAfterDone("episode is finished; call reset()")
        p = self.params
        v_l = p.wheel_gain * p.friction_scale * pwm.left
        v_r = p.wheel_gain * p.friction_scale * pwm.right
        v = 0.5 * (v_l + v_r)
        omega = (v_r - v_l) / p.wheel_base
        st = self.state
        x, y, heading = integrate_unicycle(st.x, st.y, st.heading, v, omega, p.dt)
        self._steps += 1
        t = self._steps * p.dt
        self.state = RobotState(x=x, y=y, heading=heading,
                                v_left=v_l, v_right=v_r, t=t)
        lane = self.track.lane_pose(x, y, heading)
        reason = DoneReason.RUNNING
        if self.terminate_off_road and not lane.on_drivable:
            reason = DoneReason.OFF_ROAD
        elif self._steps >= self.max_steps:
            reason = DoneReason.TIME_LIMIT
        self._done = reason is not DoneReason.RUNNING
        return StepResult(self.state, lane, self._done, reason)

    def act(self, action: Action) -> StepResult:
        """Convenience: convert an Action and step."""
        return self.step(action_to_pwm(action))
