"""Pure pursuit PD demonstrator driving on ground-truth lane pose.

The controller projects the robot onto the right-lane centerline, picks
the point a fixed arc-length ahead, and steers proportionally to the
bearing error plus a derivative term on its per-step change. Velocity
and gains switch between a straight and a curve regime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import OffRoad
from .geometry import TrackMap, wrap_angle
from .sim import Action, RobotState


@dataclass(frozen=True)
class PurePursuitConfig:
    lookahead: float = 0.25
    v_straight: float = 0.8
    v_curve: float = 0.5
    kp_straight: float = 2.5
    kp_curve: float = 4.0
    kd_straight: float = 1.0
    kd_curve: float = 1.0

    def __post_init__(self):
        if self.lookahead <= 0:
            raise ValueError("lookahead must be > 0")
        for name in ("v_straight", "v_curve"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        for name in ("kp_straight", "kp_curve", "kd_straight", "kd_curve"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


@dataclass(frozen=True)
class ExpertState:
    """Derivative-term memory; invalid right after reset."""

    prev_alpha: float = 0.0
    valid: bool = False


def lookahead_point(track: TrackMap, pose: RobotState, lookahead: float):
    """Point at arc-length `lookahead` past the robot's lane projection."""
    return track.lookahead_point(pose.x, pose.y, pose.heading, lookahead)


def expert_action(pose: RobotState, track: TrackMap,
                  cfg: PurePursuitConfig = PurePursuitConfig(),
                  mem: ExpertState = ExpertState(),
                  strict: bool = True) -> tuple[Action, ExpertState]:
    """One control step. Returns the action and the updated memory.

    With strict=True an off-road pose raises OffRoad; with strict=False
    the nearest lane is used instead (DAgger relabeling visits states
    the expert itself would never reach).
    """
    if strict and not track.on_drivable(pose.x, pose.y):
        raise OffRoad(f"expert queried off-road at ({pose.x:.3f}, {pose.y:.3f})")
    lane = track.lane_pose(pose.x, pose.y, pose.heading)
    idx, s = track.advance(lane.segment, lane.s, cfg.lookahead)
    target = track.segments[idx].point_at(s)
    bearing = math.atan2(target[1] - pose.y, target[0] - pose.x)
    alpha = float(wrap_angle(bearing - pose.heading))

    on_curve = abs(lane.curvature) > 0.0
    kp = cfg.kp_curve if on_curve else cfg.kp_straight
    kd = cfg.kd_curve if on_curve else cfg.kd_straight
    v = cfg.v_curve if on_curve else cfg.v_straight

    d_alpha = (alpha - mem.prev_alpha) if mem.valid else 0.0
    steering = kp * alpha + kd * d_alpha
    return Action(v, steering), ExpertState(prev_alpha=alpha, valid=True)
