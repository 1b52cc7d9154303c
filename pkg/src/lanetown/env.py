"""Differential-drive vehicle, reward computation, and the episode loop.

The simulator minus rendering: poses advance by exact unicycle (arc)
integration, rewards follow the lane-keeping formula, and episodes end on
leaving the track or hitting the step cap. Observations are produced by an
optional observer callback so vision stays decoupled from dynamics.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .track import LaneInfo, TrackMap

# Discrete action set: wheel-speed pairs for (left-turn, right-turn, straight).
ACTION_WHEEL_SPEEDS = ((0.04, 0.4), (0.4, 0.04), (0.3, 0.3))
N_ACTIONS = len(ACTION_WHEEL_SPEEDS)

OFF_TRACK_REWARD = -40.0


@dataclass(frozen=True)
class VehicleState:
    x: float
    y: float
    heading: float  # radians in (-pi, pi]
    last_wheel_cmd: tuple[float, float] = (0.0, 0.0)


@dataclass(frozen=True)
class RewardInputs:
    speed: float
    dist: float
    dot_dir: float
    col_pen: float = 0.0


@dataclass(frozen=True)
class KinematicsConfig:
    gain: float = 1.0  # units/s at full wheel command
    baseline: float = 0.1  # wheel separation, units
    dt: float = 1.0 / 30.0  # one env step per camera frame


@dataclass(frozen=True)
class SpawnConfig:
    """Random-spawn jitter around a lane centerline, plus rejection rules.

    Poses are rejected when off the road, or within `boundary_margin` of
    the road boundary while facing more than `outward_angle` away from the
    sampled lane's tangent (the side-of-track-facing-outwards case).
    lateral_jitter must stay below lane_half_width - min turn radius
    (0.061) or admitted poses can be unrecoverable by the action set.
    """

    lateral_jitter: float = 0.16
    heading_jitter: float = math.pi
    boundary_margin: float = 0.1
    outward_angle: float = math.pi / 2
    max_attempts: int = 200


def normalize_angle(angle: float) -> float:
    """Wrap to (-pi, pi]."""
    wrapped = math.remainder(angle, 2.0 * math.pi)
    if wrapped <= -math.pi:
        wrapped += 2.0 * math.pi
    return wrapped


def clamp_wheel(value: float) -> float:
    return min(max(value, -1.0), 1.0)


def step_kinematics(
    state: VehicleState,
    cmd: tuple[float, float],
    kin: KinematicsConfig,
) -> VehicleState:
    """Advance one step with exact arc integration.

    Equal wheel speeds give bitwise-constant heading; opposite speeds give
    pure rotation about the axle midpoint.
    """
    vl, vr = clamp_wheel(cmd[0]), clamp_wheel(cmd[1])
    v = kin.gain * (vl + vr) / 2.0
    omega = kin.gain * (vr - vl) / kin.baseline
    if omega == 0.0:
        return replace(
            state,
            x=state.x + v * math.cos(state.heading) * kin.dt,
            y=state.y + v * math.sin(state.heading) * kin.dt,
            last_wheel_cmd=(vl, vr),
        )
    heading_new = state.heading + omega * kin.dt
    radius = v / omega
    return VehicleState(
        x=state.x + radius * (math.sin(heading_new) - math.sin(state.heading)),
        y=state.y - radius * (math.cos(heading_new) - math.cos(state.heading)),
        heading=normalize_angle(heading_new),
        last_wheel_cmd=(vl, vr),
    )


def commanded_speed(cmd: tuple[float, float], kin: KinematicsConfig) -> float:
    return kin.gain * (clamp_wheel(cmd[0]) + clamp_wheel(cmd[1])) / 2.0


def compute_reward(inputs: RewardInputs, lane: LaneInfo) -> float:
    """Lane-keeping reward; the caller must end the episode off track."""
    if not lane.on_track:
        return OFF_TRACK_REWARD
    if not lane.in_right_lane:
        return 400.0 * inputs.col_pen
    return (
        10.0 * inputs.speed * inputs.dot_dir
        - 100.0 * abs(inputs.dist)
        + 400.0 * inputs.col_pen
    )


def sample_spawn(
    track: TrackMap, rng: np.random.Generator, cfg: SpawnConfig
) -> VehicleState:
    """Sample a valid pose near a random lane centerline point."""
    tiles = track.drivable_tiles
    for _ in range(cfg.max_attempts):
        tile = tiles[int(rng.integers(len(tiles)))]
        lane = track.tile_lanes(*tile)[int(rng.integers(2))]
        u = float(rng.random())
        lateral = float(rng.uniform(-cfg.lateral_jitter, cfg.lateral_jitter))
        dheading = float(rng.uniform(-cfg.heading_jitter, cfg.heading_jitter))
        point, tangent = lane.point_at(u)
        # Left normal of the travel direction.
        nx, ny = -tangent[1], tangent[0]
        x = point[0] + lateral * nx
        y = point[1] + lateral * ny
        heading = normalize_angle(math.atan2(tangent[1], tangent[0]) + dheading)
        if not track.on_track(x, y):
            continue
        near_edge = track.boundary_distance(x, y) < cfg.boundary_margin
        if near_edge and abs(dheading) > cfg.outward_angle:
            continue
        return VehicleState(x=x, y=y, heading=heading)
    raise RuntimeError(f"no valid spawn found in {cfg.max_attempts} attempts")


@dataclass
class EpisodeState:
    vehicle: VehicleState
    step_count: int = 0
    done: bool = False
    cumulative_reward: float = 0.0
    pose_trace: list[tuple[float, float, float]] = field(default_factory=list)


class LaneFollowEnv:
    """Episode loop over the tile map.

    `observer` (optional) maps the vehicle state to the agent's observation;
    when None, reset/step return None observations (dynamics-only mode, used
    by the scripted controller and kinematics tests).
    """

    def __init__(
        self,
        track: TrackMap,
        kin: KinematicsConfig | None = None,
        spawn: SpawnConfig | None = None,
        max_episode_steps: int = 2500,
        observer=None,
        seed: int | None = None,
    ):
        self.track = track
        self.kin = kin or KinematicsConfig()
        self.spawn = spawn or SpawnConfig()
        self.max_episode_steps = max_episode_steps
        self.observer = observer
        self.rng = np.random.default_rng(seed)
        self.episode: EpisodeState | None = None
        self._rewards: list[float] = []
        self._actions: list[int] = []

    def reset(self, seed: int | None = None):
        if seed is not None:
            self.rng = np.random.default_rng(seed)
        vehicle = sample_spawn(self.track, self.rng, self.spawn)
        self.episode = EpisodeState(vehicle=vehicle)
        self.episode.pose_trace.append((vehicle.x, vehicle.y, vehicle.heading))
        self._rewards = []
        self._actions = []
        if self.observer is not None:
            self.observer.reset(self.rng)
            return self.observer.observe(self.track, vehicle)
        return None

    def lane_info(self) -> LaneInfo:
        v = self.episode.vehicle
        return self.track.lane_query(v.x, v.y, v.heading)

    def step(self, action: int):
        ep = self.episode
        if ep is None:
            raise RuntimeError("step() before reset()")
        if ep.done:
            raise RuntimeError("step() after episode end")
        if not 0 <= action < N_ACTIONS:
            raise ValueError(f"action must be in [0, {N_ACTIONS}), got {action}")
        cmd = ACTION_WHEEL_SPEEDS[action]
        vehicle = step_kinematics(ep.vehicle, cmd, self.kin)
        lane = self.track.lane_query(vehicle.x, vehicle.y, vehicle.heading)
        reward = compute_reward(
            RewardInputs(
                speed=commanded_speed(cmd, self.kin),
                dist=lane.dist,
                dot_dir=lane.dot_dir,
                col_pen=0.0,
            ),
            lane,
        )
        ep.vehicle = vehicle
        ep.step_count += 1
        ep.cumulative_reward += reward
        ep.pose_trace.append((vehicle.x, vehicle.y, vehicle.heading))
        self._rewards.append(reward)
        self._actions.append(action)
        ep.done = (not lane.on_track) or ep.step_count >= self.max_episode_steps
        obs = None
        if self.observer is not None:
            obs = self.observer.observe(self.track, vehicle)
        return obs, reward, ep.done

    def write_trace_csv(self, path) -> None:
        ep = self.episode
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["step", "x", "y", "heading", "reward", "action"])
            for i, (x, y, heading) in enumerate(ep.pose_trace):
                reward = repr(self._rewards[i - 1]) if i > 0 else ""
                action = self._actions[i - 1] if i > 0 else ""
                writer.writerow([i, repr(x), repr(y), repr(heading), reward, action])
