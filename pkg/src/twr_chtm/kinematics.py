"""Parametric walking model for a 13-joint human skeleton.

Joints hang off the torso through ``parent + R_y(theta) @ limb``. Limbs swing
in the world xOz plane regardless of heading; the torso is the only joint
that follows ``walk_heading``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, List, Sequence

import numpy as np

BODY_JOINTS = ("Torso", "Head", "RS", "LS", "Hip", "RK", "LK", "RA", "LA",
               "RE", "RH", "LE", "LH")
GUN_JOINTS = ("Stock", "Body", "Muzzle")
LEG_JOINTS = ("RK", "LK", "RA", "LA")
ARM_JOINTS = ("RE", "RH", "LE", "LH")


class Gait(str, Enum):
    NORMAL = "normal"
    ARMED = "armed"


@dataclass(frozen=True)
class GaitConfig:
    """Walker geometry and motion. Lengths in meters, angles in radians."""

    initial_position: tuple = (-4.0, 0.0, 0.0)
    torso_speed: float = 1.2
    walk_heading: float = 0.0
    gait_frequency: float = 1.0
    torso_height: float = 1.0
    thigh_length: float = 0.45
    calf_length: float = 0.45
    arm_length: float = 0.60
    thigh_amplitude: float = 0.40
    calf_amplitude: float = 0.50
    arm_amplitude: float = 0.30
    head_dz: float = 0.60
    shoulder_dz: float = 0.35
    shoulder_dy: float = 0.20
    hip_dz: float = -0.35
    upper_arm_angle: float = -np.pi / 6
    forearm_angle: float = -4 * np.pi / 9
    stock_offset: tuple = (0.1, 0.0, 0.0)
    body_offset: tuple = (0.2, 0.0, 0.0)
    muzzle_offset: tuple = (0.3, 0.0, 0.0)
    # added to every swing phase 2*pi*f*t
    phase_offset: float = 0.0
    pattern: Gait = Gait.NORMAL

    def __post_init__(self):
        object.__setattr__(self, "pattern", Gait(self.pattern))
        for name in ("initial_position", "stock_offset", "body_offset", "muzzle_offset"):
            value = tuple(float(v) for v in getattr(self, name))
            if len(value) != 3:
                raise ValueError(f"gait.{name} must have 3 components")
            object.__setattr__(self, name, value)

    def validate(self) -> "GaitConfig":
        for name in ("torso_height", "thigh_length", "calf_length", "arm_length"):
            if not getattr(self, name) > 0:
                raise ValueError(f"gait.{name} must be positive")
        if not self.gait_frequency > 0:
            raise ValueError("gait.gait_frequency must be positive")
        if self.torso_speed < 0:
            raise ValueError("gait.torso_speed must be non-negative")
        for name in ("thigh_amplitude", "calf_amplitude", "arm_amplitude"):
            if not 0 <= getattr(self, name) < np.pi / 2:
                raise ValueError(f"gait.{name} must lie in [0, pi/2)")
        values = [getattr(self, f.name) for f in _numeric_fields()]
        if not np.all(np.isfinite(np.concatenate([np.ravel(v) for v in values]))):
            raise ValueError("gait parameters must be finite")
        return self

    @property
    def joint_names(self) -> tuple:
        if self.pattern is Gait.ARMED:
            return BODY_JOINTS + GUN_JOINTS
        return BODY_JOINTS

    def with_pattern(self, pattern) -> "GaitConfig":
        return replace(self, pattern=Gait(pattern))

    def speed_cap(self) -> float:
        """Loose bound on any joint speed for swing amplitudes below one radian."""
        omega = 2 * np.pi * self.gait_frequency
        return self.torso_speed + omega * (self.thigh_length + self.calf_length + self.arm_length)


def _numeric_fields():
    from dataclasses import fields

    return [f for f in fields(GaitConfig) if f.name != "pattern"]


@dataclass
class SkeletonPose:
    time: float
    joint_positions: Dict[str, np.ndarray] = field(default_factory=dict)

    def __getitem__(self, joint: str) -> np.ndarray:
        return self.joint_positions[joint]

    def __len__(self) -> int:
        return len(self.joint_positions)


@dataclass(frozen=True)
class VelocitySample:
    joint: str
    radial_velocity: float


def rotation_y(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, 0.0, s],
                     [0.0, 1.0, 0.0],
                     [-s, 0.0, c]])


def _swing(theta, length):
    """R_y(theta) @ [0, 0, -length] for an array of angles, shape (T, 3)."""
    theta = np.asarray(theta, dtype=float)
    return np.stack([-length * np.sin(theta),
                     np.zeros_like(theta),
                     -length * np.cos(theta)], axis=-1)


def torso_position(cfg: GaitConfig, t) -> np.ndarray:
    """Torso center at time ``t``; the initial z is ignored in favour of ``torso_height``."""
    t = np.asarray(t, dtype=float)
    x0, y0, _ = cfg.initial_position
    pos = np.stack([x0 + cfg.torso_speed * np.cos(cfg.walk_heading) * t,
                    y0 + cfg.torso_speed * np.sin(cfg.walk_heading) * t,
                    np.full_like(t, cfg.torso_height)], axis=-1)
    return pos


def joint_angles(cfg: GaitConfig, t) -> Dict[str, np.ndarray]:
    """Swing angles of the knees, ankles and elbows (normal gait convention)."""
    phase = 2 * np.pi * cfg.gait_frequency * np.asarray(t, dtype=float) + cfg.phase_offset
    rk = cfg.thigh_amplitude * np.sin(phase)
    ra = cfg.calf_amplitude * np.sin(phase + np.pi / 4)
    re = cfg.arm_amplitude * np.sin(phase + np.pi)
    return {"rk": rk, "lk": -rk, "ra": ra, "la": -ra, "re": re, "le": -re}


def joint_trajectories(cfg: GaitConfig, times) -> Dict[str, np.ndarray]:
    """Positions of every joint over ``times``; each value has shape (len(times), 3)."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    ang = joint_angles(cfg, times)
    torso = torso_position(cfg, times)
    head = torso + (0.0, 0.0, cfg.head_dz)
    rs = torso + (0.0, -cfg.shoulder_dy, cfg.shoulder_dz)
    ls = torso + (0.0, cfg.shoulder_dy, cfg.shoulder_dz)
    hip = torso + (0.0, 0.0, cfg.hip_dz)
    rk = hip + _swing(ang["rk"], cfg.thigh_length)
    lk = hip + _swing(ang["lk"], cfg.thigh_length)
    ra = rk + _swing(ang["ra"], cfg.calf_length)
    la = lk + _swing(ang["la"], cfg.calf_length)

    half_arm = cfg.arm_length / 2
    if cfg.pattern is Gait.ARMED:
        upper = rotation_y(cfg.upper_arm_angle) @ (0.0, 0.0, -half_arm)
        fore = rotation_y(cfg.forearm_angle) @ (0.0, 0.0, -half_arm)
        re, le = rs + upper, ls + upper
        rh, lh = re + fore, le + fore
    else:
        re = rs + _swing(ang["re"], half_arm)
        le = ls + _swing(ang["le"], half_arm)
        rh = re + (0.0, 0.0, -half_arm)
        lh = le + (0.0, 0.0, -half_arm)

    out = {"Torso": torso, "Head": head, "RS": rs, "LS": ls, "Hip": hip,
           "RK": rk, "LK": lk, "RA": ra, "LA": la,
           "RE": re, "RH": rh, "LE": le, "LH": lh}
    if cfg.pattern is Gait.ARMED:
        # constant world-frame offsets; the gun does not turn with the forearm
        stock = rh + cfg.stock_offset
        body = stock + cfg.body_offset
        out.update(Stock=stock, Body=body, Muzzle=body + cfg.muzzle_offset)
    return out


def pose_at(cfg: GaitConfig, t: float) -> SkeletonPose:
    traj = joint_trajectories(cfg, [t])
    return SkeletonPose(float(t), {name: p[0] for name, p in traj.items()})


def pose_series(cfg: GaitConfig, times: Sequence[float]) -> List[SkeletonPose]:
    traj = joint_trajectories(cfg, times)
    return [SkeletonPose(float(t), {name: p[i] for name, p in traj.items()})
            for i, t in enumerate(np.atleast_1d(times))]


def radial_velocities(cfg: GaitConfig, times, radar_center, dt: float = 1e-4) -> Dict[str, np.ndarray]:
    """Per-joint radial velocity over ``times``, positive when approaching the radar."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    times = np.atleast_1d(np.asarray(times, dtype=float))
    center = np.asarray(radar_center, dtype=float)
    ahead = joint_trajectories(cfg, times + dt)
    behind = joint_trajectories(cfg, times - dt)
    return {name: -(np.linalg.norm(ahead[name] - center, axis=-1)
                    - np.linalg.norm(behind[name] - center, axis=-1)) / (2 * dt)
            for name in ahead}


def radial_velocity_set(cfg: GaitConfig, t: float, radar_center, dt: float = 1e-4) -> List[VelocitySample]:
    vel = radial_velocities(cfg, [t], radar_center, dt)
    return [VelocitySample(name, float(v[0])) for name, v in vel.items()]


def directed_hausdorff(v_a, v_b) -> float:
    """max over a of min over b of |a - b|."""
    a = np.asarray(list(v_a), dtype=float).ravel()
    b = np.asarray(list(v_b), dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise ValueError("directed_hausdorff needs two non-empty velocity sets")
    return float(np.max(np.min(np.abs(a[:, None] - b[None, :]), axis=1)))


def expected_peak_doppler(cfg: GaitConfig, t, radar_center, wavelength: float,
                          compensated: bool = True, dt: float = 1e-4):
    """Largest micro-Doppler frequency (Hz) the model predicts at ``t``.

    Accepts a scalar or an array of times and returns the same shape.
    """
    if not wavelength > 0:
        raise ValueError("wavelength must be positive")
    scalar = np.ndim(t) == 0
    vel = radial_velocities(cfg, t, radar_center, dt)
    v = np.stack(list(vel.values()))
    if compensated:
        v = v - vel["Torso"]
    f = 2.0 / wavelength * np.max(np.abs(v), axis=0)
    return float(f[0]) if scalar else f
