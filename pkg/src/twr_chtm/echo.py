"""FMCW through-wall echo synthesis.

The wall is an axis-aligned dielectric slab. Any antenna-to-target leg that
passes through the slab picks up a constant optical path excess plus the
Fresnel/loss amplitude factors; refraction geometry is not modelled.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Mapping, Sequence

import numpy as np

from .kinematics import GaitConfig, SkeletonPose, joint_trajectories

C0 = 299792458.0
ETA0 = 377.0

DEFAULT_RCS = {
    "Torso": 1.0, "Head": 0.4, "Hip": 0.6,
    "RS": 0.2, "LS": 0.2, "RK": 0.2, "LK": 0.2, "RE": 0.2, "LE": 0.2,
    "RA": 0.25, "LA": 0.25, "RH": 0.25, "LH": 0.25,
    "Stock": 0.3, "Body": 0.3, "Muzzle": 0.3,
}


@dataclass(frozen=True)
class RadarConfig:
    center_frequency: float = 2.5e9
    bandwidth: float = 1.0e9
    pulse_width: float = 5e-4
    tx_power: float = 1.0
    fast_samples: int = 3190
    # None means fast_samples / pulse_width
    sampling_rate: float | None = None
    pulses: int = 200
    prt: float = 5e-3
    tx_positions: tuple = ((0.0, 0.0, 1.5),)
    rx_positions: tuple = ((0.0, 0.0, 1.5),)

    def __post_init__(self):
        for name in ("tx_positions", "rx_positions"):
            pts = tuple(tuple(float(c) for c in p) for p in getattr(self, name))
            object.__setattr__(self, name, pts)
        if self.sampling_rate is None:
            object.__setattr__(self, "sampling_rate", self.fast_samples / self.pulse_width)

    @classmethod
    def mimo(cls, n_tx: int = 8, n_rx: int = 8, center=(0.0, 0.0, 1.5), **kwargs) -> "RadarConfig":
        """Uniform linear Tx and Rx arrays along y at half-wavelength spacing."""
        fc = kwargs.get("center_frequency", cls.center_frequency)
        spacing = C0 / fc / 2

        def ula(n):
            offsets = (np.arange(n) - (n - 1) / 2) * spacing
            return tuple((center[0], center[1] + d, center[2]) for d in offsets)

        return cls(tx_positions=ula(n_tx), rx_positions=ula(n_rx), **kwargs)

    @property
    def chirp_slope(self) -> float:
        return self.bandwidth / self.pulse_width

    @property
    def wavelength(self) -> float:
        return C0 / self.center_frequency

    @property
    def array_center(self) -> np.ndarray:
        return np.vstack([self.tx_positions, self.rx_positions]).mean(axis=0)

    def slow_time(self) -> np.ndarray:
        return np.arange(self.pulses) * self.prt

    def validate(self) -> "RadarConfig":
        for name in ("center_frequency", "bandwidth", "pulse_width", "tx_power", "prt",
                     "sampling_rate"):
            if not getattr(self, name) > 0:
                raise ValueError(f"radar.{name} must be positive")
        if self.fast_samples < 1 or self.pulses < 1:
            raise ValueError("radar.fast_samples and radar.pulses must be positive")
        if self.fast_samples / self.sampling_rate > self.pulse_width * (1 + 1e-9):
            raise ValueError("radar.fast_samples / radar.sampling_rate exceeds the pulse width")
        if not self.tx_positions or not self.rx_positions:
            raise ValueError("radar needs at least one tx and one rx position")
        if any(len(p) != 3 for p in self.tx_positions + self.rx_positions):
            raise ValueError("radar antenna positions must be 3-vectors")
        return self


@dataclass(frozen=True)
class WallConfig:
    """Homogeneous slab occupying ``[face, face + thickness]`` along ``axis``."""

    thickness: float = 0.24
    permittivity: float = 6.0
    loss_tangent: float = 0.03
    axis: int = 0
    face: float = -0.74

    def validate(self) -> "WallConfig":
        if self.thickness < 0:
            raise ValueError("wall.thickness must be non-negative")
        if self.permittivity < 1:
            raise ValueError("wall.permittivity must be >= 1")
        if self.loss_tangent < 0:
            raise ValueError("wall.loss_tangent must be non-negative")
        if self.axis not in (0, 1, 2):
            raise ValueError("wall.axis must be 0, 1 or 2")
        return self

    @property
    def interval(self) -> tuple:
        return (self.face, self.face + self.thickness)

    @classmethod
    def free_space(cls) -> "WallConfig":
        return cls(thickness=0.0, permittivity=1.0, loss_tangent=0.0)


@dataclass(frozen=True)
class WallTerms:
    path_excess: float
    power_transmission: float
    loss: float
    attenuation: float


@dataclass
class ScattererSet:
    rcs: Dict[str, float] = field(default_factory=lambda: dict(DEFAULT_RCS))

    def validate(self) -> "ScattererSet":
        values = np.array(list(self.rcs.values()), dtype=float)
        if values.size == 0 or np.any(values < 0) or not np.any(values > 0):
            raise ValueError("scatterers need non-negative cross sections with at least one positive")
        return self

    def scaled(self, factor: float) -> "ScattererSet":
        return ScattererSet({k: factor * v for k, v in self.rcs.items()})


@dataclass
class IfDataCube:
    samples: np.ndarray
    radar: RadarConfig
    slow_time_axis: np.ndarray

    @property
    def shape(self):
        return self.samples.shape

    def with_samples(self, samples: np.ndarray, slow_time_axis=None) -> "IfDataCube":
        axis = self.slow_time_axis if slow_time_axis is None else slow_time_axis
        return IfDataCube(samples, self.radar, axis)


def wall_terms(wall: WallConfig, center_frequency: float) -> WallTerms:
    eps = wall.permittivity
    eta_w = ETA0 / np.sqrt(eps)
    t_power = (2 * eta_w / (eta_w + ETA0)) ** 2 * (2 * ETA0 / (eta_w + ETA0)) ** 2
    alpha = np.pi * center_frequency / C0 * np.sqrt(eps) * wall.loss_tangent
    return WallTerms(path_excess=wall.thickness * (np.sqrt(eps) - 1),
                     power_transmission=float(t_power),
                     loss=float(np.exp(-2 * alpha * wall.thickness)),
                     attenuation=float(alpha))


def _crosses(wall: WallConfig, antenna, points) -> np.ndarray:
    """True where the straight leg antenna -> point traverses the whole slab."""
    if wall.thickness <= 0:
        return np.zeros(np.shape(points)[:-1], dtype=bool)
    lo, hi = wall.interval
    a = float(np.asarray(antenna)[wall.axis])
    p = np.asarray(points, dtype=float)[..., wall.axis]
    return (np.minimum(a, p) <= lo) & (np.maximum(a, p) >= hi)


def electrical_length(p, tx, rx, wall: WallConfig):
    """Equivalent two-way path tx -> p -> rx including the slab excess."""
    p = np.asarray(p, dtype=float)
    excess = wall_terms(wall, 1.0).path_excess
    r_tx = np.linalg.norm(p - np.asarray(tx, dtype=float), axis=-1)
    r_rx = np.linalg.norm(p - np.asarray(rx, dtype=float), axis=-1)
    n_cross = _crosses(wall, tx, p).astype(int) + _crosses(wall, rx, p).astype(int)
    out = r_tx + r_rx + n_cross * excess
    return float(out) if np.ndim(out) == 0 else out


def _synthesize(trajectories: Mapping[str, np.ndarray], radar: RadarConfig, wall: WallConfig,
                scatterers: ScattererSet) -> np.ndarray:
    terms = wall_terms(wall, radar.center_frequency)
    n = np.arange(radar.fast_samples)
    fast = n / radar.sampling_rate
    slope = radar.chirp_slope
    cube = np.zeros((radar.fast_samples, radar.pulses), dtype=complex)
    for joint, pos in trajectories.items():
        sigma = scatterers.rcs.get(joint, 0.0)
        if sigma == 0:
            continue
        pos = np.asarray(pos, dtype=float)
        for tx in radar.tx_positions:
            r_tx = np.linalg.norm(pos - tx, axis=-1)
            x_tx = _crosses(wall, tx, pos)
            for rx in radar.rx_positions:
                r_rx = np.linalg.norm(pos - rx, axis=-1)
                n_cross = x_tx.astype(int) + _crosses(wall, rx, pos)
                r_sum = r_tx + r_rx + n_cross * terms.path_excess
                tau = r_sum / C0
                # one-way legs each carry the square root of the two-way power factors
                wall_amp = (terms.power_transmission * terms.loss) ** (n_cross / 4)
                amp = sigma * np.sqrt(radar.tx_power) * wall_amp / (r_tx * r_rx)
                slow = amp * np.exp(-2j * np.pi * radar.center_frequency * tau)
                cube += slow[None, :] * np.exp(-2j * np.pi * slope * np.outer(fast, tau))
    return cube


def synthesize_cube(poses: Sequence[SkeletonPose], radar: RadarConfig, wall: WallConfig,
                    scatterers: ScattererSet) -> IfDataCube:
    """Coherent sum over joints and all Tx/Rx pairs, one pose per pulse."""
    if len(poses) != radar.pulses:
        raise ValueError(f"got {len(poses)} poses for {radar.pulses} pulses")
    names = list(poses[0].joint_positions)
    traj = {name: np.array([p.joint_positions[name] for p in poses]) for name in names}
    times = np.array([p.time for p in poses], dtype=float)
    return IfDataCube(_synthesize(traj, radar, wall, scatterers), radar, times)


def simulate_cube(gait: GaitConfig, radar: RadarConfig, wall: WallConfig,
                  scatterers: ScattererSet) -> IfDataCube:
    """Sample the walker at every pulse and synthesize its IF cube."""
    times = radar.slow_time()
    traj = joint_trajectories(gait, times)
    return IfDataCube(_synthesize(traj, radar, wall, scatterers), radar, times)


def add_noise(cube: IfDataCube, delta_snr_db: float, seed: int) -> IfDataCube:
    """Add circular white Gaussian noise at ``delta_snr_db`` below mean signal power.

    ``inf`` returns an unchanged copy.
    """
    if np.isposinf(delta_snr_db):
        return cube.with_samples(cube.samples.copy())
    signal_power = float(np.mean(np.abs(cube.samples) ** 2))
    if signal_power == 0:
        raise ValueError("cannot reference noise to an all-zero cube")
    noise_power = signal_power * 10.0 ** (-delta_snr_db / 10.0)
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(cube.samples.shape) + 1j * rng.standard_normal(cube.samples.shape)
    return cube.with_samples(cube.samples + np.sqrt(noise_power / 2) * noise)

