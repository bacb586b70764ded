"""Range-time and Doppler-time maps from an IF cube.

Chain: two-pulse MTI -> fast-time FFT -> |.| gives the RTM; summing the range
profiles, optionally removing the torso phase, then a Hamming STFT gives the
DTM. Doppler rows are stored from most positive to most negative frequency.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .echo import C0, IfDataCube


@dataclass(frozen=True)
class DspConfig:
    n_fft: int = 4096
    window_len: int = 64
    hop: int = 2
    fft_len: int = 128
    compensate: bool = True
    max_range: float = 6.0
    # optional (r_min, r_max) gate applied before the range sum; off by default
    range_gate: tuple | None = None

    def validate(self) -> "DspConfig":
        if self.window_len < 2 or self.window_len % 2:
            raise ValueError("dsp.window_len must be an even integer >= 2")
        if self.window_len > self.fft_len:
            raise ValueError("dsp.window_len must not exceed dsp.fft_len")
        if self.hop < 1:
            raise ValueError("dsp.hop must be >= 1")
        if self.max_range <= 0:
            raise ValueError("dsp.max_range must be positive")
        if self.range_gate is not None and len(self.range_gate) != 2:
            raise ValueError("dsp.range_gate must be a (min, max) pair")
        return self


@dataclass
class RangeProfileMatrix:
    values: np.ndarray
    range_axis: np.ndarray
    slow_time_axis: np.ndarray


@dataclass
class RangeTimeMap:
    magnitudes: np.ndarray
    range_axis: np.ndarray
    slow_time_axis: np.ndarray


@dataclass
class DopplerTimeMap:
    magnitudes: np.ndarray
    doppler_axis: np.ndarray
    slow_time_axis: np.ndarray
    compensated: bool = False

    @property
    def shape(self):
        return self.magnitudes.shape

    @property
    def bin_width(self) -> float:
        return float(self.doppler_axis[0] - self.doppler_axis[1])

    def normalized(self) -> "DopplerTimeMap":
        """Copy scaled to unit global maximum (all-zero maps are returned as is)."""
        peak = self.magnitudes.max() if self.magnitudes.size else 0.0
        mags = self.magnitudes / peak if peak > 0 else self.magnitudes.copy()
        return DopplerTimeMap(mags, self.doppler_axis, self.slow_time_axis, self.compensated)


def mti_two_pulse(cube: IfDataCube) -> IfDataCube:
    """out[:, m] = in[:, m + 1] - in[:, m]; time stamps move to pulse midpoints."""
    if cube.samples.shape[1] < 2:
        raise ValueError("two-pulse MTI needs at least two pulses")
    t = np.asarray(cube.slow_time_axis, dtype=float)
    return cube.with_samples(np.diff(cube.samples, axis=1), 0.5 * (t[1:] + t[:-1]))


def range_axis(n_fft: int, sampling_rate: float, chirp_slope: float) -> np.ndarray:
    return C0 * sampling_rate / (2 * chirp_slope) * np.arange(n_fft) / n_fft


def range_compress(cube: IfDataCube, n_fft: int = 4096) -> RangeProfileMatrix:
    n_adc = cube.samples.shape[0]
    if n_fft < n_adc:
        raise ValueError(f"n_fft={n_fft} is shorter than the {n_adc} fast-time samples")
    spectrum = np.fft.fft(cube.samples, n=n_fft, axis=0)
    # the IF tone is exp(-j 2 pi K tau t), so range bin k reads DFT bin -k
    values = spectrum[(-np.arange(n_fft)) % n_fft]
    axis = range_axis(n_fft, cube.radar.sampling_rate, cube.radar.chirp_slope)
    return RangeProfileMatrix(values, axis, np.asarray(cube.slow_time_axis))


def build_rtm(profiles: RangeProfileMatrix, max_range: float = 6.0) -> RangeTimeMap:
    if max_range > profiles.range_axis[-1]:
        raise ValueError("max_range lies beyond the unambiguous range axis")
    keep = profiles.range_axis <= max_range
    return RangeTimeMap(np.abs(profiles.values[keep]), profiles.range_axis[keep],
                        profiles.slow_time_axis)


def torso_ranges(gait, times, radar_center) -> np.ndarray:
    from .kinematics import torso_position

    return np.linalg.norm(torso_position(gait, times) - np.asarray(radar_center), axis=-1)


def torso_compensated_slowtime(profiles: RangeProfileMatrix, torso_ranges, wavelength: float,
                               compensate: bool = True, range_gate=None) -> np.ndarray:
    values = profiles.values
    torso_ranges = np.asarray(torso_ranges, dtype=float)
    if torso_ranges.shape != (values.shape[1],):
        raise ValueError(f"expected {values.shape[1]} torso ranges, got {torso_ranges.shape}")
    if range_gate is not None:
        lo, hi = range_gate
        gate = (profiles.range_axis >= lo) & (profiles.range_axis <= hi)
        values = values[gate]
    summed = values.sum(axis=0)
    if compensate:
        summed = summed * np.exp(4j * np.pi * torso_ranges / wavelength)
    return summed


def hamming(window_len: int) -> np.ndarray:
    """Periodic Hamming window."""
    return 0.54 - 0.46 * np.cos(2 * np.pi * np.arange(window_len) / window_len)


def doppler_axis(fft_len: int, sample_rate: float) -> np.ndarray:
    """Doppler bin frequencies in stored (descending) row order."""
    return np.fft.fftshift(np.fft.fftfreq(fft_len, d=1.0 / sample_rate))[::-1].copy()


def stft_hamming(signal, window_len: int = 64, hop: int = 2, fft_len: int = 128) -> np.ndarray:
    """Centered sliding-window DFT, zero padded at both ends.

    Frame ``i`` is centered on sample ``i * hop`` and spans offsets
    ``[-window_len/2, window_len/2)``. Rows come back descending in frequency.
    """
    x = np.asarray(signal, dtype=complex).ravel()
    if window_len > x.size:
        raise ValueError("window longer than the signal")
    if window_len > fft_len or window_len % 2 or hop < 1:
        raise ValueError("need an even window_len <= fft_len and hop >= 1")
    half = window_len // 2
    padded = np.concatenate([np.zeros(half, complex), x, np.zeros(half, complex)])
    centers = np.arange(0, x.size, hop)
    idx = centers[:, None] + np.arange(window_len)[None, :]
    frames = padded[idx] * hamming(window_len)[None, :]
    spec = np.fft.fft(frames, n=fft_len, axis=1).T
    # the first frame sample sits at offset -half, not 0
    k = np.arange(fft_len)
    spec *= np.exp(2j * np.pi * k * half / fft_len)[:, None]
    return np.fft.fftshift(spec, axes=0)[::-1]


def build_dtm(tf: np.ndarray, compensated: bool, doppler_axis=None, slow_time_axis=None) -> DopplerTimeMap:
    mags = np.abs(tf)
    if doppler_axis is None:
        doppler_axis = np.arange(mags.shape[0])[::-1] - mags.shape[0] // 2
    if slow_time_axis is None:
        slow_time_axis = np.arange(mags.shape[1], dtype=float)
    return DopplerTimeMap(mags, np.asarray(doppler_axis, float), np.asarray(slow_time_axis, float),
                          bool(compensated))


def process_cube(cube: IfDataCube, torso_range_fn, cfg: DspConfig = DspConfig()):
    """Run the whole chain; ``torso_range_fn`` maps slow-time stamps to torso ranges.

    Returns ``(profiles, rtm, dtm)``.
    """
    radar = cube.radar
    mti = mti_two_pulse(cube)
    profiles = range_compress(mti, cfg.n_fft)
    rtm = build_rtm(profiles, cfg.max_range)
    ranges = torso_range_fn(profiles.slow_time_axis)
    slow = torso_compensated_slowtime(profiles, ranges, radar.wavelength, cfg.compensate,
                                      cfg.range_gate)
    tf = stft_hamming(slow, cfg.window_len, cfg.hop, cfg.fft_len)
    frame_times = profiles.slow_time_axis[::cfg.hop]
    dtm = build_dtm(tf, cfg.compensate, doppler_axis(cfg.fft_len, 1.0 / radar.prt), frame_times)
    return profiles, rtm, dtm
