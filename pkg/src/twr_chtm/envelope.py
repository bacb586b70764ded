"""Macro (torso) and micro (limb) Doppler envelopes of a DTM.

Envelope values are Doppler row indices. Row 0 is the most positive
frequency, so the "upper" envelope is the smaller index.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .dsp import DopplerTimeMap

# ascending index order on every valid column
CURVES = ("micro_upper", "torso_upper", "torso_lower", "micro_lower")


@dataclass(frozen=True)
class SmoothingConfig:
    gaussian_sigma: float = 1.5
    kernel_radius: int = 4
    ratio_micro: float = 0.15
    ratio_torso: float = 0.55
    median_window: int = 5
    smooth_span: int = 11

    def validate(self) -> "SmoothingConfig":
        if not 0 < self.ratio_micro < self.ratio_torso < 1:
            raise ValueError("envelope ratios must satisfy 0 < ratio_micro < ratio_torso < 1")
        if self.gaussian_sigma <= 0:
            raise ValueError("envelope.gaussian_sigma must be positive")
        if self.kernel_radius < np.ceil(2 * self.gaussian_sigma):
            raise ValueError("envelope.kernel_radius must be at least ceil(2 * gaussian_sigma)")
        for name in ("median_window", "smooth_span"):
            w = getattr(self, name)
            if w < 1 or w % 2 == 0:
                raise ValueError(f"envelope.{name} must be odd and >= 1")
        return self


@dataclass
class EnvelopeSet:
    values: np.ndarray   # (4, N_t) float, rows ordered as CURVES
    valid: np.ndarray    # (4, N_t) bool
    n_bins: int

    def __getattr__(self, name):
        if name in CURVES:
            return self.values[CURVES.index(name)]
        raise AttributeError(name)

    @property
    def n_columns(self) -> int:
        return self.values.shape[1]

    def bounds(self, region: str):
        """Integer (start, end) row bounds per column, rounded outward."""
        lo, hi = ("torso_upper", "torso_lower") if region == "macro" else ("micro_upper", "micro_lower")
        start = np.floor(self.values[CURVES.index(lo)]).astype(int)
        end = np.ceil(self.values[CURVES.index(hi)]).astype(int)
        return np.clip(start, 0, self.n_bins - 1), np.clip(end, 0, self.n_bins - 1)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["column", *CURVES, *(f"{c}_valid" for c in CURVES)])
        for m in range(self.n_columns):
            writer.writerow([m, *(repr(float(v)) for v in self.values[:, m]),
                             *(int(v) for v in self.valid[:, m])])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, n_bins: int) -> "EnvelopeSet":
        rows = list(csv.reader(io.StringIO(text)))[1:]
        data = np.array([[float(x) for x in r] for r in rows]) if rows else np.zeros((0, 9))
        return cls(data[:, 1:5].T.copy(), data[:, 5:9].T.astype(bool), n_bins)


def gaussian_kernel(sigma: float, radius: int) -> np.ndarray:
    u = np.arange(-radius, radius + 1)
    g = np.exp(-(u[:, None] ** 2 + u[None, :] ** 2) / (2 * sigma ** 2))
    return g / g.sum()


def gaussian_smooth(dtm: DopplerTimeMap, cfg: SmoothingConfig = SmoothingConfig()) -> DopplerTimeMap:
    kernel = gaussian_kernel(cfg.gaussian_sigma, cfg.kernel_radius)
    smoothed = ndimage.convolve(np.asarray(dtm.magnitudes, float), kernel, mode="nearest")
    return DopplerTimeMap(smoothed, dtm.doppler_axis, dtm.slow_time_axis, dtm.compensated)


def adaptive_thresholds(smoothed: DopplerTimeMap, cfg: SmoothingConfig = SmoothingConfig()):
    """Return ``(eta_micro, eta_torso)`` as fractions of the global maximum."""
    if smoothed.magnitudes.size == 0:
        raise ValueError("empty map")
    peak = float(np.max(smoothed.magnitudes))
    if peak <= 0:
        raise ValueError("map has no positive energy; envelopes are undefined")
    return cfg.ratio_micro * peak, cfg.ratio_torso * peak


def _first_last(mask: np.ndarray):
    n_rows = mask.shape[0]
    hit = mask.any(axis=0)
    first = np.argmax(mask, axis=0).astype(float)
    last = (n_rows - 1 - np.argmax(mask[::-1], axis=0)).astype(float)
    first[~hit] = np.nan
    last[~hit] = np.nan
    return first, last, hit


def scan_envelopes(smoothed: DopplerTimeMap, eta_micro: float, eta_torso: float) -> EnvelopeSet:
    if eta_micro <= 0 or eta_torso <= 0:
        raise ValueError("thresholds must be positive")
    img = smoothed.magnitudes
    mu, ml, mhit = _first_last(img > eta_micro)
    tu, tl, thit = _first_last(img > eta_torso)
    values = np.vstack([mu, tu, tl, ml])
    valid = np.vstack([mhit, thit, thit, mhit])
    return EnvelopeSet(values, valid, img.shape[0])


def loess(y: np.ndarray, span: int) -> np.ndarray:
    """Tricube-weighted local linear fit over the ``span`` nearest columns."""
    y = np.asarray(y, dtype=float)
    n = y.size
    k = min(span, n)
    if k < 3:
        return y.copy()
    x = np.arange(n, dtype=float)
    out = np.empty(n)
    for i in range(n):
        start = min(max(i - k // 2, 0), n - k)
        xs, ys = x[start:start + k], y[start:start + k]
        d = np.abs(xs - i)
        h = d.max() * (1 + 1e-9)
        w = (1 - (d / h) ** 3) ** 3
        sw = w.sum()
        xm = (w * xs).sum() / sw
        ym = (w * ys).sum() / sw
        sxx = (w * (xs - xm) ** 2).sum()
        slope = (w * (xs - xm) * (ys - ym)).sum() / sxx if sxx > 0 else 0.0
        out[i] = ym + slope * (i - xm)
    return out


def fill_and_smooth(raw: EnvelopeSet, cfg: SmoothingConfig = SmoothingConfig()) -> EnvelopeSet:
    """Interpolate gaps, then moving median, then LOESS; returns fully valid curves."""
    m = np.arange(raw.n_columns)
    out = np.empty_like(raw.values, dtype=float)
    for c, name in enumerate(CURVES):
        ok = raw.valid[c]
        if not ok.any():
            raise ValueError(f"envelope {name} has no valid column to interpolate from")
        curve = np.interp(m, m[ok], raw.values[c, ok])
        curve = ndimage.median_filter(curve, size=cfg.median_window, mode="nearest")
        out[c] = loess(curve, cfg.smooth_span)
    # local regression is not order preserving; restore the band nesting
    out = np.clip(np.sort(out, axis=0), 0, raw.n_bins - 1)
    return EnvelopeSet(out, np.ones_like(raw.valid, dtype=bool), raw.n_bins)


def extract_envelopes(dtm: DopplerTimeMap, cfg: SmoothingConfig = SmoothingConfig()) -> EnvelopeSet:
    smoothed = gaussian_smooth(dtm, cfg)
    eta_micro, eta_torso = adaptive_thresholds(smoothed, cfg)
    return fill_and_smooth(scan_envelopes(smoothed, eta_micro, eta_torso), cfg)


def envelope_frequencies(env: EnvelopeSet, doppler_axis) -> np.ndarray:
    """Envelope curves converted to Hz by linear interpolation of the row axis."""
    rows = np.arange(len(doppler_axis))
    return np.interp(env.values, rows, np.asarray(doppler_axis, float))
