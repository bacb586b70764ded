"""Chebyshev-time maps: envelope-bounded DTM slices projected on T_n.

Each column slice between two envelopes is indexed by uniform nodes in
[-1, 1] and projected with ``c = T.T @ s / N_s``. On uniform nodes this is
only an approximate orthogonal decomposition; ``truncation_residual`` also
offers an exact least-squares fit for comparison.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .dsp import DopplerTimeMap
from .envelope import EnvelopeSet

REGIONS = ("macro", "micro")


@dataclass(frozen=True)
class ChebyshevBasis:
    order_max: int
    sample_count: int
    nodes: np.ndarray
    matrix: np.ndarray   # (sample_count, order_max + 1), matrix[j, n] = T_n(nodes[j])


@lru_cache(maxsize=512)
def basis(n_s: int, n_order: int) -> ChebyshevBasis:
    if n_s < 2:
        raise ValueError("a Chebyshev basis needs at least two nodes")
    if n_order < 0:
        raise ValueError("n_order must be non-negative")
    nodes = -1.0 + 2.0 * np.arange(n_s) / (n_s - 1)
    T = np.empty((n_s, n_order + 1))
    T[:, 0] = 1.0
    if n_order >= 1:
        T[:, 1] = nodes
    for n in range(2, n_order + 1):
        T[:, n] = 2 * nodes * T[:, n - 1] - T[:, n - 2]
    nodes.flags.writeable = False
    T.flags.writeable = False
    return ChebyshevBasis(n_order, n_s, nodes, T)


def project_slice(slice_, b: ChebyshevBasis) -> np.ndarray:
    s = np.asarray(slice_, dtype=float).ravel()
    if s.size != b.sample_count:
        raise ValueError(f"slice has {s.size} samples, basis expects {b.sample_count}")
    return b.matrix.T @ s / b.sample_count


@dataclass
class ChebyshevTimeMap:
    values: np.ndarray            # (order_max + 1, N_t) log-normalized
    region: str
    epsilon: float
    raw_coefficients: np.ndarray  # signed coefficients, same shape

    @property
    def order_max(self) -> int:
        return self.values.shape[0] - 1


def normalize_log(coefficients: np.ndarray, epsilon: float = 1e-6) -> np.ndarray:
    """log10 of globally min-max normalized coefficient magnitudes."""
    mag = np.abs(coefficients)
    lo, hi = (mag.min(), mag.max()) if mag.size else (0.0, 0.0)
    norm = (mag - lo) / (hi - lo) if hi > lo else np.zeros_like(mag)
    return np.log10(norm + epsilon)


def chebyshev_coefficients(dtm: DopplerTimeMap, env: EnvelopeSet, region: str = "micro",
                           n_order: int = 32, normalize_dtm: bool = True) -> np.ndarray:
    """Signed coefficient matrix (n_order + 1, N_t); columns with fewer than two bins are zero."""
    if region not in REGIONS:
        raise ValueError(f"region must be one of {REGIONS}")
    if env.n_columns != dtm.shape[1] or env.n_bins != dtm.shape[0]:
        raise ValueError("envelope does not match the DTM shape")
    image = dtm.normalized().magnitudes if normalize_dtm else dtm.magnitudes
    start, end = env.bounds(region)
    coeffs = np.zeros((n_order + 1, dtm.shape[1]))
    for m in range(dtm.shape[1]):
        n_s = end[m] - start[m] + 1
        if n_s < 2:
            continue
        coeffs[:, m] = project_slice(image[start[m]:end[m] + 1, m], basis(int(n_s), n_order))
    return coeffs


def build_chtm(dtm: DopplerTimeMap, env: EnvelopeSet, region: str = "micro", n_order: int = 32,
               epsilon: float = 1e-6) -> ChebyshevTimeMap:
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    raw = chebyshev_coefficients(dtm, env, region, n_order)
    return ChebyshevTimeMap(normalize_log(raw, epsilon), region, epsilon, raw)


def truncation_residual(slice_, b: ChebyshevBasis, n: int, mode: str = "least_squares") -> float:
    """Squared L2 error of the order-``n`` reconstruction.

    ``mode="projection"`` reconstructs from the ``T.T @ s / N_s`` coefficients,
    ``mode="least_squares"`` from the best fit in span(T_0..T_n).
    """
    if n > b.order_max or n < 0:
        raise ValueError(f"order {n} outside basis range 0..{b.order_max}")
    s = np.asarray(slice_, dtype=float).ravel()
    T = b.matrix[:, :n + 1]
    if mode == "projection":
        c = project_slice(s, b)[:n + 1]
    elif mode == "least_squares":
        c = np.linalg.lstsq(T, s, rcond=None)[0]
    else:
        raise ValueError(f"unknown mode {mode!r}")
    r = s - T @ c
    return float(r @ r)


@dataclass(frozen=True)
class CoefficientSummary:
    mean_abs_c0: float
    mean_c1: float
    mean_abs_c2: float
    high_order_fraction: float


def coefficient_diagnostics(raw: np.ndarray) -> CoefficientSummary:
    raw = np.asarray(raw, dtype=float)
    if raw.ndim != 2 or raw.size == 0:
        raise ValueError("need a non-empty (orders, columns) matrix")

    def row(n):
        return raw[n] if n < raw.shape[0] else np.zeros(raw.shape[1])

    total = float(np.sum(raw ** 2))
    high = float(np.sum(raw[3:] ** 2))
    return CoefficientSummary(float(np.mean(np.abs(row(0)))), float(np.mean(row(1))),
                              float(np.mean(np.abs(row(2)))),
                              high / total if total > 0 else 0.0)
