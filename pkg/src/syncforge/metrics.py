"""Correlation timing metrics and the argmax timing decision."""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .waveform import OfdmConfig


def _lag_views(window: np.ndarray, cfg: OfdmConfig) -> np.ndarray:
    """(metric_len, n_fft) strided view: row j is window[j .. j+N-1]."""
    window = np.asarray(window, dtype=np.complex128)
    k, n = cfg.metric_len, cfg.n_fft
    if window.ndim != 1 or len(window) < k + n - 1:
        raise ValueError(
            f"window of {window.shape} samples cannot support {k} lags spanning {n}"
        )
    return sliding_window_view(window, n)[:k]


def _safe_metric(p_abs2: np.ndarray, r: np.ndarray, scale: float) -> np.ndarray:
    """scale * |P|^2 / R^2 with silent lags (R == 0) mapped to 0."""
    out = np.zeros_like(r)
    live = r != 0.0
    out[live] = scale * p_abs2[live] / (r[live] * r[live])
    return out


def sc_metric(window: np.ndarray, cfg: OfdmConfig) -> np.ndarray:
    """Half-symbol correlation metric evaluated independently at every lag.

    M_j = |P_j|^2 / ((1/4) R_j^2) where P_j correlates the two half-symbols
    starting at lag j and R_j is the energy of the full N-sample span. The
    metric peaks at 1 when the window holds the repeated preamble.
    """
    v = _lag_views(window, cfg)
    half = cfg.n_fft // 2
    p = np.einsum("ij,ij->i", v[:, :half].conj(), v[:, half:])
    r = np.einsum("ij,ij->i", v.conj(), v).real
    return _safe_metric(np.abs(p) ** 2, r, 4.0)


def sc_metric_iterative(window: np.ndarray, cfg: OfdmConfig) -> np.ndarray:
    """Same values as sc_metric via the sliding one-sample update.

    P and R are summed once at lag 0, then each next lag adds the sample
    entering the span and subtracts the one leaving it.
    """
    window = np.asarray(window, dtype=np.complex128)
    k, n = cfg.metric_len, cfg.n_fft
    if window.ndim != 1 or len(window) < k + n - 1:
        raise ValueError(
            f"window of {window.shape} samples cannot support {k} lags spanning {n}"
        )
    half = n // 2
    p0 = np.vdot(window[:half], window[half:n])
    r0 = np.vdot(window[:n], window[:n]).real
    j = np.arange(k - 1)
    dp = window[j + half].conj() * window[j + n] - window[j].conj() * window[j + half]
    dr = np.abs(window[j + n]) ** 2 - np.abs(window[j]) ** 2
    p = p0 + np.concatenate(([0.0 + 0.0j], np.cumsum(dp)))
    r = r0 + np.concatenate(([0.0], np.cumsum(dr)))
    return _safe_metric(np.abs(p) ** 2, r, 4.0)


def minn_metric(window: np.ndarray, cfg: OfdmConfig) -> np.ndarray:
    """Quarter-pattern metric matched to the [A, A, -A, -A] preamble.

    The two disjoint quarter pairs are correlated and weighted by the
    preamble's sign products (A*A and (-A)*(-A), both +1):

        P_j = sum_m r*[j+m] r[j+Q+m] + sum_m r*[j+2Q+m] r[j+3Q+m],  Q = N/4

    R_j is half the full-symbol energy and M_j = (|P_j| / R_j)^2. Each pair's
    correlation is capped by its own energy, so M_j <= 1 with equality on the
    aligned preamble; misaligned lags lose at least one pair and stay low,
    which is what makes this peak sharper than the half-symbol plateau.
    """
    if cfg.n_fft % 4:
        raise ValueError(f"quarter-pattern metric needs n_fft divisible by 4, got {cfg.n_fft}")
    v = _lag_views(window, cfg)
    q = cfg.n_fft // 4
    p = np.einsum("ij,ij->i", v[:, :q].conj(), v[:, q : 2 * q]) + np.einsum(
        "ij,ij->i", v[:, 2 * q : 3 * q].conj(), v[:, 3 * q :]
    )
    r = 0.5 * np.einsum("ij,ij->i", v.conj(), v).real
    return _safe_metric(np.abs(p) ** 2, r, 1.0)


def normalize_l2(m: np.ndarray) -> np.ndarray:
    """Unit-norm copy of the vector; the all-zero vector passes through unchanged."""
    m = np.asarray(m, dtype=float)
    norm = np.linalg.norm(m)
    if norm == 0.0:
        return m.copy()
    return m / norm


def argmax_timing(m: np.ndarray) -> int:
    """Smallest index attaining the maximum metric value."""
    m = np.asarray(m)
    if m.ndim != 1 or len(m) == 0:
        raise ValueError("metric vector must be nonempty and 1-D")
    return int(np.argmax(m))


def isi_free_region(tau: int, tau_max: int, cp_len: int) -> range:
    """Timing instants {tau+tau_max, ..., tau+cp_len} free of symbol overlap."""
    if tau_max < 0 or cp_len < 0:
        raise ValueError("tau_max and cp_len must be nonnegative")
    if tau_max > cp_len:
        raise ValueError(f"tau_max {tau_max} exceeds cp_len {cp_len}; region is empty")
    return range(tau + tau_max, tau + cp_len + 1)


def is_correct(tau_hat: int, region: range) -> bool:
    """True when the estimate lands inside the ISI-free region."""
    return int(tau_hat) in region
