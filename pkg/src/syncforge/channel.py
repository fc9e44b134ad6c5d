"""Multipath Rayleigh fading, timing/frequency offsets, and AWGN."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .waveform import OfdmConfig, TxStream


@dataclass(frozen=True)
class ChannelRealization:
    """One fading draw: complex tap gains at integer sample delays.

    sto and cfo carry the timing offset (samples) and the subcarrier-relative
    carrier frequency offset applied on top of the multipath taps.
    """

    gains: np.ndarray
    delays: np.ndarray
    sto: int = 0
    cfo: float = 0.0

    def __post_init__(self):
        if len(self.gains) == 0 or len(self.gains) != len(self.delays):
            raise ValueError("gains and delays must be nonempty and equal length")
        d = np.asarray(self.delays)
        if d[0] < 0 or np.any(np.diff(d) <= 0):
            raise ValueError("path delays must be nonnegative and strictly increasing")

    @property
    def tau_max(self) -> int:
        return int(self.delays[-1])


@dataclass(frozen=True)
class NoiseSpec:
    """Receiver noise level stated as SNR against the data-symbol power."""

    snr_db: float
    sigma2_data: float = 1.0

    @property
    def sigma2_noise(self) -> float:
        if math.isinf(self.snr_db) and self.snr_db > 0:
            return 0.0
        return self.sigma2_data * 10.0 ** (-self.snr_db / 10.0)


def pdp_weights(tau_max: int, eta: float) -> np.ndarray:
    """Exponential power-delay profile over delays 0..tau_max, summing to 1."""
    if tau_max < 0:
        raise ValueError(f"tau_max must be nonnegative, got {tau_max}")
    if eta < 0:
        raise ValueError(f"decay factor must be nonnegative, got {eta}")
    w = np.exp(-eta * np.arange(tau_max + 1, dtype=float))
    return w / w.sum()


def draw_cir(
    tau_max: int,
    eta: float,
    rng: np.random.Generator,
    cp_len: int | None = None,
) -> ChannelRealization:
    """Rayleigh-fading taps at every delay 0..tau_max.

    Tap p is circularly-symmetric complex Gaussian with variance equal to the
    exponential profile weight, so the expected total power is 1. Pass cp_len
    to enforce that the delay spread stays inside the cyclic prefix.
    """
    if cp_len is not None and tau_max >= cp_len:
        raise ValueError(f"tau_max {tau_max} must be smaller than cp_len {cp_len}")
    w = pdp_weights(tau_max, eta)
    scale = np.sqrt(w / 2.0)
    gains = scale * (rng.standard_normal(len(w)) + 1j * rng.standard_normal(len(w)))
    return ChannelRealization(gains=gains, delays=np.arange(tau_max + 1))


def apply_channel(
    stream: TxStream,
    cir: ChannelRealization,
    window_tau: int,
    cfg: OfdmConfig,
) -> np.ndarray:
    """Noise-free receiver window of win_len samples.

    The preamble's first sample, through the delay-0 path, lands at window
    index window_tau:

        window[n] = sum_l h_l x[p - window_tau + n - tau_l] * e^{j 2 pi cfo n / N}

    with p the preamble start inside the stream.
    """
    if not 0 <= window_tau < cfg.n_fft:
        raise ValueError(f"window_tau must lie in [0, {cfg.n_fft - 1}], got {window_tau}")
    x = stream.samples
    n_w = cfg.win_len
    base = stream.preamble_start - window_tau
    out = np.zeros(n_w, dtype=np.complex128)
    for gain, delay in zip(cir.gains, cir.delays):
        start = base - int(delay)
        if start < 0 or start + n_w > len(x):
            raise ValueError("observation window falls outside the generated stream")
        out += gain * x[start : start + n_w]
    if cir.cfo != 0.0:
        out = out * np.exp(1j * 2.0 * np.pi * cir.cfo * np.arange(n_w) / cfg.n_fft)
    return out


def add_awgn(window: np.ndarray, noise: NoiseSpec, rng: np.random.Generator) -> np.ndarray:
    """Window plus circularly-symmetric white Gaussian noise; infinite SNR is a copy."""
    window = np.asarray(window, dtype=np.complex128)
    s2 = noise.sigma2_noise
    if s2 == 0.0:
        return window.copy()
    scale = np.sqrt(s2 / 2.0)
    w = scale * (rng.standard_normal(len(window)) + 1j * rng.standard_normal(len(window)))
    return window + w
