"""OFDM transmit-side building blocks: preambles, IDFT modulation, CP, frames."""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd

import numpy as np

DEFAULT_ZC_ROOT = 25


@dataclass(frozen=True)
class OfdmConfig:
    """System dimensions and per-symbol power targets.

    n_fft is the subcarrier count N (must be even; the quarter-structured
    preamble additionally needs N divisible by 4). cp_len is the cyclic
    prefix length and must be shorter than one symbol. sigma2_data and
    sigma2_preamble are the average time-domain sample powers of data and
    preamble symbols.
    """

    n_fft: int = 128
    cp_len: int = 32
    sigma2_data: float = 1.0
    sigma2_preamble: float = 1.0

    def __post_init__(self):
        if self.n_fft <= 0 or self.n_fft % 2 != 0:
            raise ValueError(f"n_fft must be a positive even integer, got {self.n_fft}")
        if not 0 <= self.cp_len < self.n_fft:
            raise ValueError(
                f"cp_len must satisfy 0 <= cp_len < n_fft={self.n_fft}, got {self.cp_len}"
            )
        if self.sigma2_data <= 0 or self.sigma2_preamble <= 0:
            raise ValueError("symbol powers must be positive")

    @property
    def sym_len(self) -> int:
        """CP-extended symbol length."""
        return self.n_fft + self.cp_len

    @property
    def metric_len(self) -> int:
        """Number of candidate timing lags scored per observation window."""
        return self.sym_len

    @property
    def win_len(self) -> int:
        """Receiver observation window: two CP-extended symbols."""
        return 2 * self.sym_len


@dataclass(frozen=True)
class TxStream:
    """Contiguous baseband sample stream with the preamble's start index."""

    samples: np.ndarray
    preamble_start: int


def zadoff_chu(root: int, length: int) -> np.ndarray:
    """Constant-amplitude sequence with a flat cyclic autocorrelation.

    Odd lengths use the n(n+1) phase profile, even lengths n^2. The root must
    be coprime with the length or the autocorrelation property breaks.
    """
    if length <= 0:
        raise ValueError(f"length must be positive, got {length}")
    if root <= 0:
        raise ValueError(f"root must be positive, got {root}")
    if gcd(root, length) != 1:
        raise ValueError(f"root {root} is not coprime with length {length}")
    n = np.arange(length)
    phase = n * (n + 1) if length % 2 else n * n
    return np.exp(-1j * np.pi * root * phase / length)


def idft_modulate(d: np.ndarray) -> np.ndarray:
    """Unitary IDFT: frequency symbol to time symbol with 1/sqrt(N) scaling."""
    d = np.asarray(d, dtype=np.complex128)
    if d.ndim != 1 or len(d) == 0:
        raise ValueError("expected a nonempty 1-D frequency symbol")
    return np.fft.ifft(d) * np.sqrt(len(d))


def dft_demodulate(s: np.ndarray) -> np.ndarray:
    """Inverse of idft_modulate (the conjugate-transpose transform)."""
    s = np.asarray(s, dtype=np.complex128)
    if s.ndim != 1 or len(s) == 0:
        raise ValueError("expected a nonempty 1-D time symbol")
    return np.fft.fft(s) / np.sqrt(len(s))


def build_preamble_sc(cfg: OfdmConfig, root: int = DEFAULT_ZC_ROOT) -> np.ndarray:
    """Frequency-domain preamble with two identical time-domain halves.

    A length-N/2 Zadoff-Chu sequence occupies the even subcarriers and the odd
    ones stay empty, which forces s[n] = s[n + N/2]. Scaled so the average
    time-domain sample power equals sigma2_preamble.
    """
    n = cfg.n_fft
    d = np.zeros(n, dtype=np.complex128)
    d[0::2] = zadoff_chu(root, n // 2) * np.sqrt(2.0 * cfg.sigma2_preamble)
    return d


def build_preamble_minn(cfg: OfdmConfig, root: int = DEFAULT_ZC_ROOT) -> np.ndarray:
    """Frequency-domain preamble whose time form is [A, A, -A, -A].

    A is a length-N/4 Zadoff-Chu sequence used directly in the time domain;
    the returned vector is its unitary DFT so idft_modulate() reproduces the
    quarter structure exactly. Average sample power is sigma2_preamble.
    """
    n = cfg.n_fft
    if n % 4:
        raise ValueError(f"quarter-structured preamble needs n_fft divisible by 4, got {n}")
    a = zadoff_chu(root, n // 4) * np.sqrt(cfg.sigma2_preamble)
    return dft_demodulate(np.concatenate([a, a, -a, -a]))


def add_cp(s: np.ndarray, cp_len: int) -> np.ndarray:
    """Prepend the last cp_len samples: [s[N-cp_len:], s]."""
    s = np.asarray(s)
    if not 0 <= cp_len < len(s):
        raise ValueError(f"cp_len must satisfy 0 <= cp_len < {len(s)}, got {cp_len}")
    if cp_len == 0:
        return s.copy()
    return np.concatenate([s[-cp_len:], s])


def random_qpsk_symbol(cfg: OfdmConfig, rng: np.random.Generator) -> np.ndarray:
    """Frequency-domain data symbol: i.i.d. QPSK with per-subcarrier power sigma2_data."""
    quadrant = rng.integers(0, 4, size=cfg.n_fft)
    return np.sqrt(cfg.sigma2_data) * np.exp(1j * (np.pi / 4 + np.pi / 2 * quadrant))


def build_frame(cfg: OfdmConfig, preamble: np.ndarray, rng: np.random.Generator) -> TxStream:
    """Data symbol, preamble, data symbol, each CP-extended, back to back.

    The surrounding random QPSK symbols stand in for continuous transmission
    so the receiver window never borders silence. Two data symbols are drawn
    from rng in stream order.
    """
    preamble = np.asarray(preamble, dtype=np.complex128)
    if preamble.shape != (cfg.n_fft,):
        raise ValueError(f"preamble must hold {cfg.n_fft} subcarriers, got {preamble.shape}")
    symbols = (random_qpsk_symbol(cfg, rng), preamble, random_qpsk_symbol(cfg, rng))
    parts = [add_cp(idft_modulate(d), cfg.cp_len) for d in symbols]
    return TxStream(samples=np.concatenate(parts), preamble_start=cfg.sym_len)
