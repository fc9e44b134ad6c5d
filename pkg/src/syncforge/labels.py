"""Learning-label constructions for the timing network.

All labels are length metric_len vectors of {0, 1}. The single-index designs
(one-hot, midpoint, estimated) mark one timing instant; the band designs
(region, loose, flexible) mark every instant the receiver may safely pick.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .waveform import OfdmConfig

ONE_HOT = "onehot"
MIDPOINT = "midpoint"
REGION = "region"
ESTIMATED = "estimated"
LOOSE = "lc"
FLEXIBLE = "fc"
KINDS = (ONE_HOT, MIDPOINT, REGION, ESTIMATED, LOOSE, FLEXIBLE)


@dataclass(frozen=True)
class LabelStrategy:
    """Label design plus its delay-bound parameter.

    loose_l bounds the maximum multipath delay assumed at training time for
    the loose ("lc") and flexible ("fc") kinds; the flexible kind redraws a
    per-sample bound uniformly from [cp_len // 2, loose_l].
    """

    kind: str
    loose_l: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown label strategy {self.kind!r}; expected one of {KINDS}")
        if self.kind in (LOOSE, FLEXIBLE):
            if self.loose_l is None or self.loose_l <= 0:
                raise ValueError(f"{self.kind!r} strategy needs a positive loose_l bound")
        elif self.loose_l is not None:
            raise ValueError(f"{self.kind!r} strategy takes no loose_l bound")


def _blank(cfg: OfdmConfig) -> np.ndarray:
    return np.zeros(cfg.metric_len)


def _check_tau(tau: int, cfg: OfdmConfig) -> None:
    # the marked band always ends at tau + cp_len, which must stay in range
    if tau < 0 or tau + cfg.cp_len > cfg.metric_len - 1:
        raise ValueError(
            f"tau {tau} pushes the label outside the {cfg.metric_len}-point window"
        )


def label_one_hot(tau: int, cfg: OfdmConfig) -> np.ndarray:
    """Single 1 at the end of the cyclic prefix, index tau + cp_len."""
    _check_tau(tau, cfg)
    t = _blank(cfg)
    t[tau + cfg.cp_len] = 1.0
    return t


def label_midpoint(tau: int, tau_max: int, cfg: OfdmConfig) -> np.ndarray:
    """Single 1 at the ISI-free midpoint, index tau + ceil((tau_max + cp_len) / 2)."""
    if not 0 <= tau_max <= cfg.cp_len:
        raise ValueError(f"tau_max must lie in [0, {cfg.cp_len}], got {tau_max}")
    _check_tau(tau, cfg)
    center = (tau_max + cfg.cp_len + 1) // 2
    t = _blank(cfg)
    t[tau + center] = 1.0
    return t


def label_region(tau: int, tau_max: int, cfg: OfdmConfig) -> np.ndarray:
    """Ones across the whole ISI-free region tau+tau_max .. tau+cp_len."""
    if not 0 <= tau_max <= cfg.cp_len:
        raise ValueError(f"tau_max must lie in [0, {cfg.cp_len}], got {tau_max}")
    _check_tau(tau, cfg)
    t = _blank(cfg)
    t[tau + tau_max : tau + cfg.cp_len + 1] = 1.0
    return t


def label_loose(tau: int, loose_l: int, cfg: OfdmConfig) -> np.ndarray:
    """Ones on tau+loose_l .. tau+cp_len for a fixed bound strictly inside (0, cp_len)."""
    if not 0 < loose_l < cfg.cp_len:
        raise ValueError(
            f"loose bound must satisfy 0 < loose_l < cp_len={cfg.cp_len}, got {loose_l}"
        )
    _check_tau(tau, cfg)
    t = _blank(cfg)
    t[tau + loose_l : tau + cfg.cp_len + 1] = 1.0
    return t


def label_flexible(tau: int, flex_l: int, cfg: OfdmConfig) -> np.ndarray:
    """Ones on tau+flex_l .. tau+cp_len for one per-sample drawn bound.

    The caller draws flex_l uniformly from [cp_len // 2, loose_l]; this only
    checks the structural range.
    """
    if not cfg.cp_len // 2 <= flex_l < cfg.cp_len:
        raise ValueError(
            f"flexible bound must lie in [{cfg.cp_len // 2}, {cfg.cp_len - 1}], got {flex_l}"
        )
    _check_tau(tau, cfg)
    t = _blank(cfg)
    t[tau + flex_l : tau + cfg.cp_len + 1] = 1.0
    return t


def label_from_estimate(tau_hat: int, cfg: OfdmConfig) -> np.ndarray:
    """One-hot at an estimated timing index, right or wrong."""
    if not 0 <= tau_hat < cfg.metric_len:
        raise ValueError(
            f"estimate {tau_hat} lies outside the {cfg.metric_len}-point window"
        )
    t = _blank(cfg)
    t[tau_hat] = 1.0
    return t


def label_accuracy(estimates, regions) -> float:
    """Fraction of estimates falling inside their own ISI-free regions."""
    estimates = list(estimates)
    regions = list(regions)
    if len(estimates) != len(regions):
        raise ValueError("estimates and regions must pair up one to one")
    if not estimates:
        raise ValueError("label accuracy of an empty batch is undefined")
    hits = sum(1 for est, reg in zip(estimates, regions) if int(est) in reg)
    return hits / len(estimates)
