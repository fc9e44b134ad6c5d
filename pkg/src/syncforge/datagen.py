"""Training-set generation and the storage/bandwidth bookkeeping around it.

Two ways to obtain labeled data:

* gen_training_set: computer-generated pairs. The channel is drawn with a
  strategy-controlled maximum delay and the label is exact by construction,
  so no air time is spent and no label is ever wrong.
* collect_training_set_datcol: simulated over-the-air collection. Windows are
  received at a finite SNR and labeled by the classic correlation estimator,
  so a measurable fraction of labels is wrong and every record must cross the
  air interface.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import labels as lb
from .channel import NoiseSpec, add_awgn, apply_channel, draw_cir
from .metrics import (
    argmax_timing,
    isi_free_region,
    minn_metric,
    normalize_l2,
    sc_metric_iterative,
)
from .seeding import derive_rng
from .waveform import OfdmConfig, build_frame, build_preamble_minn, build_preamble_sc

EXTRACTOR_SC = "sc"
EXTRACTOR_MINN = "minn"
EXTRACTOR_RAW = "raw"
EXTRACTORS = (EXTRACTOR_SC, EXTRACTOR_MINN, EXTRACTOR_RAW)

DATASET_MAGIC = b"SYNCFTSB"
DATASET_VERSION = 1
_HEADER = struct.Struct("<8sIQQQ")


class DatasetFormatError(ValueError):
    """Dataset file is truncated, corrupt, or dimensionally inconsistent."""


def feature_dim(cfg: OfdmConfig, extractor: str) -> int:
    """Network input width: metric_len for metric features, 2*win_len for raw."""
    if extractor not in EXTRACTORS:
        raise ValueError(f"unknown extractor {extractor!r}; expected one of {EXTRACTORS}")
    return 2 * cfg.win_len if extractor == EXTRACTOR_RAW else cfg.metric_len


def build_preamble(cfg: OfdmConfig, extractor: str) -> np.ndarray:
    """Transmit preamble matching the extractor; raw input keeps the two-half design."""
    if extractor == EXTRACTOR_MINN:
        return build_preamble_minn(cfg)
    if extractor in (EXTRACTOR_SC, EXTRACTOR_RAW):
        return build_preamble_sc(cfg)
    raise ValueError(f"unknown extractor {extractor!r}; expected one of {EXTRACTORS}")


def extract_feature(window: np.ndarray, cfg: OfdmConfig, extractor: str) -> np.ndarray:
    """Unit-norm network input from one observation window."""
    if extractor == EXTRACTOR_SC:
        return normalize_l2(sc_metric_iterative(window, cfg))
    if extractor == EXTRACTOR_MINN:
        return normalize_l2(minn_metric(window, cfg))
    if extractor == EXTRACTOR_RAW:
        window = np.asarray(window)
        return normalize_l2(np.concatenate([window.real, window.imag]))
    raise ValueError(f"unknown extractor {extractor!r}; expected one of {EXTRACTORS}")


@dataclass
class TrainingSet:
    """Feature/label pairs plus enough metadata to audit every sample."""

    features: np.ndarray
    labels: np.ndarray
    tau: np.ndarray
    tau_max: np.ndarray
    strategy: lb.LabelStrategy
    extractor: str
    cfg: OfdmConfig
    eta: float
    seed: int
    snr_db: float | None = None

    def __len__(self) -> int:
        return self.features.shape[0]


@dataclass(frozen=True)
class CollectionStats:
    """Cost accounting for one over-the-air collection run."""

    n_effective: int
    p_label: float
    n_raw: int
    bytes_per_record: int

    @property
    def total_bytes(self) -> int:
        return self.n_raw * self.bytes_per_record


def record_bytes(cfg: OfdmConfig) -> int:
    """Bytes per collected record: win_len complex float32 samples + metric_len float32 labels."""
    return cfg.win_len * 2 * 4 + cfg.metric_len * 4


def storage_bytes(stats: CollectionStats) -> int:
    """Total bytes a collection run must store."""
    return stats.total_bytes


def bandwidth_seconds(n_bytes: float, bandwidth_hz: float) -> float:
    """Air time to move n_bytes over a link of bandwidth_hz bits per second."""
    if bandwidth_hz <= 0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth_hz}")
    if n_bytes < 0:
        raise ValueError(f"byte count must be nonnegative, got {n_bytes}")
    return n_bytes * 8.0 / bandwidth_hz


def _strategy_label(strategy, tau, tau_max, tau_p_train, cfg):
    if strategy.kind == lb.LOOSE:
        return lb.label_loose(tau, strategy.loose_l, cfg)
    if strategy.kind == lb.FLEXIBLE:
        return lb.label_flexible(tau, tau_max, cfg)
    if strategy.kind == lb.ONE_HOT:
        return lb.label_one_hot(tau, cfg)
    if strategy.kind == lb.MIDPOINT:
        return lb.label_midpoint(tau, tau_p_train, cfg)
    if strategy.kind == lb.REGION:
        return lb.label_region(tau, tau_p_train, cfg)
    raise ValueError(f"no direct generator for strategy {strategy.kind!r}")


def gen_training_set(
    strategy: lb.LabelStrategy,
    cfg: OfdmConfig,
    n_samples: int,
    *,
    eta: float = 0.2,
    tau_p_train: int = 20,
    extractor: str = EXTRACTOR_SC,
    seed: int = 0,
) -> TrainingSet:
    """Computer-generated training pairs, free of noise and frequency offset.

    Per sample: a uniform timing offset on [0, n_fft-1]; a fresh channel whose
    maximum delay follows the strategy (the fixed loose bound, a per-sample
    flexible bound from [cp_len//2, loose_l], or tau_p_train for the fixed
    designs); feature extraction on the clean window; the strategy's label.
    Sample m draws everything from rng(seed, m), in the order timing offset,
    flexible bound, channel, frame, so generation is order-independent and
    bit-reproducible.
    """
    if n_samples < 1:
        raise ValueError(f"n_samples must be positive, got {n_samples}")
    if strategy.kind == lb.ESTIMATED:
        raise ValueError("estimated labels come from collect_training_set_datcol")
    if strategy.kind in (lb.LOOSE, lb.FLEXIBLE):
        if not 0 < strategy.loose_l < cfg.cp_len:
            raise ValueError(
                f"loose bound must satisfy 0 < loose_l < cp_len={cfg.cp_len}, "
                f"got {strategy.loose_l}"
            )
        if strategy.kind == lb.FLEXIBLE and strategy.loose_l < cfg.cp_len // 2:
            raise ValueError(
                f"flexible bound range is empty: loose_l {strategy.loose_l} "
                f"< cp_len//2 = {cfg.cp_len // 2}"
            )
    elif not 0 <= tau_p_train < cfg.cp_len:
        raise ValueError(
            f"tau_p_train must satisfy 0 <= tau_p_train < cp_len={cfg.cp_len}, "
            f"got {tau_p_train}"
        )

    preamble = build_preamble(cfg, extractor)
    feats = np.empty((n_samples, feature_dim(cfg, extractor)))
    labs = np.empty((n_samples, cfg.metric_len))
    taus = np.empty(n_samples, dtype=np.int64)
    tmaxs = np.empty(n_samples, dtype=np.int64)
    for m in range(n_samples):
        rng = derive_rng(seed, m)
        tau = int(rng.integers(0, cfg.n_fft))
        if strategy.kind == lb.LOOSE:
            tau_max = strategy.loose_l
        elif strategy.kind == lb.FLEXIBLE:
            tau_max = int(rng.integers(cfg.cp_len // 2, strategy.loose_l + 1))
        else:
            tau_max = tau_p_train
        cir = draw_cir(tau_max, eta, rng, cp_len=cfg.cp_len)
        cir = replace(cir, sto=tau)
        frame = build_frame(cfg, preamble, rng)
        window = apply_channel(frame, cir, tau, cfg)
        feats[m] = extract_feature(window, cfg, extractor)
        labs[m] = _strategy_label(strategy, tau, tau_max, tau_p_train, cfg)
        taus[m] = tau
        tmaxs[m] = tau_max
    return TrainingSet(
        features=feats,
        labels=labs,
        tau=taus,
        tau_max=tmaxs,
        strategy=strategy,
        extractor=extractor,
        cfg=cfg,
        eta=eta,
        seed=seed,
    )


def collect_training_set_datcol(
    cfg: OfdmConfig,
    n_samples: int,
    *,
    snr_db: float = 20.0,
    eta: float = 0.2,
    tau_p_train: int = 20,
    seed: int = 0,
    bytes_per_record: int | None = None,
) -> tuple[TrainingSet, CollectionStats]:
    """Simulated over-the-air collection labeled by the classic estimator.

    Each window is received at snr_db and labeled one-hot at the half-symbol
    metric argmax; wrong labels stay in the set. The stats report the measured
    label accuracy and the raw count ceil(n / p_label) a real deployment would
    transmit to bank n effective labels.
    """
    if n_samples < 1:
        raise ValueError(f"n_samples must be positive, got {n_samples}")
    if not 0 <= tau_p_train < cfg.cp_len:
        raise ValueError(
            f"tau_p_train must satisfy 0 <= tau_p_train < cp_len={cfg.cp_len}, "
            f"got {tau_p_train}"
        )
    preamble = build_preamble_sc(cfg)
    noise = NoiseSpec(snr_db, cfg.sigma2_data)
    feats = np.empty((n_samples, cfg.metric_len))
    labs = np.empty((n_samples, cfg.metric_len))
    taus = np.empty(n_samples, dtype=np.int64)
    hits = 0
    for m in range(n_samples):
        rng = derive_rng(seed, m)
        tau = int(rng.integers(0, cfg.n_fft))
        cir = replace(draw_cir(tau_p_train, eta, rng, cp_len=cfg.cp_len), sto=tau)
        frame = build_frame(cfg, preamble, rng)
        window = add_awgn(apply_channel(frame, cir, tau, cfg), noise, rng)
        metric = sc_metric_iterative(window, cfg)
        tau_hat = argmax_timing(metric)
        feats[m] = normalize_l2(metric)
        labs[m] = lb.label_from_estimate(tau_hat, cfg)
        taus[m] = tau
        hits += tau_hat in isi_free_region(tau, tau_p_train, cfg.cp_len)
    p_label = hits / n_samples
    if p_label == 0.0:
        raise RuntimeError(
            "collection failed: no estimate landed inside its ISI-free region"
        )
    stats = CollectionStats(
        n_effective=n_samples,
        p_label=p_label,
        n_raw=math.ceil(n_samples / p_label),
        bytes_per_record=bytes_per_record or record_bytes(cfg),
    )
    tset = TrainingSet(
        features=feats,
        labels=labs,
        tau=taus,
        tau_max=np.full(n_samples, tau_p_train, dtype=np.int64),
        strategy=lb.LabelStrategy(lb.ESTIMATED),
        extractor=EXTRACTOR_SC,
        cfg=cfg,
        eta=eta,
        seed=seed,
        snr_db=snr_db,
    )
    return tset, stats


def save_training_set(tset: TrainingSet, path) -> None:
    """Binary container (magic, version, dims, float64 LE row-major) + JSON sidecar."""
    path = Path(path)
    feats = np.ascontiguousarray(tset.features, dtype="<f8")
    labs = np.ascontiguousarray(tset.labels, dtype="<f8")
    n, fd = feats.shape
    header = _HEADER.pack(DATASET_MAGIC, DATASET_VERSION, n, fd, labs.shape[1])
    path.write_bytes(header + feats.tobytes() + labs.tobytes())
    meta = {
        "format_version": DATASET_VERSION,
        "n_samples": n,
        "feature_dim": fd,
        "label_dim": int(labs.shape[1]),
        "strategy": {"kind": tset.strategy.kind, "loose_l": tset.strategy.loose_l},
        "extractor": tset.extractor,
        "eta": tset.eta,
        "seed": tset.seed,
        "snr_db": tset.snr_db,
        "cfg": {
            "n_fft": tset.cfg.n_fft,
            "cp_len": tset.cfg.cp_len,
            "sigma2_data": tset.cfg.sigma2_data,
            "sigma2_preamble": tset.cfg.sigma2_preamble,
        },
        "tau": tset.tau.tolist(),
        "tau_max": tset.tau_max.tolist(),
    }
    sidecar_path(path).write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def sidecar_path(path) -> Path:
    return Path(str(path) + ".json")


def load_training_set(path) -> TrainingSet:
    """Read a dataset container and its sidecar back into a TrainingSet."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"dataset not found: {path}")
    blob = path.read_bytes()
    if len(blob) < _HEADER.size:
        raise DatasetFormatError(f"{path}: truncated before the header ended")
    magic, version, n, fd, ld = _HEADER.unpack_from(blob)
    if magic != DATASET_MAGIC:
        raise DatasetFormatError(f"{path}: bad magic {magic!r}")
    if version != DATASET_VERSION:
        raise DatasetFormatError(f"{path}: unsupported version {version}")
    expected = _HEADER.size + 8 * (n * fd + n * ld)
    if len(blob) != expected:
        raise DatasetFormatError(
            f"{path}: payload holds {len(blob)} bytes, header implies {expected}"
        )
    off = _HEADER.size
    feats = np.frombuffer(blob, dtype="<f8", count=n * fd, offset=off).reshape(n, fd).copy()
    off += 8 * n * fd
    labs = np.frombuffer(blob, dtype="<f8", count=n * ld, offset=off).reshape(n, ld).copy()
    side = sidecar_path(path)
    if not side.exists():
        raise DatasetFormatError(f"{path}: sidecar {side.name} is missing")
    meta = json.loads(side.read_text(encoding="utf-8"))
    cfg = OfdmConfig(**meta["cfg"])
    strategy = lb.LabelStrategy(meta["strategy"]["kind"], meta["strategy"]["loose_l"])
    return TrainingSet(
        features=feats,
        labels=labs,
        tau=np.asarray(meta["tau"], dtype=np.int64),
        tau_max=np.asarray(meta["tau_max"], dtype=np.int64),
        strategy=strategy,
        extractor=meta["extractor"],
        cfg=cfg,
        eta=meta["eta"],
        seed=meta["seed"],
        snr_db=meta["snr_db"],
    )
