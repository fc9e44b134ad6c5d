"""Single-hidden-layer network with closed-form least-squares output weights.

The input weights and biases are random and never trained; only the linear
output layer is fit, as the minimum-norm least-squares solution, so training
is a single pseudoinverse application.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

from .waveform import OfdmConfig

if TYPE_CHECKING:  # pragma: no cover
    from .datagen import TrainingSet

INPUT_METRIC = "metric"
INPUT_RAW = "raw"
INPUT_KINDS = (INPUT_METRIC, INPUT_RAW)

# below this reciprocal condition estimate the Gram solve is not trusted
GRAM_RCOND_MIN = 1e-12
SVD_RTOL_FACTOR = 1e-10

MODEL_MAGIC = b"SYNCFELM"
MODEL_VERSION = 1
_HEADER = struct.Struct("<8sIBBQQQ")


class ModelFormatError(ValueError):
    """Model file is truncated, corrupt, or dimensionally inconsistent."""


@dataclass(frozen=True)
class ElmModel:
    """Random hidden layer plus (once trained) the linear output weights."""

    w: np.ndarray
    bias: np.ndarray
    beta: np.ndarray | None
    input_kind: str
    out_dim: int

    def __post_init__(self):
        if self.input_kind not in INPUT_KINDS:
            raise ValueError(f"input_kind must be one of {INPUT_KINDS}, got {self.input_kind!r}")
        if self.w.ndim != 2 or self.bias.shape != (self.w.shape[0],):
            raise ValueError("w must be (n_hidden, input_dim) with a matching bias vector")
        if self.beta is not None and self.beta.shape != (self.out_dim, self.w.shape[0]):
            raise ValueError("beta must be (out_dim, n_hidden)")

    @property
    def n_hidden(self) -> int:
        return self.w.shape[0]

    @property
    def input_dim(self) -> int:
        return self.w.shape[1]

    @property
    def trained(self) -> bool:
        return self.beta is not None


def default_hidden_count(cfg: OfdmConfig) -> int:
    """Default hidden width: eight nodes per timing lag."""
    return 8 * cfg.metric_len


def init_model(
    cfg: OfdmConfig,
    n_hidden: int,
    rng: np.random.Generator,
    input_kind: str = INPUT_METRIC,
) -> ElmModel:
    """Standard-normal input weights and biases; output weights unset."""
    if n_hidden < 1:
        raise ValueError(f"n_hidden must be positive, got {n_hidden}")
    if input_kind not in INPUT_KINDS:
        raise ValueError(f"input_kind must be one of {INPUT_KINDS}, got {input_kind!r}")
    input_dim = 2 * cfg.win_len if input_kind == INPUT_RAW else cfg.metric_len
    return ElmModel(
        w=rng.standard_normal((n_hidden, input_dim)),
        bias=rng.standard_normal(n_hidden),
        beta=None,
        input_kind=input_kind,
        out_dim=cfg.metric_len,
    )


def hidden_activations(model: ElmModel, feature: np.ndarray) -> np.ndarray:
    """tanh(W g + b) for one input vector."""
    feature = np.asarray(feature, dtype=float)
    if feature.shape != (model.input_dim,):
        raise ValueError(f"expected a {model.input_dim}-dim input, got {feature.shape}")
    return np.tanh(model.w @ feature + model.bias)


def pseudoinverse_apply(h: np.ndarray, t: np.ndarray, ridge: float = 0.0) -> np.ndarray:
    """Least-squares output weights beta = T H^+ for column-per-sample H and T.

    Uses the normal-equations solve on the n_hidden x n_hidden Gram matrix
    when it is well-conditioned (reciprocal condition estimate above 1e-12);
    otherwise falls back to an SVD pseudoinverse with singular values below
    1e-10 * max(n_hidden, n_samples) * s_max treated as zero.
    """
    h = np.asarray(h, dtype=float)
    t = np.asarray(t, dtype=float)
    if h.ndim != 2 or t.ndim != 2 or h.shape[1] != t.shape[1]:
        raise ValueError(f"H {h.shape} and T {t.shape} must share the sample axis")
    if ridge < 0:
        raise ValueError(f"ridge must be nonnegative, got {ridge}")
    if not (np.all(np.isfinite(h)) and np.all(np.isfinite(t))):
        raise ValueError("H and T must be finite")
    n_hidden, n_samples = h.shape
    if n_hidden <= n_samples:
        gram = h @ h.T
        if ridge > 0.0:
            gram = gram + ridge * np.eye(n_hidden)
        try:
            factor = sla.cho_factor(gram, check_finite=False)
            rcond, info = lapack.dpocon(factor[0], np.linalg.norm(gram, 1))
            if info == 0 and rcond > GRAM_RCOND_MIN:
                return sla.cho_solve(factor, h @ t.T, check_finite=False).T
        except np.linalg.LinAlgError:
            pass
    rtol = SVD_RTOL_FACTOR * max(h.shape)
    return t @ np.linalg.pinv(h, rcond=rtol)


def train(model: ElmModel, tset: "TrainingSet", ridge: float = 0.0) -> ElmModel:
    """New model with output weights fit to the training set by least squares."""
    feats = np.asarray(tset.features, dtype=float)
    labs = np.asarray(tset.labels, dtype=float)
    if feats.ndim != 2 or feats.shape[0] == 0:
        raise ValueError("training set must hold at least one sample")
    if feats.shape[1] != model.input_dim:
        raise ValueError(
            f"feature width {feats.shape[1]} does not match model input {model.input_dim}"
        )
    if labs.shape != (feats.shape[0], model.out_dim):
        raise ValueError(
            f"labels {labs.shape} must be (n_samples, {model.out_dim})"
        )
    h = np.tanh(model.w @ feats.T + model.bias[:, None])
    beta = pseudoinverse_apply(h, labs.T, ridge)
    return replace(model, beta=beta)


def infer(model: ElmModel, feature: np.ndarray) -> np.ndarray:
    """Network output vector for one input."""
    if model.beta is None:
        raise RuntimeError("model has no trained output weights; call train() first")
    return model.beta @ hidden_activations(model, feature)


def infer_batch(model: ElmModel, features: np.ndarray) -> np.ndarray:
    """Network outputs for a stack of inputs, one row per sample."""
    if model.beta is None:
        raise RuntimeError("model has no trained output weights; call train() first")
    features = np.asarray(features, dtype=float)
    if features.ndim != 2 or features.shape[1] != model.input_dim:
        raise ValueError(f"expected (n, {model.input_dim}) inputs, got {features.shape}")
    return np.tanh(features @ model.w.T + model.bias) @ model.beta.T


def estimate_sto(output: np.ndarray) -> int:
    """Timing estimate: smallest index attaining the maximum output."""
    output = np.asarray(output)
    if output.ndim != 1 or len(output) == 0:
        raise ValueError("output vector must be nonempty and 1-D")
    return int(np.argmax(output))


def save_model(model: ElmModel, path) -> None:
    """Binary model file: header + W, bias, beta as little-endian float64 row-major."""
    path = Path(path)
    kind = 0 if model.input_kind == INPUT_METRIC else 1
    header = _HEADER.pack(
        MODEL_MAGIC,
        MODEL_VERSION,
        kind,
        1 if model.trained else 0,
        model.out_dim,
        model.n_hidden,
        model.input_dim,
    )
    chunks = [header]
    chunks.append(np.ascontiguousarray(model.w, dtype="<f8").tobytes())
    chunks.append(np.ascontiguousarray(model.bias, dtype="<f8").tobytes())
    if model.trained:
        chunks.append(np.ascontiguousarray(model.beta, dtype="<f8").tobytes())
    path.write_bytes(b"".join(chunks))


def load_model(path) -> ElmModel:
    """Read a model file back; every byte is validated against the header."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"model not found: {path}")
    blob = path.read_bytes()
    if len(blob) < _HEADER.size:
        raise ModelFormatError(f"{path}: truncated before the header ended")
    magic, version, kind, has_beta, out_dim, n_hidden, input_dim = _HEADER.unpack_from(blob)
    if magic != MODEL_MAGIC:
        raise ModelFormatError(f"{path}: bad magic {magic!r}")
    if version != MODEL_VERSION:
        raise ModelFormatError(f"{path}: unsupported version {version}")
    if kind not in (0, 1):
        raise ModelFormatError(f"{path}: unknown input-kind tag {kind}")
    if has_beta not in (0, 1):
        raise ModelFormatError(f"{path}: corrupt trained flag {has_beta}")
    sizes = [("input weights (w)", n_hidden * input_dim), ("bias", n_hidden)]
    if has_beta:
        sizes.append(("output weights (beta)", out_dim * n_hidden))
    expected = _HEADER.size + 8 * sum(count for _, count in sizes)
    if len(blob) != expected:
        # walk the arrays to name the first field the byte budget cannot cover
        off = _HEADER.size
        short = "trailing bytes"
        for name, count in sizes:
            if off + 8 * count > len(blob):
                short = name
                break
            off += 8 * count
        raise ModelFormatError(
            f"{path}: file holds {len(blob)} bytes but the header implies {expected} "
            f"(mismatch at {short})"
        )
    off = _HEADER.size
    w = np.frombuffer(blob, dtype="<f8", count=n_hidden * input_dim, offset=off)
    w = w.reshape(n_hidden, input_dim).copy()
    off += 8 * n_hidden * input_dim
    bias = np.frombuffer(blob, dtype="<f8", count=n_hidden, offset=off).copy()
    off += 8 * n_hidden
    beta = None
    if has_beta:
        beta = np.frombuffer(blob, dtype="<f8", count=out_dim * n_hidden, offset=off)
        beta = beta.reshape(out_dim, n_hidden).copy()
    return ElmModel(
        w=w,
        bias=bias,
        beta=beta,
        input_kind=INPUT_METRIC if kind == 0 else INPUT_RAW,
        out_dim=out_dim,
    )
