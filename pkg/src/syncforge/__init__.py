"""OFDM timing-synchronization simulation toolkit.

Covers transmit waveform generation, multipath Rayleigh channels, correlation
timing metrics, learning-label construction, training-set generation (both
computer-generated and simulated over-the-air collection), a least-squares
single-hidden-layer timing network, and a Monte-Carlo evaluation harness with
CSV, gnuplot, and PNG reporting.
"""

__version__ = "0.1.0"

from .seeding import derive_rng, derive_seed
from .waveform import (
    OfdmConfig,
    TxStream,
    add_cp,
    build_frame,
    build_preamble_minn,
    build_preamble_sc,
    dft_demodulate,
    idft_modulate,
    zadoff_chu,
)
from .channel import (
    ChannelRealization,
    NoiseSpec,
    add_awgn,
    apply_channel,
    draw_cir,
    pdp_weights,
)
from .metrics import (
    argmax_timing,
    is_correct,
    isi_free_region,
    minn_metric,
    normalize_l2,
    sc_metric,
    sc_metric_iterative,
)
from .labels import (
    LabelStrategy,
    label_accuracy,
    label_flexible,
    label_from_estimate,
    label_loose,
    label_midpoint,
    label_one_hot,
    label_region,
)
from .datagen import (
    CollectionStats,
    DatasetFormatError,
    TrainingSet,
    bandwidth_seconds,
    collect_training_set_datcol,
    extract_feature,
    gen_training_set,
    load_training_set,
    record_bytes,
    save_training_set,
    storage_bytes,
)
from .elm import (
    ElmModel,
    ModelFormatError,
    default_hidden_count,
    estimate_sto,
    hidden_activations,
    infer,
    infer_batch,
    init_model,
    load_model,
    pseudoinverse_apply,
    save_model,
    train,
)
from .harness import (
    ExperimentConfig,
    SweepResult,
    SweepRow,
    emit_plot_script,
    preset_names,
    run_experiment,
    run_trial,
    sweep_snr,
    write_sweep_csv,
)

__all__ = [
    "derive_rng",
    "derive_seed",
    "OfdmConfig",
    "TxStream",
    "add_cp",
    "build_frame",
    "build_preamble_minn",
    "build_preamble_sc",
    "dft_demodulate",
    "idft_modulate",
    "zadoff_chu",
    "ChannelRealization",
    "NoiseSpec",
    "add_awgn",
    "apply_channel",
    "draw_cir",
    "pdp_weights",
    "argmax_timing",
    "is_correct",
    "isi_free_region",
    "minn_metric",
    "normalize_l2",
    "sc_metric",
    "sc_metric_iterative",
    "LabelStrategy",
    "label_accuracy",
    "label_flexible",
    "label_from_estimate",
    "label_loose",
    "label_midpoint",
    "label_one_hot",
    "label_region",
    "CollectionStats",
    "DatasetFormatError",
    "TrainingSet",
    "bandwidth_seconds",
    "collect_training_set_datcol",
    "extract_feature",
    "gen_training_set",
    "load_training_set",
    "record_bytes",
    "save_training_set",
    "storage_bytes",
    "ElmModel",
    "ModelFormatError",
    "default_hidden_count",
    "estimate_sto",
    "hidden_activations",
    "infer",
    "infer_batch",
    "init_model",
    "load_model",
    "pseudoinverse_apply",
    "save_model",
    "train",
    "ExperimentConfig",
    "SweepResult",
    "SweepRow",
    "emit_plot_script",
    "preset_names",
    "run_experiment",
    "run_trial",
    "sweep_snr",
    "write_sweep_csv",
]
