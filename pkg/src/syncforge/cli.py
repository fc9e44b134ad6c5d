"""Command-line front end: dataset generation, training, evaluation, presets.

Every command accepts --config FILE holding flat KEY=VALUE lines; explicit
command-line flags override file values, which override built-in defaults.
Each run writes its fully resolved configuration next to its outputs. Exit
codes: 0 success, 2 for configuration or input errors, 1 for unexpected
failures.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from . import labels as lb
from .datagen import (
    DatasetFormatError,
    EXTRACTOR_RAW,
    EXTRACTORS,
    collect_training_set_datcol,
    gen_training_set,
    load_training_set,
    save_training_set,
)
from .elm import (
    INPUT_RAW,
    ModelFormatError,
    default_hidden_count,
    init_model,
    load_model,
    save_model,
    train,
)
from .harness import (
    DEFAULT_N_TRAIN,
    DEFAULT_TRIALS,
    ExperimentConfig,
    default_loose_bound,
    preset_names,
    run_experiment,
    run_table3,
    sweep_snr,
    write_sweep_csv,
)
from .seeding import derive_rng
from .waveform import OfdmConfig

_STRATEGY_NAMES = ("onehot", "midpoint", "region", "lc", "fc", "datcol")

# per-command key table: name -> (type, built-in default)
_GEN_SPEC = {
    "strategy": (str, None),
    "n": (int, 1000),
    "seed": (int, 0),
    "N": (int, 128),
    "Lc": (int, 32),
    "L": (int, None),
    "taup": (int, 20),
    "eta": (float, 0.2),
    "extractor": (str, "sc"),
    "snr": (float, 20.0),
    "out": (str, None),
}
_TRAIN_SPEC = {
    "data": (str, None),
    "nh": (int, None),
    "ridge": (float, 0.0),
    "seed": (int, 0),
    "out": (str, None),
}
_EVAL_SPEC = {
    "model": (str, None),
    "baseline": (str, None),
    "N": (int, 128),
    "Lc": (int, 32),
    "extractor": (str, None),
    "snr_grid": (str, "0:20:2"),
    "trials": (int, DEFAULT_TRIALS),
    "taup_test": (int, 20),
    "eta": (float, 0.2),
    "cfo": (float, 0.0),
    "seed": (int, 1),
    "curve": (str, None),
    "out": (str, "eval"),
}
_EXPERIMENT_SPEC = {
    "preset": (str, None),
    "seed": (int, 1),
    "trials": (int, DEFAULT_TRIALS),
    "ntrain": (int, DEFAULT_N_TRAIN),
    "snr_grid": (str, None),
    "out": (str, "runs"),
}
_TABLE3_SPEC = {
    "ntrain": (int, DEFAULT_N_TRAIN),
    "snr": (float, 20.0),
    "seed": (int, 1),
    "taup": (int, 20),
    "eta": (float, 0.2),
    "N": (int, 128),
    "Lc": (int, 32),
    "bandwidth_hz": (float, 1e8),
    "out": (str, "runs"),
}


def _parse_kv_file(path: str) -> dict:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"config file not found: {p}")
    values = {}
    for lineno, raw in enumerate(p.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{p}:{lineno}: expected KEY=VALUE, got {line!r}")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


def _resolve(args: argparse.Namespace, spec: dict) -> dict:
    file_values = _parse_kv_file(args.config) if getattr(args, "config", None) else {}
    unknown = sorted(set(file_values) - set(spec))
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(unknown)}")
    resolved = {}
    for key, (typ, default) in spec.items():
        cli_value = getattr(args, key, None)
        if cli_value is not None:
            resolved[key] = cli_value
        elif key in file_values:
            try:
                resolved[key] = typ(file_values[key])
            except ValueError:
                raise ValueError(
                    f"config key {key} expects {typ.__name__}, got {file_values[key]!r}"
                ) from None
        else:
            resolved[key] = default
    return resolved


def _write_resolved(resolved: dict, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"{k}={v}" for k, v in sorted(resolved.items()) if v is not None]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _parse_grid(text: str) -> tuple:
    """Grid spec: 'start:stop:step' (inclusive) or comma-separated values."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid spec must be start:stop:step, got {text!r}")
        start, stop, step = (float(x) for x in parts)
        if step <= 0:
            raise ValueError(f"grid step must be positive, got {step}")
        points = []
        v = start
        while v <= stop + 1e-9:
            points.append(round(v, 9))
            v += step
        return tuple(points)
    return tuple(float(x) for x in text.split(","))


def _cmd_gen(args: argparse.Namespace) -> int:
    r = _resolve(args, _GEN_SPEC)
    if r["strategy"] is None:
        raise ValueError("gen needs --strategy")
    if r["strategy"] not in _STRATEGY_NAMES:
        raise ValueError(f"unknown strategy {r['strategy']!r}; expected {_STRATEGY_NAMES}")
    cfg = OfdmConfig(n_fft=r["N"], cp_len=r["Lc"])
    out = Path(r["out"] or f"train_{r['strategy']}_n{r['n']}_seed{r['seed']}.bin")
    if r["strategy"] == "datcol":
        tset, stats = collect_training_set_datcol(
            cfg,
            r["n"],
            snr_db=r["snr"],
            eta=r["eta"],
            tau_p_train=r["taup"],
            seed=r["seed"],
        )
        print(
            f"collected {len(tset)} samples at {r['snr']:g} dB: "
            f"p_label={stats.p_label:.4f}, n_raw={stats.n_raw}"
        )
    else:
        if r["strategy"] in ("lc", "fc"):
            loose = r["L"] if r["L"] is not None else default_loose_bound(cfg.cp_len)
            strategy = lb.LabelStrategy(r["strategy"], loose)
        else:
            strategy = lb.LabelStrategy(r["strategy"])
        tset = gen_training_set(
            strategy,
            cfg,
            r["n"],
            eta=r["eta"],
            tau_p_train=r["taup"],
            extractor=r["extractor"],
            seed=r["seed"],
        )
        print(f"generated {len(tset)} samples with strategy {r['strategy']}")
    save_training_set(tset, out)
    _write_resolved(r, Path(str(out) + ".config.txt"))
    print(f"wrote {out} and {out}.json")
    return 0


def _cmd_train(args: argparse.Namespace) -> int:
    r = _resolve(args, _TRAIN_SPEC)
    if r["data"] is None:
        raise ValueError("train needs --data")
    data = Path(r["data"])
    if not data.exists():
        raise FileNotFoundError(f"dataset not found: {data}")
    tset = load_training_set(data)
    n_hidden = r["nh"] if r["nh"] is not None else default_hidden_count(tset.cfg)
    input_kind = INPUT_RAW if tset.extractor == EXTRACTOR_RAW else "metric"
    model = init_model(
        tset.cfg, n_hidden, derive_rng(r["seed"], "init"), input_kind=input_kind
    )
    model = train(model, tset, ridge=r["ridge"])
    out = Path(r["out"]) if r["out"] else data.with_suffix(".elm")
    save_model(model, out)
    _write_resolved(r, Path(str(out) + ".config.txt"))
    print(f"trained {n_hidden}-node model on {len(tset)} samples; wrote {out}")
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    r = _resolve(args, _EVAL_SPEC)
    if (r["model"] is None) == (r["baseline"] is None):
        raise ValueError("eval needs exactly one of --model or --baseline")
    cfg = OfdmConfig(n_fft=r["N"], cp_len=r["Lc"])
    if r["baseline"] is not None:
        if r["baseline"] not in ("sc", "minn"):
            raise ValueError(f"baseline must be sc or minn, got {r['baseline']!r}")
        method = "argmax"
        extractor = r["baseline"]
        model = None
        curve = r["curve"] or f"corr_{r['baseline']}"
    else:
        model_path = Path(r["model"])
        if not model_path.exists():
            raise FileNotFoundError(f"model not found: {model_path}")
        model = load_model(model_path)
        method = "elm"
        if model.input_kind == INPUT_RAW:
            extractor = EXTRACTOR_RAW
        else:
            extractor = r["extractor"] or "sc"
        if extractor not in EXTRACTORS:
            raise ValueError(f"extractor must be one of {EXTRACTORS}, got {extractor!r}")
        if model.out_dim != cfg.metric_len:
            raise ValueError(
                f"model output width {model.out_dim} does not match "
                f"metric_len {cfg.metric_len} for N={cfg.n_fft}, Lc={cfg.cp_len}"
            )
        curve = r["curve"] or model_path.stem
    exp = ExperimentConfig(
        cfg=cfg,
        snr_grid_db=_parse_grid(r["snr_grid"]),
        trials_per_point=r["trials"],
        tau_p_test=r["taup_test"],
        eta=r["eta"],
        extractor=extractor,
        method=method,
        seed=r["seed"],
        curve=curve,
        test_cfo=("const", r["cfo"]),
    )
    sweep = sweep_snr(exp, model)
    out = Path(r["out"])
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{curve}.csv"
    write_sweep_csv(sweep, csv_path)
    from .plotting import render_sweeps

    render_sweeps([sweep], out / f"{curve}.png")
    _write_resolved(r, out / "resolved_config.txt")
    worst = max(row.p_e for row in sweep.rows)
    print(f"wrote {csv_path} and {curve}.png (max p_e {worst:.4g})")
    return 0


def _cmd_experiment(args: argparse.Namespace) -> int:
    r = _resolve(args, _EXPERIMENT_SPEC)
    grid = _parse_grid(r["snr_grid"]) if r["snr_grid"] else None
    manifest = run_experiment(
        r["preset"],
        r["out"],
        seed=r["seed"],
        trials=r["trials"],
        n_train=r["ntrain"],
        snr_grid=grid,
    )
    out = Path(r["out"]) / r["preset"]
    _write_resolved(r, out / "resolved_config.txt")
    if r["preset"] == "table3":
        print(f"wrote {out}/table3.csv, table3.png, manifest.json")
    else:
        names = ", ".join(c["curve"] for c in manifest["curves"])
        print(f"wrote {len(manifest['curves'])} curves ({names}) under {out}")
    return 0


def _cmd_table3(args: argparse.Namespace) -> int:
    r = _resolve(args, _TABLE3_SPEC)
    cfg = OfdmConfig(n_fft=r["N"], cp_len=r["Lc"])
    run_table3(
        r["out"],
        seed=r["seed"],
        n_train=r["ntrain"],
        snr_db=r["snr"],
        bandwidth_hz=r["bandwidth_hz"],
        cfg=cfg,
        tau_p_train=r["taup"],
        eta=r["eta"],
    )
    out = Path(r["out"]) / "table3"
    _write_resolved(r, out / "resolved_config.txt")
    print(f"wrote {out}/table3.csv, table3.png, manifest.json")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="syncforge",
        description="OFDM timing-synchronization simulation and evaluation",
    )
    parser.add_argument("--version", action="version", version=f"syncforge {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate or collect a training set")
    gen.add_argument("--strategy", choices=_STRATEGY_NAMES)
    gen.add_argument("--n", type=int)
    gen.add_argument("--seed", type=int)
    gen.add_argument("--N", type=int, dest="N")
    gen.add_argument("--Lc", type=int, dest="Lc")
    gen.add_argument("--L", type=int, dest="L", help="loose delay bound for lc/fc")
    gen.add_argument("--taup", type=int, help="fixed training channel max delay")
    gen.add_argument("--eta", type=float)
    gen.add_argument("--extractor", choices=EXTRACTORS)
    gen.add_argument("--snr", type=float, help="collection SNR for --strategy datcol")
    gen.add_argument("--out")
    gen.add_argument("--config")
    gen.set_defaults(handler=_cmd_gen)

    tr = sub.add_parser("train", help="fit output weights on a saved training set")
    tr.add_argument("--data")
    tr.add_argument("--nh", type=int, help="hidden node count (default 8 per lag)")
    tr.add_argument("--ridge", type=float)
    tr.add_argument("--seed", type=int)
    tr.add_argument("--out")
    tr.add_argument("--config")
    tr.set_defaults(handler=_cmd_train)

    ev = sub.add_parser("eval", help="sweep a model or classic baseline over SNR")
    ev.add_argument("--model")
    ev.add_argument("--baseline", choices=("sc", "minn"))
    ev.add_argument("--N", type=int, dest="N")
    ev.add_argument("--Lc", type=int, dest="Lc")
    ev.add_argument("--extractor", choices=EXTRACTORS)
    ev.add_argument("--snr-grid", dest="snr_grid", help="start:stop:step or v1,v2,...")
    ev.add_argument("--trials", type=int)
    ev.add_argument("--taup-test", dest="taup_test", type=int)
    ev.add_argument("--eta", type=float)
    ev.add_argument("--cfo", type=float, help="constant test carrier offset")
    ev.add_argument("--seed", type=int)
    ev.add_argument("--curve", help="curve name used in file names")
    ev.add_argument("--out")
    ev.add_argument("--config")
    ev.set_defaults(handler=_cmd_eval)

    ex = sub.add_parser("experiment", help="run a named preset end to end")
    ex.add_argument("preset", choices=preset_names())
    ex.add_argument("--seed", type=int)
    ex.add_argument("--trials", type=int)
    ex.add_argument("--ntrain", type=int)
    ex.add_argument("--snr-grid", dest="snr_grid")
    ex.add_argument("--out")
    ex.add_argument("--config")
    ex.set_defaults(handler=_cmd_experiment)

    t3 = sub.add_parser("table3", help="storage and air-time accounting table")
    t3.add_argument("--ntrain", type=int)
    t3.add_argument("--snr", type=float)
    t3.add_argument("--seed", type=int)
    t3.add_argument("--taup", type=int)
    t3.add_argument("--eta", type=float)
    t3.add_argument("--N", type=int, dest="N")
    t3.add_argument("--Lc", type=int, dest="Lc")
    t3.add_argument("--bandwidth-hz", dest="bandwidth_hz", type=float)
    t3.add_argument("--out")
    t3.add_argument("--config")
    t3.set_defaults(handler=_cmd_table3)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (
        ValueError,
        KeyError,
        FileNotFoundError,
        DatasetFormatError,
        ModelFormatError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - unexpected failure path
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
