"""End-to-end acceptance gate.

Every test prints exactly one summary line, `criterion NN <name>: PASS|FAIL
(<detail>)`, on the real stdout so the line survives pytest capture. Heavy
models are trained once per module and shared across criteria. Expect a few
minutes of wall time at the default desk-scale sample counts.
"""

import math
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from syncforge import (
    ChannelRealization,
    ExperimentConfig,
    LabelStrategy,
    OfdmConfig,
    apply_channel,
    argmax_timing,
    bandwidth_seconds,
    build_frame,
    build_preamble_sc,
    collect_training_set_datcol,
    default_hidden_count,
    derive_rng,
    gen_training_set,
    init_model,
    isi_free_region,
    label_flexible,
    label_loose,
    label_region,
    sc_metric,
    sc_metric_iterative,
    storage_bytes,
    sweep_snr,
    train,
)
from syncforge.datagen import TrainingSet
from syncforge.harness import run_table3

CFG = OfdmConfig()
N_TRAIN = 20_000
FULL_GRID = tuple(float(s) for s in range(0, 21, 2))
HIGH_GRID = tuple(float(s) for s in range(10, 21, 2))


@pytest.fixture
def report(capsys):
    """One live pass/fail line per criterion, visible despite output capture."""

    def _report(num, name, ok, detail):
        line = f"criterion {num:02d} {name}: {'PASS' if ok else 'FAIL'} ({detail})"
        with capsys.disabled():
            # leading break keeps the line whole under pytest -v
            print(f"\n{line}", flush=True)
        assert ok, line

    return _report


def binom_sigma(p, n):
    return math.sqrt(max(p * (1.0 - p), 1e-12) / n)


def gen_model(strategy, cfg, seed, extractor="sc", eta=0.2, tau_p_train=20):
    tset = gen_training_set(
        strategy, cfg, N_TRAIN, extractor=extractor, eta=eta,
        tau_p_train=tau_p_train, seed=seed,
    )
    kind = "raw" if extractor == "raw" else "metric"
    model = init_model(
        cfg, default_hidden_count(cfg), derive_rng(5, "init", seed), input_kind=kind
    )
    return train(model, tset)


def run_sweep(model, curve, snrs, trials, tau_p, cfg=CFG, eta=0.2,
              extractor="sc", method="elm", seed=7):
    exp = ExperimentConfig(
        cfg=cfg, snr_grid_db=tuple(snrs), trials_per_point=trials,
        tau_p_test=tau_p, eta=eta, extractor=extractor, method=method,
        seed=seed, curve=curve,
    )
    return sweep_snr(exp, model)


def p_by_snr(sweep):
    return {row.snr_db: row.p_e for row in sweep.rows}


@pytest.fixture(scope="module")
def core_models():
    t0 = time.time()
    lc = gen_model(LabelStrategy("lc", 26), CFG, seed=11)
    fc = gen_model(LabelStrategy("fc", 26), CFG, seed=12)
    dc_set, dc_stats = collect_training_set_datcol(
        CFG, N_TRAIN, snr_db=20.0, seed=13
    )
    nh = default_hidden_count(CFG)
    dc = train(init_model(CFG, nh, derive_rng(5, "init", 13)), dc_set)
    return {
        "lc": lc,
        "fc": fc,
        "datcol": dc,
        "datcol_stats": dc_stats,
        "train_seconds": time.time() - t0,
    }


@pytest.fixture(scope="module")
def ordering_sweeps(core_models):
    t0 = time.time()
    out = {
        name: run_sweep(core_models[name], name, FULL_GRID, 4000, tau_p=20)
        for name in ("lc", "fc", "datcol")
    }
    out["sweep_seconds"] = time.time() - t0
    return out


@pytest.fixture(scope="module")
def collection_10k():
    return collect_training_set_datcol(CFG, 10_000, snr_db=20.0, seed=13)


def test_c01_iterative_metric_matches_direct(report):
    rng = derive_rng(1, "oracle-equivalence")
    t0 = time.time()
    worst = 0.0
    for _ in range(1000):
        w = (rng.standard_normal(CFG.win_len)
             + 1j * rng.standard_normal(CFG.win_len)) / np.sqrt(2.0)
        diff = np.abs(sc_metric_iterative(w, CFG) - sc_metric(w, CFG)).max()
        worst = max(worst, diff)
    elapsed = time.time() - t0
    ok = worst < 1e-9 and elapsed < 5.0
    report(1, "iterative-metric-equivalence", ok,
           f"max diff {worst:.2e} over 1000 windows in {elapsed:.2f}s")


def test_c02_clean_channel_peak_is_unity_inside_the_safe_region(report):
    rng = derive_rng(2, "ideal-peak")
    preamble = build_preamble_sc(CFG)
    t0 = time.time()
    worst_peak_err = 0.0
    misses = 0
    for _ in range(100):
        tau = int(rng.integers(0, CFG.n_fft))
        frame = build_frame(CFG, preamble, rng)
        cir = ChannelRealization(gains=np.array([1.0 + 0j]), delays=np.array([0]))
        m = sc_metric(apply_channel(frame, cir, tau, CFG), CFG)
        worst_peak_err = max(worst_peak_err, abs(m.max() - 1.0))
        if argmax_timing(m) not in isi_free_region(tau, 0, CFG.cp_len):
            misses += 1
    elapsed = time.time() - t0
    ok = worst_peak_err < 1e-6 and misses == 0 and elapsed < 5.0
    report(2, "noiseless-peak-normalization", ok,
           f"max |peak-1| {worst_peak_err:.2e}, {misses} region misses, {elapsed:.2f}s")


def test_c03_small_network_interpolates_its_training_set(report):
    cfg = OfdmConfig(n_fft=6, cp_len=2)
    rng = derive_rng(100, "synthetic")
    feats = rng.standard_normal((64, cfg.metric_len))
    labels = (rng.random((64, cfg.metric_len)) < 0.3).astype(float)
    tset = TrainingSet(
        features=feats, labels=labels,
        tau=np.zeros(64, dtype=np.int64), tau_max=np.zeros(64, dtype=np.int64),
        strategy=LabelStrategy("region"), extractor="sc", cfg=cfg,
        eta=0.2, seed=100,
    )
    model = train(init_model(cfg, 64, derive_rng(101, "init")), tset)
    h = np.tanh(model.w @ feats.T + model.bias[:, None])
    err = float(np.max(np.abs(model.beta @ h - labels.T)))
    ok = err < 1e-6
    report(3, "exact-interpolation-64x64", ok, f"max |beta H - T| = {err:.2e}")


def test_c04_label_band_nesting_and_coverage(report):
    rng = derive_rng(3, "label-draws")
    loose_l, tau_p = 26, 20
    nest_viol = cover_viol = covered_cases = 0
    for _ in range(10_000):
        tau = int(rng.integers(0, CFG.n_fft))
        flex_l = int(rng.integers(CFG.cp_len // 2, loose_l + 1))
        region = set(np.flatnonzero(label_region(tau, tau_p, CFG)))
        loose = set(np.flatnonzero(label_loose(tau, loose_l, CFG)))
        flexible = set(np.flatnonzero(label_flexible(tau, flex_l, CFG)))
        if not loose < region:
            nest_viol += 1
        if flex_l <= tau_p:
            covered_cases += 1
            if not flexible >= region:
                cover_viol += 1
    ok = nest_viol == 0 and cover_viol == 0 and covered_cases > 0
    report(4, "label-band-nesting", ok,
           f"{nest_viol} nesting and {cover_viol} coverage violations "
           f"({covered_cases} covered draws of 10000)")


def test_c05_collected_label_accuracy_in_band(collection_10k, report):
    _tset, stats = collection_10k
    ok = 0.55 < stats.p_label < 0.95
    report(5, "collection-label-accuracy", ok,
           f"p_label {stats.p_label:.4f}, n_raw {stats.n_raw} for 10000 kept")


def test_c06_resource_accounting_identities(collection_10k, tmp_path, report):
    _tset, stats = collection_10k
    airtime = bandwidth_seconds(633.5277e6, 1e8)
    identity_ok = abs(airtime - 50.6822) < 1e-3
    gen_bytes = stats.n_effective * stats.bytes_per_record
    ratio = storage_bytes(stats) / gen_bytes
    ratio_ok = abs(ratio - 1.0 / stats.p_label) / (1.0 / stats.p_label) < 0.005
    manifest = run_table3(tmp_path, seed=2, n_train=2000)
    by_name = {row["strategy"]: row for row in manifest["rows"]}
    zero_ok = by_name["generated"]["bandwidth_s"] == 0.0
    ok = identity_ok and ratio_ok and zero_ok
    report(6, "resource-identities", ok,
           f"airtime {airtime:.6f}s, storage ratio {ratio:.4f} vs "
           f"1/p={1.0 / stats.p_label:.4f}, generated airtime "
           f"{by_name['generated']['bandwidth_s']}")


def test_c07_training_strategy_ordering(core_models, ordering_sweeps, report):
    lc = p_by_snr(ordering_sweeps["lc"])
    fc = p_by_snr(ordering_sweeps["fc"])
    dc = p_by_snr(ordering_sweeps["datcol"])
    trials = 4000
    fc_ok = all(
        fc[s] <= lc[s] + 3 * binom_sigma(lc[s], trials) for s in FULL_GRID
    )
    dc_ok = all(lc[s] < dc[s] for s in FULL_GRID if s >= 6.0)
    elapsed = core_models["train_seconds"] + ordering_sweeps["sweep_seconds"]
    ok = fc_ok and dc_ok and elapsed < 600.0
    report(7, "strategy-ordering", ok,
           f"fc<=lc+3s at all {len(FULL_GRID)} points: {fc_ok}; lc<datcol at "
           f"snr>=6: {dc_ok}; 20dB p_e lc {lc[20.0]:.4f} fc {fc[20.0]:.4f} "
           f"datcol {dc[20.0]:.4f}; {elapsed:.0f}s")


def test_c08_band_labels_generalize_to_longer_delays(core_models, report):
    region_model = gen_model(LabelStrategy("region"), CFG, seed=21)
    trials = 2000
    reg = p_by_snr(run_sweep(region_model, "region24", HIGH_GRID, trials, tau_p=24))
    lc = p_by_snr(run_sweep(core_models["lc"], "lc24", HIGH_GRID, trials, tau_p=24))
    fc = p_by_snr(run_sweep(core_models["fc"], "fc24", HIGH_GRID, trials, tau_p=24))
    beats_region = all(lc[s] < reg[s] and fc[s] < reg[s] for s in HIGH_GRID)
    fc_band = max(fc.values()) <= 0.12
    ok = beats_region and fc_band
    report(8, "generalization-beyond-training-delay", ok,
           f"lc,fc < region at all {len(HIGH_GRID)} points: {beats_region}; "
           f"max fc p_e {max(fc.values()):.4f} <= 0.12: {fc_band}")


def test_c09a_metric_features_beat_raw_samples(core_models, report):
    raw_model = gen_model(LabelStrategy("fc", 26), CFG, seed=31, extractor="raw")
    snrs = tuple(float(s) for s in range(6, 21, 2))
    trials = 2000
    raw = p_by_snr(run_sweep(raw_model, "ds_learn", snrs, trials, tau_p=20,
                             extractor="raw"))
    fc = p_by_snr(run_sweep(core_models["fc"], "fc_vs_raw", snrs, trials, tau_p=20))
    ok = all(fc[s] < raw[s] for s in snrs)
    report(9, "metric-features-beat-raw-input", ok,
           f"fc < raw-input at all {len(snrs)} points; 20dB fc {fc[20.0]:.4f} "
           f"raw {raw[20.0]:.4f}")


def test_c09b_short_prefix_costs_accuracy(ordering_sweeps, report):
    cfg16 = OfdmConfig(n_fft=128, cp_len=16)
    lc16_model = gen_model(LabelStrategy("lc", 13), cfg16, seed=11, tau_p_train=10)
    fc16_model = gen_model(LabelStrategy("fc", 13), cfg16, seed=12, tau_p_train=10)
    trials = 2000
    lc16 = p_by_snr(run_sweep(lc16_model, "lc16", HIGH_GRID, trials, tau_p=10,
                              cfg=cfg16))
    fc16 = p_by_snr(run_sweep(fc16_model, "fc16", HIGH_GRID, trials, tau_p=10,
                              cfg=cfg16))
    lc32 = p_by_snr(ordering_sweeps["lc"])
    fc32 = p_by_snr(ordering_sweeps["fc"])
    ok = all(lc16[s] > lc32[s] and fc16[s] > fc32[s] for s in HIGH_GRID)
    report(9, "short-prefix-penalty", ok,
           f"p_e(Lc=16) > p_e(Lc=32) for lc and fc at all {len(HIGH_GRID)} "
           f"points; 20dB lc16 {lc16[20.0]:.4f} vs lc32 {lc32[20.0]:.4f}")


def test_c09c_robust_to_power_profile_mismatch(report):
    trials = 2000
    results = {}
    for eta in (0.05, 0.35):
        model = gen_model(LabelStrategy("fc", 26), CFG, seed=12, eta=eta)
        curve = f"fc_eta{int(eta * 100):03d}"
        results[eta] = p_by_snr(
            run_sweep(model, curve, HIGH_GRID, trials, tau_p=20, eta=eta)
        )
    steep, flat = results[0.35], results[0.05]
    ok = all(
        steep[s] <= flat[s] + 3 * binom_sigma(flat[s], trials) for s in HIGH_GRID
    )
    report(9, "decay-profile-robustness", ok,
           f"p_e(eta=0.35) <= p_e(eta=0.05)+3s at all {len(HIGH_GRID)} points; "
           f"20dB steep {steep[20.0]:.4f} flat {flat[20.0]:.4f}")


def test_c10_wider_fft_spot_check(report):
    cfg256 = OfdmConfig(n_fft=256, cp_len=32)
    lc_model = gen_model(LabelStrategy("lc", 26), cfg256, seed=11)
    fc_model = gen_model(LabelStrategy("fc", 26), cfg256, seed=12)
    trials = 4000
    lc = run_sweep(lc_model, "lc256", (12.0,), trials, tau_p=20, cfg=cfg256)
    fc = run_sweep(fc_model, "fc256", (12.0,), trials, tau_p=20, cfg=cfg256)
    p_lc, p_fc = lc.rows[0].p_e, fc.rows[0].p_e
    ok = p_fc < p_lc and 0.002 <= p_fc <= 0.07
    report(10, "wide-fft-spot-value", ok,
           f"N=256 at 12 dB: lc {p_lc:.4f}, fc {p_fc:.4f} in [0.002, 0.07]")


def test_c11_deep_noise_floor_matches_random_guessing(report):
    trials = 10_000
    sweep = run_sweep(None, "noise_floor", (-20.0,), trials, tau_p=20,
                      method="argmax", seed=42)
    p_e = sweep.rows[0].p_e
    expected = 1.0 - 13.0 / 160.0
    sigma = binom_sigma(expected, trials)
    ok = abs(p_e - expected) <= 3 * sigma
    report(11, "deep-noise-random-floor", ok,
           f"p_e {p_e:.4f} vs {expected:.5f} +- {3 * sigma:.4f}")


def test_c12_experiment_runs_reproduce_bit_exactly(tmp_path, report):
    def run(out_dir, threads):
        env = dict(os.environ)
        env["SYNCFORGE_THREADS"] = str(threads)
        env["MPLCONFIGDIR"] = str(tmp_path / "mpl")
        proc = subprocess.run(
            [sys.executable, "-m", "syncforge", "experiment", "fig2a",
             "--seed", "42", "--trials", "100", "--ntrain", "600",
             "--out", str(out_dir)],
            capture_output=True, text=True, env=env, cwd=str(tmp_path),
        )
        assert proc.returncode == 0, proc.stderr
        return {
            p.name: p.read_bytes()
            for p in sorted((Path(out_dir) / "fig2a").glob("*.csv"))
        }

    first = run(tmp_path / "serial", 1)
    second = run(tmp_path / "threaded", 2)
    names_ok = set(first) == set(second) == {"datcol.csv", "lc.csv", "fc.csv"}
    bytes_ok = names_ok and all(first[n] == second[n] for n in first)
    ok = names_ok and bytes_ok
    report(12, "thread-count-reproducibility", ok,
           f"{len(first)} csv files byte-identical across "
           f"SYNCFORGE_THREADS=1 and 2: {bytes_ok}")
