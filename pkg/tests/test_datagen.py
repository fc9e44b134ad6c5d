import json
import math

import numpy as np
import pytest
from scipy import stats

from syncforge import (
    CollectionStats,
    DatasetFormatError,
    LabelStrategy,
    OfdmConfig,
    bandwidth_seconds,
    collect_training_set_datcol,
    extract_feature,
    gen_training_set,
    load_training_set,
    record_bytes,
    save_training_set,
    storage_bytes,
)
from syncforge.datagen import build_preamble, feature_dim, sidecar_path
from syncforge import build_preamble_minn, build_preamble_sc, derive_rng
from syncforge import normalize_l2, sc_metric_iterative
from conftest import random_window


def test_feature_dims_per_extractor(cfg):
    assert feature_dim(cfg, "sc") == cfg.metric_len
    assert feature_dim(cfg, "minn") == cfg.metric_len
    assert feature_dim(cfg, "raw") == 2 * cfg.win_len
    with pytest.raises(ValueError):
        feature_dim(cfg, "nope")


def test_preamble_choice_per_extractor(cfg):
    assert np.array_equal(build_preamble(cfg, "sc"), build_preamble_sc(cfg))
    assert np.array_equal(build_preamble(cfg, "raw"), build_preamble_sc(cfg))
    assert np.array_equal(build_preamble(cfg, "minn"), build_preamble_minn(cfg))


def test_extract_feature_forms(cfg, rng):
    w = random_window(cfg, rng)
    sc = extract_feature(w, cfg, "sc")
    assert np.allclose(sc, normalize_l2(sc_metric_iterative(w, cfg)))
    raw = extract_feature(w, cfg, "raw")
    assert raw.shape == (2 * cfg.win_len,)
    assert np.linalg.norm(raw) == pytest.approx(1.0)
    assert np.allclose(raw * np.linalg.norm(np.concatenate([w.real, w.imag])),
                       np.concatenate([w.real, w.imag]))


def test_generation_is_seed_deterministic(cfg):
    s = LabelStrategy("lc", 26)
    a = gen_training_set(s, cfg, 25, seed=9)
    b = gen_training_set(s, cfg, 25, seed=9)
    assert np.array_equal(a.features, b.features)
    assert np.array_equal(a.labels, b.labels)
    assert np.array_equal(a.tau, b.tau)
    c = gen_training_set(s, cfg, 25, seed=10)
    assert not np.array_equal(a.features, c.features)


def test_each_sample_is_independent_of_batch_size(cfg):
    s = LabelStrategy("fc", 26)
    small = gen_training_set(s, cfg, 8, seed=4)
    big = gen_training_set(s, cfg, 20, seed=4)
    assert np.array_equal(small.features, big.features[:8])
    assert np.array_equal(small.labels, big.labels[:8])


def test_loose_strategy_fixes_band_and_delay(cfg):
    tset = gen_training_set(LabelStrategy("lc", 26), cfg, 40, seed=2)
    assert np.all(tset.tau_max == 26)
    widths = tset.labels.sum(axis=1)
    assert np.all(widths == cfg.cp_len - 26 + 1)
    for m in (0, 17, 39):
        first = int(np.flatnonzero(tset.labels[m])[0])
        last = int(np.flatnonzero(tset.labels[m])[-1])
        assert first == tset.tau[m] + 26
        assert last == tset.tau[m] + cfg.cp_len


def test_flexible_bound_is_uniform_over_its_range(cfg):
    tset = gen_training_set(LabelStrategy("fc", 26), cfg, 4000, seed=6)
    lo, hi = cfg.cp_len // 2, 26
    values = np.asarray(tset.tau_max)
    assert values.min() >= lo and values.max() <= hi
    counts = np.bincount(values - lo, minlength=hi - lo + 1)
    res = stats.chisquare(counts)
    assert res.pvalue > 1e-3
    # label bands start at tau + the drawn bound
    for m in (0, 100, 3999):
        first = int(np.flatnonzero(tset.labels[m])[0])
        assert first == tset.tau[m] + values[m]


def test_fixed_strategies_use_the_training_delay_bound(cfg):
    tset = gen_training_set(LabelStrategy("region"), cfg, 10, seed=3, tau_p_train=20)
    assert np.all(tset.tau_max == 20)
    for m in range(10):
        band = np.flatnonzero(tset.labels[m])
        assert band[0] == tset.tau[m] + 20
        assert band[-1] == tset.tau[m] + cfg.cp_len


def test_generation_validation(cfg):
    with pytest.raises(ValueError):
        gen_training_set(LabelStrategy("lc", 26), cfg, 0)
    with pytest.raises(ValueError):
        gen_training_set(LabelStrategy("estimated"), cfg, 5)
    with pytest.raises(ValueError):
        gen_training_set(LabelStrategy("lc", 32), cfg, 5)
    with pytest.raises(ValueError):
        gen_training_set(LabelStrategy("fc", 10), cfg, 5)
    with pytest.raises(ValueError):
        gen_training_set(LabelStrategy("onehot"), cfg, 5, tau_p_train=32)


def test_collection_labels_and_stats(cfg):
    tset, s = collect_training_set_datcol(cfg, 400, snr_db=20.0, seed=8)
    assert len(tset) == 400
    assert s.n_effective == 400
    assert 0.5 < s.p_label <= 1.0
    assert s.n_raw == math.ceil(400 / s.p_label)
    assert s.bytes_per_record == record_bytes(cfg)
    assert tset.snr_db == 20.0
    assert tset.strategy.kind == "estimated"
    # labels are one-hot at the classic estimate, right or wrong
    assert np.all(tset.labels.sum(axis=1) == 1.0)
    assert np.all(tset.labels.max(axis=1) == 1.0)


def test_collection_is_seed_deterministic(cfg):
    a, sa = collect_training_set_datcol(cfg, 60, seed=8)
    b, sb = collect_training_set_datcol(cfg, 60, seed=8)
    assert np.array_equal(a.features, b.features)
    assert np.array_equal(a.labels, b.labels)
    assert sa == sb


def test_record_bytes_counts_samples_and_label(cfg):
    # win_len complex pairs of float32 plus metric_len float32 labels
    assert record_bytes(cfg) == cfg.win_len * 8 + cfg.metric_len * 4
    assert record_bytes(cfg) == 3200


def test_storage_and_airtime_identities():
    stats_ = CollectionStats(
        n_effective=100_000, p_label=0.743, n_raw=134_590, bytes_per_record=3200
    )
    assert math.ceil(100_000 / 0.743) == 134_590
    assert storage_bytes(stats_) == 134_590 * 3200
    assert bandwidth_seconds(633.5277e6, 1e8) == pytest.approx(50.682216, abs=1e-9)
    with pytest.raises(ValueError):
        bandwidth_seconds(100.0, 0.0)
    with pytest.raises(ValueError):
        bandwidth_seconds(-1.0, 1e8)


def test_save_load_roundtrip(tmp_path, cfg):
    tset = gen_training_set(LabelStrategy("fc", 26), cfg, 12, seed=5)
    path = tmp_path / "set.bin"
    save_training_set(tset, path)
    assert sidecar_path(path).exists()
    back = load_training_set(path)
    assert np.array_equal(back.features, tset.features)
    assert np.array_equal(back.labels, tset.labels)
    assert np.array_equal(back.tau, tset.tau)
    assert np.array_equal(back.tau_max, tset.tau_max)
    assert back.strategy == tset.strategy
    assert back.extractor == tset.extractor
    assert back.cfg == tset.cfg
    assert back.eta == tset.eta
    assert back.seed == tset.seed
    assert back.snr_db is None


def test_sidecar_is_readable_json(tmp_path, cfg):
    tset, _ = collect_training_set_datcol(cfg, 20, snr_db=15.0, seed=1)
    path = tmp_path / "col.bin"
    save_training_set(tset, path)
    meta = json.loads(sidecar_path(path).read_text())
    assert meta["n_samples"] == 20
    assert meta["snr_db"] == 15.0
    assert meta["strategy"]["kind"] == "estimated"
    assert meta["cfg"]["n_fft"] == cfg.n_fft


def test_load_rejects_corrupt_containers(tmp_path, cfg):
    tset = gen_training_set(LabelStrategy("lc", 26), cfg, 4, seed=5)
    path = tmp_path / "set.bin"
    save_training_set(tset, path)
    blob = path.read_bytes()

    bad_magic = tmp_path / "magic.bin"
    bad_magic.write_bytes(b"WRONGMAG" + blob[8:])
    with pytest.raises(DatasetFormatError, match="bad magic"):
        load_training_set(bad_magic)

    truncated = tmp_path / "short.bin"
    truncated.write_bytes(blob[:-16])
    sidecar_path(truncated).write_text(sidecar_path(path).read_text())
    with pytest.raises(DatasetFormatError, match="holds"):
        load_training_set(truncated)

    headerless = tmp_path / "tiny.bin"
    headerless.write_bytes(blob[:10])
    with pytest.raises(DatasetFormatError, match="truncated"):
        load_training_set(headerless)

    orphan = tmp_path / "orphan.bin"
    orphan.write_bytes(blob)
    with pytest.raises(DatasetFormatError, match="sidecar"):
        load_training_set(orphan)

    with pytest.raises(FileNotFoundError):
        load_training_set(tmp_path / "nope.bin")


def test_load_rejects_unknown_version(tmp_path, cfg):
    tset = gen_training_set(LabelStrategy("lc", 26), cfg, 2, seed=5)
    path = tmp_path / "set.bin"
    save_training_set(tset, path)
    blob = bytearray(path.read_bytes())
    blob[8] = 99
    path.write_bytes(bytes(blob))
    with pytest.raises(DatasetFormatError, match="version"):
        load_training_set(path)
