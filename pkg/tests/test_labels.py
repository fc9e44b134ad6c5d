import numpy as np
import pytest

from syncforge import (
    LabelStrategy,
    OfdmConfig,
    label_accuracy,
    label_flexible,
    label_from_estimate,
    label_loose,
    label_midpoint,
    label_one_hot,
    label_region,
)


def support(t):
    return set(np.flatnonzero(t).tolist())


def test_one_hot_marks_prefix_end(cfg):
    t = label_one_hot(50, cfg)
    assert t.shape == (cfg.metric_len,)
    assert support(t) == {50 + cfg.cp_len}
    assert t.sum() == 1.0


def test_midpoint_rounds_up(cfg):
    # tau_max 20, cp 32: band midpoint 26 = ceil(52 / 2)
    assert support(label_midpoint(10, 20, cfg)) == {36}
    # odd span rounds toward the late side: ceil((19 + 32) / 2) = 26
    assert support(label_midpoint(10, 19, cfg)) == {36}
    assert support(label_midpoint(0, 32, cfg)) == {32}


def test_region_band_covers_isi_free_instants(cfg):
    t = label_region(40, 20, cfg)
    assert support(t) == set(range(60, 73))
    assert set(np.unique(t)) == {0.0, 1.0}


def test_loose_band_and_validation(cfg):
    t = label_loose(40, 26, cfg)
    assert support(t) == set(range(66, 73))
    for bad in (0, -3, 32, 40):
        with pytest.raises(ValueError):
            label_loose(40, bad, cfg)


def test_flexible_band_and_validation(cfg):
    t = label_flexible(40, 16, cfg)
    assert support(t) == set(range(56, 73))
    assert support(label_flexible(0, 31, cfg)) == {31, 32}
    for bad in (15, 32, -1):
        with pytest.raises(ValueError):
            label_flexible(40, bad, cfg)


def test_estimate_label_is_plain_one_hot(cfg):
    t = label_from_estimate(3, cfg)
    assert support(t) == {3}
    with pytest.raises(ValueError):
        label_from_estimate(-1, cfg)
    with pytest.raises(ValueError):
        label_from_estimate(cfg.metric_len, cfg)


def test_tau_bounds_are_enforced(cfg):
    last_ok = cfg.metric_len - 1 - cfg.cp_len
    assert support(label_one_hot(last_ok, cfg)) == {cfg.metric_len - 1}
    with pytest.raises(ValueError):
        label_one_hot(last_ok + 1, cfg)
    with pytest.raises(ValueError):
        label_one_hot(-1, cfg)
    with pytest.raises(ValueError):
        label_region(last_ok + 1, 20, cfg)


def test_tau_max_bounds_are_enforced(cfg):
    with pytest.raises(ValueError):
        label_region(10, cfg.cp_len + 1, cfg)
    with pytest.raises(ValueError):
        label_midpoint(10, -1, cfg)


def test_strategy_validation():
    assert LabelStrategy("lc", 26).loose_l == 26
    assert LabelStrategy("region").loose_l is None
    with pytest.raises(ValueError):
        LabelStrategy("bogus")
    with pytest.raises(ValueError):
        LabelStrategy("lc")
    with pytest.raises(ValueError):
        LabelStrategy("fc", 0)
    with pytest.raises(ValueError):
        LabelStrategy("onehot", 26)


def test_label_accuracy_counts_hits():
    regions = [range(5, 10), range(0, 3), range(7, 8)]
    assert label_accuracy([6, 4, 7], regions) == pytest.approx(2 / 3)
    assert label_accuracy([5, 0, 7], regions) == 1.0
    with pytest.raises(ValueError):
        label_accuracy([], [])
    with pytest.raises(ValueError):
        label_accuracy([1], [range(0, 2), range(1, 3)])


def test_band_widths_scale_with_short_prefix():
    short = OfdmConfig(n_fft=128, cp_len=16)
    assert support(label_loose(20, 13, short)) == set(range(33, 37))
    assert support(label_region(20, 10, short)) == set(range(30, 37))
