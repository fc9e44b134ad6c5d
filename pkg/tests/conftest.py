import numpy as np
import pytest

from syncforge import OfdmConfig, derive_rng


@pytest.fixture
def cfg():
    return OfdmConfig()


@pytest.fixture
def small_cfg():
    # tiny geometry keeps brute-force oracles cheap
    return OfdmConfig(n_fft=8, cp_len=2)


@pytest.fixture
def rng():
    return derive_rng(1234, "unit-tests")


def random_window(cfg, rng):
    n = cfg.win_len
    return (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2.0)
