import numpy as np
import pytest

from spinramsey import FitConfig, fringe_scan, with_population_noise

FIG3_F0 = 195.0
FIG3_T = 290.0
FIG3_DELTA = 25.0
FIG3_PHI = 0.14


@pytest.fixture(scope="session")
def fig3_grid():
    return np.arange(175.0, 210.0 + 1e-9, 0.25)


@pytest.fixture(scope="session")
def fig3_scan(fig3_grid):
    return fringe_scan(fig3_grid, FIG3_F0, FIG3_T, FIG3_DELTA, FIG3_PHI)


@pytest.fixture(scope="session")
def make_noisy(fig3_scan):
    def build(seed, sigma=0.05):
        return with_population_noise(fig3_scan, sigma, seed)

    return build


@pytest.fixture()
def fig3_config():
    return FitConfig(guesses={"f0": 196.0, "t": 300.0, "phi": 0.0})
