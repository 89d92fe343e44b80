import numpy as np
import pytest

from gevdesign.gev import GevParams, gev_sample
from gevdesign.simulate import SurfaceTruth, TruthConfig, simulate_block_maxima


@pytest.fixture
def rng():
    return np.random.default_rng(20240901)


@pytest.fixture(scope="session")
def seasonal_truth():
    """Harmonic seasonal truth with no year trend."""
    return TruthConfig(
        mu=SurfaceTruth(mean=4.0, amplitude=2.0, phase_month=1.0),
        logsigma=SurfaceTruth(mean=0.2, amplitude=0.1, phase_month=1.0),
        xi=0.05,
    )


@pytest.fixture(scope="session")
def flat_truth():
    """No seasonality, no trend: one GEV for every block."""
    return TruthConfig(
        mu=SurfaceTruth(mean=5.0, amplitude=0.0),
        logsigma=SurfaceTruth(mean=0.0, amplitude=0.0),
        xi=0.1,
    )


@pytest.fixture(scope="session")
def seasonal_bm(seasonal_truth):
    return simulate_block_maxima(seasonal_truth, 1985, 2014, seed=424242)


@pytest.fixture(scope="session")
def seasonal_fit(seasonal_bm):
    from gevdesign.nonstationary import fit_seasonal

    return fit_seasonal(seasonal_bm)


@pytest.fixture(scope="session")
def tensor_fit(seasonal_bm):
    from gevdesign.nonstationary import fit_tensor

    return fit_tensor(seasonal_bm)


@pytest.fixture(scope="session")
def gumbel_sample():
    return gev_sample(GevParams(0.0, 1.0, 0.0), 100_000, seed=99)
