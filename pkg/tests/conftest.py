from pathlib import Path

import pytest

from insiderlab.strategies import MarketParams

DATA = Path(__file__).resolve().parents[1] / "src" / "insiderlab" / "data"


@pytest.fixture
def base_params():
    """mu=0.03, r=0.02, sigma=0.3, T=1, so theta = 1/30."""
    return MarketParams(mu=0.03, r=0.02, sigma=0.3, T=1.0)


@pytest.fixture
def data_dir():
    return DATA
