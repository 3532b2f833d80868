import math

import pytest

from models import LinkBudget
from modules.channel import identical_gain_channel


@pytest.fixture
def unit_channel():
    """K = 1, |h| = 1."""
    return identical_gain_channel(1)


@pytest.fixture
def unit_noise():
    def _budget(power: float, sigma1_sq: float = 1.0, sigma2_sq: float = 1.0) -> LinkBudget:
        return LinkBudget(power=power, sigma1_sq=sigma1_sq, sigma2_sq=sigma2_sq)

    return _budget


@pytest.fixture
def balanced_pd_noise():
    """PD noise at which the coherent and power-only receivers share the same high-SNR capacity."""
    return math.e / (2.0 * math.pi)
