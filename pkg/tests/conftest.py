import math

import numpy as np
import pytest

from hdichotomy.grid import SigmaGrid
from hdichotomy.rates import exp_rate, log_rate, poly_rate
from hdichotomy.sphere import SphereConfig

RATE_FACTORIES = {"exp": exp_rate, "poly": poly_rate, "log": log_rate}


def rotation(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


@pytest.fixture(params=sorted(RATE_FACTORIES))
def any_rate(request):
    return RATE_FACTORIES[request.param]()


@pytest.fixture
def small_sphere():
    return SphereConfig(samples=4000, restarts=4, max_iter=100, refine_top=4)


@pytest.fixture
def frozen_sphere():
    """No refinement, so runs on different but equivalent inputs stay comparable to round-off."""
    return SphereConfig(samples=2000, restarts=1, max_iter=0, refine_top=0)


def make_grid(rate, span: float = 4.0, step: float = 0.5, sigma_min: float = 0.0) -> SigmaGrid:
    return SigmaGrid.build(rate, sigma_min, sigma_min + span, step)
