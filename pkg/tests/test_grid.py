import math

import numpy as np
import pytest

from helpers.errors import DomainError
from hdichotomy.grid import SigmaGrid
from hdichotomy.rates import exp_rate, log_rate, poly_rate


def test_build_is_uniform_in_sigma():
    grid = SigmaGrid.build(poly_rate(), 0.0, 2.0, 0.25)
    assert len(grid) == 9
    assert grid.is_uniform()
    np.testing.assert_allclose(grid.ts, np.exp(grid.sigmas))
    assert grid.anchor == pytest.approx(1.0)


def test_from_anchor_starts_at_log_h():
    grid = SigmaGrid.from_anchor(log_rate(), math.e ** 2, span=1.0, step=0.5)
    assert grid.sigma_min == pytest.approx(math.log(2.0))
    assert grid.anchor == pytest.approx(math.e ** 2)


def test_rebase_keeps_sigma_values():
    grid = SigmaGrid.build(log_rate(), 0.0, 3.0, 0.5)
    mirror = grid.rebase(exp_rate())
    assert np.array_equal(mirror.sigmas, grid.sigmas)
    np.testing.assert_allclose(mirror.ts, grid.sigmas, atol=1e-15)
    assert mirror.rate.name == "exp"


def test_restrict_and_pairs():
    grid = SigmaGrid.build(exp_rate(), 0.0, 2.0, 0.5)
    tail = grid.restrict(1.0)
    np.testing.assert_allclose(tail.sigmas, [1.0, 1.5, 2.0])
    pairs = list(tail.ordered_pairs())
    assert len(pairs) == 6
    assert all(i >= j for i, j in pairs)
    with pytest.raises(DomainError):
        grid.restrict(5.0)


@pytest.mark.parametrize("args", [(0.0, 1.0, 0.0), (1.0, 0.0, 0.1)])
def test_bad_grids(args):
    with pytest.raises(DomainError):
        SigmaGrid.build(exp_rate(), *args)


def test_grid_beyond_float_range_is_rejected():
    with pytest.raises(DomainError):
        SigmaGrid.build(exp_rate(), 700.0, 720.0, 10.0)
