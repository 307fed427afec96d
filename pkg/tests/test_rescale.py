import math

import numpy as np
import pytest

from conftest import make_grid
from helpers.errors import DomainError
from hdichotomy.families import transition_table, verify_family
from hdichotomy.projections import ProjectionFamily
from hdichotomy.rates import exp_rate, poly_rate
from hdichotomy.rescale import rescale_family, rescale_projections, sigma_of_t, t_of_sigma
from hdichotomy.systems import perturbed_hyperbolic, rotated_hyperbolic, scalar_stable, step_hyperbolic


def _max_relative_gap(family, rate, grid):
    rescaled = rescale_family(family, rate)
    direct = transition_table(family, grid.ts)
    image = transition_table(rescaled, grid.rebase(exp_rate()).ts)
    scale = np.maximum(1.0, np.linalg.norm(direct, 2, axis=(2, 3)))
    return float(np.max(np.linalg.norm(direct - image, 2, axis=(2, 3)) / scale))


@pytest.mark.parametrize("build", [scalar_stable, rotated_hyperbolic])
def test_rescaled_family_agrees_on_corresponding_points(build, any_rate):
    assert _max_relative_gap(build(any_rate), any_rate, make_grid(any_rate, span=3.0, step=0.5)) <= 1e-9


def test_rescaled_perturbed_family_agrees():
    h = poly_rate()
    assert _max_relative_gap(perturbed_hyperbolic(h), h, make_grid(h, span=3.0, step=0.5)) <= 1e-9


def test_rescaled_family_is_an_exponential_cocycle(any_rate):
    rescaled = rescale_family(rotated_hyperbolic(any_rate), any_rate)
    assert rescaled.kind == "rescaled"
    assert rescaled.a0 == -math.inf
    assert verify_family(rescaled, [0.0, 0.7, 1.5, 2.5]).passed


def test_rescale_by_exp_changes_nothing():
    h = exp_rate()
    family = step_hyperbolic(h)
    rescaled = rescale_family(family, h)
    for t, s in [(3.2, 0.1), (0.4, 2.9), (-1.5, 1.5)]:
        np.testing.assert_allclose(rescaled.transition(t, s), family.transition(t, s))


def test_domains_must_match():
    with pytest.raises(DomainError):
        rescale_family(scalar_stable(exp_rate()), poly_rate())


def test_left_endpoint_is_recorded():
    h = poly_rate()
    rescaled = rescale_family(scalar_stable(h), h, a0_star=math.e)
    assert rescaled.left_endpoint_sigma == pytest.approx(1.0)
    assert rescaled.describe()["base"]["name"] == "scalar-stable"


def test_sigma_coordinates_round_trip(any_rate):
    for sigma in (-0.5, 0.0, 2.0, 4.0):
        assert sigma_of_t(any_rate, t_of_sigma(any_rate, sigma)) == pytest.approx(sigma, abs=1e-12)
    with pytest.raises(DomainError):
        t_of_sigma(any_rate, 710.0)


def test_rescaled_projections():
    h = poly_rate()
    p = ProjectionFamily(lambda t: np.diag([1.0, 0.0]) if t < 5 else np.diag([0.0, 1.0]), 2, 1)
    q = rescale_projections(p, h)
    np.testing.assert_array_equal(q(math.log(2.0)), np.diag([1.0, 0.0]))
    np.testing.assert_array_equal(q(math.log(10.0)), np.diag([0.0, 1.0]))
