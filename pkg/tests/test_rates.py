import math

import numpy as np
import pytest
from hypothesis import given, seed
from hypothesis import strategies as st

from helpers.errors import ConfigError, DomainError
from hdichotomy.rates import (
    ROUND_TRIP_TOL,
    build_rate,
    cubic_rate,
    custom_rate,
    exp_rate,
    h_eval,
    h_inverse,
    log_rate,
    poly_rate,
    table_rate,
    verify_rate,
)


def test_builtin_values():
    assert exp_rate()(1.0) == pytest.approx(math.e)
    assert poly_rate(2.0)(3.0) == pytest.approx(9.0)
    assert log_rate()(math.e) == pytest.approx(1.0)
    assert cubic_rate()(2.0) == pytest.approx(10.0)


def test_domain_is_enforced():
    with pytest.raises(DomainError):
        h_eval(poly_rate(), 0.0)
    with pytest.raises(DomainError):
        h_eval(log_rate(), 1.0)
    with pytest.raises(DomainError):
        h_inverse(exp_rate(), 0.0)
    with pytest.raises(DomainError):
        h_inverse(exp_rate(), math.inf)


@seed(3)
@given(y=st.floats(min_value=1e-6, max_value=1e6))
def test_cubic_inverse_by_bisection(y):
    h = cubic_rate()
    assert not h.has_closed_inverse
    t = h.inverse(y)
    assert t > 0
    assert abs(h(t) - y) <= ROUND_TRIP_TOL * max(1.0, y)


@seed(5)
@given(y=st.floats(min_value=1e-3, max_value=1e3), power=st.floats(min_value=0.5, max_value=3.0))
def test_custom_rate_matches_closed_form(y, power):
    closed = poly_rate(power)
    bisected = custom_rate("poly-bisect", 0.0, lambda t: t ** power)
    assert bisected.inverse(y) == pytest.approx(closed.inverse(y), rel=1e-12)


def test_log_derivative_closed_and_numeric():
    assert exp_rate().log_derivative(3.0) == 1.0
    assert poly_rate(2.0).log_derivative(4.0) == pytest.approx(0.5)
    numeric = custom_rate("square", 0.0, lambda t: t * t)
    assert numeric.log_derivative(4.0) == pytest.approx(0.5, rel=1e-6)
    with pytest.raises(DomainError):
        numeric.log_derivative(-1.0)


def test_table_rate_is_monotone_and_invertible():
    h = table_rate([0.0, 1.0, 2.0, 4.0], [1.0, 2.0, 3.0, 10.0])
    report = verify_rate(h, np.linspace(-3.0, 7.0, 41), [0.1, 1.0, 2.5, 9.0, 50.0])
    assert report.passed
    assert report.monotone_violations == 0
    # piecewise linear in ln h and extended past both ends
    assert h(1.0) == pytest.approx(2.0)
    assert h(5.0) == pytest.approx(10.0 * (10.0 / 3.0) ** 0.5)


def test_table_rate_rejects_bad_tables():
    with pytest.raises(ConfigError):
        table_rate([0.0, 1.0], [2.0, 1.0])
    with pytest.raises(ConfigError):
        table_rate([0.0], [1.0])
    with pytest.raises(ConfigError):
        table_rate([0.0, 1.0], [0.0, 1.0])


@pytest.mark.parametrize("rate", [exp_rate(), poly_rate(), log_rate(), cubic_rate()], ids=lambda r: r.name)
def test_verify_rate_on_builtins(rate):
    ts = np.linspace(rate.a0 + 0.5 if math.isfinite(rate.a0) else -3.0, 20.0, 30)
    report = verify_rate(rate, ts, [0.01, 0.5, 1.0, 7.0, 100.0])
    assert report.passed
    assert report.max_round_trip <= ROUND_TRIP_TOL


def test_build_rate_registry():
    assert build_rate("Poly", power=2.0)(3.0) == pytest.approx(9.0)
    with pytest.raises(ConfigError):
        build_rate("gompertz")
    with pytest.raises(ConfigError):
        build_rate("exp", power=2.0)
    with pytest.raises(ConfigError):
        build_rate("poly", power=-1.0)
