"""Growth rates h: (a0, inf) -> (0, inf).

A rate is a bijective increasing map. Builtins carry closed-form inverses and
log derivatives; rates given only by a forward map are inverted by monotone
bisection on an expanding bracket.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Mapping, Optional, Sequence

import numpy as np
from scipy.differentiate import derivative
from scipy.interpolate import make_interp_spline
from scipy.optimize import bisect

from helpers.errors import ConfigError, ConvergenceError, DomainError

LOG = logging.getLogger(__name__)
LOG.setLevel(logging.INFO)

ROUND_TRIP_TOL = 1e-12
_BISECT_RTOL = 4 * np.finfo(float).eps
_BISECT_XTOL = 1e-300
_BISECT_MAXITER = 1200
_MAX_BRACKET_STEPS = 1100


@dataclass(frozen=True, eq=False)
class GrowthRate:
    name: str
    a0: float
    forward: Callable[[Any], Any]
    inverse_fn: Optional[Callable[[float], float]] = None
    log_derivative_fn: Optional[Callable[[float], float]] = None
    params: Mapping[str, Any] = field(default_factory=dict)

    def __call__(self, t: float) -> float:
        return h_eval(self, t)

    def inverse(self, y: float) -> float:
        return h_inverse(self, y)

    def log_derivative(self, t: float) -> float:
        """d/dt ln h(t)."""
        if t <= self.a0:
            raise DomainError(f"t={t} outside the domain of rate '{self.name}' (a0={self.a0})")
        if self.log_derivative_fn is not None:
            return float(self.log_derivative_fn(t))
        step = 0.5 if math.isinf(self.a0) else min(0.5, (t - self.a0) / 4)
        res = derivative(lambda x: np.log(self.forward(x)), t, initial_step=step)
        if not res.success:
            raise ConvergenceError(f"log derivative of rate '{self.name}' did not converge at t={t}")
        return float(res.df)

    @property
    def has_closed_inverse(self) -> bool:
        return self.inverse_fn is not None

    def describe(self) -> Dict[str, Any]:
        return {"name": self.name, "a0": self.a0, **dict(self.params)}


def h_eval(h: GrowthRate, t: float) -> float:
    if not t > h.a0:
        raise DomainError(f"t={t} outside the domain of rate '{h.name}' (a0={h.a0})")
    with np.errstate(over="ignore"):
        value = float(h.forward(t))
    if not math.isfinite(value) or value <= 0:
        raise DomainError(f"h({t}) = {value} is not a finite positive number for rate '{h.name}'")
    return value


def _safe_forward(h: GrowthRate, t: float) -> float:
    with np.errstate(over="ignore", invalid="ignore"):
        return float(h.forward(t))


def _bracket(h: GrowthRate, y: float) -> tuple:
    start = 0.0 if math.isinf(h.a0) else h.a0 + 1.0
    if _safe_forward(h, start) >= y:
        hi = start
        for k in range(_MAX_BRACKET_STEPS):
            lo = start - 2.0 ** k if math.isinf(h.a0) else h.a0 + (start - h.a0) * 2.0 ** -(k + 1)
            if lo <= h.a0:
                break
            if _safe_forward(h, lo) < y:
                return lo, hi
            hi = lo
    else:
        lo = start
        for k in range(_MAX_BRACKET_STEPS):
            hi = start + 2.0 ** k
            value = _safe_forward(h, hi)
            if not math.isfinite(value):
                break
            if value > y:
                return lo, hi
            lo = hi
    raise ConvergenceError(f"could not bracket h^-1({y}) for rate '{h.name}'")


def h_inverse(h: GrowthRate, y: float) -> float:
    if not (math.isfinite(y) and y > 0):
        raise DomainError(f"h^-1 is only defined for finite y > 0, got {y}")
    if h.inverse_fn is not None:
        try:
            t = float(h.inverse_fn(y))
        except OverflowError as e:
            raise DomainError(f"h^-1({y}) overflows for rate '{h.name}'") from e
        if not (t > h.a0 and math.isfinite(t)):
            raise DomainError(f"h^-1({y}) = {t} falls outside (a0, inf) for rate '{h.name}'")
        return t

    lo, hi = _bracket(h, y)
    if _safe_forward(h, lo) == y:
        return lo
    root, result = bisect(
        lambda t: _safe_forward(h, t) - y,
        lo,
        hi,
        xtol=_BISECT_XTOL,
        rtol=_BISECT_RTOL,
        maxiter=_BISECT_MAXITER,
        full_output=True,
        disp=False,
    )
    if not result.converged:
        raise ConvergenceError(f"bisection for h^-1({y}) stopped after {result.iterations} iterations")
    return float(root)


def exp_rate() -> GrowthRate:
    return GrowthRate(
        name="exp",
        a0=-math.inf,
        forward=np.exp,
        inverse_fn=math.log,
        log_derivative_fn=lambda t: 1.0,
    )


def poly_rate(power: float = 1.0) -> GrowthRate:
    if power <= 0:
        raise ConfigError(f"poly rate needs power > 0, got {power}")
    return GrowthRate(
        name="poly",
        a0=0.0,
        forward=lambda t: np.power(t, power),
        inverse_fn=lambda y: y ** (1.0 / power),
        log_derivative_fn=lambda t: power / t,
        params={"power": power},
    )


def log_rate() -> GrowthRate:
    return GrowthRate(
        name="log",
        a0=1.0,
        forward=np.log,
        inverse_fn=math.exp,
        log_derivative_fn=lambda t: 1.0 / (t * math.log(t)),
    )


def cubic_rate() -> GrowthRate:
    # no closed-form inverse on purpose: exercises the bisection path
    return GrowthRate(
        name="cubic",
        a0=0.0,
        forward=lambda t: t + np.power(t, 3),
        log_derivative_fn=lambda t: (1 + 3 * t * t) / (t + t ** 3),
    )


def table_rate(ts: Sequence[float], hs: Sequence[float]) -> GrowthRate:
    """Monotone rate from a strictly increasing (t, h(t)) table.

    Piecewise linear in (t, ln h), extended linearly past both ends, so the
    domain is the whole real line and the range is (0, inf).
    """
    t_arr = np.asarray(ts, dtype=float)
    h_arr = np.asarray(hs, dtype=float)
    if t_arr.ndim != 1 or t_arr.shape != h_arr.shape or len(t_arr) < 2:
        raise ConfigError("rate table needs two equally long columns with at least 2 rows")
    if np.any(h_arr <= 0):
        raise ConfigError("rate table values must be positive")
    if np.any(np.diff(t_arr) <= 0) or np.any(np.diff(h_arr) <= 0):
        raise ConfigError("rate table must be strictly increasing in t and h")

    spline = make_interp_spline(t_arr, np.log(h_arr), k=1)
    slope = spline.derivative()
    return GrowthRate(
        name="table",
        a0=-math.inf,
        forward=lambda t: np.exp(spline(t)),
        log_derivative_fn=lambda t: float(slope(t)),
        params={"t": t_arr.tolist(), "h": h_arr.tolist()},
    )


def custom_rate(name: str, a0: float, forward: Callable[[Any], Any]) -> GrowthRate:
    return GrowthRate(name=name, a0=a0, forward=forward)


RATE_BUILDERS: Dict[str, Callable[..., GrowthRate]] = {
    "exp": exp_rate,
    "poly": poly_rate,
    "log": log_rate,
    "cubic": cubic_rate,
    "table": table_rate,
}


def build_rate(name: str, **params: Any) -> GrowthRate:
    key = name.strip().lower()
    if key not in RATE_BUILDERS:
        raise ConfigError(f"Unknown rate '{name}' (known: {', '.join(sorted(RATE_BUILDERS))})")
    try:
        return RATE_BUILDERS[key](**params)
    except TypeError as e:
        raise ConfigError(f"Bad parameters for rate '{name}': {e}") from e


@dataclass(frozen=True)
class RateReport:
    monotone_violations: int
    max_round_trip: float
    min_value: float
    passed: bool


def verify_rate(h: GrowthRate, ts: Sequence[float], ys: Sequence[float]) -> RateReport:
    """Check monotonicity on sorted sample times and h(h^-1(y)) = y on ys."""
    times = np.sort(np.asarray(ts, dtype=float))
    values = np.array([h_eval(h, t) for t in times])
    distinct = np.diff(times) > 0
    violations = int(np.sum(np.diff(values)[distinct] <= 0))
    worst = 0.0
    for y in ys:
        worst = max(worst, abs(h_eval(h, h_inverse(h, y)) - y) / max(1.0, y))
    passed = violations == 0 and worst <= ROUND_TRIP_TOL and bool(np.all(values > 0))
    if not passed:
        LOG.warning("Rate '%s' failed verification: %s monotone violations, round trip %.3e",
                    h.name, violations, worst)
    return RateReport(violations, worst, float(values.min()) if len(values) else math.inf, passed)
