"""Builtin evolution families, keyed by name.

Every builder takes the growth rate the family is graded by (the family
lives on the rate's domain) plus keyword parameters from the run config.
"""

import logging
import math
from typing import Any, Callable, Dict, List, Mapping, Sequence

import numpy as np

from helpers.errors import ConfigError
from hdichotomy.families import (
    ClosedFormFamily,
    EvolutionFamily,
    StepFamily,
    conjugate_family,
    make_ode_family,
    scaled_family,
)
from hdichotomy.rates import GrowthRate, build_rate
from hdichotomy.rescale import rescale_family, sigma_of_t

LOG = logging.getLogger(__name__)
LOG.setLevel(logging.INFO)

DEFAULT_ODE_STEP = 1e-2


def _gap(h: GrowthRate, t: float, s: float) -> float:
    """sigma_t - sigma_s = ln(h(t)/h(s))."""
    return sigma_of_t(h, t) - sigma_of_t(h, s)


def rotation(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


def scalar_stable(h: GrowthRate, lam: float = 1.0) -> EvolutionFamily:
    """T(t, s) = (h(t)/h(s))^-lam on R."""
    return ClosedFormFamily(1, h.a0, lambda t, s: [[math.exp(-lam * _gap(h, t, s))]], name="scalar-stable")


def diag_hyperbolic(h: GrowthRate, lam: float = 1.0) -> EvolutionFamily:
    def formula(t: float, s: float) -> np.ndarray:
        g = _gap(h, t, s)
        return np.diag([math.exp(-lam * g), math.exp(lam * g)])

    return ClosedFormFamily(2, h.a0, formula, name="diag-hyperbolic")


def neutral(h: GrowthRate, lam: float = 1.0) -> EvolutionFamily:
    """Contracting first coordinate, frozen second coordinate."""
    return ClosedFormFamily(2, h.a0, lambda t, s: np.diag([math.exp(-lam * _gap(h, t, s)), 1.0]), name="neutral")


def identity(h: GrowthRate, dim: int = 2) -> EvolutionFamily:
    return ClosedFormFamily(dim, h.a0, lambda t, s: np.eye(dim), name="identity")


def planar_rotation(h: GrowthRate, omega: float = 1.0) -> EvolutionFamily:
    return ClosedFormFamily(2, h.a0, lambda t, s: rotation(omega * (t - s)), name="rotation")


def rotated_hyperbolic(h: GrowthRate, lam: float = 1.0, angle: float = 0.5) -> EvolutionFamily:
    family = conjugate_family(diag_hyperbolic(h, lam), rotation(angle))
    family.name = "rotated-hyperbolic"
    return family


def perturbed_hyperbolic(h: GrowthRate, lam: float = 1.0, amplitude: float = 0.5) -> EvolutionFamily:
    """diag-hyperbolic scaled by g(t)/g(s), g(t) = 1.5 + amplitude*sin(t) in [1, 2]."""
    if not 0 <= amplitude <= 0.5:
        raise ConfigError(f"amplitude must lie in [0, 0.5], got {amplitude}")
    family = scaled_family(diag_hyperbolic(h, lam), lambda t: 1.5 + amplitude * math.sin(t))
    family.name = "perturbed-hyperbolic"
    return family


def step_hyperbolic(h: GrowthRate, matrix: Sequence[Sequence[float]] = ((2.0, 1.0), (1.0, 1.0))) -> EvolutionFamily:
    return StepFamily(np.asarray(matrix, dtype=float), name="step-hyperbolic", a0=h.a0)


def diag_hyperbolic_ode(h: GrowthRate, lam: float = 1.0, step: float = DEFAULT_ODE_STEP) -> EvolutionFamily:
    """x' = diag(-lam, lam) (ln h)'(t) x, whose flow is diag-hyperbolic."""

    def generator(t: float) -> np.ndarray:
        rate = lam * h.log_derivative(t)
        return np.diag([-rate, rate])

    return make_ode_family(generator, h.a0, step, dim=2, name="diag-hyperbolic-ode")


def coefficient_table(h: GrowthRate, table: List[Mapping[str, Any]], step: float = DEFAULT_ODE_STEP) -> EvolutionFamily:
    """x' = A(t) x with A interpolated entrywise between tabulated rows
    {"t": ..., "A": [[...]]}, held constant outside the table."""
    if not table:
        raise ConfigError("ode system needs a non-empty 'table' of {t, A} rows")
    try:
        times = np.array([float(row["t"]) for row in table])
        mats = np.array([np.atleast_2d(np.asarray(row["A"], dtype=float)) for row in table])
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"bad ode coefficient table: {e}") from e
    if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
        raise ConfigError(f"ode coefficients must be square matrices, got shape {mats.shape[1:]}")
    if np.any(np.diff(times) <= 0):
        raise ConfigError("ode table times must be strictly increasing")
    dim = mats.shape[1]
    flat = mats.reshape(len(times), -1)

    def generator(t: float) -> np.ndarray:
        return np.array([np.interp(t, times, flat[:, k]) for k in range(dim * dim)]).reshape(dim, dim)

    return make_ode_family(generator, h.a0, step, dim=dim, name="ode")


def rescaled(h: GrowthRate, base: Mapping[str, Any], rate: Mapping[str, Any]) -> EvolutionFamily:
    """T_h of a builtin system; only meaningful under the exponential rate."""
    if h.name != "exp":
        raise ConfigError(f"a rescaled system is exponentially graded; use rate 'exp', not '{h.name}'")
    try:
        base_rate = build_rate(rate["name"], **dict(rate.get("params", {})))
        family = build_system(base["name"], base_rate, **dict(base.get("params", {})))
    except KeyError as e:
        raise ConfigError(f"rescaled system needs 'base' and 'rate' tables with a name: missing {e}") from e
    return rescale_family(family, base_rate)


SYSTEM_BUILDERS: Dict[str, Callable[..., EvolutionFamily]] = {
    "scalar-stable": scalar_stable,
    "diag-hyperbolic": diag_hyperbolic,
    "neutral": neutral,
    "identity": identity,
    "rotation": planar_rotation,
    "rotated-hyperbolic": rotated_hyperbolic,
    "perturbed-hyperbolic": perturbed_hyperbolic,
    "step-hyperbolic": step_hyperbolic,
    "diag-hyperbolic-ode": diag_hyperbolic_ode,
    "ode": coefficient_table,
    "rescaled": rescaled,
}


def build_system(name: str, rate: GrowthRate, **params: Any) -> EvolutionFamily:
    key = name.strip().lower()
    if key not in SYSTEM_BUILDERS:
        raise ConfigError(f"Unknown system '{name}' (known: {', '.join(sorted(SYSTEM_BUILDERS))})")
    try:
        family = SYSTEM_BUILDERS[key](rate, **params)
    except TypeError as e:
        raise ConfigError(f"Bad parameters for system '{name}': {e}") from e
    LOG.info("Built system '%s' (%s, dim %s) on rate '%s'", family.name, family.kind, family.dim, rate.name)
    return family
