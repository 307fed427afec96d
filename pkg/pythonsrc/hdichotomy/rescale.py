"""Time-rescaling T -> T_h, T_h(t, s) = T(h^-1(e^t), h^-1(e^s)).

T_h is exponentially graded: every h-graded bound on T is the exponential
bound on T_h in the sigma coordinate sigma = ln h(t), and conversely
T(t, s) = T_h(ln h(t), ln h(s)).
"""

import logging
import math
from typing import Dict, Optional

import numpy as np

from helpers.errors import DomainError
from hdichotomy.families import EvolutionFamily
from hdichotomy.projections import ProjectionFamily
from hdichotomy.rates import GrowthRate, h_eval, h_inverse

LOG = logging.getLogger(__name__)
LOG.setLevel(logging.INFO)

_MAX_SIGMA = 709.0


def sigma_of_t(h: GrowthRate, t: float) -> float:
    return math.log(h_eval(h, t))


def t_of_sigma(h: GrowthRate, sigma: float) -> float:
    if sigma > _MAX_SIGMA:
        raise DomainError(f"sigma={sigma} overflows e^sigma")
    return h_inverse(h, math.exp(sigma))


class RescaledFamily(EvolutionFamily):
    kind = "rescaled"

    def __init__(self, base: EvolutionFamily, rate: GrowthRate, left_endpoint_sigma: Optional[float] = None):
        super().__init__(base.dim, -math.inf, f"{base.name}@{rate.name}")
        self.base = base
        self.rate = rate
        self.left_endpoint_sigma = left_endpoint_sigma

    @property
    def tolerance(self) -> float:
        return self.base.tolerance

    def _forward(self, t: float, s: float) -> np.ndarray:
        # no re-integration: the base family is evaluated at the preimages
        return self.base.transition(t_of_sigma(self.rate, t), t_of_sigma(self.rate, s))

    _backward = _forward

    def describe(self) -> Dict[str, object]:
        return {**super().describe(), "base": self.base.describe(), "rate": self.rate.describe(),
                "left_endpoint_sigma": self.left_endpoint_sigma}


def rescale_family(family: EvolutionFamily, h: GrowthRate, a0_star: Optional[float] = None) -> RescaledFamily:
    if family.a0 != h.a0:
        raise DomainError(f"family '{family.name}' lives on ({family.a0}, inf) "
                          f"but rate '{h.name}' on ({h.a0}, inf)")
    left = sigma_of_t(h, a0_star) if a0_star is not None else None
    LOG.info("Rescaling family '%s' by rate '%s'", family.name, h.name)
    return RescaledFamily(family, h, left)


def rescale_projections(projections: ProjectionFamily, h: GrowthRate) -> ProjectionFamily:
    """P~(sigma) = P(h^-1(e^sigma))."""
    return ProjectionFamily(lambda sigma: projections(t_of_sigma(h, sigma)),
                            projections.dim, projections.rank, name=f"{projections.name}@{h.name}")
