"""Time grids uniform in sigma = ln h(t)."""

import math
from dataclasses import dataclass
from typing import Iterator, Tuple

import numpy as np

from helpers.errors import DomainError
from hdichotomy.rates import GrowthRate
from hdichotomy.rescale import sigma_of_t, t_of_sigma

SPACING_TOL = 1e-12

@dataclass(frozen=True, eq=False)
class SigmaGrid:
    rate: GrowthRate
    sigma_min: float
    sigma_max: float
    step: float
    sigmas: np.ndarray
    ts: np.ndarray

    @classmethod
    def build(cls, rate: GrowthRate, sigma_min: float, sigma_max: float, step: float) -> "SigmaGrid":
        if not step > 0:
            raise DomainError(f"grid step must be positive, got {step}")
        if sigma_max < sigma_min:
            raise DomainError(f"empty grid: sigma_max={sigma_max} < sigma_min={sigma_min}")
        count = int(math.floor((sigma_max - sigma_min) / step + 1e-9)) + 1
        sigmas = sigma_min + step * np.arange(count, dtype=float)
        ts = np.array([t_of_sigma(rate, s) for s in sigmas])
        if np.any(ts <= rate.a0):
            raise DomainError(f"grid reaches below a0={rate.a0} of rate '{rate.name}'")
        if count > 1 and np.any(np.diff(ts) <= 0):
            raise DomainError("grid preimages are not strictly increasing")
        return cls(rate, float(sigmas[0]), float(sigmas[-1]), step, sigmas, ts)

    @classmethod
    def from_anchor(cls, rate: GrowthRate, a0_star: float, span: float, step: float) -> "SigmaGrid":
        """Grid on [ln h(a0*), ln h(a0*) + span]."""
        start = sigma_of_t(rate, a0_star)
        return cls.build(rate, start, start + span, step)

    def rebase(self, rate: GrowthRate) -> "SigmaGrid":
        """Same sigma values, preimages under another rate."""
        ts = np.array([t_of_sigma(rate, s) for s in self.sigmas])
        return SigmaGrid(rate, self.sigma_min, self.sigma_max, self.step, self.sigmas.copy(), ts)

    def restrict(self, sigma_lo: float, sigma_hi: float = math.inf) -> "SigmaGrid":
        mask = (self.sigmas >= sigma_lo - SPACING_TOL) & (self.sigmas <= sigma_hi + SPACING_TOL)
        if not mask.any():
            raise DomainError(f"no grid points in [{sigma_lo}, {sigma_hi}]")
        sigmas = self.sigmas[mask]
        return SigmaGrid(self.rate, float(sigmas[0]), float(sigmas[-1]), self.step, sigmas, self.ts[mask])

    @property
    def anchor(self) -> float:
        """a0*, the preimage of sigma_min."""
        return float(self.ts[0])

    def __len__(self) -> int:
        return len(self.sigmas)

    def points(self) -> Iterator[Tuple[float, float]]:
        return zip(self.sigmas.tolist(), self.ts.tolist())

    def ordered_pairs(self) -> Iterator[Tuple[int, int]]:
        """Index pairs (i, j) with i >= j, i.e. t_i >= t_j."""
        for i in range(len(self)):
            for j in range(i + 1):
                yield i, j

    def is_uniform(self) -> bool:
        if len(self) < 2:
            return True
        return bool(np.max(np.abs(np.diff(self.sigmas) - self.step)) <= SPACING_TOL * max(1.0, self.step))
