"""Projection families P(t)."""

from typing import Callable

import numpy as np

from helpers.errors import DomainError
from hdichotomy.linalg import projection_rank


class ProjectionFamily:
    """t -> P(t), an n x n projection for every t; ``rank`` is the nominal rank."""

    def __init__(self, fn: Callable[[float], np.ndarray], dim: int, rank: int, name: str = "P"):
        if not 0 <= rank <= dim:
            raise DomainError(f"rank {rank} impossible in dimension {dim}")
        self._fn = fn
        self.dim = dim
        self.rank = rank
        self.name = name

    def __call__(self, t: float) -> np.ndarray:
        return np.atleast_2d(np.asarray(self._fn(t), dtype=float))

    def complement(self, t: float) -> np.ndarray:
        return np.eye(self.dim) - self(t)

    @classmethod
    def constant(cls, matrix, name: str = "constant") -> "ProjectionFamily":
        p = np.atleast_2d(np.asarray(matrix, dtype=float))
        if p.shape[0] != p.shape[1]:
            raise DomainError(f"projection must be square, got shape {p.shape}")
        return cls(lambda t: p, p.shape[0], projection_rank(p), name=name)
