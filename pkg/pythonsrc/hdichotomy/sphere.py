"""Extremal values of positively homogeneous objectives on the unit sphere.

Dense quasi-uniform sampling followed by projected-gradient refinement with
Armijo backtracking from the best samples. Refinement only accepts
decreasing steps, so the refined minimum never exceeds the sampled one.
All objectives handled here are even, f(-v) = f(v), so half the sphere is
sampled.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

LOG = logging.getLogger(__name__)
LOG.setLevel(logging.INFO)

BatchFn = Callable[[np.ndarray], np.ndarray]

_ARMIJO = 1e-4


@dataclass(frozen=True)
class SphereConfig:
    samples: int = 10_000
    restarts: int = 8
    max_iter: int = 200
    min_step: float = 1e-12
    initial_step: float = 0.1
    seed: int = 0
    # expansiveness: how many of the worst windows get refined
    refine_top: int = 16


@dataclass(frozen=True)
class SphereSearchResult:
    dense_value: float
    value: float
    argmin: np.ndarray


@lru_cache(maxsize=32)
def _points(dim: int, samples: int, seed: int) -> np.ndarray:
    if dim == 1:
        return np.ones((1, 1))
    if dim == 2:
        angles = np.pi * (np.arange(samples) + 0.5) / samples
        return np.vstack([np.cos(angles), np.sin(angles)])
    if dim == 3:
        # Fibonacci lattice on the upper hemisphere
        k = np.arange(samples) + 0.5
        z = 1.0 - k / samples
        r = np.sqrt(1.0 - z * z)
        phi = np.pi * (1.0 + 5 ** 0.5) * k
        return np.vstack([r * np.cos(phi), r * np.sin(phi), z])
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((dim, samples))
    return v / np.linalg.norm(v, axis=0)


def sphere_points(dim: int, cfg: SphereConfig) -> np.ndarray:
    """Unit vectors as columns, shape (dim, m). Read-only."""
    pts = _points(dim, cfg.samples, cfg.seed)
    pts.setflags(write=False)
    return pts


def _normalize(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v, axis=0)


def minimize_on_sphere(objective: BatchFn, gradient: BatchFn, dim: int, cfg: SphereConfig,
                       refine: bool = True) -> SphereSearchResult:
    """Minimize ``objective`` over unit vectors.

    ``objective`` maps an (n, m) array of columns to m values, ``gradient``
    maps it to the (n, m) Euclidean gradients (any element of the
    subdifferential for nonsmooth objectives).
    """
    pts = sphere_points(dim, cfg)
    values = objective(pts)
    best = int(np.argmin(values))
    dense = float(values[best])
    if not refine or dim == 1:
        return SphereSearchResult(dense, dense, pts[:, best].copy())

    count = min(cfg.restarts, pts.shape[1])
    starts = np.argsort(values, kind="stable")[:count]
    v = pts[:, starts].copy()
    f = values[starts].copy()
    step = np.full(count, cfg.initial_step)
    for _ in range(cfg.max_iter):
        g = gradient(v)
        g = g - v * np.sum(g * v, axis=0)
        gnorm = np.linalg.norm(g, axis=0)
        active = (gnorm > 0) & (step >= cfg.min_step)
        if not active.any():
            break
        direction = np.divide(g, gnorm, out=np.zeros_like(g), where=gnorm > 0)
        cand = _normalize(v - step * direction)
        fc = objective(cand)
        accept = active & (fc < f - _ARMIJO * step * gnorm)
        v[:, accept] = cand[:, accept]
        f[accept] = fc[accept]
        step = np.where(accept, np.minimum(2 * step, 0.5), step / 2)

    i = int(np.argmin(f))
    if f[i] < dense:
        return SphereSearchResult(dense, float(f[i]), v[:, i].copy())
    return SphereSearchResult(dense, dense, pts[:, best].copy())


def weighted_norm_sum(a: np.ndarray, b: np.ndarray, wa: float, wb: float):
    """Objective/gradient pair for v -> wa |A v| + wb |B v|."""

    def objective(v: np.ndarray) -> np.ndarray:
        return wa * np.linalg.norm(a @ v, axis=0) + wb * np.linalg.norm(b @ v, axis=0)

    def gradient(v: np.ndarray) -> np.ndarray:
        av = a @ v
        bv = b @ v
        na = np.linalg.norm(av, axis=0)
        nb = np.linalg.norm(bv, axis=0)
        return wa * (a.T @ av) / na + wb * (b.T @ bv) / nb

    return objective, gradient


def max_norm(stack: np.ndarray):
    """Objective/gradient pair for v -> max_k |M_k v| over a stack (K, n, n)."""

    def objective(v: np.ndarray) -> np.ndarray:
        return np.linalg.norm(stack @ v, axis=1).max(axis=0)

    def gradient(v: np.ndarray) -> np.ndarray:
        images = stack @ v
        norms = np.linalg.norm(images, axis=1)
        k = np.argmax(norms, axis=0)
        cols = np.arange(v.shape[1])
        active = stack[k]
        img = images[k, :, cols]
        return np.einsum("mji,mj->im", active, img) / norms[k, cols]

    return objective, gradient
