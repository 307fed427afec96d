"""Invertible evolution families T(t, s) on R^n.

Every family answers ``transition(t, s)`` for all t, s > a0; for t < s the
value is T(s, t)^-1. Closed-form families are exact up to round-off, ODE
families are accurate to the integrator tolerance.
"""

import logging
import math
import threading
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from helpers.errors import DomainError, IntegrationError
from hdichotomy.linalg import invert, operator_norm, operator_norms, right_divide, smallest_singular_value

LOG = logging.getLogger(__name__)
LOG.setLevel(logging.INFO)

CLOSED_FORM_TOL = 1e-9
ODE_TOL = 1e-6

Matrix = np.ndarray
Generator = Callable[[float], Matrix]


class EvolutionFamily(ABC):
    kind: str = "closed-form"

    def __init__(self, dim: int, a0: float, name: str):
        if dim < 1:
            raise DomainError(f"dimension must be positive, got {dim}")
        self.dim = dim
        self.a0 = a0
        self.name = name

    @property
    def tolerance(self) -> float:
        return ODE_TOL if self.kind == "ode-generated" else CLOSED_FORM_TOL

    def _check_domain(self, t: float, s: float) -> None:
        if not (t > self.a0 and s > self.a0):
            raise DomainError(f"T({t}, {s}) requested outside ({self.a0}, inf) for family '{self.name}'")

    @abstractmethod
    def _forward(self, t: float, s: float) -> Matrix:
        """T(t, s) for t >= s."""

    def _backward(self, t: float, s: float) -> Matrix:
        return invert(self._forward(s, t))

    def transition(self, t: float, s: float) -> Matrix:
        self._check_domain(t, s)
        if t == s:
            return np.eye(self.dim)
        if t > s:
            return self._forward(t, s)
        return self._backward(t, s)

    def describe(self) -> Dict[str, object]:
        return {"name": self.name, "kind": self.kind, "dim": self.dim, "a0": self.a0}


def transition(family: EvolutionFamily, t: float, s: float) -> Matrix:
    return family.transition(t, s)


class ClosedFormFamily(EvolutionFamily):
    """Family given by a formula.

    With ``two_sided`` the formula is trusted for t < s as well, otherwise the
    backward direction is the inverse of the forward value.
    """

    def __init__(self, dim: int, a0: float, formula: Callable[[float, float], Matrix],
                 name: str, two_sided: bool = True):
        super().__init__(dim, a0, name)
        self._formula = formula
        self._two_sided = two_sided

    def _forward(self, t: float, s: float) -> Matrix:
        return np.atleast_2d(np.asarray(self._formula(t, s), dtype=float))

    def _backward(self, t: float, s: float) -> Matrix:
        if self._two_sided:
            return self._forward(t, s)
        return super()._backward(t, s)


class OdeFamily(EvolutionFamily):
    """Fundamental solution of x' = A(t) x by fixed-step classical RK4.

    Fundamental matrices Phi(t) = T(t, origin) are cached at the lattice
    origin + k*step (k of either sign, negative k integrated backward) and at
    every queried time; T(t, s) = Phi(t) Phi(s)^-1. Cache fills are
    idempotent, so concurrent readers see the same values.
    """

    kind = "ode-generated"

    def __init__(self, generator: Generator, dim: int, a0: float, step: float,
                 origin: Optional[float] = None, name: str = "ode"):
        super().__init__(dim, a0, name)
        if not step > 0:
            raise DomainError(f"integrator step must be positive, got {step}")
        self.step = step
        self.origin = origin if origin is not None else (0.0 if math.isinf(a0) else a0 + 1.0)
        if not self.origin > a0:
            raise DomainError(f"ODE origin {self.origin} must lie inside ({a0}, inf)")
        self._generator = generator
        self._ahead: List[Matrix] = [np.eye(dim)]
        self._behind: List[Matrix] = [np.eye(dim)]
        self._points: Dict[float, Matrix] = {}
        self._lock = threading.Lock()

    def _a(self, t: float) -> Matrix:
        a = np.atleast_2d(np.asarray(self._generator(t), dtype=float))
        if a.shape != (self.dim, self.dim):
            raise DomainError(f"generator returned shape {a.shape}, expected {(self.dim, self.dim)}")
        return a

    def _rk4(self, t: float, x: Matrix, dt: float) -> Matrix:
        half = self._a(t + dt / 2)
        k1 = self._a(t) @ x
        k2 = half @ (x + dt / 2 * k1)
        k3 = half @ (x + dt / 2 * k2)
        k4 = self._a(t + dt) @ (x + dt * k3)
        out = x + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(out)):
            raise IntegrationError(f"non-finite fundamental matrix near t={t + dt} in '{self.name}'")
        return out

    def _node(self, k: int) -> Matrix:
        nodes = self._ahead if k >= 0 else self._behind
        sign = 1.0 if k >= 0 else -1.0
        idx = abs(k)
        if idx >= len(nodes):
            with self._lock:
                while len(nodes) <= idx:
                    j = len(nodes) - 1
                    t_j = self.origin + sign * j * self.step
                    nodes.append(self._rk4(t_j, nodes[j], sign * self.step))
        return nodes[idx]

    def fundamental(self, t: float) -> Matrix:
        """Phi(t) = T(t, origin)."""
        cached = self._points.get(t)
        if cached is not None:
            return cached
        offset = (t - self.origin) / self.step
        k = math.floor(offset) if offset >= 0 else -math.floor(-offset)
        base_t = self.origin + k * self.step
        phi = self._node(k)
        dt = t - base_t
        if dt != 0.0:
            phi = self._rk4(base_t, phi, dt)
        self._points[t] = phi
        return phi

    def _forward(self, t: float, s: float) -> Matrix:
        return right_divide(self.fundamental(t), self.fundamental(s))

    def _backward(self, t: float, s: float) -> Matrix:
        return right_divide(self.fundamental(t), self.fundamental(s))

    def describe(self) -> Dict[str, object]:
        return {**super().describe(), "step": self.step, "origin": self.origin}


def make_ode_family(generator: Generator, a0: float, integrator_step: float,
                    dim: Optional[int] = None, origin: Optional[float] = None,
                    name: str = "ode") -> OdeFamily:
    if dim is None:
        probe = origin if origin is not None else (0.0 if math.isinf(a0) else a0 + 1.0)
        dim = np.atleast_2d(np.asarray(generator(probe))).shape[0]
    return OdeFamily(generator, dim, a0, integrator_step, origin=origin, name=name)


class StepFamily(EvolutionFamily):
    """T(t, s) = A^(floor(t) - floor(s)); invertible whenever A is."""

    def __init__(self, matrix: Matrix, name: str = "step", a0: float = -math.inf):
        a = np.atleast_2d(np.asarray(matrix, dtype=float))
        super().__init__(a.shape[0], a0, name)
        self._a = a
        self._a_inv = invert(a)

    def _power(self, k: int) -> Matrix:
        if k >= 0:
            return np.linalg.matrix_power(self._a, k)
        return np.linalg.matrix_power(self._a_inv, -k)

    def _forward(self, t: float, s: float) -> Matrix:
        return self._power(math.floor(t) - math.floor(s))

    def _backward(self, t: float, s: float) -> Matrix:
        return self._power(math.floor(t) - math.floor(s))


class ConjugatedFamily(EvolutionFamily):
    """R T(t, s) R^-1 for a fixed invertible R."""

    def __init__(self, base: EvolutionFamily, r: Matrix, name: Optional[str] = None):
        super().__init__(base.dim, base.a0, name or f"conjugated-{base.name}")
        self.kind = base.kind
        self.base = base
        self._r = np.asarray(r, dtype=float)
        self._r_inv = invert(self._r)

    def _forward(self, t: float, s: float) -> Matrix:
        return self._r @ self.base.transition(t, s) @ self._r_inv

    _backward = _forward


def conjugate_family(family: EvolutionFamily, r: Matrix) -> ConjugatedFamily:
    return ConjugatedFamily(family, r)


class ScaledFamily(EvolutionFamily):
    """(g(t) / g(s)) T(t, s); the cocycle law survives any positive g."""

    def __init__(self, base: EvolutionFamily, g: Callable[[float], float], name: Optional[str] = None):
        super().__init__(base.dim, base.a0, name or f"scaled-{base.name}")
        self.kind = base.kind
        self.base = base
        self._g = g

    def _forward(self, t: float, s: float) -> Matrix:
        return (self._g(t) / self._g(s)) * self.base.transition(t, s)

    _backward = _forward


def scaled_family(family: EvolutionFamily, g: Callable[[float], float]) -> ScaledFamily:
    return ScaledFamily(family, g)


class RestrictedFamily(EvolutionFamily):
    """Q^T T(t, s) Q for an orthonormal basis Q of an invariant subspace."""

    def __init__(self, base: EvolutionFamily, basis: Matrix, name: Optional[str] = None):
        q = np.atleast_2d(np.asarray(basis, dtype=float))
        if q.shape[0] != base.dim or q.shape[1] > base.dim:
            raise DomainError(f"basis shape {q.shape} does not fit a {base.dim}-dimensional family")
        if not np.allclose(q.T @ q, np.eye(q.shape[1]), atol=1e-12):
            raise DomainError("restriction basis must be orthonormal")
        super().__init__(q.shape[1], base.a0, name or f"restricted-{base.name}")
        self.kind = base.kind
        self.base = base
        self._q = q

    def invariance_residual(self, t: float, s: float) -> float:
        """Size of the component of T(t, s) Q leaving span(Q)."""
        image = self.base.transition(t, s) @ self._q
        return operator_norm(image - self._q @ (self._q.T @ image))

    def _forward(self, t: float, s: float) -> Matrix:
        return self._q.T @ self.base.transition(t, s) @ self._q

    _backward = _forward


def restrict_family(family: EvolutionFamily, basis: Matrix) -> RestrictedFamily:
    return RestrictedFamily(family, basis)


def transition_table(family: EvolutionFamily, rows: Sequence[float],
                     cols: Optional[Sequence[float]] = None, workers: int = 1) -> np.ndarray:
    """Array of shape (len(rows), len(cols), n, n) with entry [i, j] = T(rows[i], cols[j])."""
    cols = rows if cols is None else cols

    def row(t: float) -> np.ndarray:
        return np.stack([family.transition(t, s) for s in cols])

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return np.stack(list(pool.map(row, rows)))
    return np.stack([row(t) for t in rows])


@dataclass(frozen=True)
class FamilyReport:
    identity_residual: float
    cocycle_residual: float
    inverse_residual: float
    min_singular_value: float
    tolerance: float
    passed: bool


def verify_family(family: EvolutionFamily, ts: Sequence[float], tol: Optional[float] = None,
                  workers: int = 1) -> FamilyReport:
    """Identity, cocycle and inverse-consistency residuals over all triples of ``ts``.

    Cocycle and inverse residuals are scaled by max(1, |T(t,s)| |T(s,r)|),
    the size of the product being compared.
    """
    tol = family.tolerance if tol is None else tol
    times = np.sort(np.asarray(ts, dtype=float))
    table = transition_table(family, times, workers=workers)
    n = len(times)
    eye = np.eye(family.dim)
    diagonal = np.arange(n)
    identity = float(operator_norms(table[diagonal, diagonal] - eye).max())
    norms = operator_norms(table)

    cocycle = 0.0
    inverse = 0.0
    min_sv = math.inf
    for i in range(n):
        for j in range(i + 1):
            min_sv = min(min_sv, smallest_singular_value(table[i, j]))
            scale = max(1.0, norms[i, j] * norms[j, i])
            inverse = max(inverse, operator_norm(table[i, j] @ table[j, i] - eye) / scale)
            for k in range(j + 1):
                scale = max(1.0, norms[i, j] * norms[j, k])
                cocycle = max(cocycle, operator_norm(table[i, k] - table[i, j] @ table[j, k]) / scale)

    passed = identity <= tol and cocycle <= tol and inverse <= tol and min_sv > 0
    if not passed:
        LOG.warning("Family '%s' failed verification: identity %.3e cocycle %.3e inverse %.3e",
                    family.name, identity, cocycle, inverse)
    return FamilyReport(identity, cocycle, inverse, min_sv, tol, passed)
