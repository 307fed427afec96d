"""Estimators and verifiers for h-bounded growth/decay, h-dichotomy,
h-expansiveness and uniform h-noncriticality.

Every h-graded weight is written in the sigma coordinate,
(h(t)/h(s))^mu = exp(mu (sigma_t - sigma_s)), using the grid's sigma values
directly. A family checked on (F, h, grid) and its rescaling checked on
(T_h, exp, grid.rebase(exp)) therefore see identical weights and the same
operators up to round-off.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Literal, Optional, Tuple

import numpy as np

from helpers.errors import DegenerateFitError, DomainError, EmptyRegionError, RangeError, RankError, \
    SingularMatrixError
from hdichotomy.families import EvolutionFamily, transition_table
from hdichotomy.grid import SigmaGrid
from hdichotomy.linalg import idempotence_residual, operator_norm, operator_norms, projection_rank
from hdichotomy.projections import ProjectionFamily
from hdichotomy.rates import GrowthRate
from hdichotomy.rescale import t_of_sigma
from hdichotomy.sphere import SphereConfig, max_norm, minimize_on_sphere, weighted_norm_sum

LOG = logging.getLogger(__name__)
LOG.setLevel(logging.INFO)

MIN_RATE = 1e-3
IDEMPOTENCE_TOL = 1e-9
NONCRITICAL_MARGIN = 1e-6
SUBGRID_STEPS = 100
DIVERGENCE_TOL = 0.1
_SIGMA_TOL = 1e-12

Mode = Literal["growth", "decay"]


@dataclass(frozen=True)
class GrowthBound:
    K: float
    mu: float
    max_violation: float
    mode: str = "growth"
    inflation: float = 1.0
    degenerate: bool = False

    def passed(self, tol: float) -> bool:
        return self.max_violation <= tol


@dataclass(frozen=True)
class DichotomyConstants:
    D: float
    lam: float

    def __post_init__(self):
        if not (self.D > 0 and self.lam > 0):
            raise RangeError(f"dichotomy constants must be positive, got D={self.D}, lambda={self.lam}")


@dataclass(frozen=True)
class DichotomyEstimate:
    D: float
    lam: float
    stable_rate: float
    unstable_rate: float

    @property
    def passed(self) -> bool:
        return self.lam >= MIN_RATE and math.isfinite(self.D)

    @property
    def constants(self) -> DichotomyConstants:
        return DichotomyConstants(self.D, self.lam)


@dataclass(frozen=True)
class DichotomyReport:
    max_violation_invariance: float
    max_violation_stable: float
    max_violation_unstable: float
    max_idempotence: float
    rank: int
    tolerance: float
    passed: bool


@dataclass(frozen=True)
class ExpansivenessConstants:
    L: float
    beta: float
    window_max: float
    dense_L: float = math.nan
    diverging: bool = False
    profile: Tuple[Tuple[float, float], ...] = field(default=(), repr=False)


@dataclass(frozen=True)
class NoncriticalityConstants:
    theta: float
    C: float
    dense_theta: float = math.nan
    admissible_count: int = 0
    profile: Tuple[Tuple[float, float], ...] = field(default=(), repr=False)

    @property
    def passed(self) -> bool:
        return self.theta < 1.0 - NONCRITICAL_MARGIN


def _check_grid(h: GrowthRate, grid: SigmaGrid) -> None:
    if grid.rate is not h and grid.rate.describe() != h.describe():
        raise DomainError(f"grid was built for rate '{grid.rate.name}', not '{h.name}'")


def _fit_envelope(d: np.ndarray, y: np.ndarray, min_slope: float = MIN_RATE) -> Tuple[float, float, float]:
    """Least-squares line y ~ c + slope*d, then the smallest c covering every sample.

    Returns (ln K, slope, inflation) with ln K >= 0 and slope >= ``min_slope``;
    inflation is K over the least-squares K.
    """
    if len(y) == 0 or np.ptp(y) <= 1e-12 * max(1.0, float(np.max(np.abs(y)))):
        raise DegenerateFitError("all norm samples coincide")
    slope, intercept = np.polyfit(d, y, 1)
    mu = max(float(slope), min_slope)
    ln_k = max(0.0, float(np.max(y - mu * d)))
    return ln_k, mu, math.exp(ln_k - float(intercept))


def _slope(d: np.ndarray, y: np.ndarray) -> float:
    if len(y) == 0:
        return -math.inf
    if np.ptp(y) <= 1e-12 * max(1.0, float(np.max(np.abs(y)))):
        return 0.0
    return float(np.polyfit(d, y, 1)[0])


def fit_growth_bound(family: EvolutionFamily, h: GrowthRate, grid: SigmaGrid, mode: Mode = "growth",
                     workers: int = 1) -> GrowthBound:
    """Fit |T(t,s)| <= K (h(t)/h(s))^mu for t >= s (growth) or
    |T(t,s)| <= K (h(s)/h(t))^mu for t <= s (decay)."""
    if mode not in ("growth", "decay"):
        raise DomainError(f"mode must be 'growth' or 'decay', got {mode!r}")
    _check_grid(h, grid)
    table = transition_table(family, grid.ts, workers=workers)
    sig = grid.sigmas
    pairs = np.array([(i, j) for i, j in grid.ordered_pairs() if i != j], dtype=int).reshape(-1, 2)
    later, earlier = pairs[:, 0], pairs[:, 1]
    d_arr = sig[later] - sig[earlier]
    stack = table[later, earlier] if mode == "growth" else table[earlier, later]
    norm_arr = operator_norms(stack) if len(d_arr) else np.empty(0)
    y = np.log(norm_arr)

    try:
        ln_k, mu, inflation = _fit_envelope(d_arr, y)
        degenerate = False
    except DegenerateFitError:
        LOG.warning("Degenerate %s fit for '%s': all norms equal, using K = max norm, mu = 1",
                    mode, family.name)
        ln_k = max(0.0, float(np.max(y))) if len(y) else 0.0
        mu, inflation, degenerate = 1.0, 1.0, True

    k = math.exp(ln_k)
    violation = float(np.max(norm_arr / (k * np.exp(mu * d_arr)) - 1.0)) if len(d_arr) else 0.0
    bound = GrowthBound(K=k, mu=mu, max_violation=max(0.0, violation), mode=mode,
                        inflation=inflation, degenerate=degenerate)
    LOG.info("Bounded %s of '%s' under '%s': K=%.6g mu=%.6g", mode, family.name, h.name, bound.K, bound.mu)
    return bound


def _projection_table(projections: ProjectionFamily, grid: SigmaGrid) -> List[np.ndarray]:
    projs = [projections(t) for t in grid.ts]
    ranks = {projection_rank(p) for p in projs}
    if len(ranks) > 1:
        raise RankError(f"projection rank varies over the grid: {sorted(ranks)}")
    return projs


def verify_h_dichotomy(family: EvolutionFamily, h: GrowthRate, projections: ProjectionFamily,
                       constants: DichotomyConstants, grid: SigmaGrid, tol: Optional[float] = None,
                       workers: int = 1) -> DichotomyReport:
    """Check invariance, the stable bound for t >= s and the unstable bound for t <= s.

    Invariance residuals are scaled by max(1, |T(t,s)|); bound violations are
    relative excesses |.| / (D e^{-lambda |sigma_t - sigma_s|}) - 1.
    """
    _check_grid(h, grid)
    tol = family.tolerance if tol is None else tol
    projs = _projection_table(projections, grid)
    eye = np.eye(family.dim)
    table = transition_table(family, grid.ts, workers=workers)
    sig = grid.sigmas
    big_d, lam = constants.D, constants.lam

    invariance = stable = unstable = 0.0
    for i, j in grid.ordered_pairs():
        forward = table[i, j]
        scale = max(1.0, operator_norm(forward))
        invariance = max(invariance, operator_norm(projs[i] @ forward - forward @ projs[j]) / scale)
        bound = big_d * math.exp(-lam * (sig[i] - sig[j]))
        stable = max(stable, operator_norm(forward @ projs[j]) / bound - 1.0)
        # t_j <= t_i: the inverse restricted to ker P is the global inverse times Id - P
        unstable = max(unstable, operator_norm(table[j, i] @ (eye - projs[i])) / bound - 1.0)

    idem = max(idempotence_residual(p) for p in projs)
    report = DichotomyReport(
        max_violation_invariance=invariance,
        max_violation_stable=max(0.0, stable),
        max_violation_unstable=max(0.0, unstable),
        max_idempotence=idem,
        rank=projection_rank(projs[0]),
        tolerance=tol,
        passed=invariance <= tol and stable <= tol and unstable <= tol and idem <= IDEMPOTENCE_TOL,
    )
    LOG.info("h-dichotomy check of '%s' (D=%.6g, lambda=%.6g): %s", family.name, big_d, lam,
             "pass" if report.passed else "fail")
    return report


def estimate_dichotomy(family: EvolutionFamily, h: GrowthRate, projections: ProjectionFamily,
                       grid: SigmaGrid, workers: int = 1) -> DichotomyEstimate:
    """Measure (D, lambda) for given projections.

    The stable and unstable envelopes are fitted separately; lambda is the
    slower of the two rates and D is inflated until every grid pair is covered.
    """
    _check_grid(h, grid)
    projs = _projection_table(projections, grid)
    eye = np.eye(family.dim)
    table = transition_table(family, grid.ts, workers=workers)
    sig = grid.sigmas
    sides = {"stable": ([], []), "unstable": ([], [])}
    for i, j in grid.ordered_pairs():
        if i == j:
            continue
        gap = sig[i] - sig[j]
        for side, m in (("stable", table[i, j] @ projs[j]), ("unstable", table[j, i] @ (eye - projs[i]))):
            norm = operator_norm(m)
            if norm > 0:
                sides[side][0].append(gap)
                sides[side][1].append(math.log(norm))

    rates = {}
    for side, (d, y) in sides.items():
        rates[side] = -_slope(np.asarray(d), np.asarray(y))
    lam = min(rates.values())
    if not math.isfinite(lam):
        lam = 1.0
    ln_d = 0.0
    for d, y in sides.values():
        if d:
            ln_d = max(ln_d, float(np.max(np.asarray(y) + lam * np.asarray(d))))
    estimate = DichotomyEstimate(D=math.exp(ln_d), lam=lam, stable_rate=rates["stable"],
                                 unstable_rate=rates["unstable"])
    LOG.info("Measured dichotomy constants of '%s': D=%.6g lambda=%.6g", family.name, estimate.D, estimate.lam)
    return estimate


def _triples(sig: np.ndarray, window_max: float):
    n = len(sig)
    for a in range(n):
        for t in range(a, n):
            for b in range(t, n):
                if sig[b] - sig[a] > window_max + _SIGMA_TOL:
                    break
                yield a, t, b


def _profile_at(ratios: np.ndarray, widths: np.ndarray, width: float) -> float:
    inside = ratios[widths <= width + _SIGMA_TOL]
    # a zero-width window always gives 1/2
    return float(inside.max()) if inside.size else 0.5


def _keeps_growing(ratios: np.ndarray, widths: np.ndarray, window_max: float, tol: float) -> bool:
    """L(W) rose by more than ``tol`` over the last doubling and that rise is no
    smaller than the one over the doubling before it."""
    full = _profile_at(ratios, widths, window_max)
    half = _profile_at(ratios, widths, window_max / 2)
    quarter = _profile_at(ratios, widths, window_max / 4)
    return full > (1.0 + tol) * half and full - half >= half - quarter


def estimate_expansiveness(family: EvolutionFamily, h: GrowthRate, beta: float, grid: SigmaGrid,
                           sphere_cfg: SphereConfig = SphereConfig(), window_max: Optional[float] = None,
                           divergence_tol: float = DIVERGENCE_TOL, workers: int = 1) -> ExpansivenessConstants:
    """Supremum over windows a <= t <= b of
    |v| / ((h(t)/h(a))^-beta |T(a,t)v| + (h(b)/h(t))^-beta |T(b,t)v|).

    Every window is sampled densely; the ``refine_top`` worst windows are
    refined. The profile L(W) is the supremum over windows of width <= W.
    The family is flagged diverging when L(W_max) exceeds L(W_max / 2) by
    more than ``divergence_tol`` and the increments over successive window
    doublings are not shrinking.
    """
    if not beta > 0:
        raise RangeError(f"beta must be positive, got {beta}")
    _check_grid(h, grid)
    sig = grid.sigmas
    span = float(sig[-1] - sig[0])
    window_max = span if window_max is None else min(window_max, span)
    table = transition_table(family, grid.ts, workers=workers)

    windows = list(_triples(sig, window_max))
    dense = np.empty(len(windows))
    problems = []
    for k, (a, t, b) in enumerate(windows):
        wa = math.exp(-beta * (sig[t] - sig[a]))
        wb = math.exp(-beta * (sig[b] - sig[t]))
        objective, gradient = weighted_norm_sum(table[a, t], table[b, t], wa, wb)
        problems.append((objective, gradient))
        dense[k] = minimize_on_sphere(objective, gradient, family.dim, sphere_cfg, refine=False).value
    if np.any(dense <= 0):
        raise SingularMatrixError("a transition annihilated a unit vector")

    refined = dense.copy()
    for k in np.argsort(dense, kind="stable")[:sphere_cfg.refine_top]:
        objective, gradient = problems[k]
        refined[k] = minimize_on_sphere(objective, gradient, family.dim, sphere_cfg).value

    ratios = 1.0 / refined
    widths = np.array([sig[b] - sig[a] for a, _, b in windows])
    profile = []
    for w in np.unique(np.round(widths, 12)):
        profile.append((float(w), float(ratios[widths <= w + _SIGMA_TOL].max())))
    big_l = float(ratios.max())
    diverging = _keeps_growing(ratios, widths, window_max, divergence_tol)
    if diverging:
        LOG.warning("Expansiveness ratio of '%s' keeps growing with the window (L=%.6g at W=%.3g)",
                    family.name, big_l, window_max)
    LOG.info("h-expansiveness of '%s' at beta=%.6g: L=%.6g over %s windows", family.name, beta, big_l, len(windows))
    return ExpansivenessConstants(L=big_l, beta=beta, window_max=window_max, dense_L=float((1.0 / dense).max()),
                                  diverging=diverging, profile=tuple(profile))


def estimate_noncriticality(family: EvolutionFamily, h: GrowthRate, C: float, grid: SigmaGrid,
                            sphere_cfg: SphereConfig = SphereConfig(), anchor_sigma: Optional[float] = None,
                            subgrid_steps: int = SUBGRID_STEPS, workers: int = 1) -> NoncriticalityConstants:
    """theta = sup over admissible t and unit v of |v| / max{|T(u,t)v| : |sigma_u - sigma_t| <= C}.

    Admissible means sigma_t >= ln h(a0*) + C, with a0* the grid start unless
    ``anchor_sigma`` says otherwise. u runs over a sub-grid of step C/50 or finer.
    """
    if not C > 0:
        raise RangeError(f"C must be positive, got {C}")
    _check_grid(h, grid)
    anchor = grid.sigma_min if anchor_sigma is None else anchor_sigma
    admissible = [(s, t) for s, t in grid.points() if s >= anchor + C - _SIGMA_TOL]
    if not admissible:
        raise EmptyRegionError(f"no grid point with sigma >= {anchor + C:.6g} (grid ends at {grid.sigma_max:.6g})")
    offsets = np.linspace(-C, C, max(subgrid_steps, SUBGRID_STEPS) + 1)

    def at(point: Tuple[float, float]) -> Tuple[float, float]:
        sigma_t, t = point
        stack = np.stack([family.transition(t_of_sigma(h, sigma_t + off), t) for off in offsets])
        objective, gradient = max_norm(stack)
        result = minimize_on_sphere(objective, gradient, family.dim, sphere_cfg)
        return result.dense_value, result.value

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            mins = list(pool.map(at, admissible))
    else:
        mins = [at(p) for p in admissible]
    dense = np.array([m[0] for m in mins])
    refined = np.array([m[1] for m in mins])
    if np.any(refined <= 0):
        raise SingularMatrixError("a transition annihilated a unit vector")

    thetas = 1.0 / refined
    result = NoncriticalityConstants(
        theta=float(thetas.max()),
        C=C,
        dense_theta=float((1.0 / dense).max()),
        admissible_count=len(admissible),
        profile=tuple((float(s), float(th)) for (s, _), th in zip(admissible, thetas)),
    )
    LOG.info("Uniform h-noncriticality of '%s' at C=%.6g: theta=%.6g (%s)", family.name, C, result.theta,
             "pass" if result.passed else "fail")
    return result


def dichotomy_to_expansive(constants: DichotomyConstants) -> ExpansivenessConstants:
    """An h-dichotomy with (D, lambda) is h-expansive with L = D, beta = lambda."""
    return ExpansivenessConstants(L=constants.D, beta=constants.lam, window_max=math.inf, dense_L=constants.D)


def expansive_to_noncritical(constants: ExpansivenessConstants, margin: float = 0.5,
                             min_window: float = 1e-9) -> NoncriticalityConstants:
    """C = ln(2L / (1 - margin)) / beta, theta = 2L e^{-beta C}.

    When 2L <= 1 - margin every positive C works; C is then ``min_window``.
    """
    if not 0 < margin < 1:
        raise RangeError(f"margin must lie in (0, 1), got {margin}")
    if not (constants.L > 0 and constants.beta > 0):
        raise RangeError(f"expansiveness constants must be positive, got L={constants.L}, beta={constants.beta}")
    window = math.log(2 * constants.L / (1 - margin)) / constants.beta
    if window < min_window:
        LOG.info("2L=%.6g already below 1 - margin; using C=%.3g", 2 * constants.L, min_window)
        window = min_window
    theta = 2 * constants.L * math.exp(-constants.beta * window)
    return NoncriticalityConstants(theta=theta, C=window, dense_theta=theta)
