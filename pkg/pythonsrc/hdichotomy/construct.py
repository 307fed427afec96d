"""Constructive side of the h-dichotomy equivalence.

From uniform h-noncriticality back to an h-dichotomy: locate the stable
subspace at the anchor time, propagate it and its complement, form the
projections P(t) and the explicit constants B = D / theta,
alpha = -ln(theta) / C. ``equivalence_pipeline`` runs every criterion on one
system and condenses the outcome into a three-way verdict.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Tuple

import numpy as np

from helpers.errors import ConditioningError, EmptyRegionError, HDichotomyError, NoGapError, RangeError
from hdichotomy.checkers import (
    DichotomyConstants,
    DichotomyReport,
    ExpansivenessConstants,
    GrowthBound,
    NoncriticalityConstants,
    dichotomy_to_expansive,
    estimate_dichotomy,
    estimate_expansiveness,
    estimate_noncriticality,
    expansive_to_noncritical,
    fit_growth_bound,
    verify_h_dichotomy,
)
from hdichotomy.families import EvolutionFamily, transition_table
from hdichotomy.grid import SigmaGrid
from hdichotomy.linalg import operator_norm, right_divide
from hdichotomy.projections import ProjectionFamily
from hdichotomy.rates import GrowthRate, exp_rate
from hdichotomy.rescale import rescale_family, sigma_of_t, t_of_sigma
from hdichotomy.sphere import SphereConfig

LOG = logging.getLogger(__name__)
LOG.setLevel(logging.INFO)

DEFAULT_HORIZON = 8.0
DEFAULT_GAP_THRESHOLD = 1e2
MAX_COMPLEMENT_CONDITION = 1e3
MAX_PROJECTION_NORM = 1e6

DICHOTOMIC = "dichotomic"
NOT_DICHOTOMIC = "not-dichotomic"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True, eq=False)
class SubspacePair:
    S_basis: np.ndarray
    Z_basis: np.ndarray
    anchor: float
    gap_ratio: float
    singular_values: Tuple[float, ...] = ()

    @property
    def dim(self) -> int:
        return self.S_basis.shape[0]

    @property
    def rank(self) -> int:
        return self.S_basis.shape[1]

    def condition(self) -> float:
        """Condition number of [S | Z]; 1 for orthogonal complements."""
        return float(np.linalg.cond(np.hstack([self.S_basis, self.Z_basis])))


@dataclass(frozen=True)
class DerivedConstants:
    B: float
    alpha: float
    theta: float
    C: float
    D: float


def stable_subspace(family: EvolutionFamily, h: GrowthRate, anchor: float, horizon_sigma: float = DEFAULT_HORIZON,
                    gap_threshold: float = DEFAULT_GAP_THRESHOLD) -> SubspacePair:
    """Split R^n at the anchor by the singular values of T(t_end, anchor).

    sigma(t_end) = sigma(anchor) + horizon_sigma. Every split index k is
    scored by (largest of the k smallest values) / (smallest of the rest);
    an empty side scores against 1, so all-decaying and all-growing
    families split as well. The best score must be <= 1/gap_threshold.
    """
    if not horizon_sigma > 0:
        raise RangeError(f"horizon must be positive, got {horizon_sigma}")
    t_end = t_of_sigma(h, sigma_of_t(h, anchor) + horizon_sigma)
    _, values, vt = np.linalg.svd(family.transition(t_end, anchor))
    n = len(values)

    best_k, best_ratio = 0, math.inf
    for k in range(n + 1):
        small = values[n - k] if k > 0 else 1.0
        large = values[n - k - 1] if k < n else 1.0
        ratio = small / large
        if ratio < best_ratio:
            best_k, best_ratio = k, ratio
    if best_ratio > 1.0 / gap_threshold:
        raise NoGapError(f"no singular-value gap of {gap_threshold:g} at horizon {horizon_sigma:g} "
                         f"(singular values {np.array2string(values, precision=4)})")

    pair = SubspacePair(
        S_basis=vt[n - best_k:].T.copy(),
        Z_basis=vt[:n - best_k].T.copy(),
        anchor=anchor,
        gap_ratio=float(best_ratio),
        singular_values=tuple(float(v) for v in values),
    )
    LOG.info("Stable subspace of '%s': rank %s of %s, gap ratio %.3e", family.name, pair.rank, n, pair.gap_ratio)
    return pair


def build_projections(family: EvolutionFamily, pair: SubspacePair, grid: Optional[SigmaGrid] = None,
                      max_norm: float = MAX_PROJECTION_NORM) -> ProjectionFamily:
    """P(t) = T(t, anchor) P(anchor) T(anchor, t), P(anchor) onto S along Z.

    Evaluated as W diag(I_k, 0) W^-1 with W the orthonormalized images of
    the two bases, which keeps P(t) accurate when T(t, anchor) is badly
    conditioned.
    """
    n, k = pair.dim, pair.rank
    cache: Dict[float, np.ndarray] = {}

    def at(t: float) -> np.ndarray:
        if t in cache:
            return cache[t]
        if k == 0:
            p = np.zeros((n, n))
        elif k == n:
            p = np.eye(n)
        else:
            forward = family.transition(t, pair.anchor)
            qs, _ = np.linalg.qr(forward @ pair.S_basis)
            qz, _ = np.linalg.qr(forward @ pair.Z_basis)
            w = np.hstack([qs, qz])
            p = right_divide(np.hstack([qs, np.zeros_like(qz)]), w)
        cache[t] = p
        return p

    projections = ProjectionFamily(at, n, k, name=f"P[{family.name}]")
    if grid is not None:
        worst = max(operator_norm(projections(t)) for t in grid.ts)
        if worst > max_norm:
            raise ConditioningError(f"|P(t)| reaches {worst:.3e} on the grid; propagated subspaces collapse")
    return projections


def uniform_stable_bound(family: EvolutionFamily, projections: ProjectionFamily, grid: SigmaGrid,
                         workers: int = 1) -> float:
    table = transition_table(family, grid.ts, workers=workers)
    projs = [projections(t) for t in grid.ts]
    worst = max(operator_norm(table[i, j] @ projs[j]) for i, j in grid.ordered_pairs())
    return max(1.0, worst)


def uniform_unstable_bound(family: EvolutionFamily, projections: ProjectionFamily, grid: SigmaGrid,
                           workers: int = 1) -> float:
    """max over t <= s of |T(t, s)(Id - P(s))|, at least 1."""
    table = transition_table(family, grid.ts, workers=workers)
    comps = [projections.complement(t) for t in grid.ts]
    worst = max(operator_norm(table[j, i] @ comps[i]) for i, j in grid.ordered_pairs())
    return max(1.0, worst)


def derive_constants(theta: float, C: float, D: float) -> DerivedConstants:
    if not 0 < theta < 1:
        raise RangeError(f"theta must lie in (0, 1), got {theta}")
    if not C > 0:
        raise RangeError(f"C must be positive, got {C}")
    if not D >= 1:
        raise RangeError(f"D must be at least 1, got {D}")
    return DerivedConstants(B=D / theta, alpha=-math.log(theta) / C, theta=theta, C=C, D=D)


@dataclass(frozen=True)
class PipelineConfig:
    span: float = 6.0
    step: float = 0.25
    horizon_sigma: float = DEFAULT_HORIZON
    gap_threshold: float = DEFAULT_GAP_THRESHOLD
    windows: Tuple[float, ...] = (0.5, 1.0, 2.0)
    # criterion (a) is measured when no constants are given
    dichotomy: Optional[DichotomyConstants] = None
    beta: Optional[float] = None
    margin: float = 0.5
    expansive_window: Optional[float] = None
    sphere: SphereConfig = SphereConfig()
    workers: int = 1
    cross_check: bool = True


@dataclass
class PipelineReport:
    family: str
    rate: str
    anchor: float
    verdict: str = INCONCLUSIVE
    cause: Optional[str] = None
    stages: Dict[str, str] = field(default_factory=dict)
    growth: Optional[GrowthBound] = None
    decay: Optional[GrowthBound] = None
    subspace: Optional[SubspacePair] = None
    dichotomy: Optional[DichotomyConstants] = None
    criterion_a: Optional[DichotomyReport] = None
    criterion_b: Optional[ExpansivenessConstants] = None
    criterion_c: List[NoncriticalityConstants] = field(default_factory=list)
    implied_expansive: Optional[ExpansivenessConstants] = None
    implied_noncritical: Optional[NoncriticalityConstants] = None
    implied_theta_estimate: Optional[float] = None
    derived: Optional[DerivedConstants] = None
    reverify: Optional[DichotomyReport] = None
    growth_cross_check: Dict[str, object] = field(default_factory=dict)
    rescaled_verdict: Optional[str] = None

    def fail_stage(self, stage: str, err: Exception) -> str:
        cause = f"{stage}: {type(err).__name__}: {err}"
        self.stages[stage] = INCONCLUSIVE
        LOG.warning("Stage %s inconclusive for '%s': %s", stage, self.family, err)
        return cause


def _criterion_c(report: PipelineReport, family: EvolutionFamily, h: GrowthRate, grid: SigmaGrid,
                 cfg: PipelineConfig) -> None:
    for window in cfg.windows:
        try:
            report.criterion_c.append(estimate_noncriticality(family, h, window, grid, cfg.sphere,
                                                              workers=cfg.workers))
        except EmptyRegionError as e:
            LOG.warning("Skipping C=%s: %s", window, e)
    if not report.criterion_c:
        raise EmptyRegionError(f"no tested C in {cfg.windows} has an admissible region on this grid")
    report.stages["criterion_c"] = "pass" if any(c.passed for c in report.criterion_c) else "fail"


def _criterion_a(report: PipelineReport, family: EvolutionFamily, h: GrowthRate, projections: ProjectionFamily,
                 grid: SigmaGrid, cfg: PipelineConfig) -> None:
    constants = cfg.dichotomy
    if constants is None:
        estimate = estimate_dichotomy(family, h, projections, grid, workers=cfg.workers)
        if not estimate.passed:
            LOG.info("No positive dichotomy rate with the constructed projections (lambda=%.3g)", estimate.lam)
            report.stages["criterion_a"] = "fail"
            return
        constants = estimate.constants
    report.dichotomy = constants
    report.criterion_a = verify_h_dichotomy(family, h, projections, constants, grid, workers=cfg.workers)
    report.stages["criterion_a"] = "pass" if report.criterion_a.passed else "fail"


def _chain_a_to_c(report: PipelineReport, family: EvolutionFamily, h: GrowthRate, grid: SigmaGrid,
                  cfg: PipelineConfig) -> None:
    report.implied_expansive = dichotomy_to_expansive(report.dichotomy)
    report.implied_noncritical = expansive_to_noncritical(report.implied_expansive, cfg.margin)
    try:
        measured = estimate_noncriticality(family, h, report.implied_noncritical.C, grid, cfg.sphere,
                                           workers=cfg.workers)
    except EmptyRegionError as e:
        LOG.info("Implied window C=%.4g leaves no admissible region: %s", report.implied_noncritical.C, e)
        report.stages["chain_a_to_c"] = "skipped"
        return
    report.implied_theta_estimate = measured.theta
    ok = measured.theta <= report.implied_noncritical.theta + 1e-6
    report.stages["chain_a_to_c"] = "pass" if ok else "fail"


def _chain_c_to_a(report: PipelineReport, family: EvolutionFamily, h: GrowthRate, projections: ProjectionFamily,
                  grid: SigmaGrid, cfg: PipelineConfig) -> None:
    passing = [c for c in report.criterion_c if c.passed]
    best = max(passing, key=lambda c: -math.log(c.theta) / c.C)
    bound = max(uniform_stable_bound(family, projections, grid, cfg.workers),
                uniform_unstable_bound(family, projections, grid, cfg.workers))
    report.derived = derive_constants(best.theta, best.C, bound)
    constants = DichotomyConstants(report.derived.B, report.derived.alpha)
    report.reverify = verify_h_dichotomy(family, h, projections, constants, grid, workers=cfg.workers)
    report.stages["chain_c_to_a"] = "pass" if report.reverify.passed else "fail"
    if report.growth is not None:
        # D is bounded by the growth envelope over one window
        rho = report.growth.K * math.exp(report.growth.mu * best.C)
        report.growth_cross_check = {"D": bound, "K_exp_mu_C": rho, "holds": bound <= rho * (1 + 1e-9)}


def _run_stages(family: EvolutionFamily, h: GrowthRate, grid: SigmaGrid, cfg: PipelineConfig) -> PipelineReport:
    report = PipelineReport(family=family.name, rate=h.name, anchor=grid.anchor)
    causes: List[str] = []

    try:
        report.growth = fit_growth_bound(family, h, grid, "growth", workers=cfg.workers)
        report.decay = fit_growth_bound(family, h, grid, "decay", workers=cfg.workers)
        report.stages["bounded_growth_decay"] = "pass"
    except HDichotomyError as e:
        report.cause = report.fail_stage("bounded_growth_decay", e)
        return report

    try:
        _criterion_c(report, family, h, grid, cfg)
    except HDichotomyError as e:
        causes.append(report.fail_stage("criterion_c", e))
    critical_everywhere = bool(report.criterion_c) and not any(c.passed for c in report.criterion_c)

    projections = None
    try:
        report.subspace = stable_subspace(family, h, grid.anchor, cfg.horizon_sigma, cfg.gap_threshold)
        if report.subspace.condition() > MAX_COMPLEMENT_CONDITION:
            raise ConditioningError(f"[S | Z] has condition number {report.subspace.condition():.3e}")
        projections = build_projections(family, report.subspace, grid)
        report.stages["splitting"] = "pass"
    except HDichotomyError as e:
        causes.append(report.fail_stage("splitting", e))

    if projections is not None:
        try:
            _criterion_a(report, family, h, projections, grid, cfg)
        except HDichotomyError as e:
            causes.append(report.fail_stage("criterion_a", e))

    beta = cfg.beta or (report.dichotomy.lam if report.dichotomy is not None else 1.0)
    try:
        report.criterion_b = estimate_expansiveness(family, h, beta, grid, cfg.sphere,
                                                    window_max=cfg.expansive_window, workers=cfg.workers)
        report.stages["criterion_b"] = "fail" if report.criterion_b.diverging else "pass"
    except HDichotomyError as e:
        causes.append(report.fail_stage("criterion_b", e))

    if report.stages.get("criterion_a") == "pass":
        try:
            _chain_a_to_c(report, family, h, grid, cfg)
        except HDichotomyError as e:
            causes.append(report.fail_stage("chain_a_to_c", e))
    if projections is not None and report.stages.get("criterion_c") == "pass":
        try:
            _chain_c_to_a(report, family, h, projections, grid, cfg)
        except HDichotomyError as e:
            causes.append(report.fail_stage("chain_c_to_a", e))

    report.verdict, report.cause = _verdict(report.stages, critical_everywhere, causes)
    return report


def _verdict(stages: Dict[str, str], critical_everywhere: bool, causes: List[str]) -> Tuple[str, Optional[str]]:
    criteria = {name: stages.get(f"criterion_{name}", "missing") for name in "abc"}
    if critical_everywhere:
        return NOT_DICHOTOMIC, "theta >= 1 at every tested C"
    if causes:
        return INCONCLUSIVE, "; ".join(causes)
    if all(v == "pass" for v in criteria.values()) and stages.get("chain_c_to_a") == "pass":
        return DICHOTOMIC, None
    if all(v == "fail" for v in criteria.values()):
        return NOT_DICHOTOMIC, "criteria (a), (b), (c) all fail"
    summary = ", ".join(f"({k})={v}" for k, v in criteria.items())
    return INCONCLUSIVE, f"criteria disagree or reconstruction failed: {summary}"


def pipeline_grid(h: GrowthRate, a0_star: float, cfg: PipelineConfig) -> SigmaGrid:
    return SigmaGrid.from_anchor(h, a0_star, cfg.span, cfg.step)


def equivalence_pipeline(family: EvolutionFamily, h: GrowthRate, a0_star: float,
                         cfg: PipelineConfig = PipelineConfig(), grid: Optional[SigmaGrid] = None) -> PipelineReport:
    """Run every criterion on (F, h) and, with ``cfg.cross_check``, again on
    the rescaled family with h = exp over the same sigma values. A verdict
    the rescaled run does not reproduce is downgraded to inconclusive.
    """
    grid = grid if grid is not None else pipeline_grid(h, a0_star, cfg)
    LOG.info("Pipeline for '%s' under '%s': %s grid points from sigma=%.4g", family.name, h.name, len(grid),
             grid.sigma_min)
    report = _run_stages(family, h, grid, cfg)

    if cfg.cross_check:
        rescaled = rescale_family(family, h, a0_star)
        exp = exp_rate()
        mirror = _run_stages(rescaled, exp, grid.rebase(exp), replace(cfg, cross_check=False))
        report.rescaled_verdict = mirror.verdict
        if mirror.verdict != report.verdict:
            LOG.warning("Rescaled run of '%s' gives %s, direct run %s", family.name, mirror.verdict, report.verdict)
            report.cause = f"rescaled run disagrees: {mirror.verdict} vs {report.verdict}"
            report.verdict = INCONCLUSIVE
    LOG.info("Verdict for '%s': %s", family.name, report.verdict)
    return report
