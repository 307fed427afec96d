import math

import numpy as np
import pytest
from scipy.linalg import subspace_angles

from conftest import make_grid, rotation
from helpers.errors import ConditioningError, NoGapError, RangeError
from hdichotomy.construct import (
    DICHOTOMIC,
    NOT_DICHOTOMIC,
    PipelineConfig,
    SubspacePair,
    build_projections,
    derive_constants,
    equivalence_pipeline,
    stable_subspace,
    uniform_stable_bound,
    uniform_unstable_bound,
)
from hdichotomy.projections import ProjectionFamily
from hdichotomy.rates import exp_rate, poly_rate
from hdichotomy.systems import (
    diag_hyperbolic,
    diag_hyperbolic_ode,
    neutral,
    planar_rotation,
    rotated_hyperbolic,
    scalar_stable,
)


@pytest.fixture
def small_pipeline(small_sphere):
    return PipelineConfig(span=4.0, step=0.5, sphere=small_sphere)


def test_hyperbolic_splits_along_the_axes():
    h = exp_rate()
    pair = stable_subspace(diag_hyperbolic(h), h, anchor=0.0, horizon_sigma=5.0, gap_threshold=10.0)
    assert pair.rank == 1
    assert pair.gap_ratio == pytest.approx(math.exp(-10.0), rel=1e-9)
    np.testing.assert_allclose(np.abs(pair.S_basis[:, 0]), [1.0, 0.0], atol=1e-12)
    np.testing.assert_allclose(np.abs(pair.Z_basis[:, 0]), [0.0, 1.0], atol=1e-12)
    assert pair.condition() == pytest.approx(1.0)


def test_contracting_scalar_has_full_stable_subspace():
    h = poly_rate()
    pair = stable_subspace(scalar_stable(h), h, anchor=1.0)
    assert pair.rank == 1
    assert pair.Z_basis.shape == (1, 0)


def test_rotation_has_no_gap():
    h = exp_rate()
    with pytest.raises(NoGapError):
        stable_subspace(planar_rotation(h), h, anchor=0.0)
    with pytest.raises(RangeError):
        stable_subspace(planar_rotation(h), h, anchor=0.0, horizon_sigma=0.0)


def test_split_does_not_depend_on_the_horizon():
    h = exp_rate()
    family = rotated_hyperbolic(h)
    short = stable_subspace(family, h, anchor=0.0, horizon_sigma=8.0)
    long = stable_subspace(family, h, anchor=0.0, horizon_sigma=16.0)
    assert np.max(subspace_angles(short.S_basis, long.S_basis)) <= 1e-6


def test_projections_of_the_hyperbolic_family():
    h = poly_rate()
    family = diag_hyperbolic(h)
    grid = make_grid(h)
    projections = build_projections(family, stable_subspace(family, h, anchor=1.0), grid)
    for t in grid.ts:
        np.testing.assert_allclose(projections(t), np.diag([1.0, 0.0]), atol=1e-12)


def test_projections_follow_a_change_of_basis():
    h = exp_rate()
    family = rotated_hyperbolic(h)
    r = rotation(0.5)
    projections = build_projections(family, stable_subspace(family, h, anchor=0.0))
    expected = r @ np.diag([1.0, 0.0]) @ r.T
    for t in (0.0, 1.5, 3.0):
        np.testing.assert_allclose(projections(t), expected, atol=1e-9)


def test_trivial_splits_give_trivial_projections():
    h = exp_rate()
    family = diag_hyperbolic(h)
    empty = SubspacePair(np.zeros((2, 0)), np.eye(2), anchor=0.0, gap_ratio=0.0)
    full = SubspacePair(np.eye(2), np.zeros((2, 0)), anchor=0.0, gap_ratio=0.0)
    np.testing.assert_array_equal(build_projections(family, empty)(1.0), np.zeros((2, 2)))
    np.testing.assert_array_equal(build_projections(family, full)(1.0), np.eye(2))


def test_projection_norm_limit():
    h = exp_rate()
    family = diag_hyperbolic(h)
    pair = stable_subspace(family, h, anchor=0.0)
    with pytest.raises(ConditioningError):
        build_projections(family, pair, make_grid(h), max_norm=0.5)


def test_uniform_bounds():
    h = poly_rate()
    family = diag_hyperbolic(h)
    grid = make_grid(h, span=2.0)
    stable = ProjectionFamily.constant(np.diag([1.0, 0.0]))
    swapped = ProjectionFamily.constant(np.diag([0.0, 1.0]))
    assert uniform_stable_bound(family, stable, grid) == pytest.approx(1.0)
    assert uniform_unstable_bound(family, stable, grid) == pytest.approx(1.0)
    assert uniform_stable_bound(family, swapped, grid) == pytest.approx(math.exp(2.0))


def test_derived_constants():
    derived = derive_constants(0.5, math.log(4.0), 1.0)
    assert derived.B == pytest.approx(2.0, abs=1e-12)
    assert derived.alpha == pytest.approx(0.5, abs=1e-12)
    assert derive_constants(0.25, 2.0, 3.0).B == pytest.approx(12.0)


@pytest.mark.parametrize("theta, C, D", [(1.0, 1.0, 1.0), (0.0, 1.0, 1.0), (0.5, 0.0, 1.0), (0.5, 1.0, 0.5)])
def test_derived_constants_reject_bad_input(theta, C, D):
    with pytest.raises(RangeError):
        derive_constants(theta, C, D)


def test_hyperbolic_pipeline_is_dichotomic(small_pipeline):
    h = poly_rate()
    report = equivalence_pipeline(diag_hyperbolic(h), h, 1.0, small_pipeline)
    assert report.verdict == DICHOTOMIC
    assert report.rescaled_verdict == DICHOTOMIC
    assert report.stages["chain_a_to_c"] == "pass"
    assert report.implied_noncritical.C == pytest.approx(math.log(4.0), rel=1e-6)
    assert report.implied_theta_estimate <= 0.5
    assert report.derived.C == 2.0
    assert report.derived.alpha == pytest.approx(-math.log(math.cosh(4.0) ** -0.5) / 2.0, rel=1e-3)
    assert report.reverify.passed
    assert report.growth_cross_check["holds"]


def test_short_hyperbolic_pipeline_stays_dichotomic(small_sphere):
    h = exp_rate()
    cfg = PipelineConfig(span=2.0, windows=(0.5, 1.0), sphere=small_sphere)
    report = equivalence_pipeline(diag_hyperbolic(h), h, 0.0, cfg)
    assert report.stages["criterion_b"] == "pass"
    assert not report.criterion_b.diverging
    assert report.verdict == DICHOTOMIC


def test_scalar_pipeline_recovers_the_rate(small_pipeline):
    h = exp_rate()
    report = equivalence_pipeline(scalar_stable(h), h, 0.0, small_pipeline)
    assert report.verdict == DICHOTOMIC
    assert report.derived.alpha == pytest.approx(1.0, abs=1e-4)
    assert report.derived.B >= report.derived.D


@pytest.mark.parametrize("build", [planar_rotation, neutral])
def test_critical_families_are_not_dichotomic(build, small_pipeline):
    h = exp_rate()
    report = equivalence_pipeline(build(h), h, 0.0, small_pipeline)
    assert report.verdict == NOT_DICHOTOMIC
    assert report.stages["criterion_c"] == "fail"
    assert all(c.theta == pytest.approx(1.0) for c in report.criterion_c)


def test_rotation_pipeline_reports_the_missing_split(small_pipeline):
    h = exp_rate()
    report = equivalence_pipeline(planar_rotation(h), h, 0.0, small_pipeline)
    assert report.stages["splitting"] == "inconclusive"
    assert report.growth.degenerate


def test_ode_pipeline_is_dichotomic(small_pipeline):
    h = exp_rate()
    report = equivalence_pipeline(diag_hyperbolic_ode(h, step=0.01), h, 0.0, small_pipeline)
    assert report.verdict == DICHOTOMIC
    assert report.reverify.tolerance == 1e-6
