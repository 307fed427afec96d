import logging
from typing import Dict

import numpy as np

from helpers.config import RunConfig
from helpers.errors import EmptyRegionError, NoGapError
from helpers.storage import write_outputs
from helpers.utils import records_frame, report_envelope
from hdichotomy.checkers import DichotomyConstants, estimate_noncriticality, verify_h_dichotomy
from hdichotomy.construct import (
    build_projections,
    derive_constants,
    stable_subspace,
    uniform_stable_bound,
    uniform_unstable_bound,
)

LOG = logging.getLogger(__name__)
LOG.setLevel(logging.INFO)

COMMAND = "construct"
DEFAULT_C = 1.0


def construct_handler(config: RunConfig, out: str, fmt: str = "json") -> Dict:
    """Build (P, B, alpha) from uniform h-noncriticality at C and re-verify them."""
    rate, family, grid = config.inputs()
    results: Dict[str, object] = {"family": family.describe(), "rate": rate.describe(), "grid_points": len(grid)}

    def finish(status: str, tables=None) -> Dict:
        report = report_envelope(COMMAND, config.echo(), config.seed, status, results)
        return {"status": status, "written": write_outputs(COMMAND, report, tables or {}, out, fmt)}

    try:
        pair = stable_subspace(family, rate, grid.anchor, config.params.horizon, config.params.gap_threshold)
    except NoGapError as e:
        LOG.warning("Construction stopped for '%s': %s", family.name, e)
        results["cause"] = f"NoGapError: {e}"
        return finish("inconclusive")
    projections = build_projections(family, pair, grid)
    stable = uniform_stable_bound(family, projections, grid, config.workers)
    unstable = uniform_unstable_bound(family, projections, grid, config.workers)
    results.update({"subspace": pair, "stable_bound": stable, "unstable_bound": unstable})

    window = config.params.C or DEFAULT_C
    try:
        noncritical = estimate_noncriticality(family, rate, window, grid, config.sphere_config(),
                                              workers=config.workers)
    except EmptyRegionError as e:
        results["cause"] = f"EmptyRegionError: {e}"
        return finish("inconclusive")
    results["noncriticality"] = noncritical
    if not noncritical.passed:
        results["cause"] = f"theta={noncritical.theta:.6g} is not below 1 at C={window:g}"
        return finish("fail")

    derived = derive_constants(noncritical.theta, window, max(stable, unstable))
    check = verify_h_dichotomy(family, rate, projections, DichotomyConstants(derived.B, derived.alpha), grid,
                               workers=config.workers)
    results.update({"derived": derived, "check": check})
    rows = [{"sigma": s, "t": t, **{f"P{r}{c}": float(v) for (r, c), v in np.ndenumerate(projections(t))}}
            for s, t in grid.points()]
    return finish("pass" if check.passed else "fail", {"projections": records_frame(rows)})
