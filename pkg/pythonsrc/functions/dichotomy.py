import logging
import math
from typing import Dict

import numpy as np

from helpers.config import RunConfig
from helpers.errors import NoGapError
from helpers.storage import write_outputs
from helpers.utils import records_frame, report_envelope
from hdichotomy.checkers import estimate_dichotomy, verify_h_dichotomy
from hdichotomy.construct import build_projections, stable_subspace
from hdichotomy.families import transition_table
from hdichotomy.linalg import operator_norm
from hdichotomy.projections import ProjectionFamily

LOG = logging.getLogger(__name__)
LOG.setLevel(logging.INFO)

COMMAND = "check-dichotomy"


def dichotomy_handler(config: RunConfig, out: str, fmt: str = "json") -> Dict:
    """Verify an h-dichotomy.

    Projections come from ``params.projection`` (constant matrix) or are
    constructed from the stable subspace; (D, lambda) come from the config
    or are measured for those projections.
    """
    rate, family, grid = config.inputs()
    results: Dict[str, object] = {"family": family.describe(), "rate": rate.describe(), "grid_points": len(grid)}

    if config.params.projection is not None:
        projections = ProjectionFamily.constant(config.params.projection, name="configured")
    else:
        try:
            pair = stable_subspace(family, rate, grid.anchor, config.params.horizon, config.params.gap_threshold)
        except NoGapError as e:
            LOG.warning("No projections for '%s': %s", family.name, e)
            results["cause"] = str(e)
            report = report_envelope(COMMAND, config.echo(), config.seed, "inconclusive", results)
            return {"status": "inconclusive", "written": write_outputs(COMMAND, report, {}, out, fmt)}
        projections = build_projections(family, pair, grid)
        results["subspace"] = pair

    constants = config.dichotomy_constants()
    if constants is None:
        estimate = estimate_dichotomy(family, rate, projections, grid, workers=config.workers)
        results["estimate"] = estimate
        if not estimate.passed:
            results["cause"] = f"no positive rate for these projections (lambda={estimate.lam:.6g})"
            report = report_envelope(COMMAND, config.echo(), config.seed, "fail", results)
            return {"status": "fail", "written": write_outputs(COMMAND, report, {}, out, fmt)}
        constants = estimate.constants

    check = verify_h_dichotomy(family, rate, projections, constants, grid, workers=config.workers)
    results.update({"constants": constants, "check": check})
    status = "pass" if check.passed else "fail"

    table = transition_table(family, grid.ts, workers=config.workers)
    projs = [projections(t) for t in grid.ts]
    eye = np.eye(family.dim)
    rows = []
    for i, j in grid.ordered_pairs():
        gap = float(grid.sigmas[i] - grid.sigmas[j])
        rows.append({
            "sigma_t": float(grid.sigmas[i]),
            "sigma_s": float(grid.sigmas[j]),
            "stable_norm": operator_norm(table[i, j] @ projs[j]),
            "unstable_norm": operator_norm(table[j, i] @ (eye - projs[i])),
            "bound": constants.D * math.exp(-constants.lam * gap),
        })
    report = report_envelope(COMMAND, config.echo(), config.seed, status, results)
    return {"status": status, "written": write_outputs(COMMAND, report, {"dichotomy_norms": records_frame(rows)}, out, fmt)}
