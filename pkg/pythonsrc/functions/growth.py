import logging
import math
from typing import Dict

from helpers.config import RunConfig
from helpers.storage import write_outputs
from helpers.utils import records_frame, report_envelope
from hdichotomy.checkers import Mode, fit_growth_bound
from hdichotomy.families import transition_table, verify_family
from hdichotomy.linalg import operator_norm

LOG = logging.getLogger(__name__)
LOG.setLevel(logging.INFO)


def _bound_handler(config: RunConfig, out: str, fmt: str, mode: Mode) -> Dict:
    command = f"check-{mode}"
    rate, family, grid = config.inputs()
    LOG.info("Fitting h-bounded %s of '%s' on %s grid points", mode, family.name, len(grid))

    family_report = verify_family(family, grid.ts, workers=config.workers)
    bound = fit_growth_bound(family, rate, grid, mode, workers=config.workers)

    table = transition_table(family, grid.ts, workers=config.workers)
    rows = []
    for i, j in grid.ordered_pairs():
        gap = float(grid.sigmas[i] - grid.sigmas[j])
        norm = operator_norm(table[i, j] if mode == "growth" else table[j, i])
        rows.append({"sigma_t": float(grid.sigmas[i]), "sigma_s": float(grid.sigmas[j]), "norm": norm,
                     "bound": bound.K * math.exp(bound.mu * gap)})

    status = "pass" if bound.passed(family.tolerance) and family_report.passed else "fail"
    report = report_envelope(command, config.echo(), config.seed, status,
                             {"family": family.describe(), "rate": rate.describe(), "grid_points": len(grid),
                              "bound": bound, "family_check": family_report})
    written = write_outputs(command, report, {f"{mode}_norms": records_frame(rows)}, out, fmt)
    return {"status": status, "written": written}


def growth_handler(config: RunConfig, out: str, fmt: str = "json") -> Dict:
    """|T(t,s)| <= K (h(t)/h(s))^mu for t >= s."""
    return _bound_handler(config, out, fmt, "growth")


def decay_handler(config: RunConfig, out: str, fmt: str = "json") -> Dict:
    """|T(t,s)| <= K (h(s)/h(t))^mu for t <= s."""
    return _bound_handler(config, out, fmt, "decay")
