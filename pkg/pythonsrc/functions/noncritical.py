import logging
from typing import Dict

from helpers.config import RunConfig
from helpers.storage import write_outputs
from helpers.utils import records_frame, report_envelope
from hdichotomy.checkers import estimate_noncriticality

LOG = logging.getLogger(__name__)
LOG.setLevel(logging.INFO)

COMMAND = "check-noncritical"
DEFAULT_C = 1.0


def noncritical_handler(config: RunConfig, out: str, fmt: str = "json") -> Dict:
    rate, family, grid = config.inputs()
    window = config.params.C or DEFAULT_C
    result = estimate_noncriticality(family, rate, window, grid, config.sphere_config(), workers=config.workers)
    status = "pass" if result.passed else "fail"
    report = report_envelope(COMMAND, config.echo(), config.seed, status,
                             {"family": family.describe(), "rate": rate.describe(), "grid_points": len(grid),
                              "constants": result})
    profile = records_frame([{"sigma": s, "theta": th} for s, th in result.profile], ["sigma", "theta"])
    return {"status": status,
            "written": write_outputs(COMMAND, report, {"noncritical_profile": profile}, out, fmt)}
