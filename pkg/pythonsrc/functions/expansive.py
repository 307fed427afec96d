import logging
from typing import Dict

from helpers.config import RunConfig
from helpers.storage import write_outputs
from helpers.utils import records_frame, report_envelope
from hdichotomy.checkers import estimate_expansiveness

LOG = logging.getLogger(__name__)
LOG.setLevel(logging.INFO)

COMMAND = "check-expansive"


def expansive_handler(config: RunConfig, out: str, fmt: str = "json") -> Dict:
    rate, family, grid = config.inputs()
    beta = config.params.beta or config.params.lam or 1.0
    result = estimate_expansiveness(family, rate, beta, grid, config.sphere_config(),
                                    window_max=config.params.window_max, workers=config.workers)
    # L(W) still growing at the widest window
    status = "fail" if result.diverging else "pass"
    report = report_envelope(COMMAND, config.echo(), config.seed, status,
                             {"family": family.describe(), "rate": rate.describe(), "grid_points": len(grid),
                              "constants": result})
    profile = records_frame([{"width": w, "L": value} for w, value in result.profile], ["width", "L"])
    return {"status": status, "written": write_outputs(COMMAND, report, {"expansive_profile": profile}, out, fmt)}
