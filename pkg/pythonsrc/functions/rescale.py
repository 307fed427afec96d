import logging
from typing import Dict

from helpers.config import RunConfig, validate_config
from helpers.storage import write_outputs, write_report
from helpers.utils import records_frame, report_envelope
from hdichotomy.families import transition_table
from hdichotomy.linalg import operator_norm
from hdichotomy.rates import exp_rate
from hdichotomy.rescale import rescale_family

LOG = logging.getLogger(__name__)
LOG.setLevel(logging.INFO)

COMMAND = "rescale"
FAMILY_FILE = "rescaled_family.json"


def emitted_config(config: RunConfig, sigma_min: float, sigma_max: float) -> RunConfig:
    """Run config of T_h under h = exp, on the same sigma values."""
    data = config.model_dump(by_alias=True)
    data["system"] = {"name": "rescaled", "params": {"base": data["system"], "rate": data["rate"]}}
    data["rate"] = {"name": "exp", "params": {}}
    data["a0_star"] = None
    data["grid"]["sigma_min"] = sigma_min
    data["grid"]["sigma_max"] = sigma_max
    return validate_config(data)


def rescale_handler(config: RunConfig, out: str, fmt: str = "json") -> Dict:
    """Emit T_h as a runnable config and check T(t, s) = T_h(ln h(t), ln h(s)) on the grid."""
    rate, family, grid = config.inputs()
    rescaled = rescale_family(family, rate, grid.anchor)
    mirror = grid.rebase(exp_rate())

    direct = transition_table(family, grid.ts, workers=config.workers)
    image = transition_table(rescaled, mirror.ts, workers=config.workers)
    rows = []
    worst = 0.0
    for i, j in grid.ordered_pairs():
        residual = operator_norm(direct[i, j] - image[i, j]) / max(1.0, operator_norm(direct[i, j]))
        worst = max(worst, residual)
        rows.append({"sigma_t": float(grid.sigmas[i]), "sigma_s": float(grid.sigmas[j]),
                     "norm": operator_norm(direct[i, j]), "residual": residual})
    status = "pass" if worst <= family.tolerance else "fail"
    LOG.info("Rescaled '%s' by '%s': max residual %.3e", family.name, rate.name, worst)

    emitted = emitted_config(config, grid.sigma_min, grid.sigma_max)
    family_path = write_report(emitted.echo(), FAMILY_FILE, out)
    report = report_envelope(COMMAND, config.echo(), config.seed, status,
                             {"family": rescaled.describe(), "max_residual": worst, "tolerance": family.tolerance,
                              "emitted_config": FAMILY_FILE})
    written = write_outputs(COMMAND, report, {"rescaled_norms": records_frame(rows)}, out, fmt)
    return {"status": status, "written": [family_path, *written]}
