import logging
from typing import Dict

import pandas as pd

from helpers.config import RunConfig
from helpers.storage import write_outputs
from helpers.utils import records_frame, report_envelope
from hdichotomy.construct import PipelineReport, equivalence_pipeline

LOG = logging.getLogger(__name__)
LOG.setLevel(logging.INFO)

COMMAND = "pipeline"


def run_pipeline(config: RunConfig) -> PipelineReport:
    rate, family, grid = config.inputs()
    return equivalence_pipeline(family, rate, grid.anchor, config.pipeline_config(), grid=grid)


def pipeline_tables(report: PipelineReport) -> Dict[str, pd.DataFrame]:
    theta_rows = [{"C": nc.C, "sigma": s, "theta": th} for nc in report.criterion_c for s, th in nc.profile]
    tables = {"pipeline_theta": records_frame(theta_rows, ["C", "sigma", "theta"])}
    if report.criterion_b is not None:
        tables["pipeline_expansive"] = records_frame(
            [{"width": w, "L": value} for w, value in report.criterion_b.profile], ["width", "L"])
    return tables


def pipeline_handler(config: RunConfig, out: str, fmt: str = "json", command: str = COMMAND) -> Dict:
    report = run_pipeline(config)
    envelope = report_envelope(command, config.echo(), config.seed, report.verdict, {"pipeline": report})
    written = write_outputs(command, envelope, pipeline_tables(report), out, fmt)
    return {"status": report.verdict, "written": written}
