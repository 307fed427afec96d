import logging
import math
from typing import Dict, List

import pandas as pd

from helpers.config import RunConfig, validate_config
from helpers.storage import write_report, write_table
from helpers.utils import report_envelope
from hdichotomy.checkers import ExpansivenessConstants, estimate_noncriticality, expansive_to_noncritical
from hdichotomy.construct import DICHOTOMIC, NOT_DICHOTOMIC, derive_constants
from functions.pipeline import run_pipeline

LOG = logging.getLogger(__name__)
LOG.setLevel(logging.INFO)

COMMAND = "demo"
THETA_RTOL = 1e-3
FORMULA_TOL = 1e-12

# (label, system, rate, rate params, closed-form theta at C = 1, expected verdict)
DEMO_CASES = [
    ("scalar-stable", "scalar-stable", "exp", {}, math.exp(-1.0), DICHOTOMIC),
    ("diag-hyperbolic", "diag-hyperbolic", "poly", {"power": 1.0}, math.cosh(2.0) ** -0.5, DICHOTOMIC),
    ("neutral", "neutral", "exp", {}, 1.0, NOT_DICHOTOMIC),
    ("rotation", "rotation", "exp", {}, 1.0, NOT_DICHOTOMIC),
]


def case_config(config: RunConfig, system: str, rate: str, rate_params: Dict) -> RunConfig:
    data = config.model_dump(by_alias=True)
    data["system"] = {"name": system, "params": {}}
    data["rate"] = {"name": rate, "params": dict(rate_params)}
    data["a0_star"] = None
    data["grid"]["sigma_min"] = None
    data["grid"]["sigma_max"] = None
    return validate_config(data)


def _formula_rows() -> List[Dict]:
    implied = expansive_to_noncritical(ExpansivenessConstants(L=1.0, beta=1.0, window_max=math.inf), 0.5)
    derived = derive_constants(0.5, math.log(4.0), 1.0)
    checks = [
        ("C from (L, beta) = (1, 1)", math.log(4.0), implied.C),
        ("theta from (L, beta) = (1, 1)", 0.5, implied.theta),
        ("B from (theta, C, D) = (1/2, ln 4, 1)", 2.0, derived.B),
        ("alpha from (theta, C, D) = (1/2, ln 4, 1)", 0.5, derived.alpha),
    ]
    return [{"case": "formulas", "rate": "", "quantity": quantity, "formula": expected, "estimate": value,
             "expected_verdict": "", "verdict": "", "match": abs(value - expected) <= FORMULA_TOL}
            for quantity, expected, value in checks]


def demo_handler(config: RunConfig, out: str, fmt: str = "json") -> Dict:
    """Run the reference systems, compare closed-form constants with the
    estimates and print the table; passes iff every row matches."""
    rows = _formula_rows()
    written = []
    for label, system, rate_name, rate_params, theta_formula, expected in DEMO_CASES:
        case = case_config(config, system, rate_name, rate_params)
        rate, family, grid = case.inputs()
        theta = estimate_noncriticality(family, rate, 1.0, grid, case.sphere_config(), workers=case.workers).theta
        report = run_pipeline(case)
        envelope = report_envelope(f"demo-{label}", case.echo(), case.seed, report.verdict, {"pipeline": report})
        written.append(write_report(envelope, f"demo-{label}.json", out))
        match = abs(theta - theta_formula) <= THETA_RTOL * theta_formula and report.verdict == expected
        rows.append({"case": label, "rate": rate_name, "quantity": "theta(C=1)", "formula": theta_formula,
                     "estimate": theta, "expected_verdict": expected, "verdict": report.verdict, "match": match})

    df = pd.DataFrame.from_records(rows)
    print(df.to_string(index=False))
    written.append(write_table(df, "demo.csv", out))
    status = "pass" if bool(df["match"].all()) else "fail"
    summary = report_envelope(COMMAND, config.echo(), config.seed, status, {"rows": rows})
    written.append(write_report(summary, "demo.json", out))
    LOG.info("Demo finished: %s of %s rows match", int(df["match"].sum()), len(df))
    return {"status": status, "written": written}
