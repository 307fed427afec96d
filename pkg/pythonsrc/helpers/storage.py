import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Tuple

import pandas as pd

from helpers.errors import ConfigError
from helpers.utils import canonical_json

LOG = logging.getLogger(__name__)
LOG.setLevel(logging.INFO)

DEFAULT_OUT_DIR = "./reports"


def out_dir(candidate: str | None = None) -> str:
    """--out, then HDICHOTOMY_OUT_DIR, then ./reports."""
    return candidate or os.environ.get("HDICHOTOMY_OUT_DIR") or DEFAULT_OUT_DIR


def _split_s3(url: str) -> Tuple[str, str]:
    bucket, _, prefix = url[len("s3://"):].partition("/")
    if not bucket:
        raise ConfigError(f"S3 output needs a bucket: '{url}'")
    return bucket, prefix.strip("/")


def write_report(report: Any, name: str, out: str) -> str:
    """Write ``report`` as canonical JSON to ``<out>/<name>``; returns the path."""
    body = canonical_json(report)
    if out.startswith("s3://"):
        import boto3
        from botocore.exceptions import BotoCoreError, ClientError

        bucket, prefix = _split_s3(out)
        key = f"{prefix}/{name}" if prefix else name
        try:
            boto3.client("s3").put_object(Bucket=bucket, Key=key, Body=body.encode("utf-8"),
                                          ContentType="application/json")
        except (BotoCoreError, ClientError) as e:
            raise ConfigError(f"cannot write s3://{bucket}/{key}: {e}") from e
        path = f"s3://{bucket}/{key}"
    else:
        target = Path(out)
        target.mkdir(parents=True, exist_ok=True)
        path = str(target / name)
        Path(path).write_text(body, encoding="utf-8")
    LOG.info("Wrote report to %s", path)
    return path


def write_table(df: pd.DataFrame, name: str, out: str) -> str:
    if df.empty:
        LOG.info("No rows to write for %s", name)
    if out.startswith("s3://"):
        import awswrangler as wr

        path = f"{out.rstrip('/')}/{name}"
        wr.s3.to_csv(df=df, path=path, index=False)
    else:
        target = Path(out)
        target.mkdir(parents=True, exist_ok=True)
        path = str(target / name)
        df.to_csv(path, index=False)
    LOG.info("Wrote %s rows to %s", len(df), path)
    return path


def write_outputs(command: str, report: Any, tables: Dict[str, pd.DataFrame], out: str, fmt: str = "json") -> List[str]:
    """The JSON report always; CSV data files only with ``--format csv``."""
    written = [write_report(report, f"{command}.json", out)]
    if fmt == "csv":
        for name, df in tables.items():
            written.append(write_table(df, f"{name}.csv", out))
    return written
