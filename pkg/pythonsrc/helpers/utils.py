import dataclasses
import json
import logging
import math
import os
from typing import Any, Dict, Iterable, List, Mapping, Optional

import numpy as np
import pandas as pd

from helpers.errors import ConfigError

LOG = logging.getLogger(__name__)
LOG.setLevel(logging.INFO)

REPORT_SCHEMA = 1


def jsonable(obj: Any) -> Any:
    """Turn reports (dataclasses, numpy values, tuples) into plain JSON values.

    Non-finite floats become the strings "inf", "-inf" and "nan" so reports
    stay strict JSON.
    """
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        out = {f.name: jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
        for name in ("passed", "rank"):
            # properties some report types expose
            if name not in out and isinstance(getattr(type(obj), name, None), property):
                out[name] = jsonable(getattr(obj, name))
        return out
    if isinstance(obj, Mapping):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    return obj


def canonical_json(obj: Any) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def parse_params(items: Optional[Iterable[str]]) -> Dict[str, Any]:
    """``key=value`` pairs; values are read as JSON when possible, else kept as strings."""
    params: Dict[str, Any] = {}
    for item in items or ():
        key, sep, raw = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"--param expects key=value, got '{item}'")
        try:
            params[key.strip()] = json.loads(raw)
        except json.JSONDecodeError:
            params[key.strip()] = raw
    return params


def env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if not raw:
        return default
    try:
        return int(raw)
    except ValueError as e:
        raise ConfigError(f"{name} must be an integer, got '{raw}'") from e


def records_frame(records: List[Mapping[str, Any]], columns: Optional[List[str]] = None) -> pd.DataFrame:
    if not records:
        return pd.DataFrame(columns=columns or [])
    return pd.DataFrame.from_records(records, columns=columns)


def report_envelope(command: str, inputs: Mapping[str, Any], seed: int, status: str,
                    results: Mapping[str, Any]) -> Dict[str, Any]:
    """Top-level report layout shared by every subcommand. No timestamps, so
    identical inputs give identical files."""
    from hdichotomy import __version__

    return {
        "schema": REPORT_SCHEMA,
        "command": command,
        "status": status,
        "provenance": {"tool": "hdichotomy", "version": __version__, "seed": seed},
        "inputs": inputs,
        "results": jsonable(results),
    }
