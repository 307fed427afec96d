import json

import boto3
import pandas as pd
import pytest
from botocore.exceptions import ClientError

from helpers.errors import ConfigError
from helpers.storage import out_dir, write_outputs, write_report


class _RecordingS3:
    def __init__(self, error=None):
        self.calls = []
        self.error = error

    def put_object(self, **kwargs):
        if self.error is not None:
            raise self.error
        self.calls.append(kwargs)


def test_out_dir_precedence(monkeypatch):
    monkeypatch.delenv("HDICHOTOMY_OUT_DIR", raising=False)
    assert out_dir(None) == "./reports"
    monkeypatch.setenv("HDICHOTOMY_OUT_DIR", "/tmp/env")
    assert out_dir(None) == "/tmp/env"
    assert out_dir("given") == "given"


def test_local_outputs(tmp_path):
    tables = {"norms": pd.DataFrame({"sigma": [0.0, 0.5], "norm": [1.0, 2.0]})}
    json_only = write_outputs("check-growth", {"b": 1, "a": 2}, tables, str(tmp_path / "j"))
    assert [p.rsplit("/", 1)[-1] for p in json_only] == ["check-growth.json"]
    written = write_outputs("check-growth", {"b": 1, "a": 2}, tables, str(tmp_path / "c"), fmt="csv")
    assert len(written) == 2
    assert pd.read_csv(tmp_path / "c" / "norms.csv")["norm"].tolist() == [1.0, 2.0]


def test_reports_go_to_s3(monkeypatch):
    s3 = _RecordingS3()
    monkeypatch.setattr(boto3, "client", lambda service: s3)
    path = write_report({"status": "pass"}, "check-growth.json", "s3://bucket/runs/")
    assert path == "s3://bucket/runs/check-growth.json"
    (call,) = s3.calls
    assert call["Bucket"] == "bucket" and call["Key"] == "runs/check-growth.json"
    assert json.loads(call["Body"].decode("utf-8")) == {"status": "pass"}


def test_s3_failures_are_config_errors(monkeypatch):
    error = ClientError({"Error": {"Code": "NoSuchBucket", "Message": "missing"}}, "PutObject")
    monkeypatch.setattr(boto3, "client", lambda service: _RecordingS3(error))
    with pytest.raises(ConfigError):
        write_report({}, "x.json", "s3://bucket")
    with pytest.raises(ConfigError):
        write_report({}, "x.json", "s3://")
