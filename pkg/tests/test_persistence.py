"""Atomic writes, run records and the resume cache."""
import json
import logging
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from scripts.export_demo_assets import export_demo_assets
from src.experiments import loglog_fit
from src.persistence import (
    ResumeCache,
    RunRecord,
    atomic_write_frame,
    atomic_write_json,
    atomic_write_text,
    canonical_json,
    digest_file,
    digest_payload,
    dumps_finite,
    persist_results,
)


def test_atomic_text_write_leaves_no_temporaries(tmp_path):
    target = tmp_path / "nested" / "out.txt"
    atomic_write_text(target, "first")
    atomic_write_text(target, "second")
    assert target.read_text(encoding="utf-8") == "second"
    assert [p.name for p in target.parent.iterdir()] == ["out.txt"]


def test_json_and_frame_writers_handle_numpy(tmp_path):
    path = atomic_write_json(tmp_path / "payload.json", {"S": np.array([1.0, 2.5]), "n": np.int64(3), "ok": np.bool_(True)})
    assert json.loads((tmp_path / "payload.json").read_text(encoding="utf-8")) == {"S": [1.0, 2.5], "n": 3, "ok": True}
    assert path.endswith("payload.json")

    frame = pd.DataFrame({"m": [1, 2], "value": [0.1, 1 / 3]})
    atomic_write_frame(tmp_path / "table.csv", frame)
    loaded = pd.read_csv(tmp_path / "table.csv")
    assert loaded["value"].iloc[1] == 1 / 3


def test_digests_ignore_key_order():
    assert canonical_json({"b": 1, "a": [1, 2]}) == '{"a":[1,2],"b":1}'
    assert digest_payload({"b": 1, "a": 2}) == digest_payload({"a": 2, "b": 1})
    assert digest_payload({"a": 1}) != digest_payload({"a": 2})


def test_persist_results_writes_sidecar(tmp_path):
    source = tmp_path / "points.txt"
    source.write_text("0 0 1\n", encoding="utf-8")
    record = RunRecord.create(["gram", "--in", str(source)], {"max_degree": 4}, inputs=[source])
    written = persist_results(
        record, {"value": 0.5}, tmp_path / "out", name="gram", tables={"gram": pd.DataFrame({"m": [1]})}
    )
    sidecar = json.loads((tmp_path / "out" / "gram.json.run.json").read_text(encoding="utf-8"))
    assert sidecar["input_digests"] == {str(source): digest_file(source)}
    assert sidecar["config_hash"] == digest_payload({"max_degree": 4})
    assert sorted(sidecar["outputs"]) == sorted([written["gram"], written["payload"]])
    assert sidecar["version"]
    assert sidecar["timestamp"].endswith("Z")


def test_resume_cache_round_trip_and_corruption(tmp_path, caplog):
    cache = ResumeCache(tmp_path, "abc123")
    assert cache.get(64, 0) is None
    cache.put(64, 0, {"value": np.float64(0.25), "values": [0.25], "M_used": 256})
    assert cache.get(64, 0) == {"value": 0.25, "values": [0.25], "M_used": 256}
    assert (cache.hits, cache.misses) == (1, 1)

    path = tmp_path / "cells" / "abc123" / "N64_seed0.json"
    stored = json.loads(path.read_text(encoding="utf-8"))
    stored["payload"]["value"] = 0.5
    path.write_text(json.dumps(stored), encoding="utf-8")
    with caplog.at_level(logging.WARNING):
        assert cache.get(64, 0) is None
    assert "failed verification" in caplog.text

    path.write_text("{not json", encoding="utf-8")
    assert cache.get(64, 0) is None
    assert cache.misses == 3


@pytest.mark.slow
def test_demo_export_writes_bundle(tmp_path):
    written = export_demo_assets(base_dir=tmp_path, seed=1)
    demo_dir = tmp_path / "docs" / "demo"
    for name in ("study_brief.md", "README_demo.md", "scaling_results.csv", "sweep_summary.csv", "demo.json.run.json"):
        assert (demo_dir / name).exists()
    record = json.loads(Path(written["record"]).read_text(encoding="utf-8"))
    assert str(demo_dir / "study_brief.md") in record["outputs"]


def test_non_finite_values_become_null(tmp_path):
    fit = loglog_fit([16, 64], [0.1, 0.02])
    payload = {"fit": fit.to_dict(), "values": np.array([1.0, np.inf]), "nested": [float("-inf")]}
    text = dumps_finite(payload)
    assert "NaN" not in text and "Infinity" not in text
    decoded = json.loads(text)
    assert decoded["fit"]["slope_stderr"] is None
    assert decoded["values"] == [1.0, None]
    assert decoded["nested"] == [None]

    atomic_write_json(tmp_path / "fit.json", payload)
    assert json.loads((tmp_path / "fit.json").read_text(encoding="utf-8"))["fit"]["slope_stderr"] is None


def test_write_only_cache_misses_but_still_stores(tmp_path):
    writer = ResumeCache(tmp_path, "fresh", read=False)
    writer.put(16, 1, {"value": 0.5})
    assert writer.get(16, 1) is None
    assert (writer.hits, writer.misses) == (0, 1)
    assert ResumeCache(tmp_path, "fresh").get(16, 1) == {"value": 0.5}
