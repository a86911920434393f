"""Atomic result writing, run-record sidecars and the per-cell resume cache."""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import tempfile
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Sequence

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

SIDECAR_SUFFIX = ".run.json"


def to_jsonable(value: Any, finite: bool = False) -> Any:
    """Plain Python containers and scalars; ``finite=True`` maps NaN and infinities to ``None``."""

    if isinstance(value, Mapping):
        return {str(k): to_jsonable(v, finite) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v, finite) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v, finite) for v in value.tolist()]
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return None if finite and not math.isfinite(value) else value
    if isinstance(value, Path):
        return str(value)
    return value


def dumps_finite(payload: Any, indent: int | None = 2) -> str:
    return json.dumps(to_jsonable(payload, finite=True), indent=indent, allow_nan=False)


def canonical_json(payload: Any) -> str:
    return json.dumps(to_jsonable(payload), sort_keys=True, separators=(",", ":"), allow_nan=True)


def digest_payload(payload: Any) -> str:
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()


def digest_file(path: str | Path) -> str:
    sha = hashlib.sha256()
    with Path(path).open("rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            sha.update(chunk)
    return sha.hexdigest()


def atomic_write_text(path: str | Path, text: str) -> str:
    """Write through a temporary file in the destination directory, then rename over the target."""

    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    handle = tempfile.NamedTemporaryFile(
        "w", encoding="utf-8", dir=target.parent, prefix=f".{target.name}.", suffix=".tmp", delete=False
    )
    try:
        with handle:
            handle.write(text)
        os.replace(handle.name, target)
    except OSError as exc:
        Path(handle.name).unlink(missing_ok=True)
        raise OSError(f"could not write {target}: {exc}") from exc
    return str(target)


def atomic_write_json(path: str | Path, payload: Any) -> str:
    return atomic_write_text(path, dumps_finite(payload) + "\n")


def atomic_write_frame(path: str | Path, frame: pd.DataFrame) -> str:
    return atomic_write_text(path, frame.to_csv(index=False, float_format="%.17g"))


def package_version() -> str:
    from . import __version__

    return __version__


@dataclass
class RunRecord:
    argv: List[str]
    config_hash: str
    version: str
    timestamp: str
    input_digests: Dict[str, str] = field(default_factory=dict)
    outputs: List[str] = field(default_factory=list)

    @classmethod
    def create(cls, argv: Sequence[str], config: Any, inputs: Iterable[str | Path] = ()) -> "RunRecord":
        digests = {str(path): digest_file(path) for path in inputs}
        return cls(
            argv=[str(arg) for arg in argv],
            config_hash=digest_payload(config),
            version=package_version(),
            timestamp=datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"),
            input_digests=digests,
        )

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def persist_results(
    record: RunRecord,
    payload: Mapping[str, Any],
    out_dir: str | Path,
    name: str = "results",
    tables: Mapping[str, pd.DataFrame] | None = None,
    extra_outputs: Sequence[str] = (),
) -> Dict[str, str]:
    """Write ``<name>.json``, any CSV tables and the ``<name>.json.run.json`` sidecar."""

    root = Path(out_dir)
    written: Dict[str, str] = {}
    for table_name, frame in (tables or {}).items():
        written[table_name] = atomic_write_frame(root / f"{table_name}.csv", frame)
    written["payload"] = atomic_write_json(root / f"{name}.json", payload)
    record.outputs = sorted({*written.values(), *extra_outputs})
    written["record"] = atomic_write_json(root / f"{name}.json{SIDECAR_SUFFIX}", record.to_dict())
    logger.info("Wrote %d outputs to %s", len(written), root)
    return written


class ResumeCache:
    """One JSON file per (config digest, N, seed) cell, each carrying a digest of its own payload.

    Cells are always written; ``read=False`` makes every lookup a miss so a
    fresh run still leaves cells behind for a later resume.
    """

    def __init__(self, root: str | Path, config_digest: str, read: bool = True) -> None:
        self.directory = Path(root) / "cells" / config_digest
        self.read = read
        self.hits = 0
        self.misses = 0

    def _path(self, n: int, seed: int) -> Path:
        return self.directory / f"N{int(n)}_seed{int(seed)}.json"

    def get(self, n: int, seed: int) -> Dict[str, Any] | None:
        path = self._path(n, seed)
        if not self.read or not path.exists():
            self.misses += 1
            return None
        try:
            stored = json.loads(path.read_text(encoding="utf-8"))
            payload = stored["payload"]
            valid = stored.get("digest") == digest_payload(payload)
        except (ValueError, KeyError, TypeError):
            valid = False
        if not valid:
            logger.warning("Resume cell %s failed verification; recomputing", path)
            self.misses += 1
            return None
        self.hits += 1
        return payload

    def put(self, n: int, seed: int, payload: Mapping[str, Any]) -> str:
        clean = to_jsonable(payload, finite=True)
        return atomic_write_json(self._path(n, seed), {"digest": digest_payload(clean), "payload": clean})


__all__ = [
    "SIDECAR_SUFFIX",
    "RunRecord",
    "ResumeCache",
    "atomic_write_frame",
    "atomic_write_json",
    "atomic_write_text",
    "canonical_json",
    "digest_file",
    "digest_payload",
    "dumps_finite",
    "package_version",
    "persist_results",
    "to_jsonable",
]
