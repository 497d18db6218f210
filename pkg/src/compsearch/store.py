"""Append-only JSONL stores and the run manifest."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

log = logging.getLogger(__name__)

STORES = ("candidates", "hypotheses", "baselines", "evals", "rewards", "scores")
MANIFEST = "manifest.json"


class CorruptRecord(ValueError):
    def __init__(self, path: Path, line: int, reason: str):
        super().__init__(f"{path}:{line}: {reason}")
        self.path = path
        self.line = line


def content_id(text: str) -> str:
    """Stable identifier for a program text (use the canonical form when available)."""
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def dumps(record: dict) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"), allow_nan=False)


def _sort_key(record: dict):
    return (
        str(record.get("id", record.get("hypothesis_id", ""))),
        str(record.get("task", "")),
        int(record.get("run_index", 0)),
        int(record.get("index", 0)),
        str(record.get("ranker_id", "")),
    )


@dataclass
class LoadResult:
    records: list[dict]
    errors: list[CorruptRecord] = field(default_factory=list)

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)


def append_jsonl(path: Path, records: Iterable[dict]) -> int:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [dumps(r) + "\n" for r in records]
    if not lines:
        return 0
    # a crash mid-line leaves a torn record that load_jsonl skips; start on a
    # fresh line so the torn tail does not swallow the next record
    if path.exists() and path.stat().st_size:
        with open(path, "rb") as fh:
            fh.seek(-1, os.SEEK_END)
            if fh.read(1) != b"\n":
                lines[0] = "\n" + lines[0]
    with open(path, "a", encoding="utf-8") as fh:
        fh.writelines(lines)
        fh.flush()
        os.fsync(fh.fileno())
    return len(lines)


def load_jsonl(path: Path, sort: bool = True) -> LoadResult:
    path = Path(path)
    result = LoadResult([])
    if not path.exists():
        return result
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                if not isinstance(record, dict):
                    raise ValueError("record is not a JSON object")
            except ValueError as exc:
                err = CorruptRecord(path, lineno, str(exc))
                log.warning("skipping corrupt record: %s", err)
                result.errors.append(err)
                continue
            result.records.append(record)
    if sort:
        result.records.sort(key=_sort_key)
    return result


class RunDir:
    """A run directory holding the JSONL stores, manifest and report outputs."""

    def __init__(self, root: Path | str):
        self.root = Path(root)

    def path(self, store: str) -> Path:
        return self.root / f"{store}.jsonl"

    def append(self, store: str, records: Iterable[dict]) -> int:
        return append_jsonl(self.path(store), records)

    def load(self, store: str, sort: bool = True) -> LoadResult:
        return load_jsonl(self.path(store), sort=sort)

    def exists(self) -> bool:
        return self.root.is_dir()

    # manifest -------------------------------------------------------------

    @property
    def manifest_path(self) -> Path:
        return self.root / MANIFEST

    def read_manifest(self) -> dict:
        if not self.manifest_path.exists():
            return {}
        return json.loads(self.manifest_path.read_text())

    def write_manifest(self, manifest: dict) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        tmp = self.manifest_path.with_suffix(".tmp")
        tmp.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        tmp.replace(self.manifest_path)

    def start_manifest(self, run_id: str, config: dict, seed: int, checksums: dict, version: str) -> dict:
        manifest = self.read_manifest()
        if manifest and manifest.get("config") != config:
            raise ValueError(f"run directory {self.root} was created with a different config")
        if not manifest:
            manifest = {
                "run_id": run_id,
                "config": config,
                "master_seed": seed,
                "dataset_checksums": checksums,
                "stages": {},
                "tool_version": version,
                "created_at": _now(),
            }
            self.write_manifest(manifest)
        return manifest

    def complete_stage(self, stage: str) -> None:
        manifest = self.read_manifest()
        stages = manifest.setdefault("stages", {})
        if not stages.get(stage):
            stages[stage] = True
            manifest.setdefault("timestamps", {})[stage] = _now()
            self.write_manifest(manifest)

    def stage_done(self, stage: str) -> bool:
        return bool(self.read_manifest().get("stages", {}).get(stage))


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def _cell(value):
    if isinstance(value, float):
        return repr(value) if math.isfinite(value) else str(value)
    return value


def read_csv_rows(path: Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
